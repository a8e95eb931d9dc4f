import math

import numpy as np
import pytest
from scipy.constants import Boltzmann, c, e, hbar

from app.errors import InvalidParameter, SeparationNonpositive, TruncationNotConverged
from app.models import DrudeParams, LifshitzSettings, PermittivityMode, PermittivitySpec
from app.physics.lifshitz import (
    fresnel_imaginary, free_energy_per_area, matsubara_frequency, polarization_terms, thermal_correction,
)

GOLD = DrudeParams(omega_p=7.54, gamma=0.051)
ROOM = LifshitzSettings(temperature=300.0)


def ideal_pressure(a):
    return -math.pi ** 2 * hbar * c / (240.0 * a ** 4)


def ideal_free_energy(a):
    return -math.pi ** 2 * hbar * c / (720.0 * a ** 3)


def test_matsubara_frequency():
    assert matsubara_frequency(0, 300.0) == 0.0
    expected = 2.0 * math.pi * Boltzmann * 300.0 / hbar * hbar / e
    assert matsubara_frequency(1, 300.0) == pytest.approx(expected, rel=1e-12)
    assert matsubara_frequency(1, 300.0) == pytest.approx(0.1624, abs=1e-4)
    assert matsubara_frequency(7, 300.0) == pytest.approx(7 * matsubara_frequency(1, 300.0))


@pytest.mark.parametrize('l, T', [(-1, 300.0), (1.5, 300.0), (1, 0.0)])
def test_matsubara_frequency_rejects(l, T):
    with pytest.raises(InvalidParameter):
        matsubara_frequency(l, T)


def test_fresnel_coefficients_bounds():
    k = np.logspace(5, 9, 20)
    r_tm, r_te = fresnel_imaginary(0.5, k, 200.0)
    assert np.all((r_tm > 0.0) & (r_tm < 1.0))
    assert np.all((r_te < 0.0) & (r_te > -1.0))
    r_tm, r_te = fresnel_imaginary(0.5, 1e6, 1.0)
    assert r_tm == pytest.approx(0.0, abs=1e-15)
    assert r_te == pytest.approx(0.0, abs=1e-15)


def test_ideal_metal_limit(ideal_plate):
    assert ideal_plate.pressure == pytest.approx(ideal_pressure(100e-9), rel=1e-2)
    assert ideal_plate.free_energy_per_area == pytest.approx(ideal_free_energy(100e-9), rel=1e-2)
    assert abs(ideal_plate.pressure) == pytest.approx(13.0, abs=0.1)
    assert abs(ideal_plate.free_energy_per_area) == pytest.approx(4.33e-7, rel=5e-3)


def test_ideal_metal_limit_at_zero_temperature():
    spec = PermittivitySpec(PermittivityMode.PURE_PLASMA, DrudeParams(omega_p=1.0e4, gamma=0.0))
    settings = LifshitzSettings(zero_t_mode=True, k_quad_tolerance=1e-5)
    result = free_energy_per_area(100e-9, spec, settings)
    assert result.terms_used == 0
    assert result.pressure == pytest.approx(ideal_pressure(100e-9), rel=1e-2)
    assert result.free_energy_per_area == pytest.approx(ideal_free_energy(100e-9), rel=1e-2)


@pytest.mark.parametrize('mode', ['PureDrude', 'TabulatedDrude'])
def test_zero_frequency_te_term_vanishes_for_drude(mode, gold_table):
    spec = PermittivitySpec(mode, GOLD, gold_table if mode == 'TabulatedDrude' else None)
    terms = polarization_terms(0, 150e-9, spec, ROOM)
    assert terms['TE'] == (0.0, 0.0)
    assert terms['TM'][0] < 0.0


@pytest.mark.parametrize('mode', ['PurePlasma', 'TabulatedPlasma'])
def test_zero_frequency_te_term_survives_for_plasma(mode, gold_table):
    spec = PermittivitySpec(mode, GOLD, gold_table if mode == 'TabulatedPlasma' else None)
    terms = polarization_terms(0, 150e-9, spec, ROOM)
    assert terms['TE'][0] < 0.0
    assert terms['TE'][1] < 0.0


def test_zero_frequency_tm_term_is_ideal():
    # r_TM = 1 at l = 0: F = kT/(16 pi a^2) * int y ln(1 - e^-y) = -kT zeta(3) / (16 pi a^2)
    a = 150e-9
    spec = PermittivitySpec('PureDrude', GOLD)
    f_tm, _ = polarization_terms(0, a, spec, ROOM)['TM']
    expected = -Boltzmann * 300.0 * 1.2020569031595942 / (16.0 * math.pi * a ** 2)
    assert f_tm == pytest.approx(expected, rel=1e-8)


def test_plasma_attracts_more_than_drude():
    for a in (120e-9, 200e-9, 500e-9):
        drude = free_energy_per_area(a, PermittivitySpec('PureDrude', GOLD), ROOM)
        plasma = free_energy_per_area(a, PermittivitySpec('PurePlasma', GOLD), ROOM)
        assert plasma.free_energy_per_area < drude.free_energy_per_area < 0.0
        assert plasma.pressure < drude.pressure < 0.0


def test_attraction_weakens_with_separation():
    spec = PermittivitySpec('PureDrude', GOLD)
    values = [free_energy_per_area(a, spec, ROOM) for a in (100e-9, 150e-9, 300e-9)]
    assert values[0].pressure < values[1].pressure < values[2].pressure < 0.0
    assert all(v.terms_used > 3 for v in values)


def test_fixed_truncation_uses_every_term():
    spec = PermittivitySpec('PureDrude', GOLD)
    result = free_energy_per_area(150e-9, spec, LifshitzSettings(temperature=300.0, l_max=40))
    assert result.terms_used == 41


@pytest.mark.parametrize('mode, a', [
    ('PureDrude', 100e-9),
    ('PurePlasma', 100e-9),
    ('PureDrude', 150e-9),
    ('TabulatedDrude', 150e-9),
    ('TabulatedPlasma', 150e-9),
])
def test_doubling_l_max_stays_within_tolerance(mode, a, gold_table):
    spec = PermittivitySpec(mode, GOLD, gold_table if mode.startswith('Tabulated') else None)
    auto = free_energy_per_area(a, spec, ROOM)
    fixed = free_energy_per_area(a, spec, LifshitzSettings(temperature=300.0, l_max=2 * auto.terms_used))
    assert fixed.pressure == pytest.approx(auto.pressure, rel=2 * ROOM.term_tolerance)
    assert fixed.free_energy_per_area == pytest.approx(auto.free_energy_per_area, rel=2 * ROOM.term_tolerance)
    assert auto.est_error <= max(ROOM.term_tolerance, ROOM.k_quad_tolerance)


@pytest.mark.parametrize('mode', ['PureDrude', 'PurePlasma'])
@pytest.mark.parametrize('a', [100e-9, 150e-9, 250e-9, 400e-9, 600e-9])
def test_pressure_is_minus_derivative_of_free_energy(mode, a):
    spec = PermittivitySpec(mode, GOLD)
    settings = LifshitzSettings(temperature=300.0, l_max=400, k_quad_tolerance=1e-7)
    h = 1e-3 * a
    upper = free_energy_per_area(a + h, spec, settings).free_energy_per_area
    lower = free_energy_per_area(a - h, spec, settings).free_energy_per_area
    pressure = free_energy_per_area(a, spec, settings).pressure
    assert pressure == pytest.approx(-(upper - lower) / (2.0 * h), rel=1e-4)


def test_zero_temperature_matches_one_kelvin_sum():
    spec = PermittivitySpec('PurePlasma', GOLD)
    cold = free_energy_per_area(100e-9, spec, LifshitzSettings(zero_t_mode=True, k_quad_tolerance=1e-5))
    one_kelvin = free_energy_per_area(
        100e-9, spec, LifshitzSettings(temperature=1.0, l_cap=100000, k_quad_tolerance=1e-5))
    assert cold.free_energy_per_area == pytest.approx(one_kelvin.free_energy_per_area, rel=5e-3)
    assert cold.pressure == pytest.approx(one_kelvin.pressure, rel=5e-3)


def test_truncation_cap():
    spec = PermittivitySpec('PureDrude', GOLD)
    with pytest.raises(TruncationNotConverged):
        free_energy_per_area(100e-9, spec, LifshitzSettings(temperature=300.0, l_cap=10))


def test_nonpositive_separation():
    spec = PermittivitySpec('PureDrude', GOLD)
    with pytest.raises(SeparationNonpositive):
        free_energy_per_area(0.0, spec, ROOM)


def test_result_is_deterministic(gold_table):
    spec = PermittivitySpec('TabulatedDrude', GOLD, gold_table)
    first = free_energy_per_area(180e-9, spec, ROOM)
    second = free_energy_per_area(180e-9, spec, ROOM)
    assert first == second


def test_thermal_correction_is_small_at_short_range():
    spec = PermittivitySpec('PurePlasma', GOLD)
    ratio = thermal_correction(100e-9, spec, ROOM)
    assert 0.95 < ratio < 1.05


@pytest.mark.parametrize('kwargs', [
    {'term_tolerance': 0.0},
    {'k_quad_tolerance': 0.1},
    {'l_max': -1},
    {'temperature': 0.0},
])
def test_invalid_settings(kwargs):
    with pytest.raises(InvalidParameter):
        LifshitzSettings(**kwargs)


def test_refined_settings():
    refined = LifshitzSettings(l_max=10).refined()
    assert refined.l_max == 20
    assert refined.term_tolerance == 5e-7
    assert refined.k_quad_tolerance == 5e-7
