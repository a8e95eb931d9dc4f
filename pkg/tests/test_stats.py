import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from app.errors import CurveRangeMismatch, InvalidDof, MissingSigmaZ
from app.models import FrequencyShiftCurve, MeasurementDataset, MeasurementPoint, SigmaMode
from app.physics.stats import (
    chi2, chi2_survival, compare, exclusion_subset, regularized_gamma_p, regularized_gamma_q,
)

UM = 1e-6


def linear_curve(n=5, tag='PureDrude'):
    z = np.linspace(0.1, 0.3, n) * UM
    return FrequencyShiftCurve.from_arrays(z, -10.0 + 20.0 * z / UM, tag, 'exact')


def dataset_from(curve, offsets_sigma=None, sigma=0.5, sigma_z=None):
    offsets_sigma = offsets_sigma if offsets_sigma is not None else [0.0] * len(curve)
    points = tuple(
        MeasurementPoint(p.z, p.delta_f + k * sigma, sigma, sigma_z)
        for p, k in zip(curve.points, offsets_sigma)
    )
    return MeasurementDataset(points, 'synthetic')


def exclusion_fixture():
    """32 points, the 15 shortest separations displaced by 5 sigma"""
    z = np.linspace(0.12, 0.5, 32) * UM
    theory = FrequencyShiftCurve.from_arrays(z, -50.0 * (0.1 * UM / z) ** 4, 'TabulatedDrude', 'exact')
    offsets = [5.0] * 15 + [0.5 * (-1) ** i for i in range(17)]
    return theory, dataset_from(theory, offsets, sigma=0.2)


def test_chi2_of_exact_data():
    curve = linear_curve()
    report = chi2(dataset_from(curve), curve)
    assert report.chi2 == 0.0
    assert report.per_point == (0.0,) * 5
    assert report.dof == 5


def test_chi2_single_point_two_sigma():
    curve = linear_curve()
    data = MeasurementDataset((MeasurementPoint(curve.points[2].z, curve.points[2].delta_f + 1.0, 0.5),))
    report = chi2(data, curve)
    assert report.chi2 == pytest.approx(4.0)
    assert report.dof == 1


def test_chi2_interpolates_between_nodes():
    curve = linear_curve()
    z = 0.175 * UM
    data = MeasurementDataset((MeasurementPoint(z, -10.0 + 20.0 * 0.175, 1.0),))
    report = chi2(data, curve)
    assert report.theory[0] == pytest.approx(-10.0 + 20.0 * 0.175, rel=1e-12)
    assert report.chi2 == pytest.approx(0.0, abs=1e-20)


def test_chi2_outside_curve_range():
    curve = linear_curve()
    data = MeasurementDataset((MeasurementPoint(0.35 * UM, 0.0, 1.0),))
    with pytest.raises(CurveRangeMismatch) as excinfo:
        chi2(data, curve)
    assert excinfo.value.z == 0.35 * UM
    assert '0.35' in excinfo.value.message


def test_combined_sigma_needs_sigma_z():
    curve = linear_curve()
    with pytest.raises(MissingSigmaZ):
        chi2(dataset_from(curve), curve, SigmaMode.COMBINED)


def test_combined_sigma_folds_in_slope():
    curve = linear_curve()
    data = dataset_from(curve, [1.0] * 5, sigma=0.5, sigma_z=0.001 * UM)
    f_only = chi2(data, curve, 'f_only')
    combined = chi2(data, curve, 'combined')
    # slope 20 Hz/um, sigma_z 1 nm
    np.testing.assert_allclose(combined.sigma_eff, math.sqrt(0.25 + 0.02 ** 2), rtol=1e-9)
    assert combined.chi2 < f_only.chi2
    assert combined.sigma_mode is SigmaMode.COMBINED


def test_n_fit_params_reduce_dof():
    curve = linear_curve()
    assert chi2(dataset_from(curve), curve, n_fit_params=2).dof == 3


@pytest.mark.parametrize('offsets, threshold, expected', [
    ([0.0, 0.0, 0.0], 1.0, (0, 0.0)),
    ([0.5, 2.0, 3.0], 1.0, (2, 13.0)),
    ([0.5, -2.0, 3.0], 2.5, (1, 9.0)),
])
def test_exclusion_subset(offsets, threshold, expected):
    curve = linear_curve(3)
    report = chi2(dataset_from(curve, offsets, sigma=0.5), curve)
    count, partial = exclusion_subset(report, threshold)
    assert count == expected[0]
    assert partial == pytest.approx(expected[1])
    assert partial <= report.chi2


def test_exclusion_fixture():
    theory, data = exclusion_fixture()
    report = compare(data, theory, n_fit_params=0, threshold_sigma=4.5, reference_bound=300.0)
    count, partial = report.subset_bound
    assert count == 15
    assert partial == pytest.approx(15 * 25.0)
    assert partial > 300.0
    assert report.probability < 1e-8
    assert report.probability_bound < 1e-8
    assert report.exceeds_reference is True


def test_compare_window():
    theory, data = exclusion_fixture()
    report = compare(data, theory, n_fit_params=2, z_window=(0.12 * UM, 0.3 * UM))
    assert report.n_outside_window == 32 - len(report)
    assert report.dof == len(report) - 2
    assert all(z <= 0.3 * UM for z in report.z)


def test_compare_exact_data_is_certain():
    curve = linear_curve()
    report = compare(dataset_from(curve), curve, n_fit_params=0)
    assert report.chi2 == 0.0
    assert report.probability == 1.0
    assert report.subset_bound == (0, 0.0)


def test_chi2_survival_examples():
    assert chi2_survival(0.0, 4) == 1.0
    assert chi2_survival(3.841, 1) == pytest.approx(0.05, abs=2e-4)
    assert 0.30 <= chi2_survival(35.3, 33) <= 0.42
    assert 0.004 <= chi2_survival(56.1, 33) <= 0.012


def test_chi2_survival_against_density_integral():
    density = lambda x, k: x ** (k / 2 - 1) * math.exp(-x / 2) / (2 ** (k / 2) * math.gamma(k / 2))  # noqa: E731
    tail, _ = integrate.quad(density, 3.841, np.inf, args=(1,))
    assert chi2_survival(3.841, 1) == pytest.approx(tail, abs=1e-8)


@pytest.mark.parametrize('dof', [0, -3, 2.5, True])
def test_chi2_survival_rejects_dof(dof):
    with pytest.raises(InvalidDof):
        chi2_survival(1.0, dof)


@pytest.mark.parametrize('m', range(1, 21))
def test_even_dof_closed_form(m):
    for x in (0.01, 0.5, 3.0, float(m), 2.0 * m, 40.0, 90.0):
        half = x / 2.0
        closed = math.exp(-half) * math.fsum(half ** j / math.factorial(j) for j in range(m))
        assert chi2_survival(x, 2 * m) == pytest.approx(closed, abs=1e-10)


@given(st.floats(min_value=0.5, max_value=60.0), st.floats(min_value=0.0, max_value=150.0))
def test_incomplete_gamma_halves(a, x):
    p = regularized_gamma_p(a, x)
    q = regularized_gamma_q(a, x)
    assert abs(p + q - 1.0) <= 1e-10
    assert q == pytest.approx(special.gammaincc(a, x), abs=1e-10)


@given(st.integers(min_value=1, max_value=80), st.floats(min_value=0.1, max_value=200.0))
def test_survival_monotonicity(dof, x):
    q = chi2_survival(x, dof)
    further = chi2_survival(1.01 * x, dof)
    wider = chi2_survival(x, dof + 1)
    assert further <= q <= wider
    if 1e-12 < q < 1.0 - 1e-12:
        assert further < q < wider
