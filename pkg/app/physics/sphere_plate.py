"""Sphere-membrane observable: PFA force and gradient, roughness and
vibration corrections, and the dynamic frequency shift.
"""
import logging
import math

import numpy as np

from app.errors import AmplitudeExceedsSeparation, InvalidParameter, SeparationNonpositive
from app.models import (
    Averaging, CorrectionDirection, CorrectionFactor, FrequencyShiftCurve, LifshitzSettings,
    MeasurementDataset, OscillatorGeometry, PermittivitySpec,
)
from app.physics.lifshitz import free_energy_per_area
from app.physics.quadrature import periodic_average

logger = logging.getLogger(__name__)

PFA_MIN_ASPECT = 100.0
AVERAGE_REL_TOLERANCE = 1e-6

# squared amplitude coefficient of each vibration factor
_FACTOR_COEFFICIENT = {
    CorrectionFactor.ETA: 1.0,
    CorrectionFactor.ETA_CORR: 1.5,
}


def _require_positive(z, what='separation'):
    if not z > 0.0:
        raise SeparationNonpositive(f'{what} {z} m is not positive')


def _check_pfa(z, R):
    _require_positive(z)
    if R / z <= PFA_MIN_ASPECT:
        logger.warning(f'PFA used at R/z = {R / z:.1f} (<= {PFA_MIN_ASPECT:g})')


def pfa_force(z, plate_free_energy, R):
    """Sphere-plate force 2 pi R F_pp(z), negative when attractive"""
    _check_pfa(z, R)
    return 2.0 * math.pi * R * plate_free_energy(z)


def pfa_gradient(z, plate_pressure, R):
    """dF_sp/dz = -2 pi R P_pp(z), positive for an attractive pressure"""
    _check_pfa(z, R)
    return -2.0 * math.pi * R * plate_pressure(z)


def eta(z, a_rms):
    """Vibration factor sqrt(1 + A^2 / z^2)"""
    _require_positive(z)
    return math.sqrt(1.0 + a_rms * a_rms / (z * z))


def eta_corr(z, a_rms):
    """Corrected vibration factor sqrt(1 + 3 A^2 / (2 z^2))"""
    _require_positive(z)
    return math.sqrt(1.0 + 1.5 * a_rms * a_rms / (z * z))


def apply_separation_correction(z_raw, a_rms, which, direction):
    """Correct a separation by a vibration factor.

    multiply returns z_raw * factor(z_raw). divide returns z_raw / factor(z),
    the factor taken at the corrected separation z, i.e. the z with
    z * factor(z) = z_raw; it inverts multiply exactly.
    """
    which = CorrectionFactor.parse(which)
    direction = CorrectionDirection.parse(direction)
    _require_positive(z_raw)
    factor = eta if which is CorrectionFactor.ETA else eta_corr

    if direction is CorrectionDirection.MULTIPLY:
        return z_raw * factor(z_raw, a_rms)

    residual = z_raw * z_raw - _FACTOR_COEFFICIENT[which] * a_rms * a_rms
    if not residual > 0.0:
        raise SeparationNonpositive(
            f'z = {z_raw * 1e9:.4g} nm cannot be divided by {which.value} at A_rms = {a_rms * 1e9:.4g} nm')
    return math.sqrt(residual)


def recorrect_separation(z_reported, a_rms, direction):
    """Undo an eta correction and apply eta_corr in its place"""
    direction = CorrectionDirection.parse(direction)
    z_raw = apply_separation_correction(z_reported, a_rms, CorrectionFactor.ETA, direction.inverse())
    return apply_separation_correction(z_raw, a_rms, CorrectionFactor.ETA_CORR, direction)


def rough_average(f, z, roughness):
    """Weighted mean of f(z + h_i) over a discrete height distribution"""
    if not roughness:
        return f(z)
    lowest = min(h for h, _ in roughness)
    if not z + lowest > 0.0:
        raise SeparationNonpositive(f'z + min(h) = {(z + lowest) * 1e9:.4g} nm is not positive')
    return math.fsum(w * f(z + h) for h, w in roughness)


def frequency_shift(z, force_gradient, geom: OscillatorGeometry, averaging=Averaging.EXACT):
    """Frequency shift -(f0 / 2 kappa) <G>, G the roughness-averaged force gradient.

    first_term takes G at z; exact averages G(z + sqrt(2) A_rms cos theta)
    over one oscillation period.
    """
    averaging = Averaging.parse(averaging)
    peak = geom.peak_amplitude
    if not z > peak:
        raise AmplitudeExceedsSeparation(
            f'z = {z * 1e9:.4g} nm does not exceed the peak amplitude {peak * 1e9:.4g} nm')

    def gradient(zz):
        return rough_average(force_gradient, zz, geom.roughness)

    if averaging is Averaging.FIRST_TERM or peak == 0.0:
        g = gradient(z)
    else:
        g = periodic_average(lambda c: gradient(z + peak * c), AVERAGE_REL_TOLERANCE)
    return -geom.resonance_frequency / (2.0 * geom.spring_constant) * g


def casimir_gradient(spec: PermittivitySpec, s: LifshitzSettings, R):
    """z -> dF_sp/dz from the Lifshitz pressure"""
    def plate_pressure(a):
        return free_energy_per_area(a, spec, s).pressure

    return lambda z: pfa_gradient(z, plate_pressure, R)


def theory_curve(z_grid, spec: PermittivitySpec, s: LifshitzSettings, geom: OscillatorGeometry,
                 averaging=Averaging.EXACT):
    """Frequency shift over a separation grid for one permittivity mode"""
    averaging = Averaging.parse(averaging)
    z_grid = [float(z) for z in z_grid]
    for z in z_grid:
        geom.check_separation(z)

    gradient = casimir_gradient(spec, s, geom.sphere_radius)
    shifts = []
    for z in z_grid:
        shifts.append(frequency_shift(z, gradient, geom, averaging))
        logger.debug(f'{spec.mode.value} z = {z * 1e6:.4f} um: df = {shifts[-1]:.6e} Hz')
    return FrequencyShiftCurve.from_arrays(z_grid, shifts, spec.mode.value, averaging)


def convergence_check(z_grid, spec: PermittivitySpec, s: LifshitzSettings, geom: OscillatorGeometry,
                      averaging=Averaging.EXACT):
    """Largest relative change of the curve under s.refined()"""
    base = theory_curve(z_grid, spec, s, geom, averaging)
    fine = theory_curve(z_grid, spec, s.refined(), geom, averaging)
    if not len(base):
        return 0.0
    change = np.abs(fine.delta_f - base.delta_f) / np.abs(fine.delta_f)
    return float(np.max(change))


def separation_grid(z_min, z_max, points, spacing='lin'):
    """Separation grid in metres, linear or logarithmic"""
    _require_positive(z_min)
    if points < 1:
        return np.array([])
    if points == 1:
        return np.array([float(z_min)])
    if not z_max > z_min:
        raise InvalidParameter(f'grid upper bound {z_max} m must exceed {z_min} m')
    if spacing not in ('lin', 'log'):
        raise InvalidParameter(f'grid spacing must be lin or log, got {spacing}')
    if spacing == 'log':
        return np.logspace(math.log10(z_min), math.log10(z_max), int(points))
    return np.linspace(z_min, z_max, int(points))


def correct_dataset(dataset: MeasurementDataset, a_rms, which, direction, recorrect=False):
    """Apply a separation correction, or swap eta for eta_corr, on every data point"""
    if recorrect:
        zs = [recorrect_separation(z, a_rms, direction) for z in dataset.z]
    else:
        zs = [apply_separation_correction(z, a_rms, which, direction) for z in dataset.z]
    return dataset.with_separations(zs)
