"""Chi-squared comparison of a theory curve against measured frequency shifts."""
import logging
import math
from dataclasses import replace

import numpy as np
from scipy.interpolate import PchipInterpolator

from app.errors import CurveRangeMismatch, InvalidDof, InvalidParameter, MissingSigmaZ, SeriesNonConvergent
from app.models import Chi2Report, FrequencyShiftCurve, MeasurementDataset, SigmaMode

logger = logging.getLogger(__name__)

GAMMA_ACCURACY = 1e-15
GAMMA_MAX_ITERATIONS = 10000
_TINY = np.finfo(float).tiny

# relative tolerance for a data separation to count as a curve node
NODE_MATCH_RTOL = 1e-9


def _check_gamma_args(a, x):
    if not a > 0.0:
        raise InvalidParameter(f'incomplete gamma needs a > 0, got {a}')
    if not x >= 0.0:
        raise InvalidParameter(f'incomplete gamma needs x >= 0, got {x}')


def _prefactor(a, x):
    return math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_series(a, x):
    """P(a, x) by its power series, for x < a + 1"""
    ap = a
    term = total = 1.0 / a
    for _ in range(GAMMA_MAX_ITERATIONS):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * GAMMA_ACCURACY:
            return total * _prefactor(a, x)
    raise SeriesNonConvergent(f'incomplete gamma series at a = {a}, x = {x}')


def _gamma_continued_fraction(a, x):
    """Q(a, x) by its continued fraction (modified Lentz), for x >= a + 1"""
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, GAMMA_MAX_ITERATIONS + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_ACCURACY:
            return _prefactor(a, x) * h
    raise SeriesNonConvergent(f'incomplete gamma continued fraction at a = {a}, x = {x}')


def regularized_gamma_p(a, x):
    """Lower regularized incomplete gamma P(a, x)"""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return min(1.0, _gamma_series(a, x))
    return max(0.0, 1.0 - _gamma_continued_fraction(a, x))


def regularized_gamma_q(a, x):
    """Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x)"""
    _check_gamma_args(a, x)
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return max(0.0, 1.0 - _gamma_series(a, x))
    return min(1.0, _gamma_continued_fraction(a, x))


def _is_count(value):
    if isinstance(value, bool):
        return False
    try:
        return int(value) == value
    except (TypeError, ValueError, OverflowError):
        return False


def chi2_survival(chi2, dof):
    """Probability that a chi-squared variable with dof degrees of freedom exceeds chi2"""
    if not _is_count(dof) or dof < 1:
        raise InvalidDof(f'degrees of freedom must be an integer >= 1, got {dof}')
    if not chi2 >= 0.0:
        raise InvalidParameter(f'chi2 must be non-negative, got {chi2}')
    return regularized_gamma_q(0.5 * int(dof), 0.5 * chi2)


class TheoryInterpolator:
    """Theory curve evaluated at data separations.

    Separations on a curve node take the node value; others are interpolated
    with a monotone cubic (PCHIP) strictly inside the curve range.
    """

    def __init__(self, curve: FrequencyShiftCurve):
        self.curve = curve
        self.z = curve.z
        self.delta_f = curve.delta_f
        self._pchip = PchipInterpolator(self.z, self.delta_f) if len(curve) >= 2 else None

    def _node(self, z):
        if not len(self.z):
            return None
        i = int(np.argmin(np.abs(self.z - z)))
        if abs(self.z[i] - z) <= NODE_MATCH_RTOL * abs(z):
            return i
        return None

    def _check_range(self, z):
        if self._pchip is None or not self.z[0] <= z <= self.z[-1]:
            raise CurveRangeMismatch(z)

    def value(self, z):
        i = self._node(z)
        if i is not None:
            return float(self.delta_f[i])
        self._check_range(z)
        return float(self._pchip(z))

    def slope(self, z):
        """d(delta_f)/dz, zero for a single-point curve"""
        i = self._node(z)
        if i is None:
            self._check_range(z)
        if self._pchip is None:
            return 0.0
        return float(self._pchip(self.z[i] if i is not None else z, 1))


def chi2(data: MeasurementDataset, theory: FrequencyShiftCurve, sigma_mode=SigmaMode.F_ONLY, n_fit_params=0):
    """Per-point contributions ((d - t) / sigma_eff)^2 and their sum"""
    sigma_mode = SigmaMode.parse(sigma_mode)
    if not _is_count(n_fit_params) or n_fit_params < 0:
        raise InvalidParameter(f'n_fit_params must be a non-negative integer, got {n_fit_params}')
    if sigma_mode is SigmaMode.COMBINED:
        missing = [p.z for p in data.points if p.sigma_z is None]
        if missing:
            raise MissingSigmaZ(f'combined sigma mode: no sigma_z at z = {missing[0] * 1e6:.6g} um')
        logger.warning('Combined sigma mode: separation errors folded in through the theory slope')

    interpolator = TheoryInterpolator(theory)
    theory_values, sigmas, per_point = [], [], []
    for p in data.points:
        t = interpolator.value(p.z)
        sigma2 = p.sigma_f * p.sigma_f
        if sigma_mode is SigmaMode.COMBINED:
            slope = interpolator.slope(p.z)
            sigma2 += (slope * p.sigma_z) ** 2
        theory_values.append(t)
        sigmas.append(math.sqrt(sigma2))
        per_point.append((p.delta_f - t) ** 2 / sigma2)

    return Chi2Report(
        chi2=math.fsum(per_point),
        dof=len(data) - int(n_fit_params),
        per_point=tuple(per_point),
        z=tuple(p.z for p in data.points),
        data=tuple(p.delta_f for p in data.points),
        theory=tuple(theory_values),
        sigma_eff=tuple(sigmas),
        sigma_mode=sigma_mode,
        model_tag=theory.model_tag,
    )


def exclusion_subset(report: Chi2Report, threshold_sigma):
    """Count and partial chi2 of the points at least threshold_sigma off"""
    if not threshold_sigma >= 0.0:
        raise InvalidParameter(f'threshold must be non-negative, got {threshold_sigma}')
    cut = threshold_sigma * threshold_sigma
    selected = [c for c in report.per_point if c >= cut]
    return len(selected), math.fsum(selected)


def compare(data: MeasurementDataset, theory: FrequencyShiftCurve, sigma_mode=SigmaMode.F_ONLY, n_fit_params=0,
            threshold_sigma=4.5, reference_bound=None, z_window=(None, None)):
    """Full report: chi2, survival probability, exclusion subset and its bounds.

    probability_bound is the survival probability of the subset's partial chi2
    at the full dof; any fit adds to that partial sum, so no fit can do better.
    """
    z_min, z_max = z_window
    inside, n_out = data.window(z_min, z_max)
    if n_out:
        logger.info(f'{n_out} of {len(data)} points outside the separation window')

    report = chi2(inside, theory, sigma_mode, n_fit_params)
    probability = chi2_survival(report.chi2, report.dof)
    count, partial = exclusion_subset(report, threshold_sigma)
    report = replace(
        report,
        probability=probability,
        subset_bound=(count, partial),
        probability_bound=chi2_survival(partial, report.dof),
        reference_bound=reference_bound,
        n_outside_window=n_out,
    )
    logger.info(f'{theory.model_tag}: chi2 = {report.chi2:.4g}, dof = {report.dof}, '
                f'P = {probability:.3g}, {count} points >= {threshold_sigma:g} sigma (partial {partial:.4g})')
    return report
