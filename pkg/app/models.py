import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

from app.errors import (
    AmplitudeExceedsSeparation, ConfigError, EmptyTable, InvalidParameter,
    NegativeImEps, NonMonotonicEnergy, NonpositiveFrequency, SeparationNonpositive,
)


class _ParsableEnum(str, Enum):

    @classmethod
    def parse(cls, value):
        """Accept the canonical value, the member name or a snake/kebab spelling"""
        if isinstance(value, cls):
            return value
        key = str(value).strip().replace('-', '_').replace(' ', '').lower()
        for member in cls:
            if key in (member.value.lower(), member.name.lower(), member.name.lower().replace('_', '')):
                return member
        choices = ', '.join(m.value for m in cls)
        raise ConfigError(f'unknown {cls.__name__} "{value}" (choose from {choices})')


class PermittivityMode(_ParsableEnum):
    TABULATED_DRUDE = 'TabulatedDrude'
    TABULATED_PLASMA = 'TabulatedPlasma'
    PURE_DRUDE = 'PureDrude'
    PURE_PLASMA = 'PurePlasma'

    @property
    def is_tabulated(self):
        return self in (PermittivityMode.TABULATED_DRUDE, PermittivityMode.TABULATED_PLASMA)

    @property
    def is_drude_like(self):
        # zero-frequency TE reflection vanishes
        return self in (PermittivityMode.TABULATED_DRUDE, PermittivityMode.PURE_DRUDE)


class Averaging(_ParsableEnum):
    EXACT = 'exact'
    FIRST_TERM = 'first_term'


class SigmaMode(_ParsableEnum):
    F_ONLY = 'f_only'
    COMBINED = 'combined'


class CorrectionFactor(_ParsableEnum):
    ETA = 'eta'
    ETA_CORR = 'eta_corr'


class CorrectionDirection(_ParsableEnum):
    MULTIPLY = 'multiply'
    DIVIDE = 'divide'

    def inverse(self):
        if self is CorrectionDirection.MULTIPLY:
            return CorrectionDirection.DIVIDE
        return CorrectionDirection.MULTIPLY


# Optics

@dataclass(frozen=True)
class OpticalTable:
    """Photon energy (eV) against Im eps for one metal, strictly increasing in energy"""
    omega: Tuple[float, ...]
    im_eps: Tuple[float, ...]
    source_label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'omega', tuple(float(w) for w in self.omega))
        object.__setattr__(self, 'im_eps', tuple(float(v) for v in self.im_eps))
        if len(self.omega) != len(self.im_eps):
            raise InvalidParameter('omega and im_eps columns differ in length')
        if len(self.omega) < 2:
            raise EmptyTable(f'optical table needs at least 2 points, got {len(self.omega)}')
        if self.omega[0] <= 0.0:
            raise NonpositiveFrequency(f'photon energy {self.omega[0]} eV is not positive')
        for previous, current in zip(self.omega, self.omega[1:]):
            if current <= previous:
                raise NonMonotonicEnergy(f'energy {current} eV does not follow {previous} eV')
        for w, value in zip(self.omega, self.im_eps):
            if value < 0.0 or math.isnan(value):
                raise NegativeImEps(f'Im eps = {value} at {w} eV')

    @property
    def omega_min(self):
        return self.omega[0]

    @property
    def omega_max(self):
        return self.omega[-1]

    @cached_property
    def log_omega(self):
        return np.log(np.asarray(self.omega))

    @cached_property
    def log_im_eps(self):
        # zero entries are held at the smallest normal double
        values = np.maximum(np.asarray(self.im_eps), np.finfo(float).tiny)
        return np.log(values)

    def __len__(self):
        return len(self.omega)

    def __repr__(self):
        return f'<OpticalTable {self.source_label or "unnamed"} {len(self)} pts {self.omega_min:g}-{self.omega_max:g} eV>'


@dataclass(frozen=True)
class DrudeParams:
    omega_p: float = 7.54
    gamma: float = 0.051

    def __post_init__(self):
        if not self.omega_p > 0.0:
            raise InvalidParameter(f'plasma frequency must be positive, got {self.omega_p} eV')
        if not self.gamma >= 0.0:
            raise InvalidParameter(f'relaxation parameter must be non-negative, got {self.gamma} eV')


@dataclass(frozen=True)
class PermittivitySpec:
    mode: PermittivityMode
    drude: DrudeParams = field(default_factory=DrudeParams)
    table: Optional[OpticalTable] = None
    core_cutoff: float = 2.0
    tail_exponent: float = 3.0

    def __post_init__(self):
        object.__setattr__(self, 'mode', PermittivityMode.parse(self.mode))
        if self.mode.is_tabulated and self.table is None:
            raise ConfigError(f'{self.mode.value} needs an optical table')
        if not self.mode.is_tabulated and self.table is not None:
            raise ConfigError(f'{self.mode.value} does not take an optical table')
        if self.mode is PermittivityMode.TABULATED_PLASMA:
            if not self.table.omega_min <= self.core_cutoff < self.table.omega_max:
                raise InvalidParameter(
                    f'core cutoff {self.core_cutoff} eV outside table range '
                    f'[{self.table.omega_min}, {self.table.omega_max}] eV')
        if not self.tail_exponent >= 1.0:
            raise InvalidParameter(f'tail exponent must be >= 1, got {self.tail_exponent}')


# Lifshitz

@dataclass(frozen=True)
class LifshitzSettings:
    temperature: float = 300.0
    l_max: Optional[int] = None  # None = automatic truncation
    term_tolerance: float = 1e-6
    k_quad_tolerance: float = 1e-6
    zero_t_mode: bool = False
    l_cap: int = 5000

    def __post_init__(self):
        if not self.zero_t_mode and not self.temperature > 0.0:
            raise InvalidParameter(f'temperature must be positive, got {self.temperature} K')
        for name in ('term_tolerance', 'k_quad_tolerance'):
            value = getattr(self, name)
            if not 0.0 < value <= 1e-2:
                raise InvalidParameter(f'{name} must lie in (0, 1e-2], got {value}')
        if self.l_max is not None and self.l_max < 0:
            raise InvalidParameter(f'l_max must be >= 0, got {self.l_max}')
        if self.l_cap < 1:
            raise InvalidParameter(f'l_cap must be >= 1, got {self.l_cap}')

    @property
    def auto_truncation(self):
        return self.l_max is None

    def refined(self):
        """Doubled Matsubara budget and halved tolerances"""
        return replace(
            self,
            l_max=None if self.l_max is None else 2 * self.l_max,
            l_cap=2 * self.l_cap,
            term_tolerance=self.term_tolerance / 2,
            k_quad_tolerance=self.k_quad_tolerance / 2,
        )


@dataclass(frozen=True)
class PlateResult:
    separation: float
    free_energy_per_area: float
    pressure: float
    terms_used: int
    est_error: float


# Sphere-membrane oscillator

@dataclass(frozen=True)
class OscillatorGeometry:
    sphere_radius: float
    resonance_frequency: float
    spring_constant: float
    a_rms: float = 0.0
    roughness: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self):
        for name in ('sphere_radius', 'resonance_frequency', 'spring_constant'):
            if not getattr(self, name) > 0.0:
                raise InvalidParameter(f'{name} must be positive, got {getattr(self, name)}')
        if not self.a_rms >= 0.0:
            raise InvalidParameter(f'a_rms must be non-negative, got {self.a_rms}')
        roughness = tuple((float(h), float(w)) for h, w in self.roughness)
        object.__setattr__(self, 'roughness', roughness)
        if roughness:
            if any(w < 0.0 for _, w in roughness):
                raise InvalidParameter('roughness weights must be non-negative')
            total = math.fsum(w for _, w in roughness)
            if abs(total - 1.0) > 1e-12:
                raise InvalidParameter(f'roughness weights sum to {total!r}, expected 1')

    @property
    def peak_amplitude(self):
        # sinusoidal motion
        return math.sqrt(2.0) * self.a_rms

    @property
    def max_offset(self):
        return max((abs(h) for h, _ in self.roughness), default=0.0)

    @property
    def min_separation(self):
        return self.peak_amplitude + self.max_offset

    def check_separation(self, z):
        if not z > 0.0:
            raise SeparationNonpositive(f'separation {z} m is not positive')
        if not z > self.min_separation:
            raise AmplitudeExceedsSeparation(
                f'z = {z * 1e9:.4g} nm does not exceed sqrt(2)*A_rms + max|h| = '
                f'{self.min_separation * 1e9:.4g} nm')


@dataclass(frozen=True)
class CurvePoint:
    z: float
    delta_f: float
    z_delta_f: float


@dataclass(frozen=True)
class FrequencyShiftCurve:
    points: Tuple[CurvePoint, ...]
    model_tag: str
    averaging_tag: Averaging

    def __post_init__(self):
        object.__setattr__(self, 'points', tuple(self.points))
        object.__setattr__(self, 'averaging_tag', Averaging.parse(self.averaging_tag))
        for previous, current in zip(self.points, self.points[1:]):
            if current.z <= previous.z:
                raise InvalidParameter('curve separations must be strictly increasing')

    @classmethod
    def from_arrays(cls, z, delta_f, model_tag, averaging_tag):
        points = tuple(CurvePoint(float(zi), float(df), float(zi) * float(df)) for zi, df in zip(z, delta_f))
        return cls(points, model_tag, averaging_tag)

    @property
    def z(self):
        return np.array([p.z for p in self.points])

    @property
    def delta_f(self):
        return np.array([p.delta_f for p in self.points])

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f'<FrequencyShiftCurve {self.model_tag}/{self.averaging_tag.value} {len(self)} pts>'


# Measurements and statistics

@dataclass(frozen=True)
class MeasurementPoint:
    z: float
    delta_f: float
    sigma_f: float
    sigma_z: Optional[float] = None


@dataclass(frozen=True)
class MeasurementDataset:
    points: Tuple[MeasurementPoint, ...]
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'points', tuple(self.points))
        for p in self.points:
            if not p.sigma_f > 0.0:
                raise InvalidParameter(f'sigma_f must be positive at z = {p.z}')
            if not p.z > 0.0:
                raise SeparationNonpositive(f'data separation {p.z} m is not positive')
        for previous, current in zip(self.points, self.points[1:]):
            if current.z <= previous.z:
                raise InvalidParameter('data separations must be strictly increasing')

    @property
    def z(self):
        return np.array([p.z for p in self.points])

    def window(self, z_min=None, z_max=None):
        """Points with z_min <= z <= z_max, and the number left out"""
        kept = tuple(
            p for p in self.points
            if (z_min is None or p.z >= z_min) and (z_max is None or p.z <= z_max)
        )
        return replace(self, points=kept), len(self.points) - len(kept)

    def with_separations(self, z_values):
        points = tuple(replace(p, z=float(z)) for p, z in zip(self.points, z_values))
        return replace(self, points=points)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class Chi2Report:
    chi2: float
    dof: int
    per_point: Tuple[float, ...]
    z: Tuple[float, ...] = ()
    data: Tuple[float, ...] = ()
    theory: Tuple[float, ...] = ()
    sigma_eff: Tuple[float, ...] = ()
    sigma_mode: SigmaMode = SigmaMode.F_ONLY
    probability: Optional[float] = None
    subset_bound: Optional[Tuple[int, float]] = None
    probability_bound: Optional[float] = None
    reference_bound: Optional[float] = None
    model_tag: str = ''
    n_outside_window: int = 0

    @property
    def exceeds_reference(self):
        if self.reference_bound is None or self.subset_bound is None:
            return None
        return self.subset_bound[1] > self.reference_bound

    def __len__(self):
        return len(self.per_point)


@dataclass(frozen=True)
class FigureSpec:
    curves: Tuple[Tuple[FrequencyShiftCurve, str], ...]
    overlay: Optional[MeasurementDataset] = None
    title: str = ''
