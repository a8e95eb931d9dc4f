"""INI run configuration.

Physical keys carry their unit in the name (z_min_um, temperature_k, ...);
everything is converted to SI (or eV for photon energies) on loading.
Relative paths are resolved against the directory of the config file.
"""
import configparser
import logging
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Optional, Tuple

from app.datafiles import read_optical_table, read_roughness
from app.errors import CasimirError, ConfigError
from app.models import (
    CorrectionDirection, CorrectionFactor, DrudeParams, LifshitzSettings, OscillatorGeometry,
    PermittivityMode, PermittivitySpec, SigmaMode,
)

logger = logging.getLogger(__name__)

UM = 1e-6
NM = 1e-9
_REQUIRED = object()


@dataclass(frozen=True)
class OpticsSection:
    modes: Tuple[PermittivityMode, ...]
    table_path: Optional[str] = None
    drude: DrudeParams = field(default_factory=DrudeParams)
    core_cutoff: float = 2.0
    tail_exponent: float = 3.0


@dataclass(frozen=True)
class GridSection:
    z_min: Optional[float] = None
    z_max: Optional[float] = None
    points: int = 0
    spacing: str = 'lin'
    xi_min: float = 1e-3
    xi_max: float = 1e2
    xi_points: int = 50
    xi_list: Tuple[float, ...] = ()


@dataclass(frozen=True)
class StatsSection:
    dataset_path: str
    sigma_mode: SigmaMode = SigmaMode.F_ONLY
    n_fit_params: Optional[int] = None
    threshold_sigma: float = 4.5
    z_window: Tuple[Optional[float], Optional[float]] = (None, None)
    theory_curve_path: Optional[str] = None
    reference_bounds: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class CorrectionSection:
    which: CorrectionFactor
    direction: CorrectionDirection
    recorrect_dataset: bool = False


@dataclass(frozen=True)
class OutputSection:
    out_dir: str = 'output'
    svg: bool = True


class _Section:
    """Typed access to one configparser section"""

    def __init__(self, parser, name, base_dir):
        self.name = name
        self.base_dir = base_dir
        self.values = parser[name] if parser.has_section(name) else {}

    def _raw(self, key, default):
        value = self.values.get(key)
        if value is None or value.strip() == '':
            if default is _REQUIRED:
                raise ConfigError(f'[{self.name}] {key} is required')
            return None, default
        return value.strip(), None

    def text(self, key, default=_REQUIRED):
        value, fallback = self._raw(key, default)
        return fallback if value is None else value

    def number(self, key, default=_REQUIRED):
        value, fallback = self._raw(key, default)
        if value is None:
            return fallback
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f'[{self.name}] {key} = "{value}" is not a number')

    def integer(self, key, default=_REQUIRED):
        value, fallback = self._raw(key, default)
        if value is None:
            return fallback
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f'[{self.name}] {key} = "{value}" is not an integer')

    def boolean(self, key, default=False):
        value, fallback = self._raw(key, default)
        if value is None:
            return fallback
        lowered = value.lower()
        if lowered in ('1', 'true', 'yes', 'on'):
            return True
        if lowered in ('0', 'false', 'no', 'off'):
            return False
        raise ConfigError(f'[{self.name}] {key} = "{value}" is not a boolean')

    def path(self, key, default=None, must_exist=True):
        value, fallback = self._raw(key, default)
        if value is None:
            return fallback
        resolved = value if os.path.isabs(value) else os.path.join(self.base_dir, value)
        if must_exist and not os.path.isfile(resolved):
            raise ConfigError(f'[{self.name}] {key}: file not found: {resolved}')
        return resolved

    def items(self, key):
        value, _ = self._raw(key, '')
        if value is None:
            return []
        return [item.strip() for item in value.split(',') if item.strip()]


def _scaled(value, factor):
    return None if value is None else value * factor


@dataclass(frozen=True)
class RunConfig:
    path: str
    optics: OpticsSection
    thermal: LifshitzSettings
    grid: GridSection
    geometry: Optional[OscillatorGeometry] = None
    stats: Optional[StatsSection] = None
    correction: Optional[CorrectionSection] = None
    output: OutputSection = field(default_factory=OutputSection)

    @cached_property
    def table(self):
        if self.optics.table_path is None:
            raise ConfigError('[optics] table_path is required for tabulated modes')
        return read_optical_table(self.optics.table_path)

    def permittivity(self, mode):
        """PermittivitySpec for one mode, loading the optical table on first use"""
        mode = PermittivityMode.parse(mode)
        table = self.table if mode.is_tabulated else None
        try:
            return PermittivitySpec(mode, self.optics.drude, table, self.optics.core_cutoff, self.optics.tail_exponent)
        except CasimirError as e:
            raise ConfigError(f'[optics] {e.message}')

    def require_geometry(self):
        if self.geometry is None:
            raise ConfigError('[geometry] section is required')
        return self.geometry

    def require_stats(self):
        if self.stats is None:
            raise ConfigError('[stats] section is required')
        return self.stats


def _load_optics(section):
    modes = tuple(PermittivityMode.parse(m) for m in section.items('mode'))
    try:
        drude = DrudeParams(section.number('omega_p_ev', 7.54), section.number('gamma_ev', 0.051))
    except CasimirError as e:
        raise ConfigError(f'[optics] {e.message}')
    return OpticsSection(
        modes=modes,
        table_path=section.path('table_path', must_exist=False),
        drude=drude,
        core_cutoff=section.number('core_cutoff_ev', 2.0),
        tail_exponent=section.number('tail_exponent', 3.0),
    )


def _load_thermal(section, l_cap):
    l_max = section.text('l_max', 'auto')
    if str(l_max).lower() == 'auto':
        l_max = None
    else:
        l_max = section.integer('l_max')
    try:
        return LifshitzSettings(
            temperature=section.number('temperature_k', 300.0),
            l_max=l_max,
            term_tolerance=section.number('term_tolerance', 1e-6),
            k_quad_tolerance=section.number('k_quad_tolerance', 1e-6),
            zero_t_mode=section.boolean('zero_t_mode', False),
            l_cap=section.integer('l_cap', l_cap),
        )
    except CasimirError as e:
        raise ConfigError(f'[thermal] {e.message}')


def _load_geometry(section):
    if not section.values:
        return None
    roughness_path = section.path('roughness_path')
    roughness = read_roughness(roughness_path) if roughness_path else ()
    try:
        return OscillatorGeometry(
            sphere_radius=section.number('r_sphere_um') * UM,
            resonance_frequency=section.number('f0_hz'),
            spring_constant=section.number('kappa_n_per_m'),
            a_rms=section.number('a_rms_nm') * NM,
            roughness=roughness,
        )
    except ConfigError:
        raise
    except CasimirError as e:
        raise ConfigError(f'[geometry] {e.message}')


def _load_grid(section):
    spacing = section.text('spacing', 'lin').lower()
    if spacing not in ('lin', 'log'):
        raise ConfigError(f'[grid] spacing must be lin or log, got "{spacing}"')
    grid = GridSection(
        z_min=_scaled(section.number('z_min_um', None), UM),
        z_max=_scaled(section.number('z_max_um', None), UM),
        points=section.integer('points', 0),
        spacing=spacing,
        xi_min=section.number('xi_min_ev', 1e-3),
        xi_max=section.number('xi_max_ev', 1e2),
        xi_points=section.integer('xi_points', 50),
        xi_list=tuple(_parse_float_list(section, 'xi_list_ev')),
    )
    if grid.z_min is not None and not grid.z_min > 0.0:
        raise ConfigError(f'[grid] z_min_um must be positive, got {grid.z_min / UM}')
    if grid.points > 1 and (grid.z_max is None or not grid.z_max > grid.z_min):
        raise ConfigError('[grid] z_max_um must exceed z_min_um')
    if not 0.0 < grid.xi_min < grid.xi_max:
        raise ConfigError('[grid] need 0 < xi_min_ev < xi_max_ev')
    return grid


def _parse_float_list(section, key):
    values = []
    for item in section.items(key):
        try:
            values.append(float(item))
        except ValueError:
            raise ConfigError(f'[{section.name}] {key}: "{item}" is not a number')
    return values


def _load_stats(section):
    if not section.values:
        return None
    bounds = {}
    for item in section.items('reference_bounds'):
        mode, _, value = item.partition(':')
        try:
            bounds[PermittivityMode.parse(mode).value] = float(value)
        except ValueError:
            raise ConfigError(f'[stats] reference_bounds entry "{item}" is not mode:value')
    threshold = section.number('threshold_sigma', 4.5)
    if not threshold >= 0.0:
        raise ConfigError(f'[stats] threshold_sigma must be non-negative, got {threshold}')
    return StatsSection(
        dataset_path=section.path('dataset_path', _REQUIRED),
        sigma_mode=SigmaMode.parse(section.text('sigma_mode', 'f_only')),
        n_fit_params=section.integer('n_fit_params', None),
        threshold_sigma=threshold,
        z_window=(_scaled(section.number('z_window_min_um', None), UM),
                  _scaled(section.number('z_window_max_um', None), UM)),
        theory_curve_path=section.path('theory_curve_path'),
        reference_bounds=bounds,
    )


def _load_correction(section):
    if not section.values:
        return None
    return CorrectionSection(
        which=CorrectionFactor.parse(section.text('which')),
        direction=CorrectionDirection.parse(section.text('direction')),
        recorrect_dataset=section.boolean('recorrect_dataset', False),
    )


def load_run_config(path, l_cap=5000, out_dir='output'):
    """Parse and validate a run configuration file"""
    if not os.path.isfile(path):
        raise ConfigError(f'config file not found: {path}')
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    try:
        parser.read(path, encoding='utf-8')
    except configparser.Error as e:
        raise ConfigError(f'{path}: {" ".join(str(e).split())}')

    base_dir = os.path.dirname(os.path.abspath(path))

    def section(name):
        return _Section(parser, name, base_dir)

    output = section('output')
    geometry = _load_geometry(section('geometry'))
    grid = _load_grid(section('grid'))
    if geometry is not None and grid.z_min is not None:
        if not grid.z_min > geometry.min_separation:
            raise ConfigError(
                f'[grid] z_min_um = {grid.z_min / UM:g} does not exceed the vibration and roughness '
                f'reach {geometry.min_separation / UM:g} um')

    run = RunConfig(
        path=path,
        optics=_load_optics(section('optics')),
        thermal=_load_thermal(section('thermal'), l_cap),
        grid=grid,
        geometry=geometry,
        stats=_load_stats(section('stats')),
        correction=_load_correction(section('correction')),
        output=OutputSection(
            out_dir=output.path('out_dir', out_dir, must_exist=False),
            svg=output.boolean('svg', True),
        ),
    )
    logger.info(f'Loaded run config {path}: modes {", ".join(m.value for m in run.optics.modes) or "none"}')
    return run
