"""Dielectric permittivity of a metal along the imaginary frequency axis.

Energies are in eV throughout this module. Tabulated modes evaluate the
dispersion relation

    eps(i xi) = 1 + (2/pi) * integral_0^inf  w Im eps(w) / (w^2 + xi^2) dw

with the tabulated Im eps interpolated log-log inside the table, the Drude
form below it and a power-law tail above it.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from app.errors import (
    DataFormatError, EmptyTable, NonMonotonicEnergy, NonpositiveFrequency, NonpositiveXi,
)
from app.models import DrudeParams, OpticalTable, PermittivityMode, PermittivitySpec
from app.physics.quadrature import integrate_panels_checked, quad_checked

logger = logging.getLogger(__name__)

KK_REL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class LorentzOscillator:
    strength: float
    resonance: float  # eV
    width: float  # eV


# Interband oscillators of gold in the Lorentz-Drude parametrisation of
# Rakic et al. (Appl. Opt. 37, 5271), reference plasma frequency 9.03 eV.
GOLD_REFERENCE_PLASMA = 9.03
GOLD_INTERBAND = (
    LorentzOscillator(0.024, 0.415, 0.241),
    LorentzOscillator(0.010, 0.830, 0.345),
    LorentzOscillator(0.071, 2.969, 0.870),
    LorentzOscillator(0.601, 4.304, 2.494),
    LorentzOscillator(4.384, 13.32, 2.214),
)


def load_optical_table(raw_rows, source_label=''):
    """Build an OpticalTable from (energy, n, k) or (energy, im_eps) rows"""
    rows = [tuple(float(v) for v in row) for row in raw_rows]
    if not rows:
        raise EmptyTable('optical table has no rows')

    widths = {len(row) for row in rows}
    if len(widths) != 1 or widths.pop() not in (2, 3):
        raise DataFormatError('rows must all be (energy, n, k) or all (energy, im_eps)')

    points = []
    for row in rows:
        energy = row[0]
        if not energy > 0.0:
            raise NonpositiveFrequency(f'photon energy {energy} eV is not positive')
        if len(row) == 3:
            n, k = row[1], row[2]
            points.append((energy, 2.0 * n * k))
        else:
            points.append((energy, row[1]))

    points.sort(key=lambda p: p[0])
    for (e0, _), (e1, _) in zip(points, points[1:]):
        if e1 == e0:
            raise NonMonotonicEnergy(f'duplicate photon energy {e0} eV')

    table = OpticalTable(
        omega=tuple(p[0] for p in points),
        im_eps=tuple(p[1] for p in points),
        source_label=source_label,
    )
    logger.debug(f'Loaded {table!r}')
    return table


def drude_im_eps(omega, p: DrudeParams):
    """Im eps of the Drude model, w_p^2 g / (w (w^2 + g^2))"""
    w = np.asarray(omega, dtype=float)
    if np.any(~(w > 0.0)):
        raise NonpositiveFrequency(f'Drude Im eps needs omega > 0, got {omega}')
    value = p.omega_p ** 2 * p.gamma / (w * (w ** 2 + p.gamma ** 2))
    return float(value) if value.ndim == 0 else value


def lorentz_drude_im_eps(omega, drude: DrudeParams, oscillators=GOLD_INTERBAND,
                         reference_plasma=GOLD_REFERENCE_PLASMA):
    """Im eps of a Drude term plus Lorentz interband oscillators"""
    w = np.asarray(omega, dtype=float)
    value = np.asarray(drude_im_eps(w, drude), dtype=float)
    for osc in oscillators:
        value = value + (osc.strength * reference_plasma ** 2 * w * osc.width
                         / ((osc.resonance ** 2 - w ** 2) ** 2 + (w * osc.width) ** 2))
    return value


def lorentz_drude_table(energies, drude: DrudeParams = None, oscillators=GOLD_INTERBAND,
                        reference_plasma=GOLD_REFERENCE_PLASMA, source_label='lorentz-drude'):
    """Synthesise an (energy, Im eps) table from the Lorentz-Drude model"""
    drude = drude or DrudeParams()
    energies = np.asarray(energies, dtype=float)
    im_eps = lorentz_drude_im_eps(energies, drude, oscillators, reference_plasma)
    return load_optical_table(zip(energies.tolist(), im_eps.tolist()), source_label=source_label)


def _table_integral(xi, table: OpticalTable, lower, rel_tol):
    """Dispersion integral over [lower, omega_max] in u = ln(omega)"""
    edges = table.log_omega[table.log_omega > math.log(lower)]
    edges = np.concatenate(([math.log(lower)], edges))
    if len(edges) < 2:
        return 0.0, 0.0
    xi2 = xi * xi

    def integrand(u):
        w2 = np.exp(2.0 * u)
        im = np.exp(np.interp(u, table.log_omega, table.log_im_eps))
        return w2 * im / (w2 + xi2)

    return integrate_panels_checked(integrand, edges, rel_tol, label=f'table integral at xi={xi:g} eV')


def _tail_integral(xi, table: OpticalTable, exponent, rel_tol):
    """Dispersion integral above the table with Im eps ~ omega^-exponent.

    With t = omega_max / omega the integrand becomes
    C w_max^2 t^(p-1) / (w_max^2 + xi^2 t^2) on (0, 1], with a knee at
    t = w_max / xi once xi exceeds w_max.
    """
    w_max = table.omega_max
    c = table.im_eps[-1]
    if c == 0.0:
        return 0.0, 0.0

    def integrand(t):
        return c * w_max ** 2 * t ** (exponent - 1.0) / (w_max ** 2 + (xi * t) ** 2)

    return integrate_panels_checked(integrand, _tail_edges(w_max / xi), rel_tol,
                                    label=f'tail integral at xi={xi:g} eV')


def _tail_edges(knee):
    """Panel edges on [0, 1]: geometric around the knee, doubling up to 1"""
    if knee >= 0.25:
        return np.array([0.0, 0.5 * knee, 1.0]) if knee < 1.0 else np.array([0.0, 1.0])
    doublings = math.ceil(math.log2(1.0 / knee))
    interior = knee * 2.0 ** np.arange(-2, doublings)
    return np.concatenate(([0.0], interior[interior < 1.0], [1.0]))


def _drude_low_integral(xi, drude: DrudeParams, upper, rel_tol):
    """Dispersion integral of the Drude Im eps over (0, upper]"""
    if drude.gamma == 0.0:
        return 0.0, 0.0
    wp2g = drude.omega_p ** 2 * drude.gamma
    g2 = drude.gamma ** 2
    xi2 = xi * xi
    kink = min(drude.gamma, xi)
    points = [kink] if kink < upper else None
    return quad_checked(
        lambda w: wp2g / ((w * w + g2) * (w * w + xi2)), 0.0, upper, rel_tol,
        label=f'Drude extrapolation at xi={xi:g} eV', points=points)


@lru_cache(maxsize=8192)
def _kramers_kronig(xi, spec: PermittivitySpec, rel_tol):
    table = spec.table
    if spec.mode is PermittivityMode.TABULATED_DRUDE:
        low, low_err = _drude_low_integral(xi, spec.drude, table.omega_min, rel_tol)
        mid, mid_err = _table_integral(xi, table, table.omega_min, rel_tol)
    else:
        low, low_err = 0.0, 0.0
        mid, mid_err = _table_integral(xi, table, spec.core_cutoff, rel_tol)
    tail, tail_err = _tail_integral(xi, table, spec.tail_exponent, rel_tol)
    total = math.fsum((low, mid, tail))
    err = max(low_err, mid_err, tail_err)
    return 2.0 / math.pi * total, err


def eps_imag_axis(xi, spec: PermittivitySpec, rel_tol=KK_REL_TOLERANCE):
    """eps(i xi) for the permittivity mode of spec; xi in eV"""
    if not xi > 0.0:
        raise NonpositiveXi(f'eps(i xi) needs xi > 0, got {xi} eV')
    xi = float(xi)
    wp2 = spec.drude.omega_p ** 2
    mode = spec.mode

    if mode is PermittivityMode.PURE_DRUDE:
        return 1.0 + wp2 / (xi * (xi + spec.drude.gamma))
    if mode is PermittivityMode.PURE_PLASMA:
        return 1.0 + wp2 / (xi * xi)

    kk, _ = _kramers_kronig(xi, spec, rel_tol)
    if mode is PermittivityMode.TABULATED_PLASMA:
        return 1.0 + wp2 / (xi * xi) + kk
    return 1.0 + kk


def eps_grid(xi_values, spec: PermittivitySpec, rel_tol=KK_REL_TOLERANCE):
    """eps(i xi) over a grid, evaluated in grid order"""
    return np.array([eps_imag_axis(xi, spec, rel_tol) for xi in xi_values])


def log_xi_grid(xi_min, xi_max, points):
    if not 0.0 < xi_min < xi_max or points < 2:
        raise NonpositiveXi(f'invalid xi grid [{xi_min}, {xi_max}] with {points} points')
    return np.logspace(math.log10(xi_min), math.log10(xi_max), int(points))


