"""Finite-temperature Lifshitz free energy and pressure between two identical
metal half-spaces.

All integrals are written in the dimensionless variable y = 2 a q, with
zeta_l = 2 a xi_l / (hbar c) the lower limit of the l-th Matsubara term:

    F = kT / (8 pi a^2) sum'_l int_{zeta_l}^inf y  sum_a ln(1 - r_a^2 e^-y) dy
    P = -kT / (8 pi a^3) sum'_l int_{zeta_l}^inf y^2 sum_a r_a^2 e^-y / (1 - r_a^2 e^-y) dy

The y-integral runs on a fixed graded panel mesh (geometric towards the lower
limit, where the integrand has a logarithmic near-singularity for good metals).
Inputs xi are in eV; everything returned is SI.
"""
import logging
import math
from dataclasses import replace

import numpy as np
from scipy.constants import Boltzmann, c as speed_of_light, e as elementary_charge, hbar

from app.errors import InvalidParameter, QuadratureNonConvergent, SeparationNonpositive, TruncationNotConverged
from app.models import LifshitzSettings, PermittivitySpec, PlateResult
from app.physics.optics import eps_imag_axis
from app.physics.quadrature import panel_rule, quad_checked

logger = logging.getLogger(__name__)

K_B_EV = Boltzmann / elementary_charge          # eV / K
HBAR_C_EV_M = hbar * speed_of_light / elementary_charge  # eV m
HBAR_C = hbar * speed_of_light                   # J m

# t = y - zeta_l mesh: 0, then 1e-9 * 2^k up to ~69
T_EDGES = np.concatenate(([0.0], 1e-9 * 2.0 ** np.arange(37)))
NODE_ORDERS = (8, 16, 32, 64)
FIRST_BLOCK = 32
MAX_BLOCK = 1024
CONSECUTIVE_SMALL_TERMS = 3


def matsubara_frequency(l, T):
    """xi_l = 2 pi k_B T l / hbar, in eV"""
    if l < 0 or int(l) != l:
        raise InvalidParameter(f'Matsubara index must be a non-negative integer, got {l}')
    if not T > 0.0:
        raise InvalidParameter(f'temperature must be positive, got {T} K')
    return 2.0 * math.pi * K_B_EV * T * int(l)


def fresnel_imaginary(xi, k, eps):
    """Reflection coefficients (r_TM, r_TE) at imaginary frequency xi (eV), wavenumber k (1/m)"""
    k = np.asarray(k, dtype=float)
    kappa0 = xi / HBAR_C_EV_M
    q = np.sqrt(k * k + kappa0 * kappa0)
    k_eps = np.sqrt(k * k + eps * kappa0 * kappa0)
    r_tm = (eps * q - k_eps) / (eps * q + k_eps)
    r_te = (q - k_eps) / (q + k_eps)
    if r_tm.ndim == 0:
        return float(r_tm), float(r_te)
    return r_tm, r_te


def _reflection_rows(zeta, eps, y, spec: PermittivitySpec, a):
    """r_TM, r_TE on a (rows, nodes) grid of y; row l=0 is marked by zeta == 0"""
    zero = zeta == 0.0
    with np.errstate(invalid='ignore'):
        beta2 = (eps - 1.0) * zeta * zeta
    if np.any(zero):
        # eps xi^2 -> omega_p^2 for plasma-type modes, -> 0 for Drude-type modes
        omega = 2.0 * a * spec.drude.omega_p / HBAR_C_EV_M
        beta2 = np.where(zero, 0.0 if spec.mode.is_drude_like else omega * omega, beta2)
    y_eps = np.sqrt(y * y + beta2[:, None])
    r_te = -beta2[:, None] / (y + y_eps) ** 2
    with np.errstate(invalid='ignore'):
        r_tm = (eps[:, None] * y - y_eps) / (eps[:, None] * y + y_eps)
    r_tm = np.where(zero[:, None], 1.0, r_tm)
    return r_tm, r_te


def _row_integrals(zeta, eps, spec, a, nodes, weights):
    """Per-row (F_TM, F_TE, P_TM, P_TE) y-integrals, each shaped (rows,)"""
    y = zeta[:, None] + nodes[None, :]
    r_tm, r_te = _reflection_rows(zeta, eps, y, spec, a)
    decay = np.exp(-y)
    out = []
    for r in (r_tm, r_te):
        x = r * r * decay
        out.append((y * np.log1p(-x)) @ weights)
        out.append((y * y * x / (1.0 - x)) @ weights)
    f_tm, p_tm, f_te, p_te = out
    return f_tm, f_te, p_tm, p_te


def _flat_rule(n):
    nodes, weights = panel_rule(T_EDGES, n)
    return nodes.ravel(), weights.ravel()


def _eps_rows(ls, spec, T):
    eps = np.empty(len(ls))
    for i, l in enumerate(ls):
        eps[i] = np.inf if l == 0 else eps_imag_axis(matsubara_frequency(int(l), T), spec)
    return eps


def _choose_rule(zeta, eps, spec, a, rel_tol):
    """Lowest panel order whose result agrees with the next order to rel_tol"""
    previous = None
    for n in NODE_ORDERS:
        rule = _flat_rule(n)
        f_tm, f_te, p_tm, p_te = _row_integrals(zeta, eps, spec, a, *rule)
        current = (f_tm + f_te, p_tm + p_te)
        if previous is not None:
            err = max(
                np.sum(np.abs(current[0] - previous[1][0])) / abs(np.sum(current[0])),
                np.sum(np.abs(current[1] - previous[1][1])) / abs(np.sum(current[1])),
            )
            if err <= rel_tol:
                logger.debug(f'y-quadrature: {previous[0]} nodes/panel, rel err {err:.2e}')
                return previous[2], err
        previous = (n, current, rule)
    raise QuadratureNonConvergent(f'y-quadrature at a = {a:.4e} m: rel err {err:.2e} above {rel_tol:.1e}')


def _prime(ls):
    return np.where(ls == 0, 0.5, 1.0)


def _tail_estimate(terms, running):
    """Relative size of the terms still to come, r t / (1 - r) with r the last term ratio"""
    if len(terms) < 2 or terms[-2] == 0.0:
        return math.inf
    last = terms[-1]
    ratio = abs(last / terms[-2])
    if ratio >= 1.0:
        return math.inf
    return abs(last) * ratio / (1.0 - ratio) / abs(running)


def _matsubara_sum(a, spec: PermittivitySpec, s: LifshitzSettings):
    T = s.temperature
    zeta_step = 2.0 * a * matsubara_frequency(1, T) / HBAR_C_EV_M
    fixed = s.l_max is not None

    first = np.arange(0, min(FIRST_BLOCK, s.l_max + 1) if fixed else FIRST_BLOCK)
    eps = _eps_rows(first, spec, T)
    rule, quad_err = _choose_rule(first * zeta_step, eps, spec, a, s.k_quad_tolerance)

    terms_f, terms_p = [], []
    running_f = running_p = 0.0
    small_run = 0
    start, block = 0, FIRST_BLOCK
    while True:
        stop = start + block
        if fixed:
            stop = min(stop, s.l_max + 1)
        ls = np.arange(start, stop)
        eps = _eps_rows(ls, spec, T) if start else eps[:len(ls)]
        f_tm, f_te, p_tm, p_te = _row_integrals(ls * zeta_step, eps, spec, a, *rule)
        prime = _prime(ls)
        block_f = (prime * (f_tm + f_te)).tolist()
        block_p = (prime * (p_tm + p_te)).tolist()

        for l, tf, tp in zip(ls.tolist(), block_f, block_p):
            terms_f.append(tf)
            terms_p.append(tp)
            running_f += tf
            running_p += tp
            if fixed:
                continue
            trunc_err = max(_tail_estimate(terms_f, running_f), _tail_estimate(terms_p, running_p))
            if trunc_err < s.term_tolerance:
                small_run += 1
            else:
                small_run = 0
            if small_run >= CONSECUTIVE_SMALL_TERMS:
                return terms_f, terms_p, max(quad_err, trunc_err)
            if l + 1 >= s.l_cap:
                raise TruncationNotConverged(
                    f'Matsubara sum at a = {a:.4e} m, T = {T} K not converged after {s.l_cap} terms')

        if fixed and stop >= s.l_max + 1:
            return terms_f, terms_p, quad_err
        start = stop
        block = min(2 * block, MAX_BLOCK)


def _zero_temperature(a, spec: PermittivitySpec, s: LifshitzSettings):
    """T -> 0: the Matsubara sum becomes hbar c / (4 pi a) int_0^inf d zeta"""
    rule = _flat_rule(NODE_ORDERS[2])

    def row(zeta):
        xi = zeta * HBAR_C_EV_M / (2.0 * a)
        eps = np.array([eps_imag_axis(xi, spec)])
        f_tm, f_te, p_tm, p_te = _row_integrals(np.array([zeta]), eps, spec, a, *rule)
        return float(f_tm[0] + f_te[0]), float(p_tm[0] + p_te[0])

    int_f, err_f = quad_checked(lambda z: row(z)[0], 0.0, np.inf, s.k_quad_tolerance, label='zero-T free energy')
    int_p, err_p = quad_checked(lambda z: row(z)[1], 0.0, np.inf, s.k_quad_tolerance, label='zero-T pressure')
    prefactor = HBAR_C / (32.0 * math.pi ** 2 * a ** 3)
    return prefactor * int_f, -prefactor / a * int_p, max(err_f, err_p)


def free_energy_per_area(a, spec: PermittivitySpec, s: LifshitzSettings):
    """Free energy per unit area and pressure between two half-spaces at separation a (m)"""
    if not a > 0.0:
        raise SeparationNonpositive(f'plate separation {a} m is not positive')

    if s.zero_t_mode:
        free_energy, pressure, err = _zero_temperature(a, spec, s)
        return PlateResult(a, free_energy, pressure, 0, err)

    terms_f, terms_p, err = _matsubara_sum(a, spec, s)
    kT = Boltzmann * s.temperature
    free_energy = kT / (8.0 * math.pi * a ** 2) * math.fsum(terms_f)
    pressure = -kT / (8.0 * math.pi * a ** 3) * math.fsum(terms_p)
    logger.debug(f'a = {a:.4e} m {spec.mode.value}: {len(terms_f)} Matsubara terms, '
                 f'F = {free_energy:.6e} J/m^2, P = {pressure:.6e} Pa')
    return PlateResult(a, free_energy, pressure, len(terms_f), err)


def polarization_terms(l, a, spec: PermittivitySpec, s: LifshitzSettings):
    """SI contributions of one Matsubara term: {'TM': (F, P), 'TE': (F, P)}"""
    if not a > 0.0:
        raise SeparationNonpositive(f'plate separation {a} m is not positive')
    T = s.temperature
    ls = np.array([int(l)])
    zeta = 2.0 * a * matsubara_frequency(int(l), T) / HBAR_C_EV_M
    eps = _eps_rows(ls, spec, T)
    f_tm, f_te, p_tm, p_te = _row_integrals(np.array([zeta]), eps, spec, a, *_flat_rule(NODE_ORDERS[2]))
    prime = float(_prime(ls)[0])
    kT = Boltzmann * T
    f_scale = prime * kT / (8.0 * math.pi * a ** 2)
    p_scale = -prime * kT / (8.0 * math.pi * a ** 3)
    return {
        'TM': (f_scale * float(f_tm[0]), p_scale * float(p_tm[0])),
        'TE': (f_scale * float(f_te[0]), p_scale * float(p_te[0])),
    }


def thermal_correction(a, spec: PermittivitySpec, s: LifshitzSettings):
    """Ratio F(a, T) / F(a, T -> 0)"""
    finite = free_energy_per_area(a, spec, replace(s, zero_t_mode=False))
    cold = free_energy_per_area(a, spec, replace(s, zero_t_mode=True))
    return finite.free_energy_per_area / cold.free_energy_per_area
