"""Fixed-order quadrature rules shared by the physics modules.

Every rule here is deterministic: nodes and weights depend only on the rule
order, and panel contributions are reduced with ``math.fsum`` in panel order.
"""
import logging
import math
import warnings
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from app.errors import QuadratureNonConvergent

logger = logging.getLogger(__name__)

MIN_NODES = 8
MAX_NODES = 64


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]"""
    nodes, weights = leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_rule(edges, n):
    """Composite Gauss-Legendre rule: (nodes, weights), both shaped (panels, n)"""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * x[None, :]
    weights = half[:, None] * w[None, :]
    return nodes, weights


def integrate_panels(func, edges, n):
    """Integrate a vectorised func over consecutive panels with n nodes each"""
    nodes, weights = panel_rule(edges, n)
    per_panel = np.sum(func(nodes) * weights, axis=1)
    return math.fsum(per_panel.tolist())


def integrate_panels_checked(func, edges, rel_tol, n0=MIN_NODES, n_max=MAX_NODES, label='integral'):
    """Panel integration with node doubling until two orders agree to rel_tol.

    Returns (value, estimated relative error). Raises QuadratureNonConvergent
    when n_max nodes per panel still disagree with the previous order.
    """
    n = n0
    previous = integrate_panels(func, edges, n)
    while n < n_max:
        n *= 2
        current = integrate_panels(func, edges, n)
        scale = max(abs(current), np.finfo(float).tiny)
        error = abs(current - previous) / scale
        if error <= rel_tol or abs(current - previous) < 1e-300:
            logger.debug(f'{label}: converged with {n} nodes/panel, rel err {error:.2e}')
            return current, error
        previous = current
    raise QuadratureNonConvergent(f'{label}: relative error {error:.2e} above {rel_tol:.1e} with {n} nodes per panel')


def quad_checked(func, a, b, rel_tol, label='integral', points=None):
    """scipy.integrate.quad with the error estimate enforced against rel_tol"""
    with warnings.catch_warnings():
        warnings.simplefilter('error', integrate.IntegrationWarning)
        try:
            value, abserr = integrate.quad(func, a, b, epsabs=0.0, epsrel=rel_tol, limit=400, points=points)
        except integrate.IntegrationWarning as exc:
            raise QuadratureNonConvergent(f'{label}: {exc}') from exc
    if abserr > rel_tol * abs(value) and abserr > 1e-300:
        raise QuadratureNonConvergent(f'{label}: estimated error {abserr:.2e} on {value:.6e}')
    return value, abserr / max(abs(value), np.finfo(float).tiny)


def periodic_average(func, rel_tol, m0=8, m_max=4096, label='oscillation average'):
    """Mean of func(cos(theta)) over one period.

    The integrand is even in theta, so the periodic trapezoid rule is folded
    onto [0, pi]. Halving the step reuses every previous node.
    """
    m = m0
    theta = np.pi * np.arange(m + 1) / m
    values = [func(float(c)) for c in np.cos(theta)]

    def folded_mean(vals, m):
        return (math.fsum(vals[1:-1]) + 0.5 * (vals[0] + vals[-1])) / m

    previous = folded_mean(values, m)
    while m < m_max:
        midpoints = np.pi * (2 * np.arange(m) + 1) / (2 * m)
        new_values = [func(float(c)) for c in np.cos(midpoints)]
        merged = [None] * (2 * m + 1)
        merged[0::2] = values
        merged[1::2] = new_values
        values = merged
        m *= 2
        current = folded_mean(values, m)
        if abs(current - previous) <= rel_tol * abs(current):
            logger.debug(f'{label}: {m + 1} nodes')
            return current
        previous = current
    raise QuadratureNonConvergent(f'{label}: no convergence with {m + 1} nodes')
