"""Distances between moment tables and macroscopic observables."""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .moments import MomentTable
from .multiindex import enumerate_basis


def _aligned(m1, m2, J):
    if m1.d != m2.d:
        raise ConfigError(f"dimension mismatch: {m1.d} vs {m2.d}")
    if m1.J < J or m2.J < J:
        raise ConfigError(f"tables reach orders {m1.J} and {m2.J}, need {J}")
    n = enumerate_basis(m1.d, J).count(J)
    return m1.values[:n], m2.values[:n], enumerate_basis(m1.d, J).degrees


def moment_metric(m1: MomentTable, m2: MomentTable, J: int) -> float:
    """``sum_{|gamma| <= J} |m1 - m2| / |gamma|!``."""
    a, b, deg = _aligned(m1, m2, J)
    weights = np.array([1.0 / math.factorial(int(k)) for k in deg])
    return float(np.sum(np.abs(a - b) * weights))


def w1_moment_bound(m1: MomentTable, m2: MomentTable, R: float, q: int, d: int | None = None) -> float:
    """Upper bound on the Wasserstein-1 distance from moment differences up to order ``q``.

    Both laws are assumed to live in ``[-R, R]^d``. The bound is
    ``36 d^2 R / q + sqrt(d) (1 + sqrt 2)^(d/2) 3^q R ||dm / R^|gamma| ||_2``.
    """
    d = m1.d if d is None else d
    if q < 2:
        raise ConfigError("q must be >= 2")
    a, b, deg = _aligned(m1, m2, q)
    scaled = (a - b) / float(R) ** deg
    c_d = math.sqrt(d) * (1 + math.sqrt(2)) ** (d / 2)
    return 36 * d**2 * R / q + c_d * 3**q * R * float(np.sqrt(np.sum(scaled**2)))


def macro_observables(m: MomentTable, d: int | None = None):
    """Mean energy ``1/2 sum_k E[X_k]^2`` and total variance ``sum_k Var X_k``."""
    d = m.d if d is None else d
    means = np.array([m[_unit(m.d, k, 1)] for k in range(d)])
    second = np.array([m[_unit(m.d, k, 2)] for k in range(d)])
    return 0.5 * float(np.sum(means**2)), float(np.sum(second - means**2))


def _unit(d, k, power):
    e = [0] * d
    e[k] = power
    return tuple(e)
