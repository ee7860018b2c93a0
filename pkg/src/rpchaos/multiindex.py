"""Graded multi-index sets.

Every tensor in the package (moment tables, basis coefficient matrices,
triple products) is addressed through a :class:`GradedBasis`: all
``d``-tuples of non-negative integers with total degree at most ``L``,
ordered by degree and, inside a degree, lexicographically ascending.

Because the ordering is graded, ``GradedBasis(d, L)`` is a prefix of
``GradedBasis(d, L + 1)``; positions of low-degree indices never change
when a larger table is built.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegreeOverflowError, InvalidPartitionError


def _compositions(d, n):
    """All d-tuples of non-negative ints summing to n, lexicographically ascending."""
    if d == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(d - 1, n - first):
            yield (first,) + rest


@dataclass(frozen=True, eq=False)
class GradedBasis:
    d: int
    L: int
    indices: tuple
    _lookup: dict = field(repr=False)

    def __len__(self):
        return len(self.indices)

    def __getitem__(self, pos):
        return self.indices[pos]

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, alpha):
        return tuple(alpha) in self._lookup

    def position(self, alpha):
        return position(alpha, self)

    @functools.cached_property
    def array(self):
        """Exponents as an ``(n, d)`` integer array."""
        return np.array(self.indices, dtype=np.int64).reshape(len(self), self.d)

    @functools.cached_property
    def degrees(self):
        return self.array.sum(axis=1)

    def count(self, degree):
        """Number of indices with total degree <= ``degree``."""
        if degree < 0:
            return 0
        return math.comb(self.d + degree, degree)

    def grade_slice(self, g):
        return slice(self.count(g - 1), self.count(g))


@functools.lru_cache(maxsize=None)
def enumerate_basis(d, L):
    """Graded basis of all multi-indices in ``d`` variables with ``|alpha| <= L``.

    >>> enumerate_basis(2, 2).indices
    ((0, 0), (0, 1), (1, 0), (0, 2), (1, 1), (2, 0))
    """
    d = int(d)
    L = int(L)
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if L < 0:
        raise ValueError(f"degree must be >= 0, got {L}")
    indices = tuple(itertools.chain.from_iterable(_compositions(d, n) for n in range(L + 1)))
    lookup = {alpha: i for i, alpha in enumerate(indices)}
    return GradedBasis(d, L, indices, lookup)


def position(alpha, basis):
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != basis.d:
        raise ValueError(f"multi-index {alpha} has wrong dimension for d={basis.d}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"negative exponent in {alpha}")
    if sum(alpha) > basis.L:
        raise DegreeOverflowError(f"|{alpha}| = {sum(alpha)} exceeds basis degree {basis.L}")
    return basis._lookup[alpha]


def multinomial(gamma, parts):
    """``gamma! / prod(part!)`` in exact integer arithmetic.

    ``parts`` must sum componentwise to ``gamma``.
    """
    gamma = tuple(int(g) for g in gamma)
    parts = [tuple(int(p) for p in part) for part in parts]
    total = tuple(sum(col) for col in zip(*parts)) if parts else (0,) * len(gamma)
    if any(len(p) != len(gamma) for p in parts) or total != gamma:
        raise InvalidPartitionError(f"parts {parts} do not sum to {gamma}")
    if any(x < 0 for p in parts for x in p):
        raise InvalidPartitionError(f"negative entry in parts {parts}")
    num = 1
    for g in gamma:
        num *= math.factorial(g)
    den = 1
    for part in parts:
        for p in part:
            den *= math.factorial(p)
    return num // den


def factorial(alpha):
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def add(alpha, beta):
    return tuple(a + b for a, b in zip(alpha, beta))


def unit(d, i):
    e = [0] * d
    e[i] = 1
    return tuple(e)


@functools.lru_cache(maxsize=None)
def sum_table(d, L1, L2, J):
    """Positions in ``GradedBasis(d, J)`` of ``alpha + beta``.

    Returns an ``(C_{L1}, C_{L2})`` int array; entries are -1 where
    ``|alpha + beta| > J``.
    """
    left = enumerate_basis(d, L1).array
    right = enumerate_basis(d, L2).array
    target = enumerate_basis(d, J)
    out = np.full((len(left), len(right)), -1, dtype=np.int64)
    for i, a in enumerate(left):
        for j, b in enumerate(right):
            s = tuple((a + b).tolist())
            if sum(s) <= J:
                out[i, j] = target._lookup[s]
    out.setflags(write=False)
    return out


def label(alpha):
    """Text form used in CSV headers: ``(1, 0, 2) -> "1_0_2"``."""
    return "_".join(str(int(a)) for a in alpha)


def parse_label(text):
    try:
        return tuple(int(tok) for tok in text.split("_"))
    except ValueError as exc:
        raise ValueError(f"not a multi-index label: {text!r}") from exc
