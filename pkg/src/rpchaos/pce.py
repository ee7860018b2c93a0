"""Polynomial-chaos arithmetic on a fixed orthonormal basis.

Coefficient vectors are indexed like ``GradedBasis(d, L)``. Products are
projected back onto the basis through the triple-product tensor, and the
approximate expectation of a high-degree monomial is the inner product of
the projections of two lower-degree factors.
"""

from __future__ import annotations

import functools

import numpy as np

from .errors import ClosureError, DegreeOverflowError
from .moments import MomentTable
from .multiindex import enumerate_basis, sum_table


def _pad(w, n, what):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] > n:
        raise DegreeOverflowError(f"{what} has {w.shape[0]} coefficients, basis holds {n}")
    if w.shape[0] < n:
        w = np.concatenate([w, np.zeros(n - w.shape[0])])
    return w


def _check_support(w1, w2, gamma, out_rows=None):
    """Raise if a nonzero product term needs an entry outside the stored set."""
    n = gamma.mask.shape[0]
    a = np.flatnonzero(w1)
    b = np.flatnonzero(w2)
    rows = np.arange(n) if out_rows is None else out_rows
    needed = gamma.mask[np.ix_(a, b, rows)]
    if not needed.all():
        i, j, k = np.argwhere(~needed)[0]
        gamma.get(a[i], b[j], rows[k])


def project_product(w1, w2, gamma, check=True):
    """Coefficients of ``Pi_L(w1 * w2)``: ``sum_{a,b} w1_a w2_b Gamma[a, b, :]``.

    With ``check`` a product that would read outside the stored index set
    raises :class:`ClosureError` instead of silently using a zero.
    """
    n = gamma.values.shape[0]
    w1 = _pad(w1, n, "w1")
    w2 = _pad(w2, n, "w2")
    if check:
        _check_support(w1, w2, gamma)
    return np.einsum("a,b,abc->c", w1, w2, gamma.values)


def approx_expectation(w1, w2, w3=None, gamma=None):
    """``E[w1 w2]`` by orthonormality, or ``E[w1 w2 w3]`` through ``gamma``."""
    if w3 is None:
        n = max(len(w1), len(w2))
        return float(np.dot(_pad(w1, n, "w1"), _pad(w2, n, "w2")))
    if gamma is None:
        raise ValueError("three-factor expectation needs the triple tensor")
    n = gamma.values.shape[0]
    w1, w2, w3 = (_pad(w, n, "w") for w in (w1, w2, w3))
    for a, b, c in zip(*np.nonzero(np.einsum("a,b,c->abc", w1 != 0, w2 != 0, w3 != 0))):
        gamma.get(a, b, c)
    return float(np.einsum("a,b,c,abc->", w1, w2, w3, gamma.values))


def expand_poly(p, basis):
    """Coefficients of polynomial ``p`` in the orthonormal basis."""
    if p.degree > basis.L:
        raise DegreeOverflowError(f"polynomial of degree {p.degree} exceeds basis degree {basis.L}")
    if p.is_zero:
        return np.zeros(len(basis))
    return p.coeff_vector(basis.L) @ basis.G


def greedy_split(gamma, cap):
    """Split ``gamma = a + b`` with ``a`` filled left to right up to ``|a| = cap``."""
    a = []
    room = cap
    for g in gamma:
        take = min(g, room)
        a.append(take)
        room -= take
    b = tuple(g - x for g, x in zip(gamma, a))
    return tuple(a), b


@functools.lru_cache(maxsize=None)
def split_positions(d, J, L, K):
    """Greedy split of every monomial of degree ``J < |gamma| <= K``.

    Returns positions (in ``GradedBasis(d, J - L)``) of both factors for
    the monomials ``GradedBasis(d, K)[C_J:]``.
    """
    cap = J - L
    small = enumerate_basis(d, cap)
    big = enumerate_basis(d, K)
    start = big.count(J)
    pa, pb = [], []
    for gamma in big.indices[start:]:
        a, b = greedy_split(gamma, cap)
        if sum(b) > cap:
            raise DegreeOverflowError(f"|{gamma}| = {sum(gamma)} exceeds twice the split cap {cap}")
        pa.append(small.position(a))
        pb.append(small.position(b))
    return np.array(pa, dtype=np.int64), np.array(pb, dtype=np.int64)


class Expectation:
    """Approximate expectation functional on monomials for one step.

    For ``|gamma| <= J`` it returns the stored moment. Beyond that, with
    ``gamma = a + b`` split greedily so that ``|a|, |b| <= J - L``, it
    returns ``<Pi_L x^a, Pi_L x^b>``; each projection coefficient
    ``E[x^a T_eta]`` only needs moments up to ``J`` and is exact.
    """

    def __init__(self, m, basis):
        self.m = m
        self.basis = basis
        self.d = m.d
        self.J = m.J
        self.L = basis.L
        cap = self.J - self.L
        if cap < 0:
            raise DegreeOverflowError(f"moment order {self.J} below basis degree {self.L}")
        # P[a, eta] = E[x^a T_eta] for |a| <= J - L
        M = m.values[sum_table(self.d, cap, self.L, self.J)]
        self.projections = M @ basis.B.T
        self.max_degree = 2 * cap

    def values(self, K):
        """Approximate ``E[x^gamma]`` for every ``|gamma| <= K`` in graded order."""
        if K > self.max_degree:
            raise DegreeOverflowError(f"order {K} exceeds the reachable order {self.max_degree}")
        if K <= self.J:
            return self.m.values[: enumerate_basis(self.d, K).count(K)].copy()
        pa, pb = split_positions(self.d, self.J, self.L, K)
        P = self.projections
        high = np.einsum("ij,ij->i", P[pa], P[pb])
        return np.concatenate([self.m.values, high])

    def __call__(self, gamma):
        gamma = tuple(gamma)
        if sum(gamma) <= self.J:
            return self.m[gamma]
        if sum(gamma) > self.max_degree:
            raise DegreeOverflowError(f"|{gamma}| exceeds the reachable order {self.max_degree}")
        a, b = greedy_split(gamma, self.J - self.L)
        small = enumerate_basis(self.d, self.J - self.L)
        P = self.projections
        return float(np.dot(P[small.position(a)], P[small.position(b)]))

    def of_poly(self, p):
        return sum(c * self(a) for a, c in p.terms.items())


def expect_monomial(gamma, basis, m, tensor=None):
    """Approximate ``E[x^gamma]`` for ``|gamma| <= 2(J - L)``.

    ``tensor`` is accepted for interface symmetry and to verify that the
    triple-tensor route agrees; the projection route is used for the value.
    """
    if tensor is not None and tensor.J != m.J:
        raise ValueError("tensor and moment table disagree on J")
    return Expectation(m, basis)(gamma)


def moments_from_tensor(basis, tensor, S):
    """Moment table up to ``2L + S`` from a basis and its triple tensor.

    ``gamma = a + b + c`` with ``|a|, |b| <= L`` and ``|c| <= S`` gives
    ``m_gamma = sum G[a] G[b] G[c] Gamma``; the three-way split is greedy.
    """
    d, L = basis.d, basis.L
    J = 2 * L + S
    if S > L:
        raise DegreeOverflowError("three-way moment recovery needs S <= L")
    target = enumerate_basis(d, J)
    pos = basis.index
    out = np.empty(len(target))
    G = basis.G
    for k, gamma in enumerate(target):
        a, rest = greedy_split(gamma, L)
        b, c = greedy_split(rest, L)
        ga, gb, gc = G[pos.position(a)], G[pos.position(b)], G[pos.position(c)]
        out[k] = np.einsum("a,b,c,abc->", ga, gb, gc, tensor.values)
    return MomentTable(d, J, out, check=False)


__all__ = [
    "ClosureError",
    "Expectation",
    "approx_expectation",
    "expand_poly",
    "expect_monomial",
    "greedy_split",
    "moments_from_tensor",
    "project_product",
]
