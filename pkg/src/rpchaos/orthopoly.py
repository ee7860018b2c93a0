"""Orthonormal polynomials and triple products built from a moment table.

With the Hankel matrix ``H = G G^T`` (Cholesky, ``G`` lower triangular),
the rows of ``B = G^{-1}`` hold the monomial coefficients of polynomials
``T_alpha`` that are orthonormal under the law with those moments, and
``G`` itself expresses each monomial in the ``T`` basis.
"""

from __future__ import annotations

import functools
import itertools

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ClosureError, DegreeOverflowError, SingularHankelError
from .multiindex import enumerate_basis, label, sum_table
from .polyalg import MVPoly

PIVOT_FLOOR = 1e-10


def _require_order(m, order, what):
    if m.J < order:
        raise DegreeOverflowError(f"{what} needs moments up to order {order}, table has {m.J}")


def hankel_matrix(m, L):
    """``H[alpha, beta] = m[alpha + beta]`` over ``GradedBasis(d, L)``."""
    _require_order(m, 2 * L, "Hankel matrix")
    return m.values[sum_table(m.d, L, L, m.J)]


def cholesky_lower(H, pivot_floor=PIVOT_FLOOR):
    """Lower Cholesky factor with an explicit pivot check.

    The pivots are the squared diagonal entries of the factor (the Schur
    complements). Any pivot below ``pivot_floor`` raises
    :class:`SingularHankelError` naming the first offending position.
    """
    H = np.asarray(H, dtype=float)
    G, info = lapack.dpotrf(H, lower=1, clean=1, overwrite_a=0)
    if info < 0:
        raise ValueError(f"dpotrf: illegal argument {-info}")
    if info > 0:
        k = info - 1
        pivot = H[k, k] - np.dot(G[k, :k], G[k, :k])
        raise SingularHankelError(k, pivot, _lambda_min(H))
    pivots = np.diag(G) ** 2
    bad = np.flatnonzero(pivots < pivot_floor)
    if bad.size:
        k = int(bad[0])
        raise SingularHankelError(k, pivots[k], _lambda_min(H))
    return G


def _lambda_min(H):
    try:
        return float(np.linalg.eigvalsh(H)[0])
    except np.linalg.LinAlgError:
        return None


def lower_inverse(G):
    return scipy.linalg.solve_triangular(G, np.eye(G.shape[0]), lower=True)


class OrthonormalBasis:
    """Polynomials ``T_alpha(x) = sum_beta B[alpha, beta] x^beta`` for ``|alpha| <= L``.

    Attributes
    ----------
    B : ndarray
        Lower-triangular coefficient matrix, rows indexed by ``alpha``.
    G : ndarray
        ``B^{-1}``: row ``gamma`` gives ``x^gamma`` in the ``T`` basis.
    """

    def __init__(self, d, L, B, G=None):
        self.d = int(d)
        self.L = int(L)
        self.index = enumerate_basis(self.d, self.L)
        self.B = np.asarray(B, dtype=float)
        self.G = lower_inverse(self.B) if G is None else np.asarray(G, dtype=float)

    def __len__(self):
        return len(self.index)

    def monomial_in_basis(self, gamma):
        """Coefficients ``c`` with ``x^gamma = sum_alpha c_alpha T_alpha(x)``."""
        if sum(gamma) > self.L:
            raise DegreeOverflowError(f"|{tuple(gamma)}| exceeds basis degree {self.L}")
        return self.G[self.index.position(gamma)].copy()

    def polys(self):
        return [
            MVPoly(self.d, {self.index[j]: self.B[i, j] for j in range(i + 1)}) for i in range(len(self))
        ]

    def eval(self, x):
        """All ``T_alpha`` at points ``x`` of shape ``(n, d)``; returns ``(n, C_L)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        mono = np.ones((x.shape[0], len(self)))
        for j, beta in enumerate(self.index):
            for i, p in enumerate(beta):
                if p:
                    mono[:, j] *= x[:, i] ** p
        return mono @ self.B.T

    def gram(self, m):
        H = hankel_matrix(m, self.L)
        return self.B @ H @ self.B.T

    def orthonormality_residual(self, m):
        return float(np.max(np.abs(self.gram(m) - np.eye(len(self)))))

    def to_csv(self, path):
        cols = [f"x_{label(b)}" for b in self.index]
        with open(path, "w") as fh:
            fh.write(",".join(["alpha"] + cols) + "\n")
            for i, alpha in enumerate(self.index):
                fh.write(",".join([label(alpha)] + ["%.17g" % v for v in self.B[i]]) + "\n")


def basis_from_moments(m, L, pivot_floor=PIVOT_FLOOR):
    G = cholesky_lower(hankel_matrix(m, L), pivot_floor)
    return OrthonormalBasis(m.d, L, lower_inverse(G), G)


def hankel_spectrum_bounds(m, L):
    ev = np.linalg.eigvalsh(hankel_matrix(m, L))
    return float(ev[0]), float(ev[-1])


# triple products


@functools.lru_cache(maxsize=None)
def _triple_sum_index(d, L, J):
    """Position of ``mu + nu + eta`` in ``GradedBasis(d, J)``, -1 beyond ``J``."""
    pair = sum_table(d, L, L, 2 * L)
    onto = sum_table(d, 2 * L, L, J) if J >= 2 * L else None
    if onto is None:
        raise DegreeOverflowError("triple products need J >= 2L")
    idx = onto[pair]
    idx.setflags(write=False)
    return idx


@functools.lru_cache(maxsize=None)
def triple_mask(d, L, J):
    deg = enumerate_basis(d, L).degrees
    mask = deg[:, None, None] + deg[None, :, None] + deg[None, None, :] <= J
    mask.setflags(write=False)
    return mask


@functools.lru_cache(maxsize=None)
def _canonical_flat(C):
    """Flat index of the sorted (a <= b <= c) representative of every triple."""
    a, b, c = np.meshgrid(np.arange(C), np.arange(C), np.arange(C), indexing="ij")
    s = np.sort(np.stack([a, b, c]), axis=0)
    flat = (s[0] * C + s[1]) * C + s[2]
    flat.setflags(write=False)
    return flat


def symmetrize(values):
    """Exactly symmetric copy: every permutation reads the average of its orbit."""
    C = values.shape[0]
    avg = sum(values.transpose(p) for p in itertools.permutations(range(3))) / 6.0
    return avg.reshape(-1)[_canonical_flat(C)]


class TripleTensor:
    """``Gamma[a, b, c] = E[T_a T_b T_c]`` stored densely, zero outside the index set.

    The set is ``{|a|, |b|, |c| <= L, |a| + |b| + |c| <= J}``; ``J = 2L + S``
    in sparse mode and ``3L`` in full mode.
    """

    def __init__(self, d, L, J, values, S=None):
        self.d = int(d)
        self.L = int(L)
        self.J = int(J)
        self.S = S
        self.index = enumerate_basis(self.d, self.L)
        self.mask = triple_mask(self.d, self.L, self.J)
        values = np.where(self.mask, values, 0.0)
        self.values = values

    def contains(self, a, b, c):
        return self.mask[a, b, c]

    def get(self, a, b, c):
        if not self.mask[a, b, c]:
            raise ClosureError(
                f"triple ({label(self.index[a])}, {label(self.index[b])}, {label(self.index[c])}) "
                f"outside the stored set (L={self.L}, J={self.J})"
            )
        return self.values[a, b, c]

    def is_symmetric(self):
        v = self.values
        return all(np.array_equal(v, v.transpose(p)) for p in itertools.permutations(range(3)))


def index_set_order(L, S, mode="sparse"):
    if mode == "sparse":
        return 2 * L + S
    if mode == "full":
        return 3 * L
    raise ValueError(f"mode must be 'sparse' or 'full', got {mode!r}")


def triple_products(basis, m, S=None, mode="sparse"):
    """Assemble the triple-product tensor of ``basis`` under moments ``m``.

    Uses three successive contractions with ``B`` (cost ``C_L^4``) on the
    monomial tensor ``m[mu + nu + eta]``. Monomial triples beyond the
    stored moment order are never reached by entries inside the index set,
    because ``B`` is lower triangular in graded order.
    """
    L = basis.L
    if mode == "sparse" and S is None:
        raise ValueError("sparse mode needs the interaction degree S")
    J = index_set_order(L, S, mode)
    _require_order(m, J, "triple products")
    idx = _triple_sum_index(m.d, L, J)
    M = np.where(idx >= 0, m.values[np.maximum(idx, 0)], 0.0)
    B = basis.B
    t = np.tensordot(B, M, axes=(1, 0))  # (a, nu, eta)
    t = np.tensordot(t, B, axes=(1, 1))  # (a, eta, b)
    t = np.tensordot(t, B, axes=(1, 1))  # (a, b, c)
    mask = triple_mask(m.d, L, J)
    return TripleTensor(m.d, L, J, symmetrize(np.where(mask, t, 0.0)), S)
