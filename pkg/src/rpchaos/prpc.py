"""Basis-propagating recursive polynomial chaos.

The state is the orthonormal basis (``B`` and its inverse ``G``) together
with the triple-product tensor. A step evolves the Gram matrix ``H`` and
the tensor with the first-order Ito expansion, re-orthonormalises through
the Cholesky factor of ``H`` and transforms the tensor to the new basis.

Derivatives of basis polynomials are exact in the current basis:
``d/dx_i T = D1_i T`` with ``D1_i = B M_i G`` where ``M_i`` differentiates
monomials. Products of four factors are paired into two projected halves,
``E[T_x T_y T_c p] ~ sum_nu Gamma[x, y, nu] E[T_nu T_c p]``; because the
stored tensor is zero outside ``|x| + |y| + |nu| <= J``, the projection
level of ``T_x T_y`` automatically drops to ``J - |x| - |y|`` when that is
below ``L``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .errors import ClosureError, ConfigError, NumericalFailure, SingularHankelError
from .mcref import step_count
from .models import diffusion_covariance
from .mrpc import MrpcConfig, RunResult, StepDiagnostics
from .multiindex import enumerate_basis
from .orthopoly import (
    OrthonormalBasis,
    TripleTensor,
    basis_from_moments,
    cholesky_lower,
    lower_inverse,
    symmetrize,
    triple_mask,
    triple_products,
)
from .pce import expand_poly, moments_from_tensor
from .polyalg import initial_moments

log = logging.getLogger(__name__)

PrpcConfig = MrpcConfig


@dataclass
class PrpcState:
    k: int
    basis: OrthonormalBasis
    tensor: TripleTensor
    S: int
    diagnostics: StepDiagnostics = None

    def polys(self):
        return self.basis.polys()


def check_prpc_config(model, cfg):
    """Resolve ``S`` and reject settings pRPC cannot run."""
    S = cfg.resolve(model)
    if cfg.mode != "sparse":
        raise ConfigError("pRPC supports only the sparse index set")
    if S > cfg.L:
        raise ConfigError(f"pRPC needs S <= L so drift and diffusion fit the basis (S={S}, L={cfg.L})")
    return S


def prpc_init(model, cfg, moments=None):
    S = check_prpc_config(model, cfg)
    J = 2 * cfg.L + S
    m = initial_moments(model.initial, J) if moments is None else moments.truncate(J)
    basis = basis_from_moments(m, cfg.L, cfg.pivot_floor)
    return PrpcState(0, basis, triple_products(basis, m, S), S)


def _derivative_matrices(d, L):
    """``M_i`` with ``(M_i)[beta, mu]`` the coefficient of ``x^mu`` in ``d/dx_i x^beta``."""
    idx = enumerate_basis(d, L)
    mats = []
    for i in range(d):
        M = np.zeros((len(idx), len(idx)))
        for r, beta in enumerate(idx):
            if beta[i]:
                mu = list(beta)
                mu[i] -= 1
                M[r, idx.position(mu)] = beta[i]
        mats.append(M)
    return mats


class _StepOperators:
    """Model data expanded once per step in the current basis."""

    def __init__(self, model, state):
        basis = state.basis
        d, L = basis.d, basis.L
        B, G = basis.B, basis.G
        Mi = _derivative_matrices(d, L)
        self.D1 = [B @ M @ G for M in Mi]
        self.drift = [expand_poly(p, basis) for p in model.drift]
        cov = diffusion_covariance(model)
        self.pairs = []
        for i in range(d):
            for l in range(d):
                if not cov[i][l].is_zero:
                    self.pairs.append((i, l, expand_poly(cov[i][l], basis), B @ Mi[i] @ Mi[l] @ G))


def _q_matrix(gamma, p):
    """``Q[nu, c] = E[T_nu T_c p] = sum_mu Gamma[nu, c, mu] p_mu``."""
    return np.tensordot(gamma, p, axes=(2, 0))


def _four_fold(gamma, Q):
    """``F[x, y, c] = sum_nu Gamma[x, y, nu] Q[nu, c]``."""
    return np.tensordot(gamma, Q, axes=(2, 0))


def _exact(da, db, dc, dd, L, J):
    """Pairing ``(ab | cd)`` of a four-fold expectation is exact for these degrees."""
    return ((da + db <= L) | (dc + dd <= L)) & (da + db + dc + dd <= J)


def _blend(options, fallback):
    """Per-entry average of the exact pairings; ``fallback`` where none is exact."""
    total = 0.0
    count = 0
    for value, ok in options:
        total = total + np.where(ok, value, 0.0)
        count = count + ok
    return np.where(count > 0, total / np.maximum(count, 1), fallback)


def _sym3(A):
    """Sum over the three placements of the distinguished first index."""
    return A + A.transpose(1, 0, 2) + A.transpose(1, 2, 0)


class _Pairing:
    """Reduction of four-fold expectations to pairs of triple products.

    For ``E[(D T)_a T_b T_c p]`` there are three ways to split the four
    factors into two projected pairs. A split is exact when one pair has
    degree ``<= L`` and the integrand has degree ``<= J``; such splits are
    used wherever one exists. Elsewhere the derivative factor is paired
    with each of the other two basis factors and the results averaged.
    """

    def __init__(self, tensor, deg_p):
        self.gamma = tensor.values
        L, J = tensor.L, tensor.J
        deg = enumerate_basis(tensor.d, L).degrees
        self.L, self.J = L, J
        a = deg[:, None, None]
        b = deg[None, :, None]
        c = deg[None, None, :]
        self.a, self.b, self.c = a, b, c
        self.deg_p = deg_p

    def single(self, D, p, order):
        """``E[(D T)_a T_b T_c p]`` with ``D`` lowering degree by ``order``."""
        g = self.gamma
        Q = _q_matrix(g, p)
        F = _four_fold(g, Q)
        P1 = np.tensordot(D, F, axes=(1, 0))  # (eta b | c p)
        P2 = P1.transpose(0, 2, 1)  # (eta c | b p)
        P3 = np.tensordot(D @ Q, g, axes=(1, 0))  # (eta p | b c)
        da = np.maximum(self.a - order, 0)
        L, J, s = self.L, self.J, self.deg_p
        opts = [
            (P1, _exact(da, self.b, self.c, s, L, J)),
            (P2, _exact(da, self.c, self.b, s, L, J)),
            (P3, _exact(da, s, self.b, self.c, L, J)),
        ]
        return _blend(opts, 0.5 * (P1 + P2))

    def double(self, Di, Dl, p):
        """``E[(D_i T)_a (D_l T)_b T_c p]``."""
        g = self.gamma
        Q = _q_matrix(g, p)
        F = _four_fold(g, Q)
        # contractions one index at a time keep the cost at C^4
        R1 = np.tensordot(np.tensordot(Di, F, axes=(1, 0)), Dl, axes=(1, 1)).transpose(0, 2, 1)  # (eta kappa | c p)
        R2 = np.tensordot(np.tensordot(Di, g, axes=(1, 0)), Dl @ Q, axes=(2, 1)).transpose(0, 2, 1)  # (eta c | kappa p)
        R3 = np.tensordot(np.tensordot(Dl, g, axes=(1, 0)), Di @ Q, axes=(2, 1)).transpose(2, 0, 1)  # (kappa c | eta p)
        da = np.maximum(self.a - 1, 0)
        db = np.maximum(self.b - 1, 0)
        L, J, s = self.L, self.J, self.deg_p
        opts = [
            (R1, _exact(da, db, self.c, s, L, J)),
            (R2, _exact(da, self.c, db, s, L, J)),
            (R3, _exact(db, self.c, da, s, L, J)),
        ]
        return _blend(opts, R1)


def evolved_tensor(state, model, h):
    """First-order evolution of the triple products (before re-orthonormalisation)."""
    ops = _StepOperators(model, state)
    gamma = state.tensor.values
    incr = np.zeros_like(gamma)
    drift_pair = _Pairing(state.tensor, model.drift_degree)
    for D, p in zip(ops.D1, ops.drift):
        if np.any(p):
            incr += h * _sym3(drift_pair.single(D, p, 1))
    cov_pair = _Pairing(state.tensor, 2 * model.diffusion_degree)
    for i, l, s, D2 in ops.pairs:
        term = _sym3(cov_pair.single(D2, s, 2))
        K = cov_pair.double(ops.D1[i], ops.D1[l], s)
        # ordered placements of the two first-derivative factors
        term += K + K.transpose(1, 0, 2) + K.transpose(0, 2, 1) + K.transpose(2, 0, 1) \
            + K.transpose(1, 2, 0) + K.transpose(2, 1, 0)
        incr += 0.5 * h * term
    mask = state.tensor.mask
    return np.where(mask, gamma + incr, 0.0)


def closure_audit(state, model):
    """Degree-level check that every tensor read in a step is inside the stored set."""
    L, S, J = state.basis.L, state.S, state.tensor.J
    deg_p = max([model.drift_degree, 2 * model.diffusion_degree])
    # Q reads (nu, c, mu) with |nu|, |c| <= L and |mu| <= deg p
    if 2 * L + deg_p > J:
        raise ClosureError(f"drift/diffusion degree {deg_p} reads beyond J={J}")
    # F reads (x, y, nu) only through the zero-filled tensor, so its reach is J by construction
    deg = enumerate_basis(state.basis.d, L).degrees
    mask = triple_mask(state.basis.d, L, J)
    if not np.array_equal(mask, deg[:, None, None] + deg[None, :, None] + deg[None, None, :] <= J):
        raise ClosureError("stored mask does not match the index set")
    return dict(J=J, reach=2 * L + deg_p)


def prpc_step(state, model, cfg):
    closure_audit(state, model)
    tilde = evolved_tensor(state, model, cfg.h)
    H = 0.5 * (tilde[:, :, 0] + tilde[:, :, 0].T)
    try:
        C = cholesky_lower(H, cfg.pivot_floor)
    except SingularHankelError as exc:
        raise SingularHankelError(exc.index, exc.value, exc.lambda_min,
                                  f"evolved Gram matrix not positive definite: {exc}") from None
    Lk = lower_inverse(C)
    ev = np.linalg.eigvalsh(H)
    t = np.tensordot(Lk, tilde, axes=(1, 0))
    t = np.tensordot(t, Lk, axes=(1, 1))
    t = np.tensordot(t, Lk, axes=(1, 1))
    new_basis = OrthonormalBasis(state.basis.d, state.basis.L, Lk @ state.basis.B, state.basis.G @ C)
    mask = state.tensor.mask
    new_tensor = TripleTensor(state.basis.d, state.basis.L, state.tensor.J, symmetrize(np.where(mask, t, 0.0)), state.S)
    resid = float(np.max(np.abs(Lk @ H @ Lk.T - np.eye(H.shape[0]))))
    diag = StepDiagnostics(float(ev[0]), float(ev[-1]), resid)
    return PrpcState(state.k + 1, new_basis, new_tensor, state.S, diag)


def prpc_moments(state):
    """Moments up to ``2L + S`` implied by the current basis and tensor."""
    return moments_from_tensor(state.basis, state.tensor, state.S)


def prpc_run(model, cfg, moments=None, callback=None):
    """Like :func:`rpchaos.mrpc.mrpc_run`; diagnostics describe the evolved Gram matrix at ``(k + 1) h``."""
    n = step_count(cfg.T, cfg.h)
    state = prpc_init(model, cfg, moments)
    times, tables, diags = [0.0], [prpc_moments(state)], []
    result = RunResult(times, tables, diags)
    for k in range(n):
        try:
            state = prpc_step(state, model, cfg)
            if not np.all(np.isfinite(state.tensor.values)):
                raise NumericalFailure(f"non-finite tensor after step {k + 1}")
        except NumericalFailure as exc:
            diags.append(StepDiagnostics(getattr(exc, "lambda_min", None) or math.nan))
            result.diag_times.append((k + 1) * cfg.h)
            result.error = exc
            result.failed_step = k + 1
            log.warning("pRPC stopped at step %d: %s", k + 1, exc)
            return result
        diags.append(state.diagnostics)
        result.diag_times.append((k + 1) * cfg.h)
        if (k + 1) % cfg.record_every == 0 or k + 1 == n:
            times.append((k + 1) * cfg.h)
            tables.append(prpc_moments(state))
        if callback is not None:
            callback(state)
    return result


__all__ = ["PrpcConfig", "PrpcState", "prpc_init", "prpc_step", "prpc_moments", "prpc_run"]
