"""Moment-propagating recursive polynomial chaos.

Each step rebuilds the orthonormal basis from the current moments, and
advances every moment ``m_gamma`` (``|gamma| <= J``) with the first-order
Ito expansion of ``E[x^gamma]``:

    m'_gamma = m_gamma + h sum_i gamma_i E[x^{gamma - e_i} b_i]
             + h sum_{i <= l} c_il(gamma) E[x^{gamma - e_i - e_l} Sigma_il]

with ``c_ii = gamma_i (gamma_i - 1) / 2`` and ``c_il = gamma_i gamma_l``
for ``i < l``. Expectations of monomials above order ``J`` come from
:class:`rpchaos.pce.Expectation`. The coefficients are model constants,
so they are assembled once into a sparse operator ``W`` and a step is
``m' = m + h W e``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .errors import ConfigError, DegreeOverflowError, NumericalFailure
from .mcref import step_count
from .models import diffusion_covariance
from .moments import MomentTable
from .multiindex import enumerate_basis
from .orthopoly import PIVOT_FLOOR, basis_from_moments, hankel_matrix, index_set_order
from .pce import Expectation
from .polyalg import MVPoly, gaussian_increment_moment, initial_moments

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MrpcConfig:
    """Run parameters.

    ``S=None`` picks the smallest admissible interaction degree for the
    model. ``warm_start`` replaces the first step by the exact Euler step
    computed from the exact initial law, which is needed when the initial
    Hankel matrix is singular (e.g. a frozen copy of a component).
    """

    L: int = 2
    S: int | None = None
    h: float = 0.01
    T: float = 1.0
    mode: str = "sparse"
    pivot_floor: float = PIVOT_FLOOR
    record_every: int = 1
    diagnostics: bool = True
    warm_start: bool = False

    def __post_init__(self):
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if self.S is not None and self.S < 0:
            raise ConfigError(f"S must be >= 0, got {self.S}")
        if not self.h > 0:
            raise ConfigError(f"h must be positive, got {self.h}")
        if not self.T >= self.h * (1 - 1e-12):
            raise ConfigError(f"T must be >= h, got T={self.T}, h={self.h}")
        if self.mode not in ("sparse", "full"):
            raise ConfigError(f"mode must be 'sparse' or 'full', got {self.mode!r}")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")

    def resolve(self, model):
        """Fill in ``S`` and check it against the model's degrees."""
        need = model.min_interaction_degree
        S = need if self.S is None else self.S
        if S < need:
            raise ConfigError(
                f"S={S} too small for {model.name}: drift degree {model.drift_degree}, "
                f"diffusion degree {model.diffusion_degree} need S >= {need}"
            )
        return S

    def order(self, S):
        return index_set_order(self.L, S, self.mode)


@dataclass
class StepDiagnostics:
    lambda_min: float = math.nan
    lambda_max: float = math.nan
    ortho_residual: float = math.nan


@dataclass
class MrpcState:
    k: int
    moments: MomentTable
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)


@dataclass
class RunResult:
    """Recorded trajectory; ``error`` is set when the run stopped early."""

    times: list
    tables: list
    diagnostics: list
    error: Exception | None = None
    failed_step: int | None = None
    diag_times: list = field(default_factory=list)

    @property
    def ok(self):
        return self.error is None

    def values(self):
        return np.array([t.values for t in self.tables])


class MomentOperator:
    """The sparse first-order update ``m' = m + h W e(m)`` for one model."""

    def __init__(self, model, L, S, J):
        self.d = model.d
        self.L, self.S, self.J = L, S, J
        self.target = enumerate_basis(self.d, J)
        deg_b = model.drift_degree
        cov = diffusion_covariance(model)
        deg_s = max([max(0, cov[i][l].degree) for i in range(self.d) for l in range(self.d)])
        self.K = max(J, J - 1 + deg_b, J - 2 + deg_s)
        if self.K > 2 * (J - L):
            raise DegreeOverflowError(
                f"update needs monomials of order {self.K}, reachable only up to {2 * (J - L)}; "
                "lower S or use sparse mode"
            )
        source = enumerate_basis(self.d, self.K)
        rows, cols, vals = [], [], []
        for r, gamma in enumerate(self.target):
            for i in range(self.d):
                if gamma[i] == 0:
                    continue
                base = list(gamma)
                base[i] -= 1
                for beta, c in model.drift[i].terms.items():
                    rows.append(r)
                    cols.append(source.position([x + y for x, y in zip(base, beta)]))
                    vals.append(gamma[i] * c)
                for l in range(i, self.d):
                    if l == i:
                        coeff = gamma[i] * (gamma[i] - 1) / 2
                    else:
                        coeff = gamma[i] * gamma[l]
                    if coeff == 0:
                        continue
                    base2 = list(base)
                    base2[l] -= 1
                    for beta, c in cov[i][l].terms.items():
                        rows.append(r)
                        cols.append(source.position([x + y for x, y in zip(base2, beta)]))
                        vals.append(coeff * c)
        self.W = scipy.sparse.csr_matrix(
            (np.array(vals, dtype=float), (rows, cols)), shape=(len(self.target), len(source))
        )
        self.W.sum_duplicates()

    def rate(self, m, basis):
        """``W e``: the O(h) coefficient of the moment update."""
        e = Expectation(m, basis).values(self.K)
        return self.W @ e


def _check_run(model, cfg):
    S = cfg.resolve(model)
    if cfg.mode == "full" and cfg.L < 1:
        raise ConfigError("full mode needs L >= 1")
    return S


def mrpc_init(model, cfg, moments=None):
    """Initial state: exact moments of the initial law up to the run's order ``J``."""
    S = _check_run(model, cfg)
    J = cfg.order(S)
    if moments is None:
        moments = initial_moments(model.initial, J)
    elif moments.J < J:
        raise DegreeOverflowError(f"supplied moments reach order {moments.J}, need {J}")
    else:
        moments = moments.truncate(J)
    return MrpcState(0, moments)


def step_diagnostics(m, basis):
    H = hankel_matrix(m, basis.L)
    ev = np.linalg.eigvalsh(H)
    resid = float(np.max(np.abs(basis.B @ H @ basis.B.T - np.eye(len(basis)))))
    return StepDiagnostics(float(ev[0]), float(ev[-1]), resid)


def mrpc_step(state, model, cfg, operator=None):
    """Advance one step of size ``cfg.h``; returns the new state.

    The diagnostics attached to the returned state describe the basis that
    was built from the *input* moments.
    """
    S = cfg.resolve(model)
    J = cfg.order(S)
    op = operator or MomentOperator(model, cfg.L, S, J)
    m = state.moments
    basis = basis_from_moments(m, cfg.L, cfg.pivot_floor)
    diag = step_diagnostics(m, basis) if cfg.diagnostics else StepDiagnostics()
    new = m.values + cfg.h * op.rate(m, basis)
    new[0] = 1.0
    return MrpcState(state.k + 1, MomentTable(m.d, m.J, new, check=False), diag)


def exact_euler_moments(model, h, J, moments_fn=None):
    """Moments of ``x + h b(x) + sqrt(h) sigma(x) z`` with ``x`` from the initial law.

    All orders in ``h`` are kept. ``moments_fn(order)`` must return a
    :class:`MomentTable` of the starting law of at least that order; it
    defaults to the model's initial law.
    """
    d, m_noise = model.d, model.m
    n = d + m_noise
    sq = math.sqrt(h)
    x = MVPoly.variables(n)
    y = []
    for i in range(d):
        inc = model.drift[i].lift(n) * h
        for j in range(m_noise):
            if not model.diffusion[i][j].is_zero:
                inc = inc + model.diffusion[i][j].lift(n) * x[d + j] * sq
        y.append(x[i] + inc)
    target = enumerate_basis(d, J)
    powers = {(0,) * d: MVPoly.constant(n, 1.0)}
    for gamma in target.indices[1:]:
        i = next(k for k, g in enumerate(gamma) if g)
        prev = list(gamma)
        prev[i] -= 1
        powers[gamma] = powers[tuple(prev)] * y[i]
    top = max(int(p.degree) for p in powers.values())
    if moments_fn is None:
        base = initial_moments(model.initial, top)
    else:
        base = moments_fn(top)
    out = np.empty(len(target))
    for k, gamma in enumerate(target):
        acc = 0.0
        for a, c in powers[gamma].terms.items():
            zfac = 1
            for e in a[d:]:
                zfac *= gaussian_increment_moment(e)
            if zfac:
                acc += c * zfac * base[a[:d]]
        out[k] = acc
    out[0] = 1.0
    return MomentTable(d, J, out, check=False)


def mrpc_run(model, cfg, moments=None, callback=None):
    """Run ``round(T / h)`` steps, recording every ``record_every``-th.

    A :class:`NumericalFailure` ends the run early; the result then carries
    the error and everything recorded before it. The last diagnostics row
    belongs to the failing step. Diagnostics describe the basis built at
    the start of each step, so ``diag_times[k] = k h``.
    """
    n = step_count(cfg.T, cfg.h)
    S = cfg.resolve(model)
    J = cfg.order(S)
    state = mrpc_init(model, cfg, moments)
    op = MomentOperator(model, cfg.L, S, J)
    times, tables, diags = [0.0], [state.moments], []
    result = RunResult(times, tables, diags)
    for k in range(n):
        try:
            if k == 0 and cfg.warm_start:
                new = exact_euler_moments(model, cfg.h, J, None if moments is None else (lambda _o: moments))
                state = MrpcState(1, new, _safe_diag(state.moments, cfg.L))
            else:
                state = mrpc_step(state, model, cfg, op)
            if not np.all(np.isfinite(state.moments.values)):
                raise NumericalFailure(f"non-finite moments after step {k + 1}")
        except NumericalFailure as exc:
            diags.append(_safe_diag(state.moments, cfg.L))
            result.diag_times.append(k * cfg.h)
            result.error = exc
            result.failed_step = k + 1
            log.warning("mRPC stopped at step %d (t=%.6g): %s", k + 1, (k + 1) * cfg.h, exc)
            return result
        diags.append(state.diagnostics)
        result.diag_times.append(k * cfg.h)
        if (k + 1) % cfg.record_every == 0 or k + 1 == n:
            times.append((k + 1) * cfg.h)
            tables.append(state.moments)
        if callback is not None:
            callback(state)
    return result


def _safe_diag(m, L):
    try:
        ev = np.linalg.eigvalsh(hankel_matrix(m, L))
        return StepDiagnostics(float(ev[0]), float(ev[-1]), math.nan)
    except (np.linalg.LinAlgError, ValueError):
        return StepDiagnostics()


def closure_audit(model, cfg):
    """Check at the level of degrees that one step stays inside the stored sets.

    Returns a dict of the degrees involved; raises ``ClosureError`` or
    ``DegreeOverflowError`` when a lookup would fall outside.
    """
    from .errors import ClosureError

    S = cfg.resolve(model)
    J = cfg.order(S)
    L = cfg.L
    op_K = max(J, J - 1 + model.drift_degree, J - 2 + 2 * model.diffusion_degree)
    cap = J - L
    if op_K > 2 * cap:
        raise ClosureError(f"monomials of order {op_K} need split factors above {cap}")
    # every split factor times a basis polynomial stays within the moment table
    if cap + L > J:
        raise ClosureError("projection coefficients read beyond the moment table")
    return dict(J=J, K=op_K, split_cap=cap)
