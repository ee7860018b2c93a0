"""Euler-Maruyama Monte Carlo reference solver.

Paths are simulated in fixed-size blocks. Block ``j`` draws from its own
PCG64 stream seeded by ``SeedSequence([seed, j])``, and the per-block sums
are reduced in block order, so results do not depend on how many worker
threads ran the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateVarianceError, DivergedPathError
from .moments import MomentTable
from .multiindex import enumerate_basis
from .polyalg import Constant, Copy, Gaussian, Uniform

THREADS_ENV = "RPCHAOS_THREADS"


@dataclass(frozen=True)
class McConfig:
    paths: int = 100_000
    seed: int = 0
    antithetic: bool = True
    h_ref: float = 1e-3
    record_every: int = 1
    moment_order: int = 4
    block_size: int = 50_000
    threads: int | None = None

    def __post_init__(self):
        if self.paths < 2:
            raise ConfigError("paths must be >= 2")
        if self.antithetic and (self.paths % 2 or self.block_size % 2):
            raise ConfigError("antithetic sampling needs even path and block counts")
        if not self.h_ref > 0:
            raise ConfigError("h_ref must be positive")
        if self.record_every < 1 or self.block_size < 2 or self.moment_order < 1:
            raise ConfigError("record_every, block_size and moment_order must be positive")


@dataclass
class SampleStats:
    """Moment estimates on the recording grid.

    ``means[k]`` and ``stderr[k]`` are indexed like ``GradedBasis(d, order)``.
    """

    d: int
    order: int
    times: np.ndarray
    means: np.ndarray
    stderr: np.ndarray

    def table(self, k):
        return MomentTable(self.d, self.order, self.means[k], check=False)

    def __len__(self):
        return len(self.times)


def step_count(T, h):
    n = T / h
    if abs(n - round(n)) > 1e-9 * max(1.0, n) or round(n) < 1:
        raise ConfigError(f"T/h = {n!r} is not a positive integer")
    return int(round(n))


def thread_count(requested=None):
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


class _PolyField:
    """Vectorised evaluation of a list of polynomials on states of shape ``(d, n)``."""

    def __init__(self, polys, d):
        self.d = d
        self.max_pow = [0] * d
        self.compiled = []
        for p in polys:
            terms = []
            for a, c in p.terms.items():
                terms.append((c, [(i, e) for i, e in enumerate(a) if e]))
                for i, e in enumerate(a):
                    self.max_pow[i] = max(self.max_pow[i], e)
            self.compiled.append(terms)

    def powers(self, x):
        table = []
        for i in range(self.d):
            pw = [None, x[i]]
            for _ in range(2, self.max_pow[i] + 1):
                pw.append(pw[-1] * x[i])
            table.append(pw)
        return table

    def eval_all(self, x, table=None):
        table = self.powers(x) if table is None else table
        out = []
        for terms in self.compiled:
            acc = None
            for c, factors in terms:
                if factors:
                    t = table[factors[0][0]][factors[0][1]]
                    for i, e in factors[1:]:
                        t = t * table[i][e]
                    t = c * t
                else:
                    t = np.full(x.shape[1], c)
                acc = t if acc is None else acc + t
            out.append(np.zeros(x.shape[1]) if acc is None else acc)
        return out


def _initial_states(initial, n, rng, antithetic):
    half = n // 2 if antithetic else n
    cols = []
    for comp in initial.components:
        if isinstance(comp, Gaussian):
            z = rng.standard_normal(half)
            s = math.sqrt(comp.var)
            col = np.concatenate([comp.mean + s * z, comp.mean - s * z]) if antithetic else comp.mean + s * z
        elif isinstance(comp, Uniform):
            u = comp.lower + (comp.upper - comp.lower) * rng.random(half)
            col = np.concatenate([u, comp.lower + comp.upper - u]) if antithetic else u
        elif isinstance(comp, Constant):
            col = np.full(n, float(comp.value))
        elif isinstance(comp, Copy):
            col = None
        else:
            raise ConfigError(f"cannot sample {comp!r}")
        cols.append(col)
    for i, comp in enumerate(initial.components):
        if isinstance(comp, Copy):
            cols[i] = cols[comp.of].copy()
    return np.stack(cols, axis=0)


def _pair_index(n, antithetic):
    """Global path offset of row ``r`` in a block (rows are [evens..., odds...])."""
    if not antithetic:
        return np.arange(n)
    half = n // 2
    return np.concatenate([2 * np.arange(half), 2 * np.arange(half) + 1])


class _BlockRunner:
    def __init__(self, model, cfg, n_steps):
        self.model = model
        self.cfg = cfg
        self.n_steps = n_steps
        flat = [model.diffusion[i][j] for i in range(model.d) for j in range(model.m)]
        self.shared = _PolyField(list(model.drift) + flat, model.d)
        # (i, j) entries that are not identically zero
        self.active = [(i, j) for i in range(model.d) for j in range(model.m) if not model.diffusion[i][j].is_zero]
        self.noise_cols = sorted({j for _, j in self.active})
        self.mono = enumerate_basis(model.d, cfg.moment_order).array
        self.n_rec = n_steps // cfg.record_every + 1

    def _monomials(self, x):
        d = self.model.d
        order = self.cfg.moment_order
        pw = [[np.ones(x.shape[1])] for _ in range(d)]
        for i in range(d):
            for _ in range(order):
                pw[i].append(pw[i][-1] * x[i])
        out = np.empty((len(self.mono), x.shape[1]))
        for r, alpha in enumerate(self.mono):
            t = pw[0][alpha[0]]
            for i in range(1, d):
                if alpha[i]:
                    t = t * pw[i][alpha[i]]
            out[r] = t
        return out

    def _accumulate(self, x, sums, sq, rec):
        vals = self._monomials(x)
        if self.cfg.antithetic:
            half = x.shape[1] // 2
            vals = 0.5 * (vals[:, :half] + vals[:, half:])
        sums[rec] = vals.sum(axis=1)
        sq[rec] = (vals * vals).sum(axis=1)

    def run(self, block, start, n):
        cfg = self.cfg
        model = self.model
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([cfg.seed, block])))
        x = _initial_states(model.initial, n, rng, cfg.antithetic)
        sums = np.zeros((self.n_rec, len(self.mono)))
        sq = np.zeros_like(sums)
        self._accumulate(x, sums, sq, 0)
        h = cfg.h_ref
        sqh = math.sqrt(h)
        half = n // 2 if cfg.antithetic else n
        nd, nm = model.d, model.m
        for k in range(1, self.n_steps + 1):
            vals = self.shared.eval_all(x)
            b = vals[:nd]
            sig = vals[nd:]
            x_new = x.copy()
            for i in range(nd):
                x_new[i] += h * b[i]
            if self.active:
                z = rng.standard_normal((len(self.noise_cols), half))
                if cfg.antithetic:
                    z = np.concatenate([z, -z], axis=1)
                zmap = {j: z[r] for r, j in enumerate(self.noise_cols)}
                for i, j in self.active:
                    x_new[i] += sqh * sig[i * nm + j] * zmap[j]
            x = x_new
            if not np.isfinite(x).all():
                bad = int(np.flatnonzero(~np.isfinite(x).all(axis=0))[0])
                raise DivergedPathError(start + int(_pair_index(n, cfg.antithetic)[bad]), k * h)
            if k % cfg.record_every == 0:
                self._accumulate(x, sums, sq, k // cfg.record_every)
        return sums, sq


def mc_simulate(model, cfg, T):
    """Simulate ``cfg.paths`` Euler-Maruyama paths to time ``T``.

    Returns :class:`SampleStats` with all moments up to
    ``cfg.moment_order`` at every ``record_every``-th step of ``h_ref``.
    With antithetic sampling the standard error is computed from the
    pair averages, which are the independent samples.
    """
    n_steps = step_count(T, cfg.h_ref)
    runner = _BlockRunner(model, cfg, n_steps)
    blocks = []
    start = 0
    while start < cfg.paths:
        n = min(cfg.block_size, cfg.paths - start)
        blocks.append((len(blocks), start, n))
        start += n
    workers = min(thread_count(cfg.threads), len(blocks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda b: runner.run(*b), blocks))
    else:
        results = [runner.run(*b) for b in blocks]
    total = np.zeros_like(results[0][0])
    total_sq = np.zeros_like(results[0][1])
    for s, q in results:
        total += s
        total_sq += q
    n_samples = cfg.paths // 2 if cfg.antithetic else cfg.paths
    means = total / n_samples
    var = np.maximum(total_sq / n_samples - means**2, 0.0) * n_samples / (n_samples - 1)
    stderr = np.sqrt(var / n_samples)
    times = np.arange(runner.n_rec) * cfg.record_every * cfg.h_ref
    return SampleStats(model.d, cfg.moment_order, times, means, stderr)


def cumulants_from_moments(m):
    """Cumulant summary of a 1D raw-moment sequence ``m[0..4]``.

    Returns ``(mean, variance, skewness, excess kurtosis, kappa3, kappa4)``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape[0] < 5:
        raise ConfigError("need raw moments up to order 4")
    m1, m2, m3, m4 = m[1], m[2], m[3], m[4]
    k2 = m2 - m1**2
    if not k2 > 0:
        raise DegenerateVarianceError(f"variance {k2!r} is not positive")
    k3 = m3 - 3 * m1 * m2 + 2 * m1**3
    k4 = m4 - 4 * m1 * m3 - 3 * m2**2 + 12 * m1**2 * m2 - 6 * m1**4
    return (m1, k2, k3 / k2**1.5, k4 / k2**2, k3, k4)
