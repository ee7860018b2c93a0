"""Fast built-in checks of the algebraic invariants.

These mirror the property tests in the test suite but need neither pytest
nor hypothesis, so an installed copy can check itself with
``rpchaos selftest``.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np

from .diagnostics import moment_metric, w1_moment_bound
from .io import MomentSeries, read_moments_csv, write_moments_csv
from .models import EXAMPLES, build_example
from .moments import MomentTable
from .mrpc import MrpcConfig, closure_audit, mrpc_init
from .multiindex import add, enumerate_basis
from .orthopoly import basis_from_moments, triple_products
from .pce import Expectation, greedy_split, project_product
from .polyalg import initial_moments


def _initial(name, L):
    model = build_example(name)
    cfg = MrpcConfig(L=L, h=0.01, T=0.01)
    S = cfg.resolve(model)
    return model, cfg, S, mrpc_init(model, cfg).moments


def check_orthonormality():
    worst = 0.0
    for name in EXAMPLES:
        for L in (2, 3):
            _, _, _, m = _initial(name, L)
            worst = max(worst, basis_from_moments(m, L).orthonormality_residual(m))
    return worst <= 1e-8, f"max residual {worst:.2e}"


def check_tensor_symmetry():
    for name in EXAMPLES:
        _, _, S, m = _initial(name, 2)
        tensor = triple_products(basis_from_moments(m, 2), m, S)
        if not tensor.is_symmetric():
            return False, f"{name}: asymmetric"
    return True, "exact on all examples"


def check_projection():
    worst = 0.0
    for name in EXAMPLES:
        L = 2
        _, _, S, m = _initial(name, L)
        basis = basis_from_moments(m, L)
        tensor = triple_products(basis, m, S)
        idx = enumerate_basis(m.d, L)
        for a in idx:
            for b in idx:
                if sum(a) + sum(b) > L:
                    continue
                got = project_product(basis.monomial_in_basis(a), basis.monomial_in_basis(b), tensor)
                want = basis.monomial_in_basis(add(a, b))
                worst = max(worst, float(np.max(np.abs(got - want))))
    return worst <= 1e-8, f"max error {worst:.2e}"


def check_expectation():
    """Stored moments come back exactly; higher ones obey Cauchy-Schwarz."""
    for name in EXAMPLES:
        L = 2
        model, _, S, m = _initial(name, L)
        ex = Expectation(m, basis_from_moments(m, L))
        if not np.array_equal(ex.values(m.J), m.values):
            return False, f"{name}: stored moments altered"
        cap = m.J - L
        exact = initial_moments(model.initial, 2 * cap)
        for gamma in enumerate_basis(m.d, 2 * L + 2 * S).indices[len(m) :]:
            a, b = greedy_split(gamma, cap)
            bound = np.sqrt(exact[add(a, a)] * exact[add(b, b)])
            if abs(ex(gamma)) > bound * (1 + 1e-9) + 1e-12:
                return False, f"{name}: {gamma} breaks the Cauchy-Schwarz bound"
    return True, "exact to 2L+S, bounded to 2L+2S"


def check_closure():
    for name in EXAMPLES:
        for L in (2, 3):
            model = build_example(name)
            closure_audit(model, MrpcConfig(L=L, h=0.01, T=0.01))
    return True, "every example, L in {2, 3}"


def check_metrics():
    a = MomentTable(1, 2, [1.0, 0.0, 1.0])
    b = MomentTable(1, 2, [1.0, 0.0, 1.1])
    ok = abs(moment_metric(a, b, 2) - 0.05) < 1e-15
    c = MomentTable(1, 2, [1.0, 0.01, 1.0])
    bound = w1_moment_bound(MomentTable(1, 2, [1.0, 0.0, 1.0]), c, 1.0, 2)
    ok &= abs(bound - (18 + (1 + 2**0.5) ** 0.5 * 9 * 0.01)) < 1e-12
    return ok, "worked examples"


def check_csv_roundtrip():
    rng = np.random.default_rng(0)
    d, order = 2, 4
    n = enumerate_basis(d, order).count(order)
    series = MomentSeries(d, order, np.linspace(0, 1, 5), rng.standard_normal((5, n)))
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "m.csv")
        write_moments_csv(path, series)
        back = read_moments_csv(path)
    ok = np.array_equal(back.values, series.values) and np.array_equal(back.times, series.times)
    return ok, "bit-exact"


CHECKS = {
    "orthonormality": check_orthonormality,
    "tensor symmetry": check_tensor_symmetry,
    "projection exactness": check_projection,
    "expectation functional": check_expectation,
    "closure audit": check_closure,
    "metric examples": check_metrics,
    "csv round trip": check_csv_roundtrip,
}


def run_selftest(out=print):
    """Run every check, print one line each; returns True when all pass."""
    all_ok = True
    for name, fn in CHECKS.items():
        try:
            ok, note = fn()
        except Exception as exc:  # a crash is a failure, reported like one
            ok, note = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{'PASS' if ok else 'FAIL'}  {name}: {note}")
    return all_ok
