"""One-step equivalence of the moment update with the brute-force oracle."""

import numpy as np
import pytest

from oracle import first_order_moments
from rpchaos.models import EXAMPLES, build_example
from rpchaos.moments import MomentTable
from rpchaos.mrpc import MrpcConfig, MrpcState, mrpc_step
from rpchaos.orthopoly import basis_from_moments
from rpchaos.pce import Expectation
from rpchaos.polyalg import Gaussian, InitialDistribution, Uniform, initial_moments


def small_model(name):
    # Lorenz-96 couples every coordinate cyclically, so its smallest
    # non-degenerate ring (n=4) stands in for a d <= 3 restriction
    if name == "lorenz96":
        return build_example(name, {"n": 4})
    return build_example(name)


def start_tables(model, J):
    """The model's initial law and a two-component mixture that is not a product law."""
    comps = []
    for c in model.initial.components:
        if isinstance(c, Gaussian):
            comps.append(Gaussian(c.mean + 0.3, c.var * 1.5 + 0.01))
        elif isinstance(c, Uniform):
            comps.append(Uniform(c.lower - 0.2, c.upper))
        else:
            comps.append(c)
    base = initial_moments(model.initial, J)
    other = initial_moments(InitialDistribution(comps), J)
    return {"initial": base, "mixture": MomentTable(model.d, J, 0.5 * (base.values + other.values))}


CASES = [(n, L, h) for n in EXAMPLES for L in (1, 2) for h in (0.01, 0.001)]


@pytest.mark.parametrize("name, L, h", CASES)
def test_step_matches_oracle(name, L, h):
    model = small_model(name)
    cfg = MrpcConfig(L=L, h=h, T=h)
    S = cfg.resolve(model)
    J = cfg.order(S)
    for label, m in start_tables(model, J).items():
        ex = Expectation(m, basis_from_moments(m, L))
        want = first_order_moments(model, ex, m.basis.indices, h)
        got = mrpc_step(MrpcState(0, m), model, cfg).moments.values
        assert np.max(np.abs(got - want)) <= 1e-8, (label, np.max(np.abs(got - want)))
