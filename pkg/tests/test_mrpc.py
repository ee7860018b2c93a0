import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ou_model
from rpchaos.errors import ConfigError, DegreeOverflowError, SingularHankelError
from rpchaos.models import ModelSpec, augment_parameter, build_example
from rpchaos.mrpc import (
    MomentOperator, MrpcConfig, closure_audit, exact_euler_moments, mrpc_init, mrpc_run, mrpc_step,
)
from rpchaos.polyalg import Constant, Gaussian, InitialDistribution, MVPoly


def test_init_ou_gaussian():
    st0 = mrpc_init(ou_model(), MrpcConfig(L=2, S=1, h=0.1, T=0.1))
    assert np.array_equal(st0.moments.values, [1, 0, 1, 0, 3, 0])


def test_init_constant_start():
    x = MVPoly.variable(1, 0)
    model = ModelSpec("c", 1, 1, (-x,), ((MVPoly.constant(1, 1.0),),), InitialDistribution([Constant(1.5)]))
    m = mrpc_init(model, MrpcConfig(L=1, S=1, h=0.1, T=0.1)).moments
    assert np.allclose(m.values, 1.5 ** np.arange(4))


def test_init_ex41_variances():
    m = mrpc_init(build_example("ex41"), MrpcConfig(L=2, h=0.012, T=12)).moments
    assert m[(2, 0)] - m[(1, 0)] ** 2 == pytest.approx(0.5**2 / (8 * 1.2))
    assert m[(0, 2)] == pytest.approx(0.0625)
    assert m[(1, 0)] == 1.0


@pytest.mark.parametrize("h", [0.1, 0.01, 0.001])
def test_ou_step_second_moment(h):
    cfg = MrpcConfig(L=2, S=1, h=h, T=h)
    new = mrpc_step(mrpc_init(ou_model(), cfg), ou_model(), cfg).moments
    assert new[(2,)] == pytest.approx(1 - h, abs=1e-14)
    assert new[(0,)] == 1.0


def test_pure_diffusion_step():
    model = ou_model(b=0.0)
    cfg = MrpcConfig(L=2, S=1, h=0.05, T=0.05)
    new = mrpc_step(mrpc_init(model, cfg), model, cfg).moments
    assert new[(2,)] == pytest.approx(1.05, abs=1e-14)
    assert new[(1,)] == 0.0


def test_one_step_run_matches_step():
    model = ou_model()
    cfg = MrpcConfig(L=2, S=1, h=0.01, T=0.01)
    res = mrpc_run(model, cfg)
    step = mrpc_step(mrpc_init(model, cfg), model, cfg)
    assert res.ok and len(res.tables) == 2
    assert np.array_equal(res.tables[1].values, step.moments.values)


def test_ou_long_run_stationary_variance():
    res = mrpc_run(ou_model(), MrpcConfig(L=2, S=1, h=0.01, T=10.0))
    assert res.tables[-1][(2,)] == pytest.approx(0.5, abs=2e-2)


def test_non_integral_horizon_rejected():
    with pytest.raises(ConfigError):
        mrpc_run(ou_model(), MrpcConfig(L=2, S=1, h=0.03, T=0.1))


def test_config_validation():
    for bad in (dict(L=0), dict(S=-1), dict(h=0.0), dict(T=0.001, h=0.01), dict(mode="dense"), dict(record_every=0)):
        with pytest.raises(ConfigError):
            MrpcConfig(**bad)
    with pytest.raises(ConfigError):
        MrpcConfig(L=2, S=1).resolve(build_example("ex41"))


def test_normalisation_every_step():
    res = mrpc_run(build_example("ex43_case1"), MrpcConfig(L=2, h=0.01, T=1.0))
    assert all(t.values[0] == 1.0 for t in res.tables)


@given(st.floats(-2, -0.1), st.floats(-1, 1), st.floats(-2, -0.1), st.floats(0.1, 1), st.floats(0.001, 0.1))
def test_linear_model_mean_update(a11, a12, a22, s, h):
    x, y = MVPoly.variables(2)
    A = np.array([[a11, a12], [0.3, a22]])
    drift = (a11 * x + a12 * y, 0.3 * x + a22 * y)
    c = MVPoly.constant(2, s)
    z = MVPoly(2)
    model = ModelSpec("lin", 2, 2, drift, ((c, z), (z, c)),
                      InitialDistribution([Gaussian(0.5, 0.2), Gaussian(-1.0, 0.5)]))
    cfg = MrpcConfig(L=2, h=h, T=h)
    st0 = mrpc_init(model, cfg)
    new = mrpc_step(st0, model, cfg).moments
    mean0 = np.array([st0.moments[(1, 0)], st0.moments[(0, 1)]])
    want = (np.eye(2) + h * A) @ mean0
    assert np.allclose([new[(1, 0)], new[(0, 1)]], want, rtol=0, atol=1e-13)


def test_sparse_and_full_agree_on_ex41():
    model = build_example("ex41")
    sparse = mrpc_run(model, MrpcConfig(L=2, h=0.012, T=12.0, record_every=50))
    full = mrpc_run(model, MrpcConfig(L=2, h=0.012, T=12.0, mode="full", record_every=50))
    n = len(sparse.tables[0])
    diff = np.abs(sparse.values()[:, :n] - full.values()[:, :n])
    assert diff.max() <= 1e-6


def test_singular_start_is_reported():
    model = augment_parameter(build_example("ex41"), "au", Constant(1.0))
    res = mrpc_run(model, MrpcConfig(L=2, S=3, h=0.012, T=0.12))
    assert not res.ok and res.failed_step == 1
    assert isinstance(res.error, SingularHankelError)


def test_run_keeps_partial_output_on_failure():
    res = mrpc_run(build_example("ex41"), MrpcConfig(L=8, h=0.012, T=12.0))
    assert not res.ok
    k = res.failed_step
    assert len(res.tables) == k and len(res.diagnostics) == k
    assert res.diagnostics[-1].lambda_min < 1e-10


def test_operator_reach_and_overflow():
    op = MomentOperator(build_example("ex42"), 3, 4, 10)
    assert op.K == 12
    with pytest.raises(DegreeOverflowError):
        MomentOperator(build_example("ex42"), 3, 1, 7)


@pytest.mark.parametrize("name", ["ex41", "ex41_random_coeff", "ex42", "ex43_case1", "ex43_case2", "lorenz96"])
@pytest.mark.parametrize("L", [2, 3])
def test_closure_audit_every_example(name, L):
    model = build_example(name)
    info = closure_audit(model, MrpcConfig(L=L, h=0.01, T=0.01))
    assert info["K"] <= 2 * info["split_cap"]


def test_exact_euler_step_has_h_squared_term():
    model = ou_model()
    h = 0.1
    m = exact_euler_moments(model, h, 4)
    assert m[(2,)] == pytest.approx(1 - h + h * h, abs=1e-14)
