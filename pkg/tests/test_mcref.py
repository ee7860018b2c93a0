import math

import numpy as np
import pytest

from conftest import DATA, ou_model
from rpchaos.errors import ConfigError, DegenerateVarianceError, DivergedPathError
from rpchaos.io import read_moments_csv
from rpchaos.mcref import McConfig, cumulants_from_moments, mc_simulate, step_count, thread_count
from rpchaos.models import ModelSpec
from rpchaos.mrpc import MrpcConfig, mrpc_run
from rpchaos.polyalg import Constant, Gaussian, InitialDistribution, MVPoly


def test_ou_stationary_second_moment():
    # dx = -x dt + sqrt(2) dW keeps N(0, 1) invariant
    model = ou_model(sigma=math.sqrt(2))
    stats = mc_simulate(model, McConfig(paths=100_000, seed=7, h_ref=1e-3, record_every=1000, moment_order=2), 1.0)
    assert stats.means[-1, 2] == pytest.approx(1.0, abs=4 * stats.stderr[-1, 2])
    assert np.all(stats.means[:, 0] == 1.0) and np.all(stats.stderr >= 0)


def test_ex41_v_variance_matches_closed_form():
    ref = read_moments_csv(DATA / "ref_ex41.csv")
    k = ref.at(12.0)
    var0 = 0.0625
    want = 0.25 * (1 - math.exp(-12)) + var0 * math.exp(-12)
    mean_v = ref.column((0, 1))[k]
    var_v = ref.column((0, 2))[k] - mean_v**2
    se = math.hypot(ref.stderr_column((0, 2))[k], 2 * abs(mean_v) * ref.stderr_column((0, 1))[k])
    assert abs(var_v - want) <= 4 * se


def test_frozen_model_keeps_initial_sample():
    z = MVPoly(2)
    model = ModelSpec("still", 2, 1, (z, z), ((z,), (z,)), InitialDistribution([Gaussian(1, 0.5), Constant(2.0)]))
    stats = mc_simulate(model, McConfig(paths=1000, seed=3, h_ref=0.1, block_size=500), 1.0)
    assert np.array_equal(stats.means, np.repeat(stats.means[:1], len(stats), axis=0))
    assert stats.means[0, 1] == 2.0 and stats.means[0, 3] == 4.0


def _cfg(**kw):
    base = dict(paths=4000, seed=11, h_ref=0.01, record_every=10, moment_order=3, block_size=1000)
    base.update(kw)
    return McConfig(**base)


def test_thread_count_does_not_change_results():
    model = ou_model()
    one = mc_simulate(model, _cfg(threads=1), 0.5)
    four = mc_simulate(model, _cfg(threads=4), 0.5)
    assert one.means.tobytes() == four.means.tobytes()
    assert one.stderr.tobytes() == four.stderr.tobytes()


def test_antithetic_is_unbiased():
    model = ou_model(mean=0.5, var=0.3)
    a = mc_simulate(model, _cfg(paths=40_000, block_size=20_000, antithetic=True), 1.0)
    b = mc_simulate(model, _cfg(paths=40_000, block_size=20_000, antithetic=False, seed=12), 1.0)
    for k in (1, 2, 3):
        se = math.hypot(a.stderr[-1, k], b.stderr[-1, k])
        assert abs(a.means[-1, k] - b.means[-1, k]) <= 4 * se


def test_antithetic_pairs_mirror_noise():
    # odd moments of a symmetric linear model cancel exactly within each pair
    model = ou_model()
    stats = mc_simulate(model, _cfg(moment_order=3), 0.5)
    assert np.allclose(stats.means[:, [1, 3]], 0.0, atol=1e-15)


def test_linear_model_mean_matches_mrpc():
    x, y = MVPoly.variables(2)
    c = MVPoly.constant(2, 0.4)
    z = MVPoly(2)
    model = ModelSpec("lin", 2, 2, (-x + 0.5 * y, -0.3 * x - 0.8 * y), ((c, z), (z, c)),
                      InitialDistribution([Gaussian(1.0, 0.2), Gaussian(-0.5, 0.1)]))
    stats = mc_simulate(model, McConfig(paths=20_000, seed=5, h_ref=0.01, record_every=10, moment_order=2), 2.0)
    res = mrpc_run(model, MrpcConfig(L=2, h=0.01, T=2.0, record_every=10))
    assert np.allclose(stats.times, res.times)
    for k, table in enumerate(res.tables):
        for j in (1, 2):
            assert abs(stats.means[k, j] - table.values[j]) <= 4 * stats.stderr[k, j] + 1e-12


def test_divergence_is_reported():
    x = MVPoly.variable(1, 0)
    model = ModelSpec("blowup", 1, 1, (x**3,), ((MVPoly(1),),), InitialDistribution([Constant(10.0)]))
    with pytest.raises(DivergedPathError) as err, np.errstate(all="ignore"):
        mc_simulate(model, McConfig(paths=4, seed=0, h_ref=0.1, block_size=4), 2.0)
    assert err.value.path == 0 and 0 < err.value.time <= 2.0


def test_config_checks():
    with pytest.raises(ConfigError):
        step_count(1.0, 0.3)
    assert step_count(12.0, 0.012) == 1000
    with pytest.raises(ConfigError):
        McConfig(paths=3)
    with pytest.raises(ConfigError):
        McConfig(paths=1)


def test_thread_env(monkeypatch):
    monkeypatch.setenv("RPCHAOS_THREADS", "3")
    assert thread_count() == 3
    assert thread_count(2) == 2
    monkeypatch.setenv("RPCHAOS_THREADS", "many")
    with pytest.raises(ConfigError):
        thread_count()


def test_cumulant_examples():
    assert np.allclose(cumulants_from_moments([1, 0, 1, 0, 3]), [0, 1, 0, 0, 0, 0])
    mu, s2 = 1.3, 0.4
    m = [1, mu, mu**2 + s2, mu**3 + 3 * mu * s2, mu**4 + 6 * mu**2 * s2 + 3 * s2**2]
    c = cumulants_from_moments(m)
    assert c[4] == pytest.approx(0, abs=1e-13) and c[5] == pytest.approx(0, abs=1e-13)
    _, var, skew, exk, _, _ = cumulants_from_moments([1, 1, 2, 6, 24])
    assert (var, skew, exk) == (1, 2, 6)
    with pytest.raises(DegenerateVarianceError):
        cumulants_from_moments([1, 2, 4, 8, 16])
