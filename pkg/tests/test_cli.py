import textwrap

import numpy as np
import pytest

from rpchaos.cli import compare_files, main
from rpchaos.config import load_config, parse_config
from rpchaos.diagnostics import moment_metric
from rpchaos.errors import ConfigError
from rpchaos.io import read_moments_csv
from rpchaos.runner import run_experiment


def write(tmp_path, body, name="run.toml"):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return p


EX41 = """
method = "{method}"
output = "{out}"
observables = ["moments", "cumulants", "macro"]

[model]
name = "ex41"

[mrpc]
L = {L}
h = 0.012
T = {T}
"""


def test_ex41_run_writes_full_grid(tmp_path):
    out = tmp_path / "ex41"
    cfg = write(tmp_path, EX41.format(method="mrpc", out=out, L=2, T=12.0))
    assert run_experiment(cfg) == 0
    series = read_moments_csv(out / "moments.csv")
    assert len(series) == 1001
    assert np.allclose(series.times, np.arange(1001) * 0.012, atol=1e-12)
    diag = np.loadtxt(out / "diagnostics.csv", delimiter=",", skiprows=1)
    assert diag.shape == (1000, 4) and np.all(diag[:, 1] > 0)
    head = (out / "cumulants.csv").read_text().splitlines()[0]
    assert head.startswith("t,mean_0,var_0,skew_0,exkurt_0,k3_0,k4_0,mean_1")
    assert (out / "macro.csv").exists()


def test_over_conditioned_run_exits_3(tmp_path):
    out = tmp_path / "l8"
    cfg = write(tmp_path, EX41.format(method="mrpc", out=out, L=8, T=12.0))
    assert run_experiment(cfg) == 3
    diag = np.loadtxt(out / "diagnostics.csv", delimiter=",", skiprows=1)
    moments = read_moments_csv(out / "moments.csv")
    # one diagnostics row per attempted step, the last one at the failure
    assert len(diag) == len(moments) == 46
    assert diag[-1, 1] < 1e-10 and np.isnan(diag[-1, 3])
    assert np.all(diag[:-1, 1] > 0)


@pytest.mark.parametrize(
    "body",
    [
        'method = "mrpc"\noutput = "{out}"\n[model]\nname = "nope"\n',
        'method = "magic"\noutput = "{out}"\n[model]\nname = "ex41"\n',
        'method = "mrpc"\n[model]\nname = "ex41"\n',
        'method = "mrpc"\noutput = "{out}"\n[model]\nname = "ex41"\n[mrpc]\nL = 2\nS = 1\n',
        'method = "mrpc"\noutput = "{out}"\n[model]\nname = "ex41"\n[mrpc]\nh = 0.05\nT = 0.12\n',
        'method = "mrpc"\noutput = "{out}"\n[model]\nname = "ex41"\n[mrpc]\nsteps = 3\n',
        'method = "prpc"\noutput = "{out}"\n[model]\nname = "ex42"\n',
        'method = "mc"\noutput = "{out}"\nobservables = ["cumulants"]\n[model]\nname = "ex41"\n[mc]\nmoment_order = 3\n',
        'method = "mc"\noutput = "{out}"\n[model]\nname = "ex41"\n[mc]\npaths = 3\n',
        "this is = = not toml",
    ],
)
def test_malformed_config_exits_2_without_outputs(tmp_path, body):
    out = tmp_path / "out"
    cfg = write(tmp_path, body.format(out=out))
    assert run_experiment(cfg) == 2
    assert not out.exists()


def test_missing_config_file(tmp_path):
    assert run_experiment(tmp_path / "absent.toml") == 2


def test_inline_model_and_mc(tmp_path):
    out = tmp_path / "mc"
    cfg = write(tmp_path, f"""
        method = "mc"
        output = "{out}"
        observables = ["moments", "cumulants"]

        [model]
        name = "ou"
        d = 1
        m = 1
        drift = [[{{ exponents = [1], coeff = -1.0 }}]]
        diffusion = [[[{{ exponents = [0], coeff = 1.0 }}]]]
        initial = [{{ gaussian = [0.0, 0.5] }}]

        [mc]
        paths = 2000
        seed = 3
        h_ref = 0.01
        T = 0.5
        record_every = 10
        block_size = 1000
    """)
    assert run_experiment(cfg) == 0
    series = read_moments_csv(out / "moments.csv")
    assert series.stderr is not None and len(series) == 6
    assert not (out / "diagnostics.csv").exists()


def test_augmented_config(tmp_path):
    cfg = parse_config({
        "method": "mrpc",
        "output": str(tmp_path / "x"),
        "model": {"name": "ex41", "augment": [{"param": "au", "uniform": [0.1, 1.1]}, {"copy": 0}]},
        "mrpc": {"L": 2, "h": 0.012, "T": 0.024, "warm_start": True},
    })
    assert cfg.model.d == 4 and cfg.T == 0.024 and cfg.mrpc.warm_start
    with pytest.raises(ConfigError):
        parse_config({"method": "mrpc", "output": "x", "model": {"name": "ex41", "augment": [{"nope": 1}]}})


def test_defaults_come_from_the_model(tmp_path):
    cfg = load_config(write(tmp_path, 'method = "mrpc"\noutput = "o"\n[model]\nname = "ex42"\n'))
    assert (cfg.mrpc.L, cfg.mrpc.h, cfg.T) == (3, 0.001, 5.0)
    assert cfg.mrpc.resolve(cfg.model) == 4


def test_compare_equals_metric(tmp_path, capsys):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_experiment(write(tmp_path, EX41.format(method="mrpc", out=a, L=2, T=0.12), "a.toml"))
    run_experiment(write(tmp_path, EX41.format(method="prpc", out=b, L=2, T=0.12), "b.toml"))
    rows = compare_files(a / "moments.csv", b / "moments.csv", 4)
    sa, sb = read_moments_csv(a / "moments.csv"), read_moments_csv(b / "moments.csv")
    for k, (t, v) in enumerate(rows):
        assert t == sa.times[k]
        assert v == moment_metric(sa.table(k), sb.table(k), 4)
    assert main(["compare", str(a / "moments.csv"), str(b / "moments.csv"), "--order", "4", "--row", "10"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,metric" and len(out) == 2
    assert float(out[1].split(",")[1]) == rows[10][1]
    assert main(["compare", str(a / "moments.csv"), str(tmp_path / "none.csv"), "--order", "2"]) == 2


def test_selftest_command(capsys):
    assert main(["selftest"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)


def test_run_command(tmp_path):
    cfg = write(tmp_path, EX41.format(method="mrpc", out=tmp_path / "r", L=2, T=0.12))
    assert main(["run", str(cfg)]) == 0
