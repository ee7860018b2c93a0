import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rpchaos.models import ModelSpec
from rpchaos.polyalg import Gaussian, InitialDistribution, MVPoly

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def ou_model(b=-1.0, sigma=1.0, mean=0.0, var=1.0):
    """1D Ornstein-Uhlenbeck ``dx = b x dt + sigma dW``."""
    x = MVPoly.variable(1, 0)
    return ModelSpec("ou", 1, 1, (x * b,), ((MVPoly.constant(1, sigma),),),
                     InitialDistribution([Gaussian(mean, var)]))


@pytest.fixture
def ou():
    return ou_model()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""

    def report(number, checks):
        ok = all(c[1] for c in checks)
        detail = "; ".join(f"{name} {'ok' if good else 'FAILED'} ({note})" for name, good, note in checks)
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
