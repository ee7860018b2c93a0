"""Regenerate the frozen Monte Carlo reference series in tests/data.

Usage: python3 scripts/make_references.py [name ...]

Each reference is a refined-step Euler-Maruyama run with antithetic
variates; the settings below are the ones the acceptance tests were
frozen with. Expect roughly an hour on one core for the full set.
"""

import json
import sys
import time
from pathlib import Path

from rpchaos.io import MomentSeries, write_moments_csv
from rpchaos.mcref import McConfig, mc_simulate
from rpchaos.models import build_example

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"

REFERENCES = {
    "ex41": dict(T=12.0, paths=1_000_000, h_ref=1.2e-3, record_every=100, moment_order=4, seed=4101),
    "lorenz96": dict(T=25.0, paths=100_000, h_ref=1e-3, record_every=100, moment_order=2, seed=4401),
    "ex43_case2": dict(T=10.0, paths=1_000_000, h_ref=1e-3, record_every=100, moment_order=4, seed=4302),
    "ex42": dict(T=5.0, paths=1_000_000, h_ref=1e-4, record_every=1000, moment_order=4, seed=4201),
}


def main(names):
    DATA.mkdir(parents=True, exist_ok=True)
    for name in names or REFERENCES:
        spec = dict(REFERENCES[name])
        T = spec.pop("T")
        cfg = McConfig(antithetic=True, **spec)
        t0 = time.time()
        stats = mc_simulate(build_example(name), cfg, T)
        elapsed = time.time() - t0
        series = MomentSeries(stats.d, stats.order, stats.times, stats.means, stats.stderr)
        write_moments_csv(DATA / f"ref_{name}.csv", series)
        meta = dict(model=name, T=T, antithetic=True, block_size=cfg.block_size, seconds=round(elapsed, 1), **spec)
        (DATA / f"ref_{name}.json").write_text(json.dumps(meta, indent=2) + "\n")
        print(f"{name}: {elapsed:.0f} s", flush=True)


if __name__ == "__main__":
    main(sys.argv[1:])
