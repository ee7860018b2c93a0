"""Execute a configured experiment and write its CSV artifacts."""

from __future__ import annotations

import logging
import math

import numpy as np

from .config import load_config
from .diagnostics import macro_observables
from .errors import ConfigError, DegenerateVarianceError, NumericalFailure
from .io import MomentSeries, write_moments_csv, write_table_csv
from .mcref import cumulants_from_moments, mc_simulate, step_count
from .mrpc import MomentOperator, mrpc_run
from .prpc import check_prpc_config, prpc_run

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

CUMULANT_FIELDS = ("mean", "var", "skew", "exkurt", "k3", "k4")


def cumulant_rows(series):
    """Per-component cumulants of every recorded table; NaN where the variance vanishes."""
    rows = []
    for k in range(len(series)):
        table = series.table(k)
        row = [series.times[k]]
        for i in range(series.d):
            try:
                row.extend(cumulants_from_moments(table.marginal(i, 4)))
            except DegenerateVarianceError:
                m = table.marginal(i, 1)
                row.extend([m[1], 0.0] + [math.nan] * 4)
        rows.append(row)
    return rows


def cumulant_header(d):
    return ["t"] + [f"{f}_{i}" for i in range(d) for f in CUMULANT_FIELDS]


def _write_outputs(cfg, series, diagnostics=None):
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    write_moments_csv(out / "moments.csv", series)
    if diagnostics is not None:
        write_table_csv(out / "diagnostics.csv", ["t", "lambda_min", "lambda_max", "ortho_residual"], diagnostics)
    if "cumulants" in cfg.observables:
        write_table_csv(out / "cumulants.csv", cumulant_header(series.d), cumulant_rows(series))
    if "macro" in cfg.observables:
        rows = [[series.times[k], *macro_observables(series.table(k))] for k in range(len(series))]
        write_table_csv(out / "macro.csv", ["t", "mean_energy", "total_variance"], rows)


def _check_observables(cfg, order):
    if "cumulants" in cfg.observables and order < 4:
        raise ConfigError(f"cumulants need moments up to order 4, run records order {order}")


def execute(cfg):
    """Run a parsed :class:`~rpchaos.config.RunConfig`; returns the exit code."""
    if cfg.method == "mc":
        _check_observables(cfg, cfg.mc.moment_order)
        try:
            stats = mc_simulate(cfg.model, cfg.mc, cfg.T)
        except NumericalFailure as exc:
            log.error("Monte Carlo run failed: %s", exc)
            return EXIT_NUMERICAL
        series = MomentSeries(stats.d, stats.order, stats.times, stats.means, stats.stderr)
        _write_outputs(cfg, series)
        return EXIT_OK

    S = cfg.mrpc.resolve(cfg.model)
    order = cfg.mrpc.order(S)
    _check_observables(cfg, order)
    run = mrpc_run if cfg.method == "mrpc" else prpc_run
    result = run(cfg.model, cfg.mrpc)
    series = MomentSeries(cfg.model.d, order, np.array(result.times), result.values())
    diags = [
        [t, dg.lambda_min, dg.lambda_max, dg.ortho_residual]
        for t, dg in zip(result.diag_times, result.diagnostics)
    ]
    _write_outputs(cfg, series, diags)
    if not result.ok:
        log.error("%s stopped at step %d: %s", cfg.method, result.failed_step, result.error)
        return EXIT_NUMERICAL
    return EXIT_OK


def run_experiment(path):
    """Load the config at ``path``, run it and write CSVs; returns the exit code.

    Configuration problems return 2 before anything is written. A singular
    Hankel matrix or a diverged path returns 3 and keeps what was recorded.
    """
    try:
        cfg = load_config(path)
        if cfg.method != "mc":
            # catch S, mode and degree problems before any output exists
            S = cfg.mrpc.resolve(cfg.model)
            if cfg.method == "prpc":
                check_prpc_config(cfg.model, cfg.mrpc)
            else:
                MomentOperator(cfg.model, cfg.mrpc.L, S, cfg.mrpc.order(S))
            _check_observables(cfg, cfg.mrpc.order(S))
            step_count(cfg.T, cfg.mrpc.h)
        else:
            _check_observables(cfg, cfg.mc.moment_order)
            step_count(cfg.T, cfg.mc.h_ref)
    except (ConfigError, ValueError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    return execute(cfg)
