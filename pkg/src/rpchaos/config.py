"""Experiment configuration files.

A run is described by a TOML file::

    method = "mrpc"              # mrpc | prpc | mc
    output = "runs/ex41"         # directory, created if missing
    observables = ["moments", "cumulants"]   # plus "macro"

    [model]
    name = "ex41"                # a registered example ...
    params = { au = 1.0 }        # ... with optional parameter overrides
    augment = [ { param = "au", uniform = [0.1, 1.1] }, { copy = 0 } ]

    [mrpc]                       # used by method = "mrpc" and "prpc"
    L = 3
    S = 2                        # optional; smallest admissible if omitted
    h = 0.012
    T = 12.0
    mode = "sparse"              # or "full"
    record_every = 1
    warm_start = false

    [mc]                         # used by method = "mc"
    paths = 100000
    seed = 1
    antithetic = true
    h_ref = 0.0012
    T = 12.0
    record_every = 10
    moment_order = 4

An inline model replaces ``name``/``params`` with ``d``, ``m``, ``drift``
(``d`` lists of polynomial records), ``diffusion`` (``d x m`` lists of
records) and ``initial``. A polynomial record is
``{ exponents = [1, 0], coeff = -1.2 }``; an initial component is one of
``{ gaussian = [mean, var] }``, ``{ uniform = [lo, hi] }``,
``{ constant = c }`` or ``{ copy = i }``.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .mcref import McConfig
from .models import ModelSpec, augment_copy, augment_parameter, build_example
from .mrpc import MrpcConfig
from .polyalg import Constant, Copy, Gaussian, InitialDistribution, MVPoly, Uniform

METHODS = ("mrpc", "prpc", "mc")
OBSERVABLES = ("moments", "cumulants", "macro")


@dataclass
class RunConfig:
    method: str
    model: ModelSpec
    output: Path
    observables: tuple = ("moments",)
    mrpc: MrpcConfig | None = None
    mc: McConfig | None = None
    T: float = 0.0
    source: dict = field(default_factory=dict, repr=False)


def parse_component(spec):
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(f"initial component must be a one-key table, got {spec!r}")
    (kind, value), = spec.items()
    try:
        if kind == "gaussian":
            return Gaussian(float(value[0]), float(value[1]))
        if kind == "uniform":
            return Uniform(float(value[0]), float(value[1]))
        if kind == "constant":
            return Constant(float(value))
        if kind == "copy":
            return Copy(int(value))
    except (TypeError, IndexError, ValueError) as exc:
        raise ConfigError(f"bad initial component {spec!r}") from exc
    raise ConfigError(f"unknown initial component kind {kind!r}")


def _inline_model(block):
    try:
        name = str(block.get("name", "inline"))
        d = int(block["d"])
        m = int(block["m"])
        drift = tuple(MVPoly.from_records(d, recs) for recs in block["drift"])
        diffusion = tuple(tuple(MVPoly.from_records(d, recs) for recs in row) for row in block["diffusion"])
        initial = InitialDistribution([parse_component(c) for c in block["initial"]])
    except KeyError as exc:
        raise ConfigError(f"inline model is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed inline model: {exc}") from exc
    return ModelSpec(name, d, m, drift, diffusion, initial)


def build_model(block):
    if not isinstance(block, dict):
        raise ConfigError("[model] table is required")
    if "drift" in block:
        model = _inline_model(block)
    elif "name" in block:
        model = build_example(block["name"], block.get("params"))
    else:
        raise ConfigError("[model] needs either a registered 'name' or an inline 'drift'")
    for aug in block.get("augment", []):
        if "copy" in aug:
            model = augment_copy(model, int(aug["copy"]))
        elif "param" in aug:
            dist = parse_component({k: v for k, v in aug.items() if k != "param"})
            model = augment_parameter(model, aug["param"], dist)
        else:
            raise ConfigError(f"augment entry needs 'copy' or 'param': {aug!r}")
    return model


def _section(cls, raw, defaults):
    """Build ``cls`` from a config table over model defaults; returns ``(obj, T)``."""
    allowed = {f.name for f in fields(cls)}
    raw = dict(raw or {})
    T = raw.pop("T", defaults.get("T"))
    if T is None:
        raise ConfigError("final time T is required")
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(sorted(unknown))}")
    merged = {k: v for k, v in defaults.items() if k in allowed and k != "T"}
    merged.update(raw)
    if "T" in allowed:
        merged["T"] = float(T)
    try:
        return cls(**merged), float(T)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def parse_config(data, base_dir=None):
    """Validate a decoded TOML document into a :class:`RunConfig`."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a table")
    method = data.get("method")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {method!r}")
    if "output" not in data:
        raise ConfigError("'output' directory is required")
    output = Path(data["output"])
    if base_dir is not None and not output.is_absolute():
        output = Path(base_dir) / output
    observables = tuple(data.get("observables", ["moments"]))
    bad = [o for o in observables if o not in OBSERVABLES]
    if bad:
        raise ConfigError(f"unknown observables {bad}; choose from {', '.join(OBSERVABLES)}")
    model = build_model(data.get("model"))
    cfg = RunConfig(method, model, output, observables, source=data)
    if method in ("mrpc", "prpc"):
        cfg.mrpc, cfg.T = _section(MrpcConfig, data.get("mrpc"), model.defaults)
        cfg.mrpc.resolve(model)
    else:
        cfg.mc, cfg.T = _section(McConfig, data.get("mc"), model.defaults)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return parse_config(data, base_dir=None)
