"""Model registry: polynomial drift and diffusion for the benchmark systems.

A model is ``dx = b(x) dt + sigma(x) dW`` with ``b`` a list of ``d``
polynomials and ``sigma`` a ``d x m`` table of polynomials. Models are
produced by builder functions so that a parameter can later be promoted to
a random state component (``augment_parameter``) by simply rebuilding with
the parameter bound to a new variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

from .errors import ConfigError
from .polyalg import Constant, Copy, Gaussian, InitialDistribution, MVPoly, Uniform


@dataclass(frozen=True)
class StateVar:
    """Parameter value bound to state component ``index``."""

    index: int


@dataclass(frozen=True)
class ModelSpec:
    name: str
    d: int
    m: int
    drift: tuple
    diffusion: tuple
    initial: InitialDistribution
    params: dict = field(default_factory=dict)
    defaults: dict = field(default_factory=dict)
    builder: Callable | None = field(default=None, repr=False, compare=False)
    base_d: int | None = None

    def __post_init__(self):
        if len(self.drift) != self.d:
            raise ConfigError(f"{self.name}: {len(self.drift)} drift polynomials for d={self.d}")
        if len(self.diffusion) != self.d or any(len(row) != self.m for row in self.diffusion):
            raise ConfigError(f"{self.name}: diffusion must be {self.d} x {self.m}")
        for p in list(self.drift) + [q for row in self.diffusion for q in row]:
            if p.d != self.d:
                raise ConfigError(f"{self.name}: polynomial in {p.d} variables, model has d={self.d}")
        if self.initial.d != self.d:
            raise ConfigError(f"{self.name}: initial law has {self.initial.d} components, d={self.d}")

    @property
    def drift_degree(self):
        return max(0, max(p.degree for p in self.drift))

    @property
    def diffusion_degree(self):
        degs = [p.degree for row in self.diffusion for p in row]
        return max(0, max(degs, default=0))

    @property
    def min_interaction_degree(self):
        """Smallest admissible ``S = max(deg b, 2 deg sigma)``."""
        return int(max(self.drift_degree, 2 * self.diffusion_degree))

    def restrict(self, keep):
        """Sub-model on the coordinates ``keep``; the others are frozen at zero.

        Only valid when the kept coordinates' dynamics do not involve
        dropped ones (checked).
        """
        keep = list(keep)
        dropped = [i for i in range(self.d) if i not in keep]
        new_d = len(keep)

        def project(p):
            terms = {}
            for a, c in p.terms.items():
                if any(a[i] for i in dropped):
                    raise ConfigError(f"{self.name}: kept dynamics depend on dropped coordinates")
                terms[tuple(a[i] for i in keep)] = c
            return MVPoly(new_d, terms)

        drift = tuple(project(self.drift[i]) for i in keep)
        diffusion = tuple(tuple(project(q) for q in self.diffusion[i]) for i in keep)
        comps = []
        for i in keep:
            c = self.initial.components[i]
            if isinstance(c, Copy):
                if c.of not in keep:
                    raise ConfigError(f"{self.name}: copied component {c.of} was dropped")
                c = Copy(keep.index(c.of))
            comps.append(c)
        return ModelSpec(
            f"{self.name}[{','.join(map(str, keep))}]",
            new_d,
            self.m,
            drift,
            diffusion,
            InitialDistribution(comps),
            dict(self.params),
            dict(self.defaults),
        )


def _resolve(params, variables):
    return {k: (variables[v.index] if isinstance(v, StateVar) else v) for k, v in params.items()}


def _assemble(name, builder, params, initial, defaults, base_d):
    d = initial.d
    x = MVPoly.variables(d)
    drift, diffusion = builder(x, _resolve(params, x))
    drift = list(drift)
    diffusion = [list(row) for row in diffusion]
    m = len(diffusion[0])
    zero = MVPoly(d)
    # coordinates beyond those the builder knows about are frozen
    for _ in range(d - len(drift)):
        drift.append(zero)
        diffusion.append([zero] * m)
    drift = tuple(p if isinstance(p, MVPoly) else MVPoly.constant(d, p) for p in drift)
    diffusion = tuple(
        tuple(q if isinstance(q, MVPoly) else MVPoly.constant(d, q) for q in row) for row in diffusion
    )
    return ModelSpec(name, d, m, drift, diffusion, initial, dict(params), dict(defaults), builder, base_d)


# builders: (variables, params) -> (drift list, diffusion rows)


def _ex41(x, p):
    u, v = x[0], x[1]
    drift = [-(p["bu"] + p["au"] * v) * u, -(p["bv"] + p["av"] * u) * v]
    diffusion = [[p["sigma_u"], 0.0], [0.0, p["sigma_v"]]]
    return drift, diffusion


def _ex42(x, p):
    u, v = x[0], x[1]
    drift = [10.0 - 3.0 * u - v, 5.0 - u - 3.0 * v - v**3]
    diffusion = [[0.5 + 0.1 * v, 0.0], [0.0, 0.3 + 0.1 * u + 0.1 * v**2]]
    return drift, diffusion


def _triad(x, p):
    u, w, v = x[0], x[1], x[2]
    g1, g2, g3 = p["gamma"]
    l12, l13, l23 = p["lam"]
    b1, b2, b3 = p["beta"]
    s1, s2, s3 = p["sigma"]
    drift = [
        -g1 * u + l12 * w + l13 * v + b1 * v * w,
        -g2 * w - l12 * u + l23 * v + b2 * u * v,
        -g3 * v - l13 * u - l23 * w + b3 * w * u,
    ]
    diffusion = [[s1, 0.0, 0.0], [0.0, s2, 0.0], [0.0, 0.0, s3]]
    return drift, diffusion


def _lorenz96(x, p):
    n = p["n"]
    drift = [(x[(k + 1) % n] - x[(k - 2) % n]) * x[(k - 1) % n] - x[k] + p["F"] for k in range(n)]
    diffusion = [[p["sigma"] if j == k else 0.0 for j in range(n)] for k in range(n)]
    return drift, diffusion


def _ex41_initial(p):
    return InitialDistribution(
        [
            Gaussian(1.0, p["sigma_u"] ** 2 / (8 * p["bu"])),
            Gaussian(0.0, p["sigma_v"] ** 2 / (8 * p["bv"])),
        ]
    )


EX41_PARAMS = dict(au=1.0, av=0.0, bu=1.2, bv=0.5, sigma_u=0.5, sigma_v=0.5)


def _make_ex41(overrides):
    p = {**EX41_PARAMS, **overrides}
    defaults = dict(L=2, h=0.012, T=12.0)
    return _assemble("ex41", _ex41, p, _ex41_initial(p), defaults, 2)


def _make_ex41_random_coeff(overrides):
    p = {**EX41_PARAMS, "av": 0.05, **overrides}
    base = _assemble("ex41_random_coeff", _ex41, p, _ex41_initial(p), dict(L=3, h=0.012, T=12.0), 2)
    return augment_parameter(base, "au", Uniform(0.1, 1.1))


def _make_ex42(overrides):
    if overrides:
        raise ConfigError("ex42 has no tunable parameters")
    init = InitialDistribution([Gaussian(0.3, 0.2**2), Gaussian(0.5, 1.2**2)])
    # diffusion of degree 2 forces S >= 4
    return _assemble("ex42", _ex42, {}, init, dict(L=3, S=4, h=0.001, T=5.0), 2)


def _make_ex43_case1(overrides):
    p = dict(
        gamma=(0.4, 2.0, 2.0),
        lam=(0.03, 0.06, 0.09),
        beta=(2.0, -1.0, -1.0),
        sigma=(math.sqrt(0.8), 2.0, 2.0),
    )
    p.update(overrides)
    if abs(sum(p["beta"])) > 1e-12:
        raise ConfigError(f"triad coefficients beta must sum to zero, got {p['beta']}")
    init = InitialDistribution([Gaussian(-1.0, 0.25), Gaussian(0.5, 2.0), Gaussian(-0.5, 0.0225)])
    return _assemble("ex43_case1", _triad, p, init, dict(L=3, h=0.01, T=20.0), 3)


def _make_ex43_case2(overrides):
    gamma = (0.9, 1.2, 1.5)
    energy = (0.6, 0.4, 0.3)
    p = dict(
        gamma=gamma,
        lam=(0.1, 0.1, 0.1),
        beta=(1.2, 0.6, -1.8),
        sigma=tuple(math.sqrt(2 * g * e) for g, e in zip(gamma, energy)),
    )
    p.update(overrides)
    if abs(sum(p["beta"])) > 1e-12:
        raise ConfigError(f"triad coefficients beta must sum to zero, got {p['beta']}")
    init = InitialDistribution([Gaussian(-0.5, 0.09), Gaussian(0.2, 0.09), Gaussian(0.5, 0.04)])
    return _assemble("ex43_case2", _triad, p, init, dict(L=3, h=0.01, T=10.0), 3)


def _make_lorenz96(overrides):
    p = dict(n=6, F=0.9, sigma=0.08, init_mean=0.0, init_var=0.1)
    p.update(overrides)
    n = int(p["n"])
    if n < 4:
        raise ConfigError("lorenz96 needs at least 4 sites")
    p["n"] = n
    init = InitialDistribution([Gaussian(p["init_mean"], p["init_var"])] * n)
    return _assemble("lorenz96", _lorenz96, p, init, dict(L=2, S=2, h=0.01, T=25.0), n)


_REGISTRY = {
    "ex41": _make_ex41,
    "ex41_random_coeff": _make_ex41_random_coeff,
    "ex42": _make_ex42,
    "ex43_case1": _make_ex43_case1,
    "ex43_case2": _make_ex43_case2,
    "lorenz96": _make_lorenz96,
}

EXAMPLES = tuple(_REGISTRY)


def build_example(name, overrides=None):
    """Return a :class:`ModelSpec` for one of :data:`EXAMPLES`.

    ``overrides`` replaces named parameters, e.g. ``{"F": 1.2}`` for
    ``lorenz96``.
    """
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown model {name!r}; choose from {', '.join(EXAMPLES)}") from None
    overrides = dict(overrides or {})
    if overrides:
        unknown = set(overrides) - set(factory({}).params)
        if unknown:
            raise ConfigError(f"{name} has no parameters {sorted(unknown)}")
    return factory(overrides)


def augment_parameter(model, param, dist):
    """Promote parameter ``param`` to a frozen random state component.

    The new component has zero drift and diffusion and initial law
    ``dist``; every polynomial that used the parameter is rebuilt with it
    as the new variable, so degrees may go up by one.
    """
    if model.builder is None:
        raise ConfigError(f"{model.name} was not built from parameters and cannot be augmented")
    if param not in model.params:
        raise ConfigError(f"{model.name} has no parameter {param!r}")
    if isinstance(model.params[param], StateVar):
        raise ConfigError(f"parameter {param!r} is already a state component")
    params = dict(model.params)
    params[param] = StateVar(model.d)
    initial = model.initial + InitialDistribution([dist])
    return _assemble(model.name, model.builder, params, initial, model.defaults, model.base_d)


def augment_copy(model, component):
    """Append a frozen copy of the initial value of ``component``.

    The extra coordinate stays equal to ``x_component(0)``, so mixed
    moments such as ``E[u(t) u(0)]`` become ordinary state moments.
    """
    if not 0 <= component < model.d:
        raise ConfigError(f"component {component} out of range for d={model.d}")
    src = model.initial.source(component)
    initial = InitialDistribution(list(model.initial.components) + [Copy(src)])
    d = model.d + 1
    zero = MVPoly(d)
    drift = tuple(p.lift(d) for p in model.drift) + (zero,)
    diffusion = tuple(tuple(q.lift(d) for q in row) for row in model.diffusion) + ((zero,) * model.m,)
    # the builder cannot reproduce the copied coordinate, so drop it
    return replace(model, d=d, drift=drift, diffusion=diffusion, initial=initial, builder=None)


def diffusion_covariance(model):
    """``Sigma^{(i,l)} = sum_j sigma^{(i,j)} sigma^{(l,j)}`` as a nested list of polynomials."""
    d, m = model.d, model.m
    out = [[None] * d for _ in range(d)]
    for i in range(d):
        for l in range(i, d):
            acc = MVPoly(d)
            for j in range(m):
                acc = acc + model.diffusion[i][j] * model.diffusion[l][j]
            out[i][l] = out[l][i] = acc
    return out


__all__ = [
    "Constant",
    "EXAMPLES",
    "ModelSpec",
    "StateVar",
    "augment_copy",
    "augment_parameter",
    "build_example",
    "diffusion_covariance",
]
