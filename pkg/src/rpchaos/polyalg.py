"""Multivariate polynomials in the monomial basis and closed-form moment generators."""

from __future__ import annotations

import math
from dataclasses import dataclass
from numbers import Real

import numpy as np

from .errors import ConfigError
from .moments import MomentTable
from .multiindex import enumerate_basis

ZERO_TOL = 1e-15


class MVPoly:
    """Polynomial in ``d`` variables stored as ``{exponent tuple: coefficient}``.

    Coefficients with ``|c| <= 1e-15`` are dropped so every polynomial has a
    canonical form. Arithmetic with plain numbers is supported, which lets
    model builders write drift terms the way they are usually written, e.g.
    ``-(bu + au * v) * u`` with ``au`` either a float or another ``MVPoly``.
    """

    __slots__ = ("d", "terms")

    def __init__(self, d, terms=None):
        self.d = int(d)
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.d:
                raise ValueError(f"exponent {alpha} does not match dimension {self.d}")
            if any(a < 0 for a in alpha):
                raise ValueError(f"negative exponent in {alpha}")
            c = float(c)
            if abs(c) > ZERO_TOL:
                clean[alpha] = clean.get(alpha, 0.0) + c
        self.terms = {a: c for a, c in clean.items() if abs(c) > ZERO_TOL}

    # constructors
    @classmethod
    def constant(cls, d, c):
        return cls(d, {(0,) * d: c})

    @classmethod
    def variable(cls, d, i, coeff=1.0):
        alpha = [0] * d
        alpha[i] = 1
        return cls(d, {tuple(alpha): coeff})

    @classmethod
    def variables(cls, d):
        return [cls.variable(d, i) for i in range(d)]

    @classmethod
    def from_records(cls, d, records):
        """Build from ``[{"exponents": [...], "coeff": c}, ...]``."""
        terms = {}
        for rec in records:
            try:
                alpha = tuple(int(a) for a in rec["exponents"])
                c = float(rec["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad polynomial record {rec!r}") from exc
            if len(alpha) != d:
                raise ConfigError(f"record {rec!r} has {len(alpha)} exponents, expected {d}")
            terms[alpha] = terms.get(alpha, 0.0) + c
        return cls(d, terms)

    def to_records(self):
        return [{"exponents": list(a), "coeff": c} for a, c in sorted(self.terms.items())]

    # queries
    @property
    def is_zero(self):
        return not self.terms

    @property
    def degree(self):
        """Total degree; ``-inf`` for the zero polynomial."""
        if not self.terms:
            return -math.inf
        return max(sum(a) for a in self.terms)

    def coeff(self, alpha):
        return self.terms.get(tuple(alpha), 0.0)

    def coeff_vector(self, L):
        """Coefficients in ``GradedBasis(d, L)`` order."""
        basis = enumerate_basis(self.d, L)
        out = np.zeros(len(basis))
        for alpha, c in self.terms.items():
            out[basis.position(alpha)] = c
        return out

    # arithmetic
    def _coerce(self, other):
        if isinstance(other, MVPoly):
            if other.d != self.d:
                raise ValueError(f"dimension mismatch: {self.d} vs {other.d}")
            return other
        if isinstance(other, Real):
            return MVPoly.constant(self.d, other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0.0) + c
        return MVPoly(self.d, terms)

    __radd__ = __add__

    def __neg__(self):
        return MVPoly(self.d, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                key = tuple(x + y for x, y in zip(a, b))
                terms[key] = terms.get(key, 0.0) + ca * cb
        return MVPoly(self.d, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = MVPoly.constant(self.d, 1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Real):
            other = MVPoly.constant(self.d, other)
        if not isinstance(other, MVPoly):
            return NotImplemented
        return self.d == other.d and self.terms == other.terms

    def __hash__(self):
        return hash((self.d, frozenset(self.terms.items())))

    def allclose(self, other, atol=1e-12):
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= atol for k in keys)

    def diff(self, i):
        """Partial derivative with respect to variable ``i`` (0-based)."""
        if not 0 <= i < self.d:
            raise ValueError(f"coordinate {i} out of range for d={self.d}")
        terms = {}
        for a, c in self.terms.items():
            if a[i] > 0:
                b = list(a)
                b[i] -= 1
                terms[tuple(b)] = c * a[i]
        return MVPoly(self.d, terms)

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        """Evaluate at points ``x`` of shape ``(..., d)``."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"points have {x.shape[-1]} coordinates, expected {self.d}")
        out = np.zeros(x.shape[:-1])
        for a, c in self.terms.items():
            term = np.full(x.shape[:-1], c)
            for i, p in enumerate(a):
                if p:
                    term = term * x[..., i] ** p
            out = out + term
        return out if out.ndim else float(out)

    def lift(self, d_new, positions=None):
        """Embed into ``d_new`` variables; variable ``i`` maps to ``positions[i]``."""
        positions = list(range(self.d)) if positions is None else list(positions)
        if len(positions) != self.d:
            raise ValueError("positions must list one target per variable")
        terms = {}
        for a, c in self.terms.items():
            b = [0] * d_new
            for i, p in zip(positions, a):
                b[i] += p
            terms[tuple(b)] = c
        return MVPoly(d_new, terms)

    def __repr__(self):
        if not self.terms:
            return f"MVPoly(d={self.d}, 0)"
        parts = []
        for a, c in sorted(self.terms.items(), key=lambda kv: (sum(kv[0]), kv[0])):
            mono = "*".join(f"x{i}^{p}" if p > 1 else f"x{i}" for i, p in enumerate(a) if p)
            parts.append(f"{c:.6g}" + (f"*{mono}" if mono else ""))
        return f"MVPoly(d={self.d}, " + " + ".join(parts) + ")"


def poly_mul(p, q):
    return p * q


def poly_diff(p, i):
    return p.diff(i)


def poly_eval(p, x):
    return p.eval(x)


# initial laws


@dataclass(frozen=True)
class Gaussian:
    mean: float
    var: float

    def __post_init__(self):
        if not self.var >= 0:
            raise ConfigError(f"Gaussian variance must be >= 0, got {self.var}")

    def raw_moments(self, n_max):
        # binomial expansion about the mean with central moments (k-1)!! var^(k/2)
        central = [gaussian_increment_moment(k) * self.var ** (k // 2) for k in range(n_max + 1)]
        return np.array(
            [
                sum(math.comb(n, k) * central[k] * self.mean ** (n - k) for k in range(0, n + 1, 2))
                for n in range(n_max + 1)
            ]
        )


@dataclass(frozen=True)
class Uniform:
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigError(f"Uniform needs lower < upper, got ({self.lower}, {self.upper})")

    @property
    def mean(self):
        return 0.5 * (self.lower + self.upper)

    def raw_moments(self, n_max):
        a, b = self.lower, self.upper
        return np.array([(b ** (n + 1) - a ** (n + 1)) / ((n + 1) * (b - a)) for n in range(n_max + 1)])


@dataclass(frozen=True)
class Constant:
    value: float

    @property
    def mean(self):
        return self.value

    def raw_moments(self, n_max):
        return np.array([self.value**n for n in range(n_max + 1)], dtype=float)


@dataclass(frozen=True)
class Copy:
    """Component that equals another component of the same initial state."""

    of: int


class InitialDistribution:
    """Product law over independent components.

    A :class:`Copy` component duplicates an earlier independent component,
    which is how the initial state is carried along for covariance tracking.
    """

    def __init__(self, components):
        self.components = tuple(components)
        for i, comp in enumerate(self.components):
            if isinstance(comp, Copy):
                if not 0 <= comp.of < len(self.components) or isinstance(self.components[comp.of], Copy):
                    raise ConfigError(f"component {i} copies invalid source {comp.of}")
            elif not isinstance(comp, (Gaussian, Uniform, Constant)):
                raise ConfigError(f"unsupported initial component {comp!r}")

    @property
    def d(self):
        return len(self.components)

    def __repr__(self):
        return f"InitialDistribution({list(self.components)!r})"

    def source(self, i):
        comp = self.components[i]
        return comp.of if isinstance(comp, Copy) else i

    def __add__(self, other):
        shift = self.d
        comps = [Copy(c.of + shift) if isinstance(c, Copy) else c for c in other.components]
        return InitialDistribution(self.components + tuple(comps))


def gaussian_increment_moment(n):
    """``E[z^n]`` for standard normal ``z``: ``(n-1)!!`` for even ``n``, else 0."""
    if n < 0:
        raise ValueError("moment order must be >= 0")
    if n % 2:
        return 0
    out = 1
    for k in range(n - 1, 0, -2):
        out *= k
    return out


def initial_moments(dist, J):
    """Moment table ``E[x^gamma]`` for ``|gamma| <= J`` under an :class:`InitialDistribution`."""
    d = dist.d
    basis = enumerate_basis(d, J)
    tables = {}
    for i, comp in enumerate(dist.components):
        if not isinstance(comp, Copy):
            tables[i] = comp.raw_moments(J)
    values = np.ones(len(basis))
    for pos, gamma in enumerate(basis):
        merged = {}
        for i, g in enumerate(gamma):
            if g:
                src = dist.source(i)
                merged[src] = merged.get(src, 0) + g
        v = 1.0
        for src, g in merged.items():
            v *= tables[src][g]
        values[pos] = v
    return MomentTable(d, J, values)
