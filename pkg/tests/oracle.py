"""Brute-force one-step oracle for the first-order moment update.

Expands ``(x + h b(x) + sqrt(h) sigma(x) z)^gamma`` with plain dict
polynomials in ``(x, z, s)`` where ``s = sqrt(h)``, drops every term of
order ``s^3`` and above, averages the Gaussian increments exactly and
applies the expectation functional to what is left in ``x``. Nothing here
reuses the package's update operator.
"""

import math

import numpy as np

S_MAX = 2


def _mul(p, q, d, m):
    out = {}
    for a, ca in p.items():
        for b, cb in q.items():
            k = tuple(x + y for x, y in zip(a, b))
            if k[-1] > S_MAX:
                continue
            out[k] = out.get(k, 0.0) + ca * cb
    return out


def _lift(poly, d, m, s_pow=0, z=None):
    """MVPoly in x -> dict over (x, z, s), optionally times z_j and s^k."""
    out = {}
    for a, c in poly.terms.items():
        zz = [0] * m
        if z is not None:
            zz[z] = 1
        out[tuple(a) + tuple(zz) + (s_pow,)] = c
    return out


def _increments(model):
    d, m = model.d, model.m
    y = []
    for i in range(d):
        xi = [0] * (d + m + 1)
        xi[i] = 1
        p = {tuple(xi): 1.0}
        for k, c in _lift(model.drift[i], d, m, s_pow=2).items():
            p[k] = p.get(k, 0.0) + c
        for j in range(m):
            for k, c in _lift(model.diffusion[i][j], d, m, s_pow=1, z=j).items():
                p[k] = p.get(k, 0.0) + c
        y.append(p)
    return y


def _z_moment(c):
    out = 1
    for e in c:
        if e % 2:
            return 0
        out *= math.prod(range(e - 1, 0, -2))
    return out


def first_order_moments(model, expect, gammas, h):
    """``E[(x + h b + sqrt(h) sigma z)^gamma]`` to ``O(h)`` for each ``gamma``."""
    d, m = model.d, model.m
    y = _increments(model)
    one = {(0,) * (d + m + 1): 1.0}
    cache = {(0,) * d: one}
    out = np.empty(len(gammas))
    for k, gamma in enumerate(gammas):
        key = tuple(gamma)
        if key not in cache:
            i = next(j for j, g in enumerate(key) if g)
            prev = list(key)
            prev[i] -= 1
            base = cache.get(tuple(prev))
            if base is None:
                base = one
                for j, g in enumerate(prev):
                    for _ in range(g):
                        base = _mul(base, y[j], d, m)
            cache[key] = _mul(base, y[i], d, m)
        acc = 0.0
        for a, c in cache[key].items():
            zf = _z_moment(a[d : d + m])
            if zf:
                acc += c * zf * h ** (a[-1] / 2) * expect(a[:d])
        out[k] = acc
    return out
