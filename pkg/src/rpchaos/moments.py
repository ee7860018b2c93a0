"""Moment tables addressed by a graded multi-index basis."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DegreeOverflowError
from .multiindex import enumerate_basis, position


class MomentTable:
    """All mixed moments ``m_gamma = E[x^gamma]`` with ``|gamma| <= J``.

    Parameters
    ----------
    d : int
        State dimension.
    J : int
        Maximal total order stored.
    values : array_like
        Moments in ``GradedBasis(d, J)`` order.
    """

    def __init__(self, d, J, values, check=True):
        self.d = int(d)
        self.J = int(J)
        self.basis = enumerate_basis(self.d, self.J)
        values = np.asarray(values, dtype=float)
        if values.shape != (len(self.basis),):
            raise ConfigError(
                f"moment table for d={d}, J={J} needs {len(self.basis)} entries, got {values.shape}"
            )
        if check and abs(values[0] - 1.0) > 1e-12:
            raise ConfigError(f"m_0 must be 1, got {values[0]!r}")
        self.values = values

    def __getitem__(self, gamma):
        if sum(gamma) > self.J:
            raise DegreeOverflowError(f"moment {tuple(gamma)} beyond stored order J={self.J}")
        return self.values[position(gamma, self.basis)]

    def __len__(self):
        return len(self.values)

    def __repr__(self):
        return f"MomentTable(d={self.d}, J={self.J})"

    def truncate(self, J):
        if J > self.J:
            raise DegreeOverflowError(f"cannot extend moment table from J={self.J} to {J}")
        n = self.basis.count(J)
        return MomentTable(self.d, J, self.values[:n].copy(), check=False)

    def marginal(self, i, order=None):
        """1D raw moments ``E[x_i^n]`` for ``n = 0..order``."""
        order = self.J if order is None else order
        out = np.empty(order + 1)
        for n in range(order + 1):
            gamma = [0] * self.d
            gamma[i] = n
            out[n] = self[gamma]
        return out

    def copy(self):
        return MomentTable(self.d, self.J, self.values.copy(), check=False)

    def allclose(self, other, atol=0.0, rtol=1e-12):
        return (
            self.d == other.d
            and self.J == other.J
            and np.allclose(self.values, other.values, atol=atol, rtol=rtol)
        )
