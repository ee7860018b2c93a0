"""CSV interchange for moment series.

Every value is written with 17 significant digits, so reading a file back
reproduces the doubles bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .moments import MomentTable
from .multiindex import enumerate_basis, label, parse_label

FMT = "%.17g"


def fmt(x):
    return FMT % x


@dataclass
class MomentSeries:
    """Moment tables on a time grid, optionally with standard errors."""

    d: int
    order: int
    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray | None = None

    def table(self, k):
        return MomentTable(self.d, self.order, self.values[k], check=False)

    def __len__(self):
        return len(self.times)

    def column(self, gamma):
        return self.values[:, enumerate_basis(self.d, self.order).position(gamma)]

    def stderr_column(self, gamma):
        if self.stderr is None:
            raise ConfigError("series carries no standard errors")
        return self.stderr[:, enumerate_basis(self.d, self.order).position(gamma)]

    def at(self, t, tol=1e-9):
        """Row index whose time equals ``t`` (within ``tol``)."""
        k = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[k] - t) > tol:
            raise KeyError(f"time {t} not on the recorded grid")
        return k


def moment_header(d, order, with_se=False):
    labels = [f"m_{label(g)}" for g in enumerate_basis(d, order)]
    if with_se:
        labels += [f"{c}_se" for c in labels]
    return ["t"] + labels


def write_moments_csv(path, series, mode="w"):
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            w.writerow(moment_header(series.d, series.order, series.stderr is not None))
        for k in range(len(series)):
            row = [fmt(series.times[k])] + [fmt(v) for v in series.values[k]]
            if series.stderr is not None:
                row += [fmt(v) for v in series.stderr[k]]
            w.writerow(row)


def read_moments_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "t":
        raise ConfigError(f"{path}: not a moments file")
    header = rows[0][1:]
    plain = [h for h in header if not h.endswith("_se")]
    gammas = [parse_label(h[2:]) for h in plain]
    d = len(gammas[0])
    order = max(sum(g) for g in gammas)
    expected = moment_header(d, order)[1:]
    if plain != expected:
        raise ConfigError(f"{path}: columns are not a complete graded moment table")
    n = len(plain)
    with_se = len(header) == 2 * n
    data = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(len(rows) - 1, -1)
    times = data[:, 0]
    values = data[:, 1 : 1 + n]
    stderr = data[:, 1 + n :] if with_se else None
    return MomentSeries(d, order, times, values, stderr)


def write_table_csv(path, header, rows, mode="w"):
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if mode == "w":
            w.writerow(header)
        for r in rows:
            w.writerow([x if isinstance(x, str) else fmt(x) for x in r])
