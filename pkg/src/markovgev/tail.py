"""Empirical tail-dependence estimates at several lags and thresholds.

The threshold for level ``u`` is the ``ceil(u * n)``-th order statistic of
the whole series (1-based), and exceedance is strict. With this choice a
series ``1..100`` at ``u = 0.95`` has threshold 95 and exceeders 96..100.
Cells with no exceedance in the summation range are undefined and are
carried as ``None`` rather than 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_THRESHOLDS = (0.90, 0.925, 0.95)


class UndefinedEstimate(ValueError):
    """No exceedances in the summation range, so the ratio is 0/0."""


def empirical_threshold(x: np.ndarray, u: float) -> float:
    n = x.size
    # guard against u*n landing a hair above an integer through rounding
    k = max(1, math.ceil(u * n - 1e-9))
    return float(np.sort(x)[k - 1])


def _counts(x: np.ndarray, lag: int, u: float) -> tuple[int, int]:
    q = empirical_threshold(x, u)
    exceed = x > q
    lead, back = exceed[lag:], exceed[:-lag]
    return int(np.sum(lead & back)), int(np.sum(lead))


def _check(x, lag, u):
    x = np.asarray(getattr(x, "values", x), dtype=float)
    if lag < 1 or lag >= x.size:
        raise ValueError(f"lag must satisfy 1 <= lag < n (lag={lag}, n={x.size})")
    if not 0.0 < u < 1.0:
        raise ValueError("threshold level u must lie in (0, 1)")
    return x


def chi_hat(series, lag: int, u: float) -> float:
    """Empirical ``chi`` at ``lag``: share of exceedances at ``i`` also exceeded at ``i - lag``.

    Raises :class:`UndefinedEstimate` when nothing exceeds the threshold in
    ``i = lag+1..n``.
    """
    x = _check(series, lag, u)
    both, lead = _counts(x, lag, u)
    if lead == 0:
        raise UndefinedEstimate(f"no exceedances above the {u} quantile at lag {lag}")
    return both / lead


@dataclass
class ChiProfile:
    lags: list
    thresholds: list
    estimates: list  # [lag][threshold] -> float | None
    n_exceed: list

    def as_array(self) -> np.ndarray:
        return np.array([[np.nan if v is None else v for v in row] for row in self.estimates])

    def rows(self):
        for i, lag in enumerate(self.lags):
            for j, u in enumerate(self.thresholds):
                yield {"lag": lag, "threshold": u, "chi_hat": self.estimates[i][j], "n_exceed": self.n_exceed[i][j]}

    def to_dict(self) -> dict:
        return {"lags": self.lags, "thresholds": self.thresholds,
                "estimates": self.estimates, "n_exceed": self.n_exceed}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=["lag", "threshold", "chi_hat", "n_exceed"])
            w.writeheader()
            for r in self.rows():
                w.writerow({**r, "chi_hat": "" if r["chi_hat"] is None else repr(r["chi_hat"])})


def read_profile_csv(path) -> list[dict]:
    with open(Path(path), newline="") as fh:
        return [
            {"lag": int(r["lag"]), "threshold": float(r["threshold"]),
             "chi_hat": None if r["chi_hat"] == "" else float(r["chi_hat"]), "n_exceed": int(r["n_exceed"])}
            for r in csv.DictReader(fh)
        ]


def chi_profile(series, max_lag: int = 5, thresholds=DEFAULT_THRESHOLDS) -> ChiProfile:
    x = _check(series, max_lag, thresholds[0] if thresholds else 0.5)
    lags = list(range(1, max_lag + 1))
    est, cnt = [], []
    for lag in lags:
        row, crow = [], []
        for u in thresholds:
            _check(x, lag, u)
            both, lead = _counts(x, lag, u)
            row.append(both / lead if lead else None)
            crow.append(lead)
        est.append(row)
        cnt.append(crow)
    return ChiProfile(lags, [float(u) for u in thresholds], est, cnt)
