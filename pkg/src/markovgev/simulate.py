"""Seeded generators for the independent, first-order Markov and MA(2) processes.

``seed`` arguments accept anything :func:`numpy.random.default_rng` does.
Studies derive one stream per replicate with :func:`replicate_seed`, so
results do not depend on how replicates are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtri

from .gev import GevParams, frechet_to_gev, gev_quantile, gev_quantile_from_logprob, gev_to_frechet
from .logistic import check_alpha, conditional_quantile, _scalar_conditional_quantile
from .model import MaximaSeries

MA_COEFFICIENTS = (0.45, 0.075)
MA_SCALE = math.sqrt(1.0 + MA_COEFFICIENTS[0] ** 2 + MA_COEFFICIENTS[1] ** 2)
STUDY_MARGINAL = GevParams(0.0, 1.0, -0.1)

INDEPENDENT, MARKOV, MA2 = "independent", "markov", "ma2"
KINDS = (INDEPENDENT, MARKOV, MA2)


def replicate_seed(master: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=tuple(int(k) for k in key))


@dataclass(frozen=True)
class ProcessSpec:
    kind: str
    marginal: GevParams = STUDY_MARGINAL
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown process kind {self.kind!r}")
        if (self.kind == MARKOV) != (self.alpha is not None):
            raise ValueError("alpha is required for, and only for, the Markov process")
        if self.alpha is not None:
            check_alpha(self.alpha)

    @property
    def label(self) -> str:
        return {INDEPENDENT: "Independent GEV", MARKOV: "First-order Markov", MA2: "MA(2)"}[self.kind]

    def simulate(self, n: int, seed):
        """Return ``(series, state)`` where ``state`` feeds :func:`true_conditional_q95`."""
        if self.kind == INDEPENDENT:
            return sim_independent_gev(n, self.marginal, seed), None
        if self.kind == MARKOV:
            series = sim_markov_gev(n, self.marginal, self.alpha, seed)
            return series, float(gev_to_frechet(series.values[-1], self.marginal))
        series, w = sim_ma2_gev(n, self.marginal, seed)
        return series, (float(w[-1]), float(w[-2]))

    def to_dict(self) -> dict:
        m = self.marginal
        return {"kind": self.kind, "marginal": [m.mu, m.sigma, m.xi], "alpha": self.alpha}

    @classmethod
    def from_dict(cls, d: dict) -> "ProcessSpec":
        return cls(d["kind"], GevParams(*d.get("marginal", (0.0, 1.0, -0.1))), d.get("alpha"))


def _series(values) -> MaximaSeries:
    values = np.asarray(values, dtype=float)
    if values.size == 1:
        # MaximaSeries needs two points; single draws are returned as a bare array
        return values
    return MaximaSeries(values)


def sim_independent_gev(n: int, marginal: GevParams, seed) -> MaximaSeries:
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return _series(gev_quantile(rng.uniform(size=n), marginal))


def sim_markov_frechet(n: int, alpha: float, seed) -> np.ndarray:
    """Stationary first-order Markov chain with unit-Frechet margins."""
    if n < 1:
        raise ValueError("n must be positive")
    alpha = check_alpha(alpha)
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=n)
    z = np.empty(n)
    z[0] = -1.0 / math.log(u[0])
    for t in range(1, n):
        z[t] = _scalar_conditional_quantile(float(u[t]), float(z[t - 1]), alpha)
    return z


def sim_markov_gev(n: int, marginal: GevParams, alpha: float, seed) -> MaximaSeries:
    return _series(frechet_to_gev(sim_markov_frechet(n, alpha, seed), marginal))


def ma2_latent(n: int, seed) -> tuple[np.ndarray, np.ndarray]:
    """Latent MA(2) values ``X_1..X_n`` and white noise ``W_{-1}..W_n`` (two warm-up draws)."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(n + 2)
    t1, t2 = MA_COEFFICIENTS
    x = w[2:] + t1 * w[1:-1] + t2 * w[:-2]
    return x, w


def sim_ma2_gev(n: int, marginal: GevParams, seed):
    """MA(2) series pushed through the normal cdf and the GEV quantile function.

    Returns ``(series, w)`` with ``w`` the full white-noise history
    including the two warm-up values; ``w[-1]`` is ``W_n``.
    """
    x, w = ma2_latent(n, seed)
    y = gev_quantile_from_logprob(log_ndtr(x / MA_SCALE), marginal)
    return _series(y), w


def true_conditional_q95(process: ProcessSpec, state=None, prob: float = 0.95) -> float:
    """True quantile of the next value given the process state.

    ``state`` is ignored for the independent process, is the final
    unit-Frechet value for the Markov process and ``(W_n, W_{n-1})`` for
    MA(2).
    """
    if process.kind == INDEPENDENT:
        return float(gev_quantile(prob, process.marginal))
    if state is None:
        raise ValueError(f"{process.kind} process needs its final state")
    if process.kind == MARKOV:
        z = conditional_quantile(prob, float(state), process.alpha)
        return float(frechet_to_gev(z, process.marginal))
    w_n, w_prev = state
    t1, t2 = MA_COEFFICIENTS
    x_q = t1 * w_n + t2 * w_prev + ndtri(prob)
    return float(gev_quantile_from_logprob(log_ndtr(x_q / MA_SCALE), process.marginal))


def simulate_next(process: ProcessSpec, state, size: int, seed) -> np.ndarray:
    """Independent draws of the next value given ``state`` (for calibration checks)."""
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=size)
    if process.kind == INDEPENDENT:
        return gev_quantile(u, process.marginal)
    if process.kind == MARKOV:
        return frechet_to_gev(conditional_quantile(u, np.full(size, float(state)), process.alpha), process.marginal)
    w_n, w_prev = state
    t1, t2 = MA_COEFFICIENTS
    x = ndtri(u) + t1 * w_n + t2 * w_prev
    return gev_quantile_from_logprob(log_ndtr(x / MA_SCALE), process.marginal)
