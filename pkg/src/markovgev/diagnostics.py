"""Convergence diagnostics, DIC and posterior summaries."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .inference import PosteriorDraws
from .model import MaximaSeries, ModelSpec, conditional_quantile_next, loglik_array

SUMMARY_PROBS = (0.025, 0.05, 0.5, 0.95, 0.975)


def _as_chains(draws, param):
    if isinstance(draws, PosteriorDraws):
        if param is None:
            raise ValueError("param name required for PosteriorDraws")
        x = draws.by_chain(draws.column(param))
    else:
        x = np.asarray(draws, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
    if x.shape[1] < 10:
        raise ValueError("need at least 10 draws per chain")
    return x


def rhat(draws, param: str | None = None) -> float:
    """Split-chain potential scale reduction factor.

    ``draws`` is a :class:`PosteriorDraws` (with ``param``) or an array of
    shape ``(chains, draws)``.
    """
    x = _as_chains(draws, param)
    if x.shape[0] < 2:
        raise ValueError("R-hat needs at least two chains")
    half = x.shape[1] // 2
    x = np.concatenate([x[:, :half], x[:, half: 2 * half]])
    n = x.shape[1]
    w = x.var(axis=1, ddof=1).mean()
    b = n * x.mean(axis=1).var(ddof=1)
    if w == 0.0:
        return 1.0 if b == 0.0 else math.inf
    var_plus = (n - 1) / n * w + b / n
    return float(math.sqrt(var_plus / w))


def _autocov(x: np.ndarray) -> np.ndarray:
    n = x.size
    m = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x - x.mean(), m)
    return np.fft.irfft(f * np.conj(f), m)[:n] / n


def ess(draws, param: str | None = None) -> float:
    """Effective sample size with Geyer's initial positive sequence truncation."""
    x = _as_chains(draws, param)
    m, n = x.shape
    acov = np.stack([_autocov(c) for c in x])
    chain_var = acov[:, 0] * n / (n - 1)
    w = chain_var.mean()
    if w == 0.0:
        return float(m * n)
    var_plus = w * (n - 1) / n
    if m > 1:
        var_plus += x.mean(axis=1).var(ddof=1)
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # sum consecutive pairs while positive, enforcing monotone decrease
    total = 0.0
    prev = math.inf
    t = 0
    while t + 1 < n:
        pair = rho[t] + rho[t + 1]
        if pair <= 0.0:
            break
        pair = min(pair, prev)
        total += pair
        prev = pair
        t += 2
    tau = -1.0 + 2.0 * total
    return float(m * n / max(tau, 1.0 / math.log10(m * n)))


def mcse(x: np.ndarray) -> float:
    """Monte Carlo standard error of the mean of a single chain or ``(chains, draws)`` array."""
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(ess(x)))


@dataclass
class DicResult:
    dic: float
    p_d: float
    d_bar: float
    d_hat: float


def posterior_mean_vector(draws: PosteriorDraws) -> np.ndarray:
    """Posterior mean with ``sigma`` averaged on its natural scale."""
    theta = draws.draws.mean(axis=0)
    theta[draws.spec.index("log_sigma")] = math.log(draws.column("sigma").mean())
    return theta


def deviance(series: MaximaSeries, spec: ModelSpec, vec: np.ndarray) -> float:
    return -2.0 * loglik_array(series.values, series.times, np.asarray(vec, dtype=float), spec)


def dic_components(series: MaximaSeries, spec: ModelSpec, draws: PosteriorDraws) -> DicResult:
    if len(draws.draws) == 0:
        raise ValueError("no draws")
    devs = np.array([deviance(series, spec, v) for v in draws.draws])
    d_bar = float(devs.mean())
    d_hat = deviance(series, spec, posterior_mean_vector(draws))
    p_d = d_bar - d_hat
    return DicResult(d_bar + p_d, p_d, d_bar, d_hat)


def dic(series: MaximaSeries, spec: ModelSpec, draws: PosteriorDraws) -> float:
    """Deviance information criterion ``D_bar + p_D`` with the posterior-mean plug-in."""
    return dic_components(series, spec, draws).dic


def summarize(values: np.ndarray, probs=SUMMARY_PROBS) -> dict:
    """Mean and type-7 (linear interpolation) quantiles of a draw vector."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("no draws")
    out = {"mean": float(values.mean())}
    for p, q in zip(probs, np.quantile(values, probs, method="linear")):
        out[f"{100 * p:g}%"] = float(q)
    return out


def posterior_summary(draws: PosteriorDraws, series: MaximaSeries | None = None,
                      prob: float = 0.95, functionals: dict | None = None) -> dict:
    """Per-parameter and per-functional summary table.

    ``sigma`` is reported on its natural scale. When ``series`` is given a
    ``q95`` row holds the next-block conditional quantile computed draw by
    draw. ``functionals`` maps extra row names to callables of the draws.
    """
    table = {}
    for name in draws.names:
        if name == "log_sigma":
            table["sigma"] = summarize(draws.column("sigma"))
        else:
            table[name] = summarize(draws.column(name))
    if series is not None:
        table["q95"] = summarize(conditional_quantile_next(series, draws.draws, draws.spec, prob))
    for name, fn in (functionals or {}).items():
        table[name] = summarize(fn(draws))
    return table
