"""Model specifications M1-M4, the Markov GEV likelihood, priors and posterior.

Parameter vectors are laid out as ``(mu0, [mu1], log_sigma, xi, [alpha])``
where the bracketed entries are present only for trend / Markov models.
The location at block ``t`` (1-based index) is ``mu0 + mu1 * t``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import betaln, ndtr

from .gev import GevParams, XI_TOL, frechet_to_gev, gev_quantile, log_frechet_from_gev
from .logistic import conditional_quantile, conditional_quantile_many, log_pair_density

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ModelSpec:
    trend: bool = False
    markov: bool = False
    negate_minima: bool = False

    @classmethod
    def from_name(cls, name: str, negate_minima: bool = False) -> "ModelSpec":
        try:
            trend, markov = MODELS[name.upper()]
        except KeyError:
            raise ValueError(f"unknown model {name!r}; expected one of {sorted(MODELS)}") from None
        return cls(trend=trend, markov=markov, negate_minima=negate_minima)

    @property
    def name(self) -> str:
        return {v: k for k, v in MODELS.items()}[(self.trend, self.markov)]

    @property
    def param_names(self) -> tuple[str, ...]:
        names = ["mu0"]
        if self.trend:
            names.append("mu1")
        names += ["log_sigma", "xi"]
        if self.markov:
            names.append("alpha")
        return tuple(names)

    @property
    def dim(self) -> int:
        return 3 + int(self.trend) + int(self.markov)

    def index(self, name: str) -> int:
        return self.param_names.index(name)


MODELS = {
    "M1": (False, False),
    "M2": (True, False),
    "M3": (False, True),
    "M4": (True, True),
}


@dataclass(frozen=True)
class ParamVector:
    mu0: float
    log_sigma: float
    xi: float
    mu1: float = 0.0
    alpha: float = 1.0

    @property
    def sigma(self) -> float:
        return math.exp(self.log_sigma)

    def to_array(self, spec: ModelSpec) -> np.ndarray:
        return np.array([getattr(self, n) for n in spec.param_names], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float], spec: ModelSpec) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (spec.dim,):
            raise ValueError(f"{spec.name} expects {spec.dim} parameters, got shape {values.shape}")
        return cls(**{n: float(v) for n, v in zip(spec.param_names, values)})

    def gev_at(self, t: int, spec: ModelSpec) -> GevParams:
        return GevParams(location_at(t, self, spec), self.sigma, self.xi)


@dataclass(frozen=True)
class MaximaSeries:
    """Block maxima on the maxima scale (already negated when built from minima)."""

    values: np.ndarray
    times: np.ndarray = None
    negated: bool = False
    labels: np.ndarray = None  # e.g. calendar years, kept for reporting only

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise ValueError("a series needs at least two observations")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite")
        times = np.arange(1, values.size + 1) if self.times is None else np.asarray(self.times)
        if times.shape != values.shape or times[0] < 1 or np.any(np.diff(times) != 1):
            raise ValueError("times must be consecutive integers starting at 1 or later")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "times", times.astype(int))

    @property
    def n(self) -> int:
        return self.values.size

    @classmethod
    def from_minima(cls, minima, labels=None) -> "MaximaSeries":
        return cls(-np.asarray(minima, dtype=float), negated=True, labels=labels)


@dataclass(frozen=True)
class Priors:
    """Prior hyperparameters; defaults are the weakly informative set used for M1-M4."""

    mu_sd: float = 100.0
    trend_sd: float = 15.0
    log_sigma_sd: float = 15.0
    xi_sd: float = 0.15
    xi_bounds: tuple[float, float] = (-0.5, 0.5)
    alpha_a: float = 1.5
    alpha_b: float = 1.0
    _xi_log_mass: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lo, hi = self.xi_bounds
        mass = ndtr(hi / self.xi_sd) - ndtr(lo / self.xi_sd)
        object.__setattr__(self, "_xi_log_mass", math.log(mass))

    def to_dict(self) -> dict:
        return {
            "mu_sd": self.mu_sd,
            "trend_sd": self.trend_sd,
            "log_sigma_sd": self.log_sigma_sd,
            "xi_sd": self.xi_sd,
            "xi_bounds": list(self.xi_bounds),
            "alpha_a": self.alpha_a,
            "alpha_b": self.alpha_b,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Priors":
        d = dict(d)
        d["xi_bounds"] = tuple(d.get("xi_bounds", (-0.5, 0.5)))
        return cls(**d)


DEFAULT_PRIORS = Priors()


def _normal_logpdf(x: float, sd: float) -> float:
    return -0.5 * (x / sd) ** 2 - math.log(sd) - _LOG_SQRT_2PI


def location_at(t, theta: ParamVector, spec: ModelSpec):
    return theta.mu0 + theta.mu1 * t if spec.trend else theta.mu0


# Array-level kernels shared by the public functions and the samplers.

def loglik_array(values: np.ndarray, times: np.ndarray, vec: np.ndarray, spec: ModelSpec) -> float:
    """Log-likelihood for a packed parameter vector (see :class:`ModelSpec`)."""
    i = 0
    mu0 = vec[0]
    if spec.trend:
        mu = mu0 + vec[1] * times
        i = 2
    else:
        mu = mu0
        i = 1
    log_sigma, xi = vec[i], vec[i + 1]
    sigma = math.exp(log_sigma)
    s = (values - mu) / sigma
    if abs(xi) < XI_TOL:
        lz = s
    else:
        w = xi * s
        if w.min() <= -1.0:
            return -math.inf
        lz = np.log1p(w) / xi
    # log Jacobian of the margin map summed over all observations
    log_jac = (1.0 - (xi if abs(xi) >= XI_TOL else 0.0)) * lz.sum() - lz.size * log_sigma
    if not spec.markov:
        # Frechet log-density + Jacobian = GEV log-density
        return float(-2.0 * lz.sum() - np.exp(-lz).sum() + log_jac)
    alpha = vec[-1]
    if not (0.0 < alpha <= 1.0):
        return -math.inf
    if alpha == 1.0:
        return float(-2.0 * lz.sum() - np.exp(-lz).sum() + log_jac)
    with np.errstate(over="ignore", invalid="ignore"):
        pairs = log_pair_density(lz[:-1], lz[1:], alpha).sum()
    inner = lz[1:-1]
    singles = (-2.0 * inner - np.exp(-inner)).sum()
    out = float(pairs - singles + log_jac)
    return out if math.isfinite(out) else -math.inf


def logprior_array(vec: np.ndarray, spec: ModelSpec, priors: Priors = DEFAULT_PRIORS) -> float:
    out = _normal_logpdf(vec[0], priors.mu_sd)
    i = 1
    if spec.trend:
        out += _normal_logpdf(vec[1], priors.trend_sd)
        i = 2
    out += _normal_logpdf(vec[i], priors.log_sigma_sd)
    xi = vec[i + 1]
    lo, hi = priors.xi_bounds
    if not (lo < xi < hi):
        return -math.inf
    out += _normal_logpdf(xi, priors.xi_sd) - priors._xi_log_mass
    if spec.markov:
        a = vec[-1]
        if not (0.0 < a <= 1.0):
            return -math.inf
        out += (priors.alpha_a - 1.0) * math.log(a) - betaln(priors.alpha_a, priors.alpha_b)
        if priors.alpha_b != 1.0:
            out += (priors.alpha_b - 1.0) * math.log1p(-a) if a < 1.0 else -math.inf
    return out


def _vec(theta, spec: ModelSpec) -> np.ndarray:
    if isinstance(theta, ParamVector):
        return theta.to_array(spec)
    vec = np.asarray(theta, dtype=float)
    if vec.shape != (spec.dim,):
        raise ValueError(f"{spec.name} expects {spec.dim} parameters, got shape {vec.shape}")
    return vec


def log_likelihood(series: MaximaSeries, theta, spec: ModelSpec) -> float:
    """First-order Markov GEV log-likelihood on the data scale.

    Independent specs sum GEV log-densities. Markov specs transform each
    observation to unit-Frechet with its own location, then add the
    consecutive-pair logistic densities, subtract the Frechet densities of
    the interior points ``t = 2..n-1`` and add the margin Jacobians.
    Returns ``-inf`` when any observation is outside the GEV support.
    """
    return loglik_array(series.values, series.times, _vec(theta, spec), spec)


def log_prior(theta, spec: ModelSpec, priors: Priors = DEFAULT_PRIORS) -> float:
    return logprior_array(_vec(theta, spec), spec, priors)


def log_posterior(series: MaximaSeries, theta, spec: ModelSpec, priors: Priors = DEFAULT_PRIORS) -> float:
    vec = _vec(theta, spec)
    lp = logprior_array(vec, spec, priors)
    if lp == -math.inf:
        return lp
    return lp + loglik_array(series.values, series.times, vec, spec)


def conditional_quantile_next(series: MaximaSeries, draws, spec: ModelSpec, prob: float = 0.95) -> np.ndarray:
    """Next-block quantile for every row of a packed draw matrix (data units).

    Under Markov specs the last observation is mapped to the Frechet scale
    with its own location, the conditional quantile is taken there and
    mapped back with the location of block ``n + 1``. Result is negated
    back to minima units when ``spec.negate_minima``.
    """
    draws = np.atleast_2d(np.asarray(draws, dtype=float))
    names = spec.param_names
    col = {n: draws[:, k] for k, n in enumerate(names)}
    t_last = series.times[-1]
    mu1 = col["mu1"] if spec.trend else 0.0
    mu_last = col["mu0"] + mu1 * t_last
    mu_next = col["mu0"] + mu1 * (t_last + 1)
    sigma = np.exp(col["log_sigma"])
    xi = col["xi"]
    y_last = series.values[-1]
    if spec.markov:
        s = (y_last - mu_last) / sigma
        gumbel = np.abs(xi) < XI_TOL
        safe_xi = np.where(gumbel, 1.0, xi)
        w = safe_xi * s
        if np.any((w <= -1.0) & ~gumbel):
            raise ValueError("final observation lies outside the support of a draw")
        with np.errstate(invalid="ignore"):
            lz = np.where(gumbel, s, np.log1p(np.where(gumbel, 0.0, w)) / safe_xi)
        lq = np.log(conditional_quantile_many(prob, np.exp(lz), col["alpha"]))
    else:
        lq = np.full(draws.shape[0], math.log(-1.0 / math.log(prob)))
    gumbel = np.abs(xi) < XI_TOL
    safe_xi = np.where(gumbel, 1.0, xi)
    y = np.where(gumbel, mu_next + sigma * lq, mu_next + sigma * np.expm1(safe_xi * lq) / safe_xi)
    return -y if spec.negate_minima else y


def next_quantile_given(y_last: float, t_last: int, theta: ParamVector, spec: ModelSpec,
                        prob: float = 0.95) -> float:
    """Quantile of block ``t_last + 1`` given value ``y_last`` (maxima scale) at ``t_last``.

    The result is in reporting units, i.e. negated when ``spec.negate_minima``.
    """
    nxt = theta.gev_at(t_last + 1, spec)
    if spec.markov and theta.alpha < 1.0:
        last = theta.gev_at(t_last, spec)
        lz = log_frechet_from_gev(y_last, last.mu, last.sigma, last.xi)
        if np.isnan(lz):
            raise ValueError("final observation lies outside the support of theta")
        zq = conditional_quantile(prob, math.exp(float(lz)), theta.alpha)
        y = float(frechet_to_gev(zq, nxt))
    else:
        y = float(gev_quantile(prob, nxt))
    return -y if spec.negate_minima else y


def conditional_q95_next(series: MaximaSeries, theta, spec: ModelSpec, prob: float = 0.95) -> float:
    """Quantile of the next block maximum given the last observation (data units)."""
    theta = theta if isinstance(theta, ParamVector) else ParamVector.from_array(theta, spec)
    return next_quantile_given(float(series.values[-1]), int(series.times[-1]), theta, spec, prob)


def with_negation(spec: ModelSpec, negate: bool) -> ModelSpec:
    return replace(spec, negate_minima=negate)
