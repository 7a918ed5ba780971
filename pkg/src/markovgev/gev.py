"""Univariate GEV and unit-Frechet distribution functions.

All functions broadcast over numpy arrays. Scalar inputs give numpy scalars.
Values outside the support never raise: the cdf saturates at 0 or 1 and the
log-density is ``-inf``, which lets likelihood code reject a parameter
draw without exception handling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

XI_TOL = 1e-8
"""Shape magnitudes below this use the Gumbel (xi -> 0) formulas."""


@dataclass(frozen=True)
class GevParams:
    """Location, scale and shape of a GEV distribution."""

    mu: float
    sigma: float
    xi: float

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ValueError(f"GEV scale must be positive, got sigma={self.sigma}")
        if not (np.isfinite(self.mu) and np.isfinite(self.xi)):
            raise ValueError("GEV location and shape must be finite")

    def in_support(self, z) -> np.ndarray:
        return gev_in_support(z, self.mu, self.sigma, self.xi)


UNIT_FRECHET = GevParams(1.0, 1.0, 1.0)


def _unpack(p: GevParams):
    return float(p.mu), float(p.sigma), float(p.xi)


def gev_in_support(z, mu, sigma, xi) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if abs(xi) < XI_TOL:
        return np.isfinite(z)
    return 1.0 + xi * (z - mu) / sigma > 0.0


def _reduced(z, mu, sigma, xi):
    """Return ``-log G(z)`` (the 'exponent measure' t(z)) with inf/0 outside support."""
    s = (np.asarray(z, dtype=float) - mu) / sigma
    if abs(xi) < XI_TOL:
        return np.exp(-s)
    w = xi * s
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        t = np.exp(-np.log1p(w) / xi)
    # Below the lower endpoint (xi > 0) t -> inf; above the upper one (xi < 0) t -> 0.
    outside = 1.0 + w <= 0.0
    return np.where(outside, np.inf if xi > 0 else 0.0, t)


def gev_cdf(z, p: GevParams):
    """GEV distribution function ``exp(-(1 + xi (z - mu)/sigma)_+^(-1/xi))``."""
    mu, sigma, xi = _unpack(p)
    return np.exp(-_reduced(z, mu, sigma, xi))[()]


def gev_logpdf(z, p: GevParams):
    """Log density of the GEV; ``-inf`` outside the support."""
    mu, sigma, xi = _unpack(p)
    s = (np.asarray(z, dtype=float) - mu) / sigma
    if abs(xi) < XI_TOL:
        return (-np.log(sigma) - s - np.exp(-s))[()]
    w = 1.0 + xi * s
    inside = w > 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        lw = np.log(np.where(inside, w, 1.0))
        out = -np.log(sigma) - (1.0 / xi + 1.0) * lw - np.exp(-lw / xi)
    return np.where(inside, out, -np.inf)[()]


def gev_pdf(z, p: GevParams):
    return np.exp(gev_logpdf(z, p))


def gev_quantile(prob, p: GevParams):
    """Value with non-exceedance probability ``prob`` (return level at ``1 - prob``)."""
    prob = np.asarray(prob, dtype=float)
    if np.any((prob <= 0.0) | (prob >= 1.0)) or np.any(np.isnan(prob)):
        raise ValueError("quantile probability must lie strictly inside (0, 1)")
    mu, sigma, xi = _unpack(p)
    y = -np.log(-np.log(prob))  # Gumbel reduced variate
    if abs(xi) < XI_TOL:
        return (mu + sigma * y)[()]
    return (mu + sigma * np.expm1(xi * y) / xi)[()]


def frechet_cdf(z):
    z = np.asarray(z, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(z > 0.0, np.exp(-1.0 / np.where(z > 0.0, z, 1.0)), 0.0)[()]


def frechet_logpdf(z):
    z = np.asarray(z, dtype=float)
    pos = z > 0.0
    zz = np.where(pos, z, 1.0)
    return np.where(pos, -2.0 * np.log(zz) - 1.0 / zz, -np.inf)[()]


def frechet_to_gev(z, p: GevParams):
    """Map unit-Frechet values onto GEV(mu, sigma, xi): ``mu + sigma (z^xi - 1)/xi``."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0.0):
        raise ValueError("unit-Frechet values must be positive")
    mu, sigma, xi = _unpack(p)
    lz = np.log(z)
    if abs(xi) < XI_TOL:
        return (mu + sigma * lz)[()]
    return (mu + sigma * np.expm1(xi * lz) / xi)[()]


def log_frechet_from_gev(y, mu, sigma, xi) -> np.ndarray:
    """``log z`` for the inverse margin map; ``nan`` where ``y`` is out of support.

    ``mu`` may be an array (one location per observation).
    """
    s = (np.asarray(y, dtype=float) - mu) / sigma
    if abs(xi) < XI_TOL:
        return s
    w = xi * s
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(w > -1.0, np.log1p(w) / xi, np.nan)


def gev_to_frechet(y, p: GevParams):
    """Inverse of :func:`frechet_to_gev`. Raises for out-of-support ``y``."""
    mu, sigma, xi = _unpack(p)
    lz = log_frechet_from_gev(y, mu, sigma, xi)
    if np.any(np.isnan(lz)):
        raise ValueError("value outside the support of the GEV margin")
    return np.exp(lz)[()]


def log_jacobian_gev_to_frechet(y, p: GevParams):
    """``log |dz/dy|`` for ``z = gev_to_frechet(y)``; ``-inf`` out of support."""
    mu, sigma, xi = _unpack(p)
    lz = log_frechet_from_gev(y, mu, sigma, xi)
    # log dz/dy = (1 - xi) log z - log sigma, valid for every xi (Gumbel: log z - log sigma).
    out = (1.0 - xi) * lz - np.log(sigma) if abs(xi) >= XI_TOL else lz - np.log(sigma)
    return np.where(np.isnan(lz), -np.inf, out)[()]


def gev_quantile_from_logprob(log_prob, p: GevParams):
    """Quantile from ``log(prob)``; stays finite when ``prob`` rounds to 1."""
    lp = np.asarray(log_prob, dtype=float)
    if np.any(lp >= 0.0):
        raise ValueError("log probability must be negative")
    mu, sigma, xi = _unpack(p)
    y = -np.log(-lp)
    if abs(xi) < XI_TOL:
        return (mu + sigma * y)[()]
    return (mu + sigma * np.expm1(xi * y) / xi)[()]
