"""Bivariate logistic extreme-value model on unit-Frechet margins.

With ``S = x^(-1/alpha) + y^(-1/alpha)`` the joint cdf is ``exp(-S^alpha)``.
Everything is evaluated through ``log S`` (a log-sum-exp) so that small
``alpha`` or tiny Frechet values do not overflow.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .gev import frechet_logpdf

BRACKET_LOW = 1e-8
BRACKET_GROWTH = 4.0
MAX_EXPANSIONS = 60


class RootFindingError(ArithmeticError):
    """Conditional quantile bracket could not be established."""


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"logistic dependence alpha must lie in (0, 1], got {alpha}")
    return alpha


def _log_s(lx, ly, alpha):
    return np.logaddexp(-lx / alpha, -ly / alpha)


def _log_positive(v):
    v = np.asarray(v, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(v > 0.0, np.log(np.where(v > 0.0, v, 1.0)), np.nan)


def biv_logistic_cdf(x, y, alpha):
    alpha = check_alpha(alpha)
    lx, ly = _log_positive(x), _log_positive(y)
    with np.errstate(over="ignore"):
        out = np.exp(-np.exp(alpha * _log_s(lx, ly, alpha)))
    return np.where(np.isnan(lx) | np.isnan(ly), 0.0, out)[()]


def log_pair_density(lx, ly, alpha):
    """Joint log density in terms of ``log x`` and ``log y`` (no validity checks)."""
    ls = _log_s(lx, ly, alpha)
    s_a = np.exp(alpha * ls)
    return (
        -s_a
        - (1.0 / alpha + 1.0) * (lx + ly)
        + (alpha - 2.0) * ls
        + np.log(1.0 / alpha - 1.0 + s_a)
    )


def biv_logistic_logpdf(x, y, alpha):
    """Joint log density ``log d^2 G / dx dy``.

    The power on ``x y`` is ``-1/alpha - 1``; with that exponent the density
    factorises into two Frechet densities at ``alpha = 1``.
    """
    alpha = check_alpha(alpha)
    lx, ly = _log_positive(x), _log_positive(y)
    bad = np.isnan(lx) | np.isnan(ly)
    with np.errstate(over="ignore", invalid="ignore"):
        out = log_pair_density(np.where(bad, 0.0, lx), np.where(bad, 0.0, ly), alpha)
    return np.where(bad, -np.inf, out)[()]


def biv_logistic_pdf(x, y, alpha):
    return np.exp(biv_logistic_logpdf(x, y, alpha))


def _log_conditional_cdf(ly, lx, alpha):
    ls = _log_s(lx, ly, alpha)
    with np.errstate(over="ignore"):
        return -np.exp(alpha * ls) + np.exp(-lx) + (1.0 - 1.0 / alpha) * lx + (alpha - 1.0) * ls


def conditional_cdf(y, given_x, alpha):
    """``P(Y <= y | X = x)``, equal to ``dG/dx`` divided by the Frechet density of ``x``."""
    alpha = check_alpha(alpha)
    lx = _log_positive(given_x)
    if np.any(np.isnan(lx)):
        raise ValueError("conditioning value must be positive")
    ly = _log_positive(y)
    with np.errstate(invalid="ignore"):
        out = np.exp(_log_conditional_cdf(np.where(np.isnan(ly), 0.0, ly), lx, alpha))
    out = np.where(np.isnan(ly), 0.0, out)
    return np.minimum(out, 1.0)[()]


def conditional_logpdf(y, given_x, alpha):
    return (biv_logistic_logpdf(given_x, y, alpha) - frechet_logpdf(given_x))


def _scalar_ccdf(y: float, x: float, alpha: float) -> float:
    lx, ly = math.log(x), math.log(y)
    a, b = -lx / alpha, -ly / alpha
    m = max(a, b)
    ls = m + math.log(math.exp(a - m) + math.exp(b - m))
    arg = alpha * ls
    if arg > 700.0:
        return 0.0
    return math.exp(-math.exp(arg) + 1.0 / x + (1.0 - 1.0 / alpha) * lx + (alpha - 1.0) * ls)


def _bracket(prob: float, x: float, alpha: float):
    lo = BRACKET_LOW
    hi = -1.0 / math.log(prob) * max(1.0, x)
    k = 0
    while _scalar_ccdf(hi, x, alpha) < prob:
        lo = hi
        hi *= BRACKET_GROWTH
        k += 1
        if k > MAX_EXPANSIONS:
            raise RootFindingError(
                f"no upper bracket for conditional quantile (prob={prob}, x={x}, alpha={alpha})"
            )
    k = 0
    while _scalar_ccdf(lo, x, alpha) > prob:
        lo /= BRACKET_GROWTH
        k += 1
        if k > MAX_EXPANSIONS:
            raise RootFindingError(
                f"no lower bracket for conditional quantile (prob={prob}, x={x}, alpha={alpha})"
            )
    return lo, hi


def _scalar_conditional_quantile(prob: float, x: float, alpha: float) -> float:
    if alpha == 1.0:
        return -1.0 / math.log(prob)
    lo, hi = _bracket(prob, x, alpha)
    return brentq(
        lambda y: _scalar_ccdf(y, x, alpha) - prob, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
        maxiter=500,
    )


def _vector_conditional_quantile(prob, x, alpha, iters: int = 200):
    """Bisection on ``log y`` for many (prob, x) pairs at once."""
    lp = np.log(prob)
    lx = np.log(x)
    lo = np.full(prob.shape, math.log(BRACKET_LOW))
    hi = np.log(-1.0 / lp) + np.maximum(lx, 0.0)
    step = math.log(BRACKET_GROWTH)
    for _ in range(MAX_EXPANSIONS + 1):
        low_hi = _log_conditional_cdf(hi, lx, alpha) < lp
        if not low_hi.any():
            break
        lo = np.where(low_hi, hi, lo)
        hi = np.where(low_hi, hi + step, hi)
    else:
        raise RootFindingError("no upper bracket for conditional quantile")
    for _ in range(MAX_EXPANSIONS + 1):
        high_lo = _log_conditional_cdf(lo, lx, alpha) > lp
        if not high_lo.any():
            break
        lo = np.where(high_lo, lo - step, lo)
    else:
        raise RootFindingError("no lower bracket for conditional quantile")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = _log_conditional_cdf(mid, lx, alpha) < lp
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= 1e-15 * np.maximum(1.0, np.abs(hi))):
            break
    return np.exp(0.5 * (lo + hi))


def conditional_quantile(prob, given_x, alpha):
    """Smallest ``y`` with ``conditional_cdf(y | given_x) >= prob``.

    Scalars go through a bracketed Brent solve; arrays are solved together
    by bisection on ``log y``. Raises :class:`RootFindingError` if the
    bracket cannot be grown within ``MAX_EXPANSIONS`` steps.
    """
    alpha = check_alpha(alpha)
    prob = np.asarray(prob, dtype=float)
    x = np.asarray(given_x, dtype=float)
    if np.any((prob <= 0.0) | (prob >= 1.0)) or np.any(np.isnan(prob)):
        raise ValueError("probability must lie strictly inside (0, 1)")
    if np.any(~(x > 0.0)):
        raise ValueError("conditioning value must be positive")
    if prob.ndim == 0 and x.ndim == 0:
        return np.float64(_scalar_conditional_quantile(float(prob), float(x), alpha))
    prob, x = np.broadcast_arrays(prob, x)
    if alpha == 1.0:
        return -1.0 / np.log(prob)
    return _vector_conditional_quantile(prob.astype(float), x.astype(float), alpha)


def conditional_quantile_many(prob, given_x, alpha):
    """Vectorised conditional quantile where ``alpha`` may vary per element."""
    prob, x, alpha = (np.asarray(v, dtype=float) for v in np.broadcast_arrays(prob, given_x, alpha))
    if np.any((alpha <= 0.0) | (alpha > 1.0)):
        raise ValueError("alpha must lie in (0, 1]")
    if np.any((prob <= 0.0) | (prob >= 1.0)) or np.any(~(x > 0.0)):
        raise ValueError("need 0 < prob < 1 and positive conditioning values")
    return _vector_conditional_quantile(prob, x, alpha)


def conditional_sample(given_x, alpha, u):
    """Inverse-transform draw of the next Frechet value given the current one."""
    return conditional_quantile(u, given_x, alpha)


def chi_from_alpha(alpha):
    """Tail dependence coefficient of the logistic model, ``2 - 2^alpha``."""
    a = np.asarray(alpha, dtype=float)
    if np.any((a <= 0.0) | (a > 1.0)):
        raise ValueError("alpha must lie in (0, 1]")
    return (2.0 - 2.0**a)[()]
