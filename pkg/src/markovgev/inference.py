"""Maximum likelihood and adaptive random-walk Metropolis for M1-M4.

Both work in unconstrained coordinates: ``log_sigma`` as is, ``xi`` raw and
``logit(alpha)``. The sampler adapts a Gaussian proposal (empirical
covariance times a Robbins-Monro tuned scale) during burn-in only, then
freezes it so the retained draws come from a fixed Metropolis kernel.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, logit
from scipy.stats import truncnorm

from .model import DEFAULT_PRIORS, MaximaSeries, ModelSpec, ParamVector, Priors, loglik_array, logprior_array

log = logging.getLogger(__name__)

EULER_GAMMA = 0.5772156649015329
TARGET_ACCEPT = 0.3
MAX_INIT_TRIES = 200


class SamplerError(RuntimeError):
    pass


def moment_start(series: MaximaSeries, spec: ModelSpec) -> np.ndarray:
    """Gumbel method-of-moments starting point in natural packing."""
    sd = float(np.std(series.values, ddof=1)) or 1.0
    sigma = sd * math.sqrt(6.0) / math.pi
    mu = float(np.mean(series.values)) - EULER_GAMMA * sigma
    vals = {"mu0": mu, "mu1": 0.0, "log_sigma": math.log(sigma), "xi": 0.0, "alpha": 0.8}
    if spec.trend:
        slope = float(np.polyfit(series.times, series.values, 1)[0])
        vals["mu1"] = slope
        vals["mu0"] = mu - slope * float(np.mean(series.times))
    return np.array([vals[n] for n in spec.param_names])


def to_unconstrained(vec: np.ndarray, spec: ModelSpec) -> np.ndarray:
    eta = np.array(vec, dtype=float)
    if spec.markov:
        eta[-1] = logit(min(eta[-1], 1.0 - 1e-12))
    return eta


def to_natural(eta: np.ndarray, spec: ModelSpec) -> np.ndarray:
    vec = np.array(eta, dtype=float)
    if spec.markov:
        vec[..., -1] = expit(vec[..., -1])
    return vec


# --------------------------------------------------------------------------- MLE


@dataclass
class MleResult:
    theta: ParamVector
    loglik: float
    converged: bool
    n_starts: int
    n_failed: int
    message: str = ""


def mle_fit(series: MaximaSeries, spec: ModelSpec, starts: int | list = 8, seed: int = 0) -> MleResult:
    """Multi-start Nelder-Mead maximisation of the log-likelihood.

    ``starts`` is either a count (random perturbations of the moment
    start, the first being the moment start itself) or an explicit list of
    natural-scale parameter vectors.
    """
    base = moment_start(series, spec)
    if isinstance(starts, int):
        rng = np.random.default_rng(seed)
        scale = np.array([{"mu0": 0.3 * math.exp(base[spec.index("log_sigma")]),
                           "mu1": 0.01 * math.exp(base[spec.index("log_sigma")]),
                           "log_sigma": 0.3, "xi": 0.15, "alpha": 0.0}[n] for n in spec.param_names])
        points = [base]
        for _ in range(starts - 1):
            p = base + scale * rng.standard_normal(spec.dim)
            if spec.markov:
                p[-1] = rng.uniform(0.3, 0.95)
            points.append(p)
    else:
        points = [np.asarray(s, dtype=float) for s in starts]

    def nll(eta):
        v = loglik_array(series.values, series.times, to_natural(eta, spec), spec)
        return -v if math.isfinite(v) else 1e300

    best = None
    failed = 0
    for p in points:
        eta0 = to_unconstrained(p, spec)
        if nll(eta0) >= 1e300:
            failed += 1
            continue
        res = minimize(nll, eta0, method="Nelder-Mead",
                       options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 20000, "maxfev": 40000, "adaptive": True})
        # one restart from the optimum guards against simplex collapse
        res = minimize(nll, res.x, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 20000, "maxfev": 40000, "adaptive": True})
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise SamplerError("every starting point has zero likelihood")
    theta = ParamVector.from_array(to_natural(best.x, spec), spec)
    if not best.success:
        log.warning("MLE did not report convergence: %s", best.message)
    return MleResult(theta, -float(best.fun), bool(best.success), len(points), failed, str(best.message))


# -------------------------------------------------------------------------- MCMC


@dataclass
class McmcConfig:
    n_chains: int = 2
    n_iter: int = 110_000
    n_burnin: int = 10_000
    thin: int = 20
    seed: int = 0
    target_accept: float = TARGET_ACCEPT
    adapt_start: int = 200
    workers: int = 1

    def __post_init__(self):
        if self.n_chains < 1 or self.thin < 1 or self.n_iter <= self.n_burnin or self.n_burnin < 0:
            raise ValueError("need n_chains >= 1, thin >= 1 and n_iter > n_burnin >= 0")

    @property
    def retained_per_chain(self) -> int:
        return (self.n_iter - self.n_burnin) // self.thin

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "McmcConfig":
        return cls(**d)


@dataclass
class PosteriorDraws:
    """Retained draws in natural packing, stacked chain after chain."""

    draws: np.ndarray
    chain: np.ndarray
    spec: ModelSpec
    accept_rate: list = field(default_factory=list)
    proposal_scale: list = field(default_factory=list)

    @property
    def names(self) -> tuple[str, ...]:
        return self.spec.param_names

    @property
    def n_chains(self) -> int:
        return int(self.chain.max()) + 1

    def column(self, name: str) -> np.ndarray:
        if name == "sigma":
            return np.exp(self.draws[:, self.spec.index("log_sigma")])
        return self.draws[:, self.spec.index(name)]

    def by_chain(self, values: np.ndarray | None = None) -> np.ndarray:
        """Reshape a per-draw vector (or the draw matrix) to ``(chains, draws, ...)``."""
        values = self.draws if values is None else values
        return np.stack([values[self.chain == c] for c in range(self.n_chains)])

    def first_chain(self) -> "PosteriorDraws":
        m = self.chain == 0
        return PosteriorDraws(self.draws[m], self.chain[m], self.spec, self.accept_rate[:1], self.proposal_scale[:1])


def _initial_point(series, spec, priors, rng, target):
    base = moment_start(series, spec)
    sigma0 = math.exp(base[spec.index("log_sigma")])
    lo, hi = priors.xi_bounds
    for _ in range(MAX_INIT_TRIES):
        p = base.copy()
        p[0] += 0.25 * sigma0 * rng.standard_normal()
        p[spec.index("log_sigma")] += 0.1 * rng.standard_normal()
        if spec.trend:
            p[1] += 0.5 * sigma0 / series.n * rng.standard_normal()
        p[spec.index("xi")] = truncnorm.rvs(lo / priors.xi_sd, hi / priors.xi_sd, scale=priors.xi_sd, random_state=rng)
        if spec.markov:
            p[-1] = min(rng.beta(priors.alpha_a, priors.alpha_b), 1.0 - 1e-6)
        eta = to_unconstrained(p, spec)
        if math.isfinite(target(eta)):
            return eta
    raise SamplerError(f"no finite-posterior starting value after {MAX_INIT_TRIES} draws")


def _initial_steps(series, spec) -> np.ndarray:
    base = moment_start(series, spec)
    sigma0 = math.exp(base[spec.index("log_sigma")])
    table = {"mu0": 0.2 * sigma0, "mu1": 0.2 * sigma0 * math.sqrt(12.0) / series.n,
             "log_sigma": 0.1, "xi": 0.05, "alpha": 0.3}
    return np.array([table[n] for n in spec.param_names])


def make_target(series: MaximaSeries, spec: ModelSpec, priors: Priors = DEFAULT_PRIORS,
                likelihood: bool = True, fixed: dict | None = None):
    """Log posterior density in unconstrained coordinates (logit Jacobian included)."""
    fixed_idx = {spec.index(k): v for k, v in (fixed or {}).items()}
    values, times = series.values, series.times

    def target(eta):
        vec = to_natural(eta, spec)
        for k, v in fixed_idx.items():
            vec[k] = v
        lp = logprior_array(vec, spec, priors)
        if lp == -math.inf:
            return lp
        if spec.markov:
            a = vec[-1]
            if not 0.0 < a < 1.0:
                return -math.inf
            lp += math.log(a) + math.log1p(-a)
        if likelihood:
            lp += loglik_array(values, times, vec, spec)
        return lp

    return target


def run_chain(target, eta0, steps, cfg: McmcConfig, rng: np.random.Generator, free: np.ndarray | None = None):
    """One adaptive Metropolis chain. Returns (retained unconstrained draws, accept rate, final scale)."""
    d = eta0.size
    free = np.ones(d, bool) if free is None else free
    k = int(free.sum())
    noise = rng.standard_normal((cfg.n_iter, k))
    log_u = np.log(rng.uniform(size=cfg.n_iter))

    cov = np.diag(steps[free] ** 2)
    chol = np.linalg.cholesky(cov)
    log_scale = 0.0
    # running mean / covariance of the burn-in trajectory (Welford)
    mean = np.zeros(k)
    m2 = np.zeros((k, k))

    x = eta0.copy()
    fx = target(x)
    out = np.empty((cfg.retained_per_chain, d))
    j = 0
    accepted = 0
    for i in range(cfg.n_iter):
        prop = x.copy()
        prop[free] += math.exp(log_scale) * (chol @ noise[i])
        fp = target(prop)
        delta = fp - fx
        acc = math.exp(min(0.0, delta)) if math.isfinite(fp) else 0.0
        if log_u[i] < delta:
            x, fx = prop, fp
            if i >= cfg.n_burnin:
                accepted += 1
        if i < cfg.n_burnin:
            log_scale += (acc - cfg.target_accept) / (i + 1) ** 0.6
            n = i + 1
            dx = x[free] - mean
            mean += dx / n
            m2 += np.outer(dx, x[free] - mean)
            if n >= cfg.adapt_start and n % 50 == 0:
                emp = m2 / (n - 1)
                emp = (2.38**2 / k) * emp + 1e-10 * np.eye(k)
                try:
                    chol = np.linalg.cholesky(emp)
                except np.linalg.LinAlgError:
                    pass
        elif (i - cfg.n_burnin) % cfg.thin == cfg.thin - 1:
            out[j] = x
            j += 1
    rate = accepted / max(1, cfg.n_iter - cfg.n_burnin)
    return out[:j], rate, math.exp(log_scale)


def _sample_chain(args):
    series, spec, priors, cfg, seed_seq, likelihood, fixed = args
    rng = np.random.default_rng(seed_seq)
    target = make_target(series, spec, priors, likelihood, fixed)
    eta0 = _initial_point(series, spec, priors, rng, target)
    free = np.ones(spec.dim, bool)
    if fixed:
        p = to_natural(eta0, spec)
        for name, v in fixed.items():
            free[spec.index(name)] = False
            p[spec.index(name)] = v
        eta0 = to_unconstrained(p, spec)
    draws, rate, scale = run_chain(target, eta0, _initial_steps(series, spec), cfg, rng, free)
    return to_natural(draws, spec), rate, scale


def mcmc_sample(series: MaximaSeries, spec: ModelSpec, priors: Priors = DEFAULT_PRIORS,
                cfg: McmcConfig | None = None, likelihood: bool = True,
                fixed: dict | None = None) -> PosteriorDraws:
    """Draw from the posterior of ``spec`` given ``series``.

    Chain ``c`` uses the ``c``-th child of ``SeedSequence(cfg.seed)``, so
    output depends only on the seed, never on ``cfg.workers``. ``fixed``
    pins named parameters (natural scale) and ``likelihood=False`` samples
    the prior, both used for sampler checks.
    """
    cfg = cfg or McmcConfig()
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.n_chains)
    jobs = [(series, spec, priors, cfg, s, likelihood, fixed) for s in seeds]
    if cfg.workers > 1 and cfg.n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.n_chains)) as ex:
            results = list(ex.map(_sample_chain, jobs))
    else:
        results = [_sample_chain(j) for j in jobs]
    draws = np.concatenate([r[0] for r in results])
    chain = np.concatenate([np.full(len(r[0]), c) for c, r in enumerate(results)])
    return PosteriorDraws(draws, chain, spec, [r[1] for r in results], [r[2] for r in results])
