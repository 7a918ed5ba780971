"""Simulation study: coverage of credible intervals and averaged chi-hat tables.

Every replicate draws from its own seed stream ``(master, process, replicate,
purpose)``; workers only change wall time, never the numbers.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .inference import McmcConfig, SamplerError, mcmc_sample
from .logistic import RootFindingError
from .model import DEFAULT_PRIORS, ModelSpec, conditional_quantile_next
from .simulate import INDEPENDENT, MA2, MARKOV, ProcessSpec, replicate_seed, true_conditional_q95
from .tail import DEFAULT_THRESHOLDS, chi_profile

log = logging.getLogger(__name__)

STUDY_MODELS = {"independent": ModelSpec.from_name("M1"), "markov": ModelSpec.from_name("M3")}

_SIM, _FIT = 0, 1


def default_processes() -> list[ProcessSpec]:
    return [ProcessSpec(INDEPENDENT), ProcessSpec(MARKOV, alpha=0.7), ProcessSpec(MA2)]


def desk_mcmc() -> McmcConfig:
    return McmcConfig(n_chains=1, n_iter=10_000, n_burnin=2_000, thin=4, seed=0)


@dataclass
class StudyConfig:
    processes: list = field(default_factory=default_processes)
    n_replicates: int = 100
    series_length: int = 100
    mcmc: McmcConfig = field(default_factory=desk_mcmc)
    ci_level: float = 0.90
    prob: float = 0.95
    seed: int = 20210401
    max_lag: int = 5
    thresholds: tuple = DEFAULT_THRESHOLDS
    workers: int = 1

    def __post_init__(self):
        if self.n_replicates < 1 or self.series_length < 2:
            raise ValueError("need at least one replicate and series of length >= 2")
        if not 0.0 < self.ci_level < 1.0:
            raise ValueError("ci_level must lie in (0, 1)")

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("processes", "mcmc")}
        d["processes"] = [p.to_dict() for p in self.processes]
        d["mcmc"] = self.mcmc.to_dict()
        d["thresholds"] = list(self.thresholds)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StudyConfig":
        d = dict(d)
        if "processes" in d:
            d["processes"] = [ProcessSpec.from_dict(p) for p in d["processes"]]
        if "mcmc" in d:
            d["mcmc"] = McmcConfig.from_dict(d["mcmc"])
        if "thresholds" in d:
            d["thresholds"] = tuple(d["thresholds"])
        return cls(**d)


@dataclass
class ReplicateRecord:
    process: str
    replicate: int
    model: str
    truth: float
    lower: float | None = None
    upper: float | None = None
    post_mean: float | None = None
    hit: bool | None = None
    failed: bool = False
    error: str = ""


@dataclass
class CoverageResult:
    config: dict
    records: list

    def cells(self) -> dict:
        """``{(process, model): {coverage, mean_width, n_ok, n_failed}}``."""
        out = {}
        for r in self.records:
            out.setdefault((r.process, r.model), []).append(r)
        table = {}
        for key, recs in out.items():
            ok = [r for r in recs if not r.failed]
            table[key] = {
                "coverage": float(np.mean([r.hit for r in ok])) if ok else math.nan,
                "mean_width": float(np.mean([r.upper - r.lower for r in ok])) if ok else math.nan,
                "n_ok": len(ok),
                "n_failed": len(recs) - len(ok),
            }
        return table

    def coverage(self, process: str, model: str) -> float:
        return self.cells()[(process, model)]["coverage"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "summary": [{"process": p, "model": m, **v} for (p, m), v in self.cells().items()],
            "records": [asdict(r) for r in self.records],
        }

    def write(self, json_path, csv_path=None) -> None:
        with open(json_path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
        if csv_path:
            with open(csv_path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(ReplicateRecord.__dataclass_fields__))
                w.writeheader()
                for r in self.records:
                    w.writerow(asdict(r))


def _fit_replicate(args):
    cfg, p_idx, rep = args
    process = cfg.processes[p_idx]
    series, state = process.simulate(cfg.series_length, replicate_seed(cfg.seed, p_idx, rep, _SIM))
    truth = true_conditional_q95(process, state, cfg.prob)
    tail = (1.0 - cfg.ci_level) / 2.0
    records = []
    for m_idx, (mname, spec) in enumerate(STUDY_MODELS.items()):
        rec = ReplicateRecord(process.kind, rep, mname, truth)
        mseed = int(replicate_seed(cfg.seed, p_idx, rep, _FIT + m_idx).generate_state(1)[0])
        mcfg = McmcConfig(**{**cfg.mcmc.to_dict(), "seed": mseed, "workers": 1})
        try:
            draws = mcmc_sample(series, spec, DEFAULT_PRIORS, mcfg)
            q = conditional_quantile_next(series, draws.draws, spec, cfg.prob)
            lo, hi = np.quantile(q, [tail, 1.0 - tail])
            rec.lower, rec.upper, rec.post_mean = float(lo), float(hi), float(q.mean())
            rec.hit = bool(lo <= truth <= hi)
        except (SamplerError, RootFindingError, ValueError, FloatingPointError) as exc:
            rec.failed, rec.error = True, f"{type(exc).__name__}: {exc}"
            log.warning("replicate %s/%d/%s failed: %s", process.kind, rep, mname, exc)
        records.append(rec)
    return records


def _map(fn, jobs, workers):
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(fn, jobs, chunksize=4))
    return [fn(j) for j in jobs]


def run_coverage_study(cfg: StudyConfig) -> CoverageResult:
    """Fit the independent (M1) and Markov (M3) models to every replicate.

    For each replicate the equal-tailed ``ci_level`` interval of the
    per-draw next-block quantile is compared with the true conditional
    quantile of the generating process.
    """
    jobs = [(cfg, p, r) for p in range(len(cfg.processes)) for r in range(cfg.n_replicates)]
    records = [rec for recs in _map(_fit_replicate, jobs, cfg.workers) for rec in recs]
    return CoverageResult(cfg.to_dict(), records)


def _chi_replicate(args):
    cfg, p_idx, rep = args
    series, _ = cfg.processes[p_idx].simulate(cfg.series_length, replicate_seed(cfg.seed, p_idx, rep, _SIM))
    return chi_profile(series, cfg.max_lag, cfg.thresholds).as_array()


def run_chi_table(cfg: StudyConfig) -> dict:
    """Average chi-hat over replicates: ``{kind: array (lag, threshold)}``.

    Uses the same simulated series as :func:`run_coverage_study`. Undefined
    cells are left out of the average.
    """
    out = {}
    for p_idx, process in enumerate(cfg.processes):
        jobs = [(cfg, p_idx, r) for r in range(cfg.n_replicates)]
        stack = np.stack(_map(_chi_replicate, jobs, cfg.workers))
        out[process.kind] = np.nanmean(stack, axis=0)
    return out


def write_chi_table(table: dict, cfg: StudyConfig, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["process", "lag", "threshold", "mean_chi_hat"])
        for kind, arr in table.items():
            for i in range(arr.shape[0]):
                for j, u in enumerate(cfg.thresholds):
                    w.writerow([kind, i + 1, u, repr(float(arr[i, j]))])


def centered_interval_export(result: CoverageResult, path=None, first_k: int = 20) -> list[dict]:
    """Intervals shifted by the true quantile (zero marks the truth) for the first replicates."""
    rows = []
    for r in result.records:
        if r.replicate >= first_k or r.failed:
            continue
        rows.append({
            "process": r.process, "replicate": r.replicate, "model": r.model,
            "lower": r.lower - r.truth, "upper": r.upper - r.truth,
            "estimate": r.post_mean - r.truth, "hit": r.hit,
        })
    if not rows:
        raise ValueError("no completed replicates to export")
    if path is not None:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return rows
