"""Station CSV ingestion, analysis reports and small exporters."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import dic_components, ess, posterior_summary, rhat
from .inference import McmcConfig, PosteriorDraws, mcmc_sample
from .model import DEFAULT_PRIORS, MaximaSeries, ModelSpec, Priors
from .tail import DEFAULT_THRESHOLDS, chi_profile


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class StationRecord:
    year: int
    value: float


def read_station_csv(path, year_col: str = "year", value_col: str = "value") -> list[StationRecord]:
    """Read a ``year,value`` CSV; rows are sorted by year and must have no gaps or duplicates."""
    path = Path(path)
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip() for h in reader.fieldnames]
        reader.fieldnames = header
        missing = {year_col, value_col} - set(header)
        if missing:
            raise DataError(f"{path}: header lacks column(s) {sorted(missing)}; found {header}")
        seen: dict[int, int] = {}
        records = []
        for row in reader:
            line = reader.line_num
            try:
                year_s, value_s = row[year_col], row[value_col]
                year = int(str(year_s).strip())
                value = float(str(value_s).strip())
            except (TypeError, ValueError):
                raise DataError(f"{path}:{line}: malformed row {row}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{line}: non-finite value")
            if year in seen:
                raise DataError(f"{path}:{line}: duplicate year {year} (first seen on line {seen[year]})")
            seen[year] = line
            records.append(StationRecord(year, value))
    records.sort(key=lambda r: r.year)
    for a, b in zip(records, records[1:]):
        if b.year != a.year + 1:
            raise DataError(
                f"{path}:{seen[b.year]}: gap between years {a.year} and {b.year} "
                f"(lines {seen[a.year]} and {seen[b.year]})"
            )
    if len(records) < 2:
        raise DataError(f"{path}: need at least two rows")
    return records


def write_station_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["year", "value"])
        for r in records:
            w.writerow([r.year, repr(float(r.value))])


def series_from_records(records, negate: bool = False) -> MaximaSeries:
    values = np.array([r.value for r in records], dtype=float)
    years = np.array([r.year for r in records])
    return MaximaSeries(-values if negate else values, negated=negate, labels=years)


def ingest_csv(path, negate: bool = False, year_col: str = "year", value_col: str = "value") -> MaximaSeries:
    """Load a station file as a maxima series with ``t = 1..n``; ``negate`` turns minima into maxima."""
    return series_from_records(read_station_csv(path, year_col, value_col), negate)


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def series_sha256(series: MaximaSeries) -> str:
    return hashlib.sha256(np.ascontiguousarray(series.values).tobytes()).hexdigest()


def write_draws_csv(draws: PosteriorDraws, path, extra: dict | None = None) -> None:
    cols = ["chain", *draws.names, *(extra or {})]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for k in range(len(draws.draws)):
            row = [int(draws.chain[k]), *(repr(float(v)) for v in draws.draws[k])]
            row += [repr(float(v[k])) for v in (extra or {}).values()]
            w.writerow(row)


@dataclass
class AnalysisReport:
    model: str
    negate_minima: bool
    priors: dict
    mcmc: dict
    summary: dict
    dic: dict
    diagnostics: dict
    chi_profile: dict
    provenance: dict = field(default_factory=dict)

    @property
    def q95(self) -> dict:
        return self.summary["q95"]

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "AnalysisReport":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def read(cls, path) -> "AnalysisReport":
        return cls.from_json(Path(path).read_text())

    def max_rhat(self) -> float:
        vals = [v["rhat"] for v in self.diagnostics.values() if v.get("rhat") is not None]
        return max(vals) if vals else math.nan


def run_fit(series: MaximaSeries, spec: ModelSpec, cfg: McmcConfig, priors: Priors = DEFAULT_PRIORS,
            first_chain_only: bool = False, thresholds=DEFAULT_THRESHOLDS, max_lag: int = 5,
            provenance: dict | None = None) -> tuple[AnalysisReport, PosteriorDraws]:
    """Sample, diagnose, score and summarise one model on one series.

    Summaries pool all chains unless ``first_chain_only``; R-hat and ESS
    always use every chain.
    """
    draws = mcmc_sample(series, spec, priors, cfg)
    diag = {}
    for name in spec.param_names:
        col = "sigma" if name == "log_sigma" else name
        diag[col] = {
            "rhat": rhat(draws, col) if draws.n_chains > 1 else None,
            "ess": ess(draws, col),
        }
    used = draws.first_chain() if first_chain_only else draws
    summary = posterior_summary(used, series)
    dres = dic_components(series, spec, used)
    prof = chi_profile(series, min(max_lag, series.n - 1), thresholds)
    prov = {
        "seed": cfg.seed,
        "n": series.n,
        "data_sha256": series_sha256(series),
        "first_chain_only": first_chain_only,
        "accept_rate": draws.accept_rate,
        **({"labels": [int(v) for v in series.labels]} if series.labels is not None else {}),
        **(provenance or {}),
    }
    report = AnalysisReport(
        model=spec.name,
        negate_minima=spec.negate_minima,
        priors=priors.to_dict(),
        mcmc=cfg.to_dict(),
        summary=summary,
        dic=asdict(dres),
        diagnostics=diag,
        chi_profile=prof.to_dict(),
        provenance=prov,
    )
    return report, draws


def profile_svg(profile, path, width: int = 420, height: int = 260) -> None:
    """Minimal SVG line chart of chi-hat against lag, one line per threshold."""
    pad = 36
    lags = profile.lags
    xs = {lag: pad + (width - 2 * pad) * (i / max(1, len(lags) - 1)) for i, lag in enumerate(lags)}

    def ypix(v):
        return height - pad - (height - 2 * pad) * v

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<line x1="{pad}" y1="{ypix(0)}" x2="{width - pad}" y2="{ypix(0)}" stroke="black"/>',
             f'<line x1="{pad}" y1="{ypix(0)}" x2="{pad}" y2="{ypix(1)}" stroke="black"/>']
    for lag in lags:
        parts.append(f'<text x="{xs[lag]:.1f}" y="{height - pad + 14}" font-size="10" text-anchor="middle">{lag}</text>')
    for j, u in enumerate(profile.thresholds):
        c = colors[j % len(colors)]
        pts = [(xs[lag], ypix(profile.estimates[i][j])) for i, lag in enumerate(lags)
               if profile.estimates[i][j] is not None]
        if pts:
            parts.append('<polyline fill="none" stroke="{}" points="{}"/>'.format(
                c, " ".join(f"{x:.1f},{y:.1f}" for x, y in pts)))
            parts += [f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.5" fill="{c}"/>' for x, y in pts]
        parts.append(f'<text x="{width - pad}" y="{pad + 12 * j}" font-size="10" fill="{c}" text-anchor="end">u={u:g}</text>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts))
