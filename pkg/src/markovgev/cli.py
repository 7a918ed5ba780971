"""Command line entry point: ``markovgev {fit,chi,simulate,study,quantile}``.

Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure. The default
output directory is ``$MARKOVGEV_OUTPUT_DIR`` or the working directory.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .gev import GevParams, gev_quantile
from .inference import McmcConfig, SamplerError
from .io import DataError, StationRecord, file_sha256, ingest_csv, profile_svg, run_fit, write_draws_csv, write_station_csv
from .logistic import RootFindingError
from .model import ModelSpec, ParamVector, conditional_quantile_next, next_quantile_given
from .simulate import KINDS, MARKOV, ProcessSpec
from .study import StudyConfig, centered_interval_export, run_chi_table, run_coverage_study, write_chi_table
from .tail import DEFAULT_THRESHOLDS, chi_profile

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
OUTPUT_ENV = "MARKOVGEV_OUTPUT_DIR"
RHAT_WARN = 1.05

log = logging.getLogger("markovgev")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUTPUT_ENV, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _columns(spec: str | None) -> dict:
    cols = {"year_col": "year", "value_col": "value"}
    if spec:
        for part in spec.split(","):
            key, _, name = part.partition("=")
            if key not in ("year", "value") or not name:
                raise UsageError(f"bad --columns entry {part!r}; use year=NAME,value=NAME")
            cols[f"{key}_col"] = name
    return cols


def _log_run(out: Path, command: str, payload: dict) -> None:
    log.info("%s run: %s", command, json.dumps(payload, sort_keys=True))
    (out / f"{command}_run.json").write_text(json.dumps(payload, indent=2, sort_keys=True))


def cmd_fit(args) -> int:
    spec = ModelSpec.from_name(args.model, negate_minima=args.minima)
    series = ingest_csv(args.data, negate=args.minima, **_columns(args.columns))
    cfg = McmcConfig(n_chains=args.chains, n_iter=args.iters, n_burnin=args.burnin, thin=args.thin,
                     seed=args.seed, workers=args.workers)
    out = _out_dir(args)
    _log_run(out, "fit", {"data": str(args.data), "model": spec.name, "minima": args.minima, "mcmc": cfg.to_dict()})
    report, draws = run_fit(series, spec, cfg, first_chain_only=args.first_chain,
                            thresholds=tuple(args.threshold or DEFAULT_THRESHOLDS),
                            provenance={"file_sha256": file_sha256(args.data), "data": str(args.data)})
    stem = args.name or f"{Path(args.data).stem}_{spec.name}"
    report.write(out / f"{stem}_report.json")
    q = conditional_quantile_next(series, draws.draws, spec)
    write_draws_csv(draws, out / f"{stem}_draws.csv", extra={"q95": q})
    worst = report.max_rhat()
    if worst > RHAT_WARN:
        print(f"WARNING: max R-hat {worst:.3f} exceeds {RHAT_WARN}; chains may not have converged",
              file=sys.stderr)
    s = report.summary
    print(f"{spec.name}: DIC={report.dic['dic']:.3f} pD={report.dic['p_d']:.3f}")
    for name, row in s.items():
        print(f"  {name:>6}: mean {row['mean']:.4f}  [{row['2.5%']:.4f}, {row['97.5%']:.4f}]")
    return EXIT_OK


def cmd_chi(args) -> int:
    series = ingest_csv(args.data, negate=args.minima, **_columns(args.columns))
    thresholds = tuple(args.threshold or DEFAULT_THRESHOLDS)
    prof = chi_profile(series, args.lags, thresholds)
    out = _out_dir(args)
    stem = args.name or f"{Path(args.data).stem}_chi"
    _log_run(out, "chi", {"data": str(args.data), "lags": args.lags, "thresholds": list(thresholds),
                          "minima": args.minima})
    prof.write_csv(out / f"{stem}.csv")
    (out / f"{stem}.json").write_text(json.dumps(prof.to_dict(), indent=2))
    if args.svg:
        profile_svg(prof, out / f"{stem}.svg")
    for row in prof.rows():
        v = "NA" if row["chi_hat"] is None else f"{row['chi_hat']:.4f}"
        print(f"lag {row['lag']} u={row['threshold']:g}: {v}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    marginal = GevParams(args.mu, args.sigma, args.xi)
    alpha = args.alpha if args.process == MARKOV else None
    if args.process == MARKOV and alpha is None:
        raise UsageError("--alpha is required for the markov process")
    process = ProcessSpec(args.process, marginal, alpha)
    series, state = process.simulate(args.n, args.seed)
    out = _out_dir(args)
    stem = args.name or f"sim_{args.process}_seed{args.seed}"
    values = np.atleast_1d(getattr(series, "values", series))
    write_station_csv([StationRecord(i + 1, v) for i, v in enumerate(values)], out / f"{stem}.csv")
    meta = {"process": process.to_dict(), "n": args.n, "seed": args.seed,
            "state": None if state is None else (list(state) if isinstance(state, tuple) else state)}
    _log_run(out, "simulate", meta)
    (out / f"{stem}.json").write_text(json.dumps(meta, indent=2))
    print(out / f"{stem}.csv")
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = StudyConfig.from_dict(json.loads(Path(args.config).read_text())) if args.config else StudyConfig()
    overrides = {}
    if args.replicates:
        overrides["n_replicates"] = args.replicates
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers:
        overrides["workers"] = args.workers
    if overrides:
        cfg = StudyConfig.from_dict({**cfg.to_dict(), **overrides})
    out = _out_dir(args)
    _log_run(out, "study", cfg.to_dict())
    chi = run_chi_table(cfg)
    write_chi_table(chi, cfg, out / "chi_table.csv")
    if not args.chi_only:
        res = run_coverage_study(cfg)
        res.write(out / "coverage.json", out / "coverage_records.csv")
        centered_interval_export(res, out / "centered_intervals.csv")
        for (p, m), v in res.cells().items():
            print(f"{p:>12} x {m:<11} coverage {v['coverage']:.4f} (n={v['n_ok']}, failed={v['n_failed']})")
    return EXIT_OK


def cmd_quantile(args) -> int:
    spec = ModelSpec(trend=args.mu1 is not None, markov=args.alpha is not None, negate_minima=args.minima)
    theta = ParamVector(mu0=args.mu, log_sigma=float(np.log(args.sigma)), xi=args.xi,
                        mu1=args.mu1 or 0.0, alpha=args.alpha if args.alpha is not None else 1.0)
    if args.last is None and spec.markov:
        raise UsageError("--last is required with --alpha")
    if args.last is None:
        q = float(gev_quantile(args.prob, theta.gev_at(args.t + 1, spec)))
        q = -q if args.minima else q
    else:
        last = -args.last if args.minima else args.last
        q = next_quantile_given(last, args.t, theta, spec, args.prob)
    print(json.dumps({"quantile": q, "prob": args.prob}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="markovgev", description="First-order Markov GEV analysis of block maxima/minima.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(sp):
        sp.add_argument("data", help="CSV file with year,value columns")
        sp.add_argument("--minima", action="store_true", help="values are block minima; model their negation")
        sp.add_argument("--columns", help="header mapping, e.g. year=Year,value=Tmin")
        sp.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV} or .)")
        sp.add_argument("--name", help="output file stem")

    f = sub.add_parser("fit", help="Bayesian fit of M1-M4")
    data_args(f)
    f.add_argument("--model", choices=["M1", "M2", "M3", "M4"], default="M4")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--chains", type=int, default=2)
    f.add_argument("--iters", type=int, default=110_000)
    f.add_argument("--burnin", type=int, default=10_000)
    f.add_argument("--thin", type=int, default=20)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--threshold", type=float, action="append")
    f.add_argument("--first-chain", action="store_true", help="summaries from chain 1 only")
    f.set_defaults(func=cmd_fit)

    c = sub.add_parser("chi", help="empirical chi-hat profile")
    data_args(c)
    c.add_argument("--lags", type=int, default=5)
    c.add_argument("--threshold", type=float, action="append")
    c.add_argument("--svg", action="store_true")
    c.set_defaults(func=cmd_chi)

    s = sub.add_parser("simulate", help="simulate a study process")
    s.add_argument("process", choices=KINDS)
    s.add_argument("--n", type=int, default=100)
    s.add_argument("--alpha", type=float)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--xi", type=float, default=-0.1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.add_argument("--name")
    s.set_defaults(func=cmd_simulate)

    st = sub.add_parser("study", help="coverage study and chi-hat tables")
    st.add_argument("--config", help="JSON study config")
    st.add_argument("--replicates", type=int)
    st.add_argument("--seed", type=int)
    st.add_argument("--workers", type=int)
    st.add_argument("--chi-only", action="store_true")
    st.add_argument("--out")
    st.set_defaults(func=cmd_study)

    q = sub.add_parser("quantile", help="(conditional) quantile of the next block")
    q.add_argument("--mu", type=float, required=True, help="location (intercept under a trend)")
    q.add_argument("--mu1", type=float, help="location slope per block")
    q.add_argument("--sigma", type=float, required=True)
    q.add_argument("--xi", type=float, required=True)
    q.add_argument("--alpha", type=float)
    q.add_argument("--last", type=float, help="current block value (data units)")
    q.add_argument("--t", type=int, default=1, help="block index of --last")
    q.add_argument("--prob", type=float, default=0.95)
    q.add_argument("--minima", action="store_true")
    q.set_defaults(func=cmd_quantile)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"markovgev: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"markovgev: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SamplerError, RootFindingError, FloatingPointError) as exc:
        print(f"markovgev: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"markovgev: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
