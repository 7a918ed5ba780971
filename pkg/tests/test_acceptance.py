"""Acceptance criteria. Each test records one PASS/FAIL/SKIP line in the terminal summary."""

import math
import os
from pathlib import Path

import numpy as np
import pytest
from scipy.integrate import dblquad, quad

from markovgev.diagnostics import mcse
from markovgev.gev import (
    GevParams,
    frechet_cdf,
    frechet_logpdf,
    frechet_to_gev,
    gev_cdf,
    gev_quantile,
    gev_to_frechet,
)
from markovgev.inference import McmcConfig, mcmc_sample
from markovgev.io import ingest_csv, run_fit
from markovgev.logistic import (
    biv_logistic_cdf,
    biv_logistic_logpdf,
    biv_logistic_pdf,
    chi_from_alpha,
    conditional_cdf,
)
from markovgev.model import MaximaSeries, ModelSpec, ParamVector, log_likelihood
from markovgev.simulate import (
    INDEPENDENT,
    MA2,
    MARKOV,
    ProcessSpec,
    ma2_latent,
    replicate_seed,
    simulate_next,
    true_conditional_q95,
)
from markovgev.study import StudyConfig, run_chi_table, run_coverage_study
from markovgev.tail import chi_hat

# Target average chi-hat, rows = lag 1..5; columns = u in (0.90, 0.925, 0.95)
TABLE_CHI = {
    INDEPENDENT: [(0.09, 0.07, 0.05), (0.09, 0.07, 0.04), (0.09, 0.07, 0.03), (0.09, 0.08, 0.04), (0.10, 0.08, 0.04)],
    MARKOV: [(0.38, 0.36, 0.30), (0.22, 0.19, 0.15), (0.15, 0.12, 0.08), (0.12, 0.10, 0.05), (0.11, 0.08, 0.04)],
    MA2: [(0.39, 0.37, 0.15), (0.16, 0.14, 0.05), (0.10, 0.08, 0.05), (0.10, 0.07, 0.04), (0.09, 0.07, 0.04)],
}
# Target coverage of the 90% interval, keyed by (process, model)
TABLE_COVERAGE = {
    (INDEPENDENT, "independent"): 0.908, (INDEPENDENT, "markov"): 0.865,
    (MARKOV, "independent"): 0.314, (MARKOV, "markov"): 0.838,
    (MA2, "independent"): 0.421, (MA2, "markov"): 0.834,
}


def fmt(pairs):
    return "; ".join(pairs)


# ----------------------------------------------------------------- criterion 1

def test_c1_analytic_exactness(criterion):
    errs = {}
    errs["chi(0.657)"] = abs(chi_from_alpha(0.657) - 0.423)
    errs["chi(0.813)"] = abs(chi_from_alpha(0.813) - 0.243)
    chi_ok = max(errs.values()) <= 1e-3

    rng = np.random.default_rng(0)
    rt = 0.0
    for _ in range(500):
        p = GevParams(rng.uniform(-20, 20), rng.uniform(0.1, 10), rng.uniform(-0.5, 0.5))
        u = rng.uniform(1e-6, 1 - 1e-6)
        rt = max(rt, abs(float(gev_cdf(gev_quantile(u, p), p)) - u))
        z = math.exp(rng.uniform(-4, 6))
        rt = max(rt, abs(float(gev_to_frechet(frechet_to_gev(z, p), p)) - z) / max(1.0, z))
    roundtrip_ok = rt <= 1e-10

    x, y = rng.uniform(0.05, 30, 200), rng.uniform(0.05, 30, 200)
    red = max(
        np.max(np.abs(biv_logistic_cdf(x, y, 1.0) - frechet_cdf(x) * frechet_cdf(y))),
        np.max(np.abs(biv_logistic_logpdf(x, y, 1.0) - frechet_logpdf(x) - frechet_logpdf(y))),
        np.max(np.abs(conditional_cdf(y, x, 1.0) - frechet_cdf(y))),
    )
    s = MaximaSeries(rng.gumbel(size=60))
    theta = ParamVector(0.1, 0.05, 0.1, alpha=1.0)
    red = max(red, abs(log_likelihood(s, theta, ModelSpec(markov=True)) - log_likelihood(s, theta, ModelSpec())))
    reduction_ok = red <= 1e-8

    ok = chi_ok and roundtrip_ok and reduction_ok
    criterion("C1 analytic exactness", ok,
              f"chi err {max(errs.values()):.1e} (tol 1e-3); roundtrip err {rt:.1e} (tol 1e-10); "
              f"alpha=1 reductions {red:.1e} (tol 1e-8)")
    assert ok


# ----------------------------------------------------------------- criterion 2

def _quad_conditional(y, x, a):
    val, _ = quad(lambda s: biv_logistic_pdf(x, math.exp(s), a) * math.exp(s), -60.0, math.log(y),
                  epsabs=1e-13, epsrel=1e-12, limit=400)
    return val / math.exp(frechet_logpdf(x))


def test_c2_oracle_equivalence(criterion):
    grid = [(x, y, a) for x in (0.2, 0.5, 1.0, 3.0, 20.0) for y in (0.3, 0.8, 1.5, 5.0, 40.0) for a in (0.3, 0.6, 0.9)]
    assert len(grid) == 75
    cond = max(abs(float(conditional_cdf(y, x, a)) - _quad_conditional(y, x, a)) for x, y, a in grid)

    fd = 0.0
    for a in (0.3, 0.5, 0.7, 0.9):
        for x in (0.5, 1.0, 2.0, 5.0):
            for y in (0.7, 1.3, 4.0):
                hx, hy = 1e-4 * x, 1e-4 * y
                g = lambda u, v: biv_logistic_cdf(u, v, a)
                mixed = (g(x + hx, y + hy) - g(x + hx, y - hy) - g(x - hx, y + hy) + g(x - hx, y - hy)) / (4 * hx * hy)
                fd = max(fd, abs(float(biv_logistic_pdf(x, y, a)) - mixed))

    mass = 0.0
    for a in (0.3, 0.7):
        val, _ = dblquad(lambda t, s: biv_logistic_pdf(math.exp(s), math.exp(t), a) * math.exp(s + t),
                         -5.0, 25.0, -5.0, 25.0, epsabs=1e-10, epsrel=1e-10)
        mass = max(mass, abs(val - 1.0))

    ok = cond <= 1e-6 and fd <= 1e-5 and mass <= 1e-4
    criterion("C2 oracle equivalence", ok,
              f"conditional cdf vs quadrature {cond:.1e} (tol 1e-6, 75 points); density vs mixed "
              f"differences {fd:.1e} (tol 1e-5); |mass-1| {mass:.1e} (tol 1e-4)")
    assert ok


# ----------------------------------------------------------------- criterion 3

def test_c3_chi_tables(criterion):
    cfg = StudyConfig(n_replicates=400, series_length=100)
    table = run_chi_table(cfg)
    misses = []
    worst95 = worst_other = 0.0
    for kind, rows in TABLE_CHI.items():
        got = table[kind]
        for i, row in enumerate(rows):
            for j, target in enumerate(row):
                d = abs(got[i, j] - target)
                tol = 0.03 if j == 2 else 0.04
                if j == 2:
                    worst95 = max(worst95, d)
                else:
                    worst_other = max(worst_other, d)
                if d > tol:
                    misses.append(f"{kind} lag{i + 1} u={cfg.thresholds[j]} got {got[i, j]:.3f} vs {target}")
    ok = not misses
    criterion("C3 chi-hat tables", ok,
              f"max dev u=0.95 {worst95:.3f} (tol 0.03); u=0.90/0.925 {worst_other:.3f} (tol 0.04)"
              + (f"; misses: {fmt(misses)}" if misses else ""))
    assert ok, misses


# ----------------------------------------------------------------- criterion 4

def test_c4_coverage_table(criterion):
    cfg = StudyConfig()  # 100 replicates, 2,000 retained draws per fit
    assert cfg.n_replicates == 100 and cfg.mcmc.n_chains * cfg.mcmc.retained_per_chain == 2000
    res = run_coverage_study(cfg)
    cells = res.cells()
    misses, parts = [], []
    for key, target in TABLE_COVERAGE.items():
        c = cells[key]["coverage"]
        parts.append(f"{key[0]}/{key[1]} {c:.2f}")
        if not abs(c - target) <= 0.07:
            misses.append(f"{key[0]}/{key[1]} {c:.3f} vs {target}")
    ordering = all(cells[(p, "markov")]["coverage"] > cells[(p, "independent")]["coverage"] for p in (MARKOV, MA2))
    failed = sum(v["n_failed"] for v in cells.values())
    ok = not misses and ordering
    criterion("C4 coverage table", ok,
              f"{', '.join(parts)} (tol 0.07); ordering {'holds' if ordering else 'violated'}; "
              f"failed fits {failed}" + (f"; misses: {fmt(misses)}" if misses else ""))
    assert ok, misses


# ----------------------------------------------------------------- criterion 5

def _data_dir():
    env = os.environ.get("MARKOVGEV_DATA_DIR")
    return Path(env) if env else Path(__file__).resolve().parents[1] / "data"


def test_c5_data_application(criterion):
    d = _data_dir()
    faraday, soviet = d / "Faraday.csv", d / "Soviet.csv"
    if not (faraday.exists() and soviet.exists()):
        criterion("C5 data application", None,
                  f"station files not found in {d} (set MARKOVGEV_DATA_DIR to a directory with "
                  "Faraday.csv and Soviet.csv, columns year,value)")
        pytest.skip("station data not available")
    cfg = McmcConfig(n_chains=2, n_iter=110_000, n_burnin=10_000, thin=20, seed=2021)
    notes, ok = [], True
    rmax = 1.0
    for path, checks in ((faraday, {"alpha": (0.657, 0.06), "xi": (-0.035, 0.05), "q95": (-18.884, 0.8)}),
                         (soviet, {"alpha": (0.813, 0.06)})):
        series = ingest_csv(path, negate=True)
        dics = {}
        for name in ("M1", "M2", "M3", "M4"):
            spec = ModelSpec.from_name(name, negate_minima=True)
            report, draws = run_fit(series, spec, cfg)
            dics[name] = report.dic["dic"]
            rmax = max(rmax, report.max_rhat())
            if name == "M4":
                for key, (target, tol) in checks.items():
                    v = report.summary[key]["mean"]
                    good = abs(v - target) <= tol
                    ok &= good
                    notes.append(f"{path.stem} {key} {v:.3f} vs {target}")
        best = min(dics, key=dics.get)
        ok &= best == "M4"
        notes.append(f"{path.stem} DIC best {best}")
    ok &= rmax <= 1.02
    notes.append(f"max R-hat {rmax:.3f}")
    criterion("C5 data application", ok, fmt(notes))
    assert ok


# ----------------------------------------------------------------- criterion 6

def test_c6_property_suite(criterion):
    notes, ok = [], True

    # simulator determinism by seed and independence from worker count
    cfg = StudyConfig(n_replicates=6, series_length=60,
                      mcmc=McmcConfig(n_chains=1, n_iter=600, n_burnin=200, thin=2), seed=7)
    t1 = run_chi_table(cfg)
    t2 = run_chi_table(StudyConfig.from_dict({**cfg.to_dict(), "workers": 2}))
    same_seed = all(np.array_equal(
        p.simulate(100, replicate_seed(3, 0, 1, 0))[0].values,
        p.simulate(100, replicate_seed(3, 0, 1, 0))[0].values) for p in cfg.processes)
    det = same_seed and all(np.array_equal(t1[k], t2[k], equal_nan=True) for k in t1)
    ok &= det
    notes.append(f"determinism {'ok' if det else 'broken'}")

    # rank invariance
    rng = np.random.default_rng(1)
    x = rng.normal(size=500)
    rank = all(chi_hat(x, k, u) == chi_hat(np.exp(x), k, u) for k in range(1, 6) for u in (0.9, 0.925, 0.95))
    ok &= rank
    notes.append(f"rank invariance {'ok' if rank else 'broken'}")

    # MA(2) latent autocorrelations
    lat, _ = ma2_latent(100_000, seed=2)
    lat = lat - lat.mean()
    r1 = float(np.dot(lat[1:], lat[:-1]) / np.dot(lat, lat))
    r2 = float(np.dot(lat[2:], lat[:-2]) / np.dot(lat, lat))
    ac = abs(r1 - 0.4004) <= 0.01 and abs(r2 - 0.0621) <= 0.01
    ok &= ac
    notes.append(f"MA(2) acf {r1:.4f}/{r2:.4f} (0.4004/0.0621 tol 0.01)")

    # exceedance calibration from fixed states
    fracs = []
    for proc, state in ((ProcessSpec(INDEPENDENT), None), (ProcessSpec(MARKOV, alpha=0.7), 2.5),
                        (ProcessSpec(MA2), (0.8, -0.2))):
        q = true_conditional_q95(proc, state)
        fracs.append(float(np.mean(simulate_next(proc, state, 10_000, seed=3) > q)))
    cal = all(abs(f - 0.05) <= 0.007 for f in fracs)
    ok &= cal
    notes.append("exceedance " + "/".join(f"{f:.4f}" for f in fracs) + " (0.05 tol 0.007)")

    # prior recovery with a flat likelihood
    s = MaximaSeries(rng.gumbel(size=20))
    d = mcmc_sample(s, ModelSpec(), cfg=McmcConfig(n_chains=1, n_iter=60_000, n_burnin=5_000, thin=1, seed=4),
                    likelihood=False, fixed={"log_sigma": 0.0, "xi": 0.0})
    mu = d.column("mu0")
    se = mcse(mu)
    pr = abs(mu.mean()) <= 3 * se
    ok &= pr
    notes.append(f"prior recovery mean {mu.mean():.2f} (3*MCSE {3 * se:.2f})")

    criterion("C6 property suite", ok, fmt(notes))
    assert ok
