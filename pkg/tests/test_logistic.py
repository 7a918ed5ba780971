import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import dblquad, quad
from scipy.stats import kstest

from markovgev.gev import frechet_cdf, frechet_logpdf
from markovgev.logistic import (
    RootFindingError,
    biv_logistic_cdf,
    biv_logistic_logpdf,
    biv_logistic_pdf,
    chi_from_alpha,
    conditional_cdf,
    conditional_quantile,
    conditional_quantile_many,
    conditional_sample,
)

GRID_X = [0.2, 0.5, 1.0, 3.0, 20.0]
GRID_Y = [0.3, 0.8, 1.5, 5.0, 40.0]
GRID_A = [0.3, 0.6, 0.9]


def quadrature_conditional_cdf(y, x, alpha):
    """Integrate the joint density over (0, y] in log-space and divide by the margin density."""
    fx = math.exp(frechet_logpdf(x))
    val, _ = quad(lambda s: biv_logistic_pdf(x, math.exp(s), alpha) * math.exp(s), -60.0, math.log(y),
                  epsabs=1e-13, epsrel=1e-12, limit=400)
    return val / fx


def test_cdf_examples():
    assert biv_logistic_cdf(1, 1, 1.0) == pytest.approx(math.exp(-2), abs=1e-12)
    assert biv_logistic_cdf(1, 1, 0.5) == pytest.approx(math.exp(-math.sqrt(2)), abs=1e-12)
    assert biv_logistic_cdf(1, 1, 0.5) == pytest.approx(0.243117, abs=1e-6)
    for x in (0.3, 1.0, 7.0):
        assert biv_logistic_cdf(x, 1e12, 0.4) == pytest.approx(frechet_cdf(x), rel=1e-9)


def test_alpha_validation():
    for bad in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            biv_logistic_cdf(1, 1, bad)


def test_independence_reduction(rng):
    x, y = rng.uniform(0.1, 20, 20), rng.uniform(0.1, 20, 20)
    np.testing.assert_allclose(biv_logistic_cdf(x, y, 1.0), frechet_cdf(x) * frechet_cdf(y), atol=1e-10)
    np.testing.assert_allclose(biv_logistic_logpdf(x, y, 1.0), frechet_logpdf(x) + frechet_logpdf(y), atol=1e-10)
    np.testing.assert_allclose(conditional_cdf(y, x, 1.0), np.exp(-1 / y), atol=1e-10)


def test_symmetry(rng):
    x, y = rng.uniform(0.1, 20, 50), rng.uniform(0.1, 20, 50)
    for a in GRID_A:
        np.testing.assert_allclose(biv_logistic_cdf(x, y, a), biv_logistic_cdf(y, x, a), rtol=1e-13)
        np.testing.assert_allclose(biv_logistic_logpdf(x, y, a), biv_logistic_logpdf(y, x, a), rtol=1e-13)


def test_logpdf_nonpositive_arguments():
    assert biv_logistic_logpdf(0.0, 1.0, 0.5) == -np.inf
    assert biv_logistic_logpdf(1.0, -2.0, 0.5) == -np.inf


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.7, 0.95])
def test_density_integrates_to_one(alpha):
    # integrate over log-coordinates: x = e^s, y = e^t
    val, _ = dblquad(lambda t, s: biv_logistic_pdf(math.exp(s), math.exp(t), alpha) * math.exp(s + t),
                     -5.0, 25.0, -5.0, 25.0, epsabs=1e-10, epsrel=1e-10)
    assert val == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("alpha", GRID_A + [0.5])
def test_density_matches_mixed_differences_of_cdf(alpha):
    for x in (0.5, 1.0, 2.0, 5.0):
        for y in (0.7, 1.3, 4.0):
            hx, hy = 1e-4 * x, 1e-4 * y
            g = lambda a, b: biv_logistic_cdf(a, b, alpha)
            fd = (g(x + hx, y + hy) - g(x + hx, y - hy) - g(x - hx, y + hy) + g(x - hx, y - hy)) / (4 * hx * hy)
            assert biv_logistic_pdf(x, y, alpha) == pytest.approx(fd, abs=1e-5)


def test_cdf_is_two_increasing():
    pts = np.geomspace(0.1, 50, 12)
    for a in GRID_A:
        for i in range(len(pts) - 1):
            for j in range(len(pts) - 1):
                x1, x2, y1, y2 = pts[i], pts[i + 1], pts[j], pts[j + 1]
                rect = (biv_logistic_cdf(x2, y2, a) - biv_logistic_cdf(x1, y2, a)
                        - biv_logistic_cdf(x2, y1, a) + biv_logistic_cdf(x1, y1, a))
                assert rect >= -1e-15


def test_conditional_cdf_examples():
    expected = math.exp(1 - math.sqrt(2)) * 2 ** -0.5
    assert conditional_cdf(1, 1, 0.5) == pytest.approx(expected, abs=1e-12)
    assert conditional_cdf(1, 1, 0.5) == pytest.approx(0.4673, abs=1e-4)
    # the quadrature oracle gives the same value
    assert quadrature_conditional_cdf(1, 1, 0.5) == pytest.approx(expected, abs=1e-9)
    for x in (0.2, 1.0, 30.0):
        assert conditional_cdf(1e15, x, 0.35) == pytest.approx(1.0, abs=1e-6)


def test_conditional_cdf_matches_quadrature_on_grid():
    worst = 0.0
    for x in GRID_X:
        for y in GRID_Y:
            for a in GRID_A:
                worst = max(worst, abs(conditional_cdf(y, x, a) - quadrature_conditional_cdf(y, x, a)))
    assert worst < 1e-6


def test_conditional_cdf_monotone_with_limits():
    ys = np.geomspace(1e-4, 1e8, 300)
    for x in GRID_X:
        for a in GRID_A:
            c = conditional_cdf(ys, x, a)
            assert np.all(np.diff(c) >= -1e-15)
            assert c[0] < 1e-6 and c[-1] > 1 - 1e-6


def test_conditional_quantile_independence():
    for x in (0.1, 1.0, 50.0):
        assert conditional_quantile(0.95, x, 1.0) == pytest.approx(-1 / math.log(0.95), rel=1e-14)
    assert conditional_quantile(0.95, 2.0, 1.0) == pytest.approx(19.4957, abs=1e-4)


@pytest.mark.parametrize("p", [0.05, 0.5, 0.95])
@pytest.mark.parametrize("x", [0.5, 1.0, 20.0])
@pytest.mark.parametrize("a", [0.3, 0.7, 0.99])
def test_conditional_quantile_roundtrip(p, x, a):
    q = conditional_quantile(p, x, a)
    assert conditional_cdf(q, x, a) == pytest.approx(p, abs=1e-8)
    qv = conditional_quantile(np.array([p]), np.array([x]), a)[0]
    assert conditional_cdf(qv, x, a) == pytest.approx(p, abs=1e-8)
    assert qv == pytest.approx(q, rel=1e-9)


@settings(max_examples=150, deadline=None)
@given(p=st.floats(1e-4, 1 - 1e-4), lx=st.floats(-3, 8), a=st.floats(0.05, 1.0))
def test_conditional_quantile_roundtrip_property(p, lx, a):
    x = math.exp(lx)
    q = conditional_quantile(p, x, a)
    assert conditional_cdf(q, x, a) == pytest.approx(p, abs=1e-9)


def test_conditional_quantile_increasing_in_condition():
    xs = np.geomspace(0.05, 200, 40)
    for a in (0.3, 0.7, 0.95):
        for p in (0.1, 0.5, 0.95):
            q = np.array([conditional_quantile(p, x, a) for x in xs])
            assert np.all(np.diff(q) > 0)


def test_conditional_quantile_many_mixed_alpha():
    x = np.array([0.5, 1.0, 20.0, 3.0])
    a = np.array([0.3, 0.7, 1.0, 0.999])
    q = conditional_quantile_many(0.95, x, a)
    for qi, xi, ai in zip(q, x, a):
        assert conditional_cdf(qi, xi, ai) == pytest.approx(0.95, abs=1e-9)


def test_conditional_quantile_rejects_bad_input():
    with pytest.raises(ValueError):
        conditional_quantile(1.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        conditional_quantile(0.5, -1.0, 0.5)
    assert issubclass(RootFindingError, ArithmeticError)


def test_conditional_sample():
    assert conditional_sample(3.0, 1.0, 0.5) == pytest.approx(-1 / math.log(0.5), rel=1e-14)
    assert conditional_sample(3.0, 1.0, 0.5) == pytest.approx(1.4427, abs=1e-4)
    assert conditional_sample(2.0, 0.6, 0.37) == conditional_sample(2.0, 0.6, 0.37)


def test_conditional_sample_distribution():
    rng = np.random.default_rng(7)
    x, a = 2.5, 0.6
    draws = conditional_sample(np.full(10_000, x), a, rng.uniform(size=10_000))
    stat = kstest(draws, lambda y: conditional_cdf(y, x, a)).statistic
    assert stat < 0.02


def test_chi_from_alpha():
    assert chi_from_alpha(1.0) == 0.0
    assert chi_from_alpha(0.657) == pytest.approx(0.423, abs=1e-3)
    assert chi_from_alpha(0.813) == pytest.approx(0.243, abs=1e-3)
    a = np.linspace(0.01, 1.0, 100)
    assert np.all(np.diff(chi_from_alpha(a)) < 0)
    with pytest.raises(ValueError):
        chi_from_alpha(0.0)
