import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from deplens.tail_fit import (
    _lognormal_logpmf,
    _weibull_logpmf,
    approx_mle,
    compare_alternatives,
    fit_powerlaw,
    ks_distance,
    powerlaw_logpmf,
    sample_discrete_powerlaw,
    truncated_powerlaw_lognorm,
    vuong,
    zeta_mle,
)


def explicit_cdf(v, alpha, xmin):
    z = mpmath.zeta(alpha, xmin)
    return float(mpmath.fsum(mpmath.power(k, -alpha) for k in range(xmin, v + 1)) / z)


def test_ks_against_explicit_sums():
    tail = np.array([3, 3, 4, 5, 5, 5, 7, 9, 12, 30])
    alpha = 2.2
    values = np.unique(tail)
    emp = [np.mean(tail <= v) for v in values]
    expect = max(abs(e - explicit_cdf(int(v), alpha, 3)) for e, v in zip(emp, values))
    assert ks_distance(tail, alpha, 3) == pytest.approx(expect, abs=1e-12)


def test_zeta_mle_matches_grid_search():
    rng = np.random.default_rng(0)
    tail = sample_discrete_powerlaw(2.3, 2, 500, rng)
    s = float(np.log(tail).sum())
    grid = np.linspace(1.5, 3.5, 2001)
    ll = [-a * s - len(tail) * float(mpmath.log(mpmath.zeta(a, 2))) for a in grid]
    assert zeta_mle(tail, 2) == pytest.approx(grid[int(np.argmax(ll))], abs=1e-3)


def test_approx_mle_formula():
    tail = np.array([6, 7, 9, 12])
    assert approx_mle(tail, 6) == pytest.approx(1 + 4 / sum(math.log(x / 5.5) for x in tail))


def test_sampler_matches_pmf():
    rng = np.random.default_rng(1)
    x = sample_discrete_powerlaw(2.5, 3, 50_000, rng)
    assert x.min() == 3
    for k in (3, 4, 5, 8):
        p = k ** -2.5 / float(mpmath.zeta(2.5, 3))
        assert abs(np.mean(x == k) - p) < 4 * math.sqrt(p * (1 - p) / len(x))


def test_fit_recovers_parameters_and_sigma():
    rng = np.random.default_rng(2)
    x = np.concatenate([rng.integers(1, 10, 3000), sample_discrete_powerlaw(2.2, 10, 3000, rng)])
    fit = fit_powerlaw(x)
    assert 8 <= fit.xmin <= 13 and abs(fit.alpha - 2.2) < 0.15
    assert fit.sigma == pytest.approx((fit.alpha - 1) / math.sqrt(fit.n_tail))
    assert fit.method == "approx" and fit.n == 6000
    assert fit.tail_fraction == fit.n_tail / 6000
    fixed = fit_powerlaw(x, xmin=3)
    assert fixed.xmin == 3 and fixed.method == "zeta"


def test_fit_errors():
    with pytest.raises(ValueError):
        fit_powerlaw(np.arange(1, 30))
    with pytest.raises(ValueError):
        fit_powerlaw(np.full(100, 4))
    with pytest.raises(ValueError):
        fit_powerlaw(np.arange(0, 100))
    with pytest.raises(ValueError):
        fit_powerlaw(np.linspace(1, 2, 100))


@settings(max_examples=25, deadline=None)
@given(st.floats(1.5, 3.5), st.integers(1, 20), st.floats(0.5, 2.0), st.floats(-1, 3))
def test_alternative_pmfs_normalized(alpha, xmin, sigma, mu):
    xs = np.arange(xmin, xmin + 200_000)
    # a wide lognormal keeps visible mass past the window; add it back
    sf = lambda v: stats.norm.sf((math.log(v - 0.5) - mu) / sigma)  # noqa: E731
    beyond = sf(xmin + 200_000) / sf(xmin)
    assert np.exp(_lognormal_logpmf(xs, xmin, mu, sigma)).sum() + beyond == pytest.approx(1, abs=1e-9)
    assert np.exp(_weibull_logpmf(xs, xmin, 0.5, 0.6)).sum() == pytest.approx(1, abs=1e-6)
    total = np.exp(powerlaw_logpmf(xs.astype(float), alpha, xmin)).sum()
    tail = float(mpmath.zeta(alpha, xmin + 200_000) / mpmath.zeta(alpha, xmin))
    assert total + tail == pytest.approx(1, abs=1e-9)


@pytest.mark.parametrize("alpha,lam,xmin", [(1.5, 1e-3, 1), (2.0, 1e-5, 5), (0.5, 0.05, 2), (2.5, 1e-8, 20)])
def test_truncated_normalization(alpha, lam, xmin):
    term = lambda k: mpmath.power(k, -alpha) * mpmath.exp(-lam * k)  # noqa: E731
    exact = mpmath.nsum(term, [xmin, mpmath.inf], method="euler-maclaurin")
    assert truncated_powerlaw_lognorm(alpha, lam, xmin) == pytest.approx(float(mpmath.log(exact)), abs=1e-9)


def test_vuong_properties():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=200), rng.normal(size=200)
    r, p = vuong(a, b)
    r2, p2 = vuong(b, a)
    assert r == pytest.approx(-r2) and p == pytest.approx(p2)
    assert 0 <= p <= 1
    assert vuong(a, a) == (0.0, 1.0)
    d = a - b
    z = d.sum() / (d.std() * math.sqrt(len(d)))
    assert p == pytest.approx(2 * stats.norm.sf(abs(z)))


def test_geometric_data_prefers_exponential():
    rng = np.random.default_rng(4)
    x = rng.geometric(0.15, size=3000)
    fit = fit_powerlaw(x)
    comps = compare_alternatives(x, fit)
    assert comps["exponential"].R < 0 and comps["exponential"].p < 0.05
    assert set(comps) == {"lognormal", "exponential", "stretched_exponential", "truncated_power_law"}


def test_power_law_data_beats_exponential():
    rng = np.random.default_rng(5)
    x = sample_discrete_powerlaw(2.3, 1, 3000, rng)
    comps = compare_alternatives(x, fit_powerlaw(x))
    assert comps["exponential"].R > 0 and comps["exponential"].p < 0.05
    # the truncated power law nests the pure one, so it never fits much worse
    assert comps["truncated_power_law"].R < 1.0
