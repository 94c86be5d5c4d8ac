"""Discrete power-law tail fitting with likelihood-ratio model comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import optimize, special

EXACT_BELOW = 6  # x_min below this uses the zeta-based MLE
XMIN_QUANTILE = 90.0
TPL_EXPLICIT = 10_000
ALPHA_BOUNDS = (1.0 + 1e-6, 10.0)
ALTERNATIVES = ("lognormal", "exponential", "stretched_exponential", "truncated_power_law")


@dataclass(frozen=True)
class TailFit:
    alpha: float
    xmin: int
    sigma: float
    ks: float
    n_tail: int
    n: int
    method: str

    @property
    def tail_fraction(self) -> float:
        return self.n_tail / self.n

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "xmin": self.xmin,
            "sigma": self.sigma,
            "ks": self.ks,
            "n_tail": self.n_tail,
            "n": self.n,
            "tail_fraction": self.tail_fraction,
            "method": self.method,
        }


def _as_samples(samples) -> np.ndarray:
    x = np.asarray(samples)
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if len(x) and not np.all(np.equal(np.mod(x, 1), 0)):
        raise ValueError("samples must be integers")
    x = x.astype(np.int64)
    if len(x) and x.min() < 1:
        raise ValueError("samples must be positive integers")
    return np.sort(x)


def zeta_mle(tail: np.ndarray, xmin: int) -> float:
    """Exact discrete MLE: maximize -alpha * sum(ln x) - n ln zeta(alpha, xmin)."""
    s = float(np.log(tail).sum())
    n = len(tail)

    def nll(a: float) -> float:
        return a * s + n * math.log(special.zeta(a, xmin))

    res = optimize.minimize_scalar(nll, bounds=ALPHA_BOUNDS, method="bounded", options={"xatol": 1e-9})
    return float(res.x)


def approx_mle(tail: np.ndarray, xmin: int) -> float:
    """alpha = 1 + n / sum(ln(x / (xmin - 1/2)))."""
    return 1.0 + len(tail) / float(np.log(tail / (xmin - 0.5)).sum())


def powerlaw_cdf(x: np.ndarray, alpha: float, xmin: int) -> np.ndarray:
    """P(X <= x) for the discrete power law supported on x >= xmin."""
    return 1.0 - special.zeta(alpha, np.asarray(x, dtype=float) + 1.0) / special.zeta(alpha, xmin)


def ks_distance(tail: np.ndarray, alpha: float, xmin: int) -> float:
    """Max gap between empirical and fitted CDFs over the distinct tail values."""
    values, counts = np.unique(tail, return_counts=True)
    emp = np.cumsum(counts) / len(tail)
    return float(np.abs(emp - powerlaw_cdf(values, alpha, xmin)).max())


def _fit_at(tail: np.ndarray, xmin: int) -> tuple[float, str]:
    if xmin < EXACT_BELOW:
        return zeta_mle(tail, xmin), "zeta"
    return approx_mle(tail, xmin), "approx"


def fit_powerlaw(samples, xmin: int | None = None) -> TailFit:
    """Fit a discrete power law to the upper tail of ``samples``.

    Without ``xmin`` every distinct value up to the 90th sample percentile
    is tried and the one minimizing the KS distance wins (ties: smallest).
    """
    x = _as_samples(samples)
    n = len(x)
    if n < 50:
        raise ValueError("need at least 50 samples")
    if x[0] == x[-1]:
        raise ValueError("degenerate sample: all values equal")
    if xmin is not None:
        candidates = np.array([int(xmin)])
    else:
        cap = np.percentile(x, XMIN_QUANTILE)
        distinct = np.unique(x)
        candidates = distinct[(distinct <= cap) & (distinct < distinct[-1])]
        if len(candidates) == 0:
            candidates = distinct[:1]
    best = None
    for xm in candidates.tolist():
        tail = x[np.searchsorted(x, xm) :]
        if len(tail) < 2 or tail[0] == tail[-1]:
            continue
        alpha, method = _fit_at(tail, xm)
        d = ks_distance(tail, alpha, xm)
        if best is None or d < best[0]:
            best = (d, xm, alpha, method, len(tail))
    if best is None:
        raise ValueError("no x_min candidate leaves a nondegenerate tail")
    d, xm, alpha, method, nt = best
    return TailFit(alpha, int(xm), (alpha - 1.0) / math.sqrt(nt), d, nt, n, method)


# -- alternatives ------------------------------------------------------------


def powerlaw_logpmf(x: np.ndarray, alpha: float, xmin: int) -> np.ndarray:
    return -alpha * np.log(x) - math.log(special.zeta(alpha, xmin))


def _fit_exponential(x: np.ndarray, xmin: int):
    mu = float((x - xmin).mean())
    if mu <= 0:
        raise ValueError("tail has no spread")
    lam = math.log1p(1.0 / mu)
    logp = math.log(-math.expm1(-lam)) - lam * (x - xmin)
    return {"lambda": lam}, logp


def _weibull_logpmf(x: np.ndarray, xmin: int, lam: float, beta: float) -> np.ndarray:
    # S(x) = exp(-lam (x^beta - xmin^beta)); p(x) = S(x) - S(x+1)
    xb = np.power(x.astype(float), beta)
    step = np.power(x + 1.0, beta) - xb
    return -lam * (xb - float(xmin) ** beta) + np.log(-np.expm1(-lam * step))


def _fit_stretched(x: np.ndarray, xmin: int):
    def nll(theta):
        lam, beta = math.exp(theta[0]), math.exp(theta[1])
        val = -_weibull_logpmf(x, xmin, lam, beta).sum()
        return val if np.isfinite(val) else 1e300

    best = None
    for b0 in (0.2, 0.5, 1.0):
        # pick lam so that the mean scale roughly matches the data
        l0 = 1.0 / max(float(np.mean(np.power(x.astype(float), b0) - float(xmin) ** b0)), 1e-3)
        res = optimize.minimize(nll, [math.log(l0), math.log(b0)], method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    lam, beta = math.exp(best.x[0]), math.exp(best.x[1])
    return {"lambda": lam, "beta": beta}, _weibull_logpmf(x, xmin, lam, beta)


def _lognormal_logpmf(x: np.ndarray, xmin: int, mu: float, sigma: float) -> np.ndarray:
    def log_sf(z):
        return special.log_ndtr(-z)

    lo = log_sf((np.log(x - 0.5) - mu) / sigma)
    hi = log_sf((np.log(x + 0.5) - mu) / sigma)
    norm = log_sf((math.log(xmin - 0.5) - mu) / sigma)
    return lo + np.log(-np.expm1(hi - lo)) - norm


def _fit_lognormal(x: np.ndarray, xmin: int):
    logs = np.log(x.astype(float))

    def nll(theta):
        val = -_lognormal_logpmf(x, xmin, theta[0], math.exp(theta[1])).sum()
        return val if np.isfinite(val) else 1e300

    best = None
    for mu0 in (float(logs.mean()), 0.0, math.log(xmin)):
        res = optimize.minimize(nll, [mu0, math.log(max(float(logs.std()), 0.1))], method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    mu, sigma = float(best.x[0]), math.exp(best.x[1])
    return {"mu": mu, "sigma": sigma}, _lognormal_logpmf(x, xmin, mu, sigma)


def truncated_powerlaw_lognorm(alpha: float, lam: float, xmin: int, explicit: int = TPL_EXPLICIT) -> float:
    """log sum_{x >= xmin} x^-alpha e^{-lam x}: explicit head plus integral tail."""
    grid = np.arange(xmin, xmin + explicit, dtype=float)
    terms = -alpha * np.log(grid) - lam * grid
    top = terms.max()
    head = top + math.log(np.exp(terms - top).sum())
    u = xmin + explicit - 0.5
    tail = float(mpmath.log(mpmath.power(u, 1 - alpha) * mpmath.expint(alpha, lam * u)))
    return float(np.logaddexp(head, tail))


def _fit_truncated(x: np.ndarray, xmin: int, alpha0: float):
    logs = np.log(x.astype(float))
    s_log, s_x, n = float(logs.sum()), float(x.sum()), len(x)

    def nll(theta):
        alpha, lam = theta[0], math.exp(theta[1])
        return alpha * s_log + lam * s_x + n * truncated_powerlaw_lognorm(alpha, lam, xmin)

    best = None
    for a0, l0 in ((alpha0, 1.0 / max(float(x.mean()), 1.0) * 0.1), (max(alpha0 - 0.5, 0.5), 1.0 / max(float(x.mean()), 1.0))):
        res = optimize.minimize(nll, [a0, math.log(l0)], method="L-BFGS-B",
                                bounds=[(0.0, ALPHA_BOUNDS[1]), (math.log(1e-10), math.log(10.0))])
        if best is None or res.fun < best.fun:
            best = res
    alpha, lam = float(best.x[0]), math.exp(best.x[1])
    logp = -alpha * logs - lam * x - truncated_powerlaw_lognorm(alpha, lam, xmin)
    return {"alpha": alpha, "lambda": lam}, logp


@dataclass(frozen=True)
class Comparison:
    R: float
    p: float
    params: dict = field(default_factory=dict)
    error: str | None = None

    def to_json(self) -> dict:
        return {"R": self.R, "p": self.p, "params": self.params, "error": self.error}


def vuong(ll_a: np.ndarray, ll_b: np.ndarray) -> tuple[float, float]:
    """Log-likelihood ratio R = sum(ll_a - ll_b) and its two-sided normalized p-value."""
    d = np.asarray(ll_a) - np.asarray(ll_b)
    r = float(d.sum())
    sd = float(d.std())
    n = len(d)
    if sd == 0 or n == 0:
        return r, 1.0
    z = r / (sd * math.sqrt(n))
    return r, float(special.erfc(abs(z) / math.sqrt(2)))


def compare_alternatives(samples, fit: TailFit) -> dict[str, Comparison]:
    """R > 0 favors the power law; each alternative is fitted on x >= x_min."""
    x = _as_samples(samples)
    tail = x[x >= fit.xmin]
    ll_pl = powerlaw_logpmf(tail.astype(float), fit.alpha, fit.xmin)
    fitters = {
        "lognormal": lambda: _fit_lognormal(tail, fit.xmin),
        "exponential": lambda: _fit_exponential(tail, fit.xmin),
        "stretched_exponential": lambda: _fit_stretched(tail, fit.xmin),
        "truncated_power_law": lambda: _fit_truncated(tail, fit.xmin, fit.alpha),
    }
    out: dict[str, Comparison] = {}
    for name in ALTERNATIVES:
        try:
            params, ll_alt = fitters[name]()
            if not np.all(np.isfinite(ll_alt)):
                raise FloatingPointError("non-finite likelihood")
            r, p = vuong(ll_pl, ll_alt)
            out[name] = Comparison(r, p, params)
        except (ValueError, FloatingPointError, ZeroDivisionError, OverflowError) as exc:
            out[name] = Comparison(float("nan"), float("nan"), {}, str(exc))
    return out


def sample_discrete_powerlaw(alpha: float, xmin: int, n: int, rng: np.random.Generator, table: int = 100_000) -> np.ndarray:
    """Inverse-CDF sampler; values beyond ``xmin + table`` use the continuous approximation."""
    xs = np.arange(xmin, xmin + table, dtype=float)
    ccdf = special.zeta(alpha, xs) / special.zeta(alpha, xmin)  # P(X >= x)
    u = rng.random(n)
    # X = largest x with P(X >= x) >= u
    idx = np.searchsorted(-ccdf, -u, side="right") - 1
    out = xs[np.maximum(idx, 0)]
    beyond = u < ccdf[-1]
    if beyond.any():
        x0 = xmin + table - 0.5
        cont = x0 * (u[beyond] / ccdf[-1]) ** (-1.0 / (alpha - 1.0)) + 0.5
        out[beyond] = np.floor(cont)
    return out.astype(np.int64)
