"""Asymptotics of P(X + Z > t) - P(Z > t) and the statistics used to check them.

The difference is split as p - q + eps1 - eps2 with a cutoff h(t):

    p    = (1/|EX|) int_h^{t-h} sf(t-s) sf(s) ds
    q    = (sf(t)/|EX|) int_h^inf [2 sf(s) - F(-s)] ds
    eps1 = (1/|EX|) [ (int_0^h + int_{z0}^h) (sf(t-s) - sf(t)) sf(s) ds
                      + int_{-h}^0 (sf(t) - sf(t-s)) F(s) ds ]
    eps2 = (1/|EX|) int_{-inf}^{-h} sf(t-s) F(s) ds

Every piece is a well-scaled integral, so the sum keeps full relative
accuracy at large t where w(-t) and R(t) agree to many digits.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize, stats

from .errors import DomainError, QuadratureError
from .quadrature import adaptive_gl, graded_points
from .residual import ResidualLaw
from .steplaw import StepLaw

_RTOL = 1e-12


# -- constants ----------------------------------------------------------------

def _check_alpha(alpha):
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise DomainError(f"tail index must lie in (1, 2), got {alpha}")
    return alpha


def _a_integrand(alpha):
    # After u = v**(1/(2-alpha)) the u**(-alpha) singularity is absorbed
    # into dv and what is left is smooth on the whole interval.
    beta = 1.0 / (2.0 - alpha)

    def f(v):
        u = v ** beta
        safe = np.where(u > 0.0, u, 0.5)
        # the bracket divided by u tends to alpha as u -> 0
        return beta * np.where(u > 0.0, np.expm1(-alpha * np.log1p(-safe)) / safe, alpha)

    return f, 2.0 ** (-(2.0 - alpha))


def a_integral(alpha, tol=1e-12):
    """A(alpha) = int_0^{1/2} [(1-u)^-alpha - 1] u^-alpha du.

    Two Gauss-Legendre meshes (8 and 16 equal panels of the smooth
    transformed integrand) must agree to ``tol``.
    """
    alpha = _check_alpha(alpha)
    f, top = _a_integrand(alpha)
    coarse = adaptive_gl(f, np.linspace(0.0, top, 9), rtol=0.0, atol=tol)[0]
    fine = adaptive_gl(f, np.linspace(0.0, top, 17), rtol=0.0, atol=tol)[0]
    if abs(coarse - fine) > tol:
        raise QuadratureError(f"mesh refinements disagree by {abs(coarse - fine):.3g}")
    return fine


def threshold_integral(alpha):
    """A(alpha) - 2^(alpha-1)/(alpha-1); changes sign at alpha = 3/2."""
    alpha = _check_alpha(alpha)
    return a_integral(alpha) - 2.0 ** (alpha - 1.0) / (alpha - 1.0)


def threshold_root(lo=1.01, hi=1.99, xtol=1e-10):
    """Bisection root of threshold_integral on (lo, hi)."""
    return optimize.bisect(threshold_integral, lo, hi, xtol=xtol)


def _k_sum(alpha, level):
    # Tanh-sinh on (0, 1) with the integrand written in terms of the
    # distance d to the nearer endpoint, kept in log form so that nodes
    # with d far below the smallest double still contribute. Weight times
    # integrand is pi cosh(t) (1-d) (d^(2-alpha) - d^2) g(d), with
    # g(d) = ((1-d)^-alpha - 1)/d -> alpha.
    h = 1.0 / 2 ** level
    # past this point d^(2-alpha) < exp(-40)
    tmax = math.asinh(40.0 / (math.pi * (2.0 - alpha)))
    n = int(tmax / h)
    t = np.arange(-n, n + 1) * h
    two_s = math.pi * np.abs(np.sinh(t))
    tail = np.exp(-two_s)
    log_d = -two_s - np.log1p(tail)
    d = np.exp(log_d)
    safe = np.where(d > 0.0, d, 0.5)
    g = np.where(d > 0.0, np.expm1(-alpha * np.log1p(-safe)) / safe, alpha)
    vals = math.pi * np.cosh(t) / (1.0 + tail) * (np.exp((2.0 - alpha) * log_d) - d * d) * g
    return h * float(np.sum(vals))


def k_alpha(alpha, tol=1e-10):
    """K_alpha = (alpha-1) int_0^1 ((1-u)^-alpha - 1)(u^-alpha - 1) du - (alpha+1).

    Tanh-sinh over the full unit interval; levels 6 and 7 must agree to
    ``tol``.
    """
    alpha = _check_alpha(alpha)
    coarse = _k_sum(alpha, 6)
    fine = _k_sum(alpha, 7)
    if abs(coarse - fine) * (alpha - 1.0) > tol:
        raise QuadratureError(f"tanh-sinh levels disagree by {abs(coarse - fine):.3g}")
    return (alpha - 1.0) * fine - (alpha + 1.0)


def k_alpha_identity(alpha):
    """Right-hand side 2(alpha-1) A(alpha) - 2^alpha, which should equal k_alpha."""
    alpha = _check_alpha(alpha)
    return 2.0 * (alpha - 1.0) * a_integral(alpha) - 2.0 ** alpha


def pq_limit(alpha):
    """Limit of (p - q)|EX| / (t sf(t)^2): 2 A(alpha) - 2^alpha/(alpha-1)."""
    return 2.0 * threshold_integral(alpha)


# -- decomposition ---------------------------------------------------------------

@dataclass(frozen=True)
class DecompositionTerms:
    t: float
    h_t: float
    p: float
    q: float
    eps1: float
    eps2: float
    difference: float

    def scale(self):
        return max(abs(self.p), abs(self.q))

    def as_dict(self):
        return asdict(self)


def _residual(law):
    if isinstance(law, ResidualLaw):
        return law
    if isinstance(law, StepLaw):
        return ResidualLaw(law)
    # a BGMeasure or anything else carrying a residual law
    return law.residual


def default_cutoff(z0, t):
    """max(z0 + 1, sqrt(t)), pulled to the middle of the admissible range when too large."""
    lo = max(z0, 0.0)
    h = max(z0 + 1.0, math.sqrt(t))
    if not lo < h < 0.5 * t:
        h = 0.5 * (lo + 0.5 * t)
    return h


def _integral(f, a, b, kinks=(), rtol=_RTOL):
    if not b > a:
        return 0.0
    pts = graded_points(a, b)
    extra = [k for k in kinks if a < k < b]
    if extra:
        pts = np.unique(np.concatenate([pts, extra]))
    return adaptive_gl(f, pts, rtol=rtol)[0]


def decomposition(law, t, h=None, rtol=_RTOL):
    """Terms p, q, eps1, eps2 of the tail difference at ``t``."""
    res = _residual(law)
    step = res.step
    z0 = res.z0
    t = float(t)
    if not t > max(2.0 * z0, 0.0):
        raise DomainError(f"decomposition needs t > max(2 z0, 0) = {max(2 * z0, 0.0):.6g}, got {t}")
    h = default_cutoff(z0, t) if h is None else float(h)
    if not max(z0, 0.0) < h < 0.5 * t:
        raise DomainError(f"cutoff h = {h} outside (max(z0, 0), t/2)")
    a = step.left
    em = res.abs_mean
    sf_t = step.sf(t)
    kinks = (a, t - a)

    def prod(s):
        return step.sf(t - s) * step.sf(s)

    # symmetric about t/2
    p = 2.0 * _integral(prod, h, 0.5 * t, kinks, rtol) / em

    # int_h^inf F(-s) ds = int_a^{-h} F(u) du, zero once h >= -a
    left_mass = 0.0
    if -h > a:
        left_mass = (-h - a) - step.tail_integral_between(a, -h)
    q = sf_t * (2.0 * step.integrated_tail(h) - left_mass) / em

    def ex_sf(s):
        return step.sf_excess(t, s) * step.sf(s)

    def ex_cdf(s):
        return -step.sf_excess(t, s) * step.cdf(s)

    e1 = (_integral(ex_sf, 0.0, h, kinks, rtol)
          + (_integral(ex_sf, z0, h, kinks, rtol) if z0 <= h else 0.0)
          + _integral(ex_cdf, max(-h, a), 0.0, kinks, rtol))
    eps1 = e1 / em

    eps2 = 0.0
    if -h > a:
        eps2 = _integral(lambda s: step.sf(t - s) * step.cdf(s), a, -h, kinks, rtol) / em

    return DecompositionTerms(t, h, p, q, eps1, eps2, p - q + eps1 - eps2)


def direct_difference(law, t, rtol=1e-13):
    """w(-t) - R(t) by evaluating both tails; accurate only while they are not too close."""
    res = _residual(law)
    t = float(t)
    if t <= res.z0:
        return -res.sum_cdf(t, rtol=rtol)
    return res.sum_tail(t, rtol=rtol) - res.tail(t)


def tail_difference(law, t, h=None, fallback="raise"):
    """D(t) = P(X + Z > t) - P(Z > t) through the decomposition.

    Below the decomposition's range ``fallback="direct"`` evaluates the two
    tails instead; the default raises DomainError.
    """
    res = _residual(law)
    if float(t) > max(2.0 * res.z0, 0.0):
        return decomposition(res, t, h=h).difference
    if fallback == "direct":
        return direct_difference(res, t)
    raise DomainError(f"t = {t} is below max(2 z0, 0) = {max(2 * res.z0, 0.0):.6g}")


def k_ratio(law, t):
    """D(t) / (R(t) sf(t)), which tends to K_alpha."""
    res = _residual(law)
    return tail_difference(res, t, fallback="direct") / (res.tail(t) * res.step.sf(t))


def sign_onset(ts, values, sign):
    """First grid point from which every value has the given strict sign, or None."""
    values = np.sign(np.asarray(values, dtype=float))
    good = values == np.sign(sign)
    if not good[-1]:
        return None
    bad = np.flatnonzero(~good)
    start = 0 if bad.size == 0 else bad[-1] + 1
    return float(np.asarray(ts)[start])


def doubling_grid(t0, t_max):
    n = int(math.floor(math.log2(t_max / t0)))
    return t0 * 2.0 ** np.arange(n + 1)


# -- asymptotes ---------------------------------------------------------------------

def pv_estimate(law, b):
    """Integrated-tail approximation min{1, I(b)/|EX|} of P(tau_b < inf)."""
    if b < 0:
        raise DomainError("barrier must be nonnegative")
    return _residual(law).tail(b)


def karamata_ratio(law, t):
    """R(t)(alpha-1)|EX| / (t sf(t)); tends to one."""
    res = _residual(law)
    t = np.asarray(t, dtype=float)
    if np.any(t <= res.z0):
        raise DomainError(f"karamata_ratio needs t > z0 = {res.z0:.6g}")
    step = res.step
    out = res.tail(t) * (step.alpha - 1.0) * res.abs_mean / (t * step.sf(t))
    return out if np.ndim(out) else float(out)


# -- statistics ---------------------------------------------------------------------

def _hill_logs(sample, k):
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0 or np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("Hill estimator needs finite positive data")
    k = int(k)
    if not 1 <= k < x.size:
        raise DomainError(f"k must be in [1, {x.size - 1}], got {k}")
    top = np.sort(x)[::-1][: k + 1]
    return np.log(top[:k]) - math.log(top[k])


def hill_gamma(sample, k, censor_at=None):
    """Hill statistic (mean log-excess over the (k+1)-th largest); estimates 1/alpha.

    With ``censor_at``, values at or above it are right-censored (only known
    to exceed it); the log-excess sum is then divided by the number of
    uncensored values among the top k, which is the censored Pareto MLE.
    """
    logs = _hill_logs(sample, k)
    if censor_at is None:
        return float(np.mean(logs))
    top = np.sort(np.asarray(sample, dtype=float).ravel())[::-1][:k]
    seen = int(np.count_nonzero(top < censor_at))
    if seen == 0:
        return math.inf
    return float(np.sum(logs) / seen)


def hill_estimator(sample, k, censor_at=None):
    """Hill estimate of the tail index from the top ``k`` order statistics.

    A sample with no spread above the threshold has no tail to speak of and
    gives ``inf``.
    """
    g = hill_gamma(sample, k, censor_at)
    if g == 0.0:
        return math.inf
    return 0.0 if math.isinf(g) else 1.0 / g


def max_growth(sample):
    """Ratio of the running maximum over all of ``sample`` to that over its first half.

    For an infinite-mean sample the largest term grows at least linearly in
    the sample size, so the ratio is typically two or more.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DomainError("need at least two values")
    return float(x.max() / x[: x.size // 2].max())


class KSResult(NamedTuple):
    statistic: float
    threshold: float
    pvalue: float
    same: bool


def ks_threshold(n, m, coeff=1.36):
    """Asymptotic 95% critical distance for the two-sample test."""
    return coeff * math.sqrt((n + m) / (n * m))


def ks_two_sample(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("both samples must be nonempty")
    res = stats.ks_2samp(a, b)
    thr = ks_threshold(a.size, b.size)
    return KSResult(float(res.statistic), thr, float(res.pvalue), bool(res.statistic <= thr))


class LinearFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y):
    r = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return LinearFit(float(r.slope), float(r.intercept), float(r.rvalue ** 2))
