"""Residual-life (stationary excess) law of a step law, and the tail of X + Z."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import adaptive_gl, graded_points
from .steplaw import StepLaw


@dataclass(frozen=True)
class ResidualLaw:
    """Law of Z with P(Z > t) = min{1, integrated_tail(t) / |E X|}."""

    step: StepLaw
    z0: float = field(init=False)
    abs_mean: float = field(init=False)

    def __post_init__(self):
        abs_mean = -self.step.mean()
        object.__setattr__(self, "abs_mean", abs_mean)
        object.__setattr__(self, "z0", float(self.step.integrated_tail_inverse(abs_mean)))

    def tail(self, t):
        out = np.minimum(1.0, self.step.integrated_tail(t) / self.abs_mean)
        t = np.asarray(t, dtype=float)
        out = np.where(t <= self.z0, 1.0, out)
        return out if np.ndim(out) else float(out)

    def log_tail(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t <= self.z0, 0.0,
                       np.log(np.maximum(self.step.integrated_tail(np.maximum(t, self.z0)), 1e-300))
                       - math.log(self.abs_mean))
        return out if np.ndim(out) else float(out)

    def density(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t > self.z0, self.step.sf(t) / self.abs_mean, 0.0)
        return out if np.ndim(out) else float(out)

    def quantile(self, u):
        """Return t with tail(t) = u, u in (0, 1]."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise DomainError("residual quantile argument must lie in (0, 1]")
        out = np.where(u >= 1.0, self.z0, self.step.integrated_tail_inverse(u * self.abs_mean))
        return out if np.ndim(out) else float(out)

    def sample(self, rng, size=None):
        return self.quantile(1.0 - rng.random(size))

    # names used by the experiment scripts
    def residual_z0(self):
        return self.z0

    residual_tail = tail
    residual_quantile = quantile
    sample_residual = sample

    # -- X + Z with X, Z independent ------------------------------------------

    @property
    def sum_left(self):
        """Left endpoint of X + Z; P(X + Z > t) = 1 for t at or below it."""
        return self.step.left + self.z0

    def _kinks(self, t):
        # points u in (left, t - z0) where u -> tail(t - u) is not smooth
        left = self.step.left
        pts = [t - left] if self.z0 < left else []
        return [p for p in pts if left < p < t - self.z0]

    def sum_tail(self, t, rtol=1e-13, atol=1e-18):
        """P(X + Z > t), split at u = t - z0 where the residual tail stops clamping.

        For u >= t - z0 the factor tail(t - u) equals one, so that piece is
        sf(t - z0) in closed form; the finite remainder is integrated
        adaptively.
        """
        t = float(t)
        if t <= self.sum_left:
            return 1.0
        lower = self.sum_cdf(t, rtol=rtol, atol=atol)
        if lower < 0.25:
            return 1.0 - lower
        step = self.step
        hi = t - self.z0
        pts = _merge(graded_points(step.left, hi), self._kinks(t))
        head, _ = adaptive_gl(lambda u: step.pdf(u) * self.tail(t - u), pts, rtol=rtol, atol=atol)
        return step.sf(hi) + head

    def sum_cdf(self, t, rtol=1e-13, atol=1e-18):
        """P(X + Z <= t) = integral over u < t - z0 of f(u) (1 - tail(t - u))."""
        return self.sum_cdf_excess(float(t) - self.sum_left, rtol=rtol, atol=atol)

    def sum_cdf_excess(self, d, rtol=1e-13, atol=1e-18):
        """P(X + Z <= sum_left + d), parametrised by the excess d.

        With u = left + v the residual argument is z0 + (d - v), so the
        integrand depends on d and v only and keeps full relative accuracy
        however small d is compared with sum_left. ``atol`` is a floor for
        values far below one.
        """
        d = float(d)
        if d <= 0.0:
            return 0.0
        step = self.step
        a = step.left
        em = self.abs_mean
        z0 = self.z0

        def f(v):
            return step.pdf(a + v) * step.tail_integral_span(z0, d - v) / em

        pts = graded_points(0.0, d)
        if z0 < a and 0.0 < d - (a - z0) < d:
            pts = _merge(pts, [d - (a - z0)])
        val, _ = adaptive_gl(f, pts, rtol=rtol, atol=atol)
        return val

    def conditional_increment_cdf(self, s, x, rtol=1e-13):
        """P(X <= x | X + Z > s) for scalar s."""
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        w = self.sum_tail(s, rtol=rtol)
        step = self.step
        cut = s - self.z0
        out = np.empty_like(x)
        for i, xi in enumerate(x):
            if xi <= step.left:
                out[i] = 0.0
            elif xi >= cut:
                out[i] = 1.0 - step.sf(xi) / w
            else:
                pts = _merge(graded_points(step.left, xi), [p for p in self._kinks(s) if p < xi])
                head, _ = adaptive_gl(lambda u: step.pdf(u) * self.tail(s - u), pts, rtol=rtol)
                out[i] = head / w
        return float(out[0]) if scalar else out


def _merge(points, extra):
    if not extra:
        return points
    return np.unique(np.concatenate([points, np.asarray(extra, dtype=float)]))
