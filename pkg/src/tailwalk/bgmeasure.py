"""The conditional proposal kernel Q^{b,c} and its likelihood ratios.

With s = b + c - y the kernel moves y to y + X where X is drawn from the
step law conditioned on X + Z > s (Z the residual law, independent of X).
Writing v(x) = P(Z > -x) and w(x) = P(X + Z > -x), one step contributes

    dP/dQ = w(y - b - c) / v(z - b - c).
"""
from __future__ import annotations

import functools
import json
import math

import numpy as np

from . import _kernels as K
from .analysis import tail_difference
from .errors import CertificationFailure, ConstructionError, DomainError, QuadratureError
from .quadrature import adaptive_gl, gl_partial, graded_points
from .residual import ResidualLaw
from .steplaw import StepLaw


# -- log-ratio table ---------------------------------------------------------------

class LogRatioTable:
    """Piecewise Chebyshev model of phi(s) = log w(-s) - log R(s).

    phi vanishes for s <= t_lo (the left end of X + Z), quadratically in
    d = s - t_lo. Above t_lo the table stores psi = phi / weight(s) with
    weight = sf(s) d^2 / (d^2 + scale^2), as a function of xi = log d; psi is
    bounded and flat at both ends, so a fixed absolute tolerance on psi is
    a relative tolerance on phi. Panels are split at the points where phi
    is not smooth and bisected until every panel passes an independent check
    against exact evaluations.
    """

    def __init__(self, step, tol=1e-10, degree=20, delta_lo=1e-6, t_top=1e15,
                 max_width=1.5, max_panels=400):
        self.step = step
        self.residual = ResidualLaw(step)
        self.tol = tol
        self.degree = degree
        res = self.residual
        self.t_lo = res.sum_left
        lam = step.scale
        xi_lo = math.log(delta_lo * lam)
        xi_hi = math.log(t_top * lam + max(abs(self.t_lo), lam))
        cuts = [xi_lo, xi_hi]
        for p in (2.0 * step.left, res.z0, step.left):
            if p - self.t_lo > delta_lo * lam:
                xi = math.log(p - self.t_lo)
                if xi_lo < xi < xi_hi:
                    cuts.append(xi)
        cuts = sorted(set(cuts))
        edges = [cuts[0]]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            n = max(1, int(math.ceil((hi - lo) / max_width)))
            edges.extend(np.linspace(lo, hi, n + 1)[1:].tolist())
        self.evaluations = 0
        bounds, coefs = self._build(np.asarray(edges), max_panels)
        self.bounds = bounds
        self.coefs = coefs

    # exact values
    def exact_phi(self, s):
        s = float(s)
        return self._exact_phi_excess(s - self.t_lo, s)

    def _exact_phi_excess(self, d, s):
        res = self.residual
        self.evaluations += 1
        if d <= 0.0:
            return 0.0
        if d <= -self.step.left:
            # below z0, where R = 1
            return math.log1p(-res.sum_cdf_excess(d, atol=0.0))
        return math.log1p(tail_difference(res, s, fallback="direct") / res.tail(s))

    def weight(self, s):
        alpha, a, lam = self.step.params()
        return K.phi_weight(float(s), self.t_lo, alpha, a, lam)

    def exact_psi(self, xi):
        d = math.exp(xi)
        s = self.t_lo + d
        alpha, a, lam = self.step.params()
        x = d / lam
        w = self.step.sf(s) * x * x / (1.0 + x * x)
        return self._exact_phi_excess(d, s) / w

    def _fit(self, lo, hi):
        deg = self.degree
        k = np.arange(deg + 1)
        x = np.cos(np.pi * (k + 0.5) / (deg + 1))
        vals = np.array([self.exact_psi(0.5 * (lo + hi) + 0.5 * (hi - lo) * xk) for xk in x])
        coef = np.polynomial.chebyshev.chebfit(x, vals, deg)
        # check points interleaved with the nodes
        xc = np.cos(np.pi * (np.arange(1, 5) / 5.0))
        exact = np.array([self.exact_psi(0.5 * (lo + hi) + 0.5 * (hi - lo) * xk) for xk in xc])
        approx = np.polynomial.chebyshev.chebval(xc, coef)
        scale = max(1.0, float(np.max(np.abs(vals))))
        err = float(np.max(np.abs(exact - approx)))
        return coef, err <= self.tol * scale

    def _build(self, edges, max_panels):
        todo = list(zip(edges[:-1], edges[1:]))
        done = []
        while todo:
            lo, hi = todo.pop()
            coef, ok = self._fit(lo, hi)
            if ok:
                done.append((lo, hi, coef))
                continue
            if hi - lo < 1e-9 or len(done) + len(todo) > max_panels:
                raise QuadratureError(f"log-ratio table did not converge on [{lo:.6g}, {hi:.6g}]")
            mid = 0.5 * (lo + hi)
            todo.extend([(mid, hi), (lo, mid)])
        done.sort(key=lambda p: p[0])
        bounds = np.array([p[0] for p in done] + [done[-1][1]])
        coefs = np.array([p[2] for p in done])
        return bounds, coefs

    def arrays(self):
        return self.t_lo, self.bounds, self.coefs

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        alpha, a, lam = self.step.params()
        out = K.phi_many(s, self.t_lo, self.bounds, self.coefs, alpha, a, lam)
        return out if out.size > 1 else float(out[0])


@functools.lru_cache(maxsize=16)
def log_ratio_table(step):
    """Shared table per step law; it does not depend on b or c."""
    return LogRatioTable(step)


# -- measure ---------------------------------------------------------------------------

class BGMeasure:
    """Step law with barrier ``b`` and translation ``c``."""

    def __init__(self, step, b=0.0, c=0.0, quadrature_tol=1e-10):
        if not isinstance(step, StepLaw):
            raise ConstructionError("step must be a StepLaw")
        b = float(b)
        c = float(c)
        quadrature_tol = float(quadrature_tol)
        if not (math.isfinite(b) and b >= 0.0):
            raise ConstructionError(f"barrier must be finite and nonnegative, got {b}")
        if not math.isfinite(c):
            raise ConstructionError(f"translation must be finite, got {c}")
        if not 0.0 < quadrature_tol < 1.0:
            raise ConstructionError(f"quadrature_tol must lie in (0, 1), got {quadrature_tol}")
        self.step = step
        self.residual = ResidualLaw(step)
        self.b = b
        self.c = c
        self.quadrature_tol = quadrature_tol
        self._w_memo = {}

    def __repr__(self):
        return f"BGMeasure({self.step!r}, b={self.b}, c={self.c})"

    def with_c(self, c):
        return BGMeasure(self.step, self.b, c, self.quadrature_tol)

    # -- serialisation
    def to_dict(self):
        return {"step": self.step.to_dict(), "b": self.b, "c": self.c,
                "quadrature_tol": self.quadrature_tol}

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        try:
            step = StepLaw.from_dict(d.pop("step"))
            b = d.pop("b")
            c = d.pop("c")
        except KeyError as exc:
            raise ConstructionError(f"missing measure field {exc.args[0]!r}") from None
        tol = d.pop("quadrature_tol", 1e-10)
        if d:
            raise ConstructionError(f"unexpected measure fields {sorted(d)}")
        return cls(step, b, c, tol)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    # -- tails
    @property
    def z0(self):
        return self.residual.z0

    def v_eval(self, x):
        """P(Z > -x)."""
        return self.residual.tail(-np.asarray(x, dtype=float))

    def _w_scalar(self, x):
        x = float(x)
        hit = self._w_memo.get(x)
        if hit is None:
            hit = self.residual.sum_tail(-x, rtol=self.quadrature_tol)
            self._w_memo[x] = hit
        return hit

    def w_eval(self, x):
        """P(X + Z > -x), memoised per argument."""
        if np.ndim(x) == 0:
            return self._w_scalar(x)
        x = np.asarray(x, dtype=float)
        return np.array([self._w_scalar(xi) for xi in x.ravel()]).reshape(x.shape)

    @property
    def table(self):
        return log_ratio_table(self.step)

    def step_log_lr(self, y, z):
        """log dP/dQ of the single move y -> z: log w(y-b-c) - log v(z-b-c)."""
        shift = self.b + self.c
        v = self.v_eval(z - shift)
        if v <= 0.0:
            raise DomainError(f"v vanishes at {z - shift}")
        return math.log(self.w_eval(y - shift)) - math.log(v)

    def path_log_lr(self, states, crossed=True):
        """Telescoped log dP/dQ of a stored path S_0, ..., S_n (exact tails).

        For a path stopped without crossing the last state contributes
        nothing, matching the running value kept by the walkers.
        """
        shift = self.b + self.c
        s = np.asarray(states, dtype=float) - shift
        total = math.log(self.w_eval(s[0]))
        for x in s[1:-1]:
            total += math.log(self.w_eval(x)) - math.log(self.v_eval(x))
        if crossed:
            total -= math.log(self.v_eval(s[-1]))
        return total

    # -- kernel
    def _params(self):
        alpha, a, lam = self.step.params()
        return alpha, a, lam, self.residual.z0, self.residual.abs_mean

    def kernel_increment(self, s, rng, size=None, method="split"):
        """Draws of X given X + Z > s."""
        n = 1 if size is None else int(size)
        if method == "split":
            out = K.kernel_increments(rng, float(s), n, *self._params())
        elif method == "inversion":
            out = self._inversion(float(s), 1.0 - rng.random(n))
        else:
            raise ValueError(f"unknown method {method!r}")
        return float(out[0]) if size is None else out

    def kernel_sample(self, y, rng, size=None, method="split"):
        """Next state(s) from y under the kernel."""
        s = self.c + self.b - float(y)
        return float(y) + self.kernel_increment(s, rng, size, method)

    def conditional_cdf(self, s, x):
        """P(X <= x | X + Z > s) by quadrature."""
        return self.residual.conditional_increment_cdf(s, x, rtol=self.quadrature_tol)

    def _inversion(self, s, v, max_iter=200):
        # v = 1 - U lies in (0, 1]; solve P(X > x | X + Z > s) = v.
        step = self.step
        res = self.residual
        a = step.left
        if s <= res.sum_left:
            return step.quantile(v)
        w = res.sum_tail(s, rtol=self.quadrature_tol)
        cut = s - res.z0
        out = np.empty_like(v)
        # beyond cut the residual factor is one: P(X > x | .) = sf(x)/w
        upper = v * w <= step.sf(cut)
        out[upper] = step.quantile(np.minimum(v[upper] * w, 1.0))
        rest = ~upper
        if not rest.any():
            return out

        def f(u):
            return step.pdf(u) * res.tail(s - u)

        pts = graded_points(a, cut)
        kinks = [p for p in res._kinks(s) if a < p < cut]
        if kinks:
            pts = np.unique(np.concatenate([pts, kinks]))
        total, _, plo, phi_, pval = adaptive_gl(f, pts, rtol=self.quadrature_tol, panels=True)
        cum = np.concatenate([[0.0], np.cumsum(pval)])
        target = (1.0 - v[rest]) * w  # integral of f over [a, x]
        lo = np.full(target.shape, a)
        hi = np.full(target.shape, cut)
        tol = self.quadrature_tol
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            j = np.clip(np.searchsorted(plo, mid, side="right") - 1, 0, plo.size - 1)
            g = cum[j] + gl_partial(f, plo[j], np.minimum(mid, phi_[j]))
            below = g < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(np.abs(g - target) <= tol * target) or np.all(hi - lo <= 4 * np.spacing(np.abs(hi) + 1.0)):
                break
        out[rest] = 0.5 * (lo + hi)
        return out

    # -- certification
    def certify_c(self, t_max=None, grid_size=200):
        """Smallest c on a log grid of [1, t_max] with D(t) <= 0 for all grid t >= c."""
        grid_size = int(grid_size)
        if grid_size <= 0:
            raise CertificationFailure("empty certification grid")
        if t_max is None:
            t_max = 1e8 * self.step.scale
        grid = np.geomspace(1.0, float(t_max), grid_size)
        diff = np.array([tail_difference(self.residual, t, fallback="direct") for t in grid])
        ok = diff <= 0.0
        if not ok[-1]:
            raise CertificationFailure(
                f"tail difference is positive at t = {grid[-1]:.6g}; no translation certified on the grid")
        bad = np.flatnonzero(~ok)
        start = 0 if bad.size == 0 else bad[-1] + 1
        self.certification = {"grid": grid, "difference": diff, "c": float(grid[start])}
        return float(grid[start])
