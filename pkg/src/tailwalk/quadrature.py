"""Vectorised adaptive quadrature used by the tail integrals.

Two independent rules live here:

* ``adaptive_gl``: composite Gauss-Legendre with bisection refinement, error
  estimated by comparing each panel against its two halves.
* ``tanh_sinh``: double-exponential rule on a finite interval; it tolerates
  integrable power singularities at both endpoints without any substitution.

Integrands must accept and return numpy arrays.
"""
from __future__ import annotations

import math

import numpy as np

from .errors import QuadratureError

_GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(_GL_ORDER)
_EPS = np.finfo(float).eps


def graded_points(a, b, ratio=0.5, min_width=None, both_ends=True):
    """Breakpoints on [a, b] refined geometrically toward the endpoints.

    Panel widths shrink by ``ratio`` toward ``a`` (and ``b`` if ``both_ends``)
    until they fall below ``min_width``.
    """
    a = float(a)
    b = float(b)
    if not b > a:
        return np.array([a, b])
    length = b - a
    if min_width is None:
        min_width = max(length * 1e-15, 1e-13 * max(abs(a), abs(b), 1.0))
    offsets = []
    d = length * (0.5 if both_ends else 1.0)
    while d > min_width:
        offsets.append(d)
        d *= ratio
    offsets = np.asarray(offsets)
    pts = [np.array([a, b]), a + offsets]
    if both_ends:
        pts.append(b - offsets)
    return np.unique(np.clip(np.concatenate(pts), a, b))


def _gl_panels(f, lo, hi):
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (np.asarray(f(x), dtype=float) @ _GL_W)


def adaptive_gl(f, points, rtol=1e-12, atol=0.0, max_panels=20000, panels=False):
    """Integrate ``f`` over [points[0], points[-1]] with the given breakpoints.

    Returns ``(value, error_estimate)``, or with ``panels=True`` also the
    final partition as sorted arrays ``(lo, hi, value)``. Raises
    QuadratureError when the tolerance ``max(atol, rtol*|value|)`` is not met
    within ``max_panels``.
    """
    points = np.asarray(points, dtype=float)
    lo = points[:-1]
    hi = points[1:]
    keep = hi > lo
    lo, hi = lo[keep], hi[keep]
    kept = ([], [], [])
    done_val = 0.0
    done_err = 0.0
    used = lo.size

    def finish(val, err):
        if not panels:
            return float(val), float(err)
        plo, phi_, pval = (np.concatenate(k) if k else np.empty(0) for k in kept)
        order = np.argsort(plo)
        return float(val), float(err), plo[order], phi_[order], pval[order]

    while lo.size:
        mid = 0.5 * (lo + hi)
        whole = _gl_panels(f, lo, hi)
        halves = _gl_panels(f, lo, mid) + _gl_panels(f, mid, hi)
        if not np.all(np.isfinite(halves)):
            raise QuadratureError("integrand produced non-finite values")
        err = np.abs(whole - halves)
        # error below roundoff of the panel value cannot be reduced further
        floor = 64 * _EPS * np.abs(halves)
        total = done_val + halves.sum()
        tol = max(atol, rtol * abs(total))
        if done_err + err.sum() <= tol:
            settled = np.ones(lo.size, dtype=bool)
        else:
            share = tol / max(lo.size, 1) * 0.5
            settled = (err <= share) | (err <= floor)
        done_val += halves[settled].sum()
        done_err += err[settled].sum()
        if panels:
            kept[0].append(lo[settled])
            kept[1].append(hi[settled])
            kept[2].append(halves[settled])
        if settled.all():
            break
        lo_b, mid_b, hi_b = lo[~settled], mid[~settled], hi[~settled]
        used += lo_b.size
        if used > max_panels:
            raise QuadratureError(
                f"adaptive quadrature did not reach tolerance {tol:.3g} "
                f"(estimate {done_err + err.sum():.3g}) within {max_panels} panels")
        lo = np.concatenate([lo_b, mid_b])
        hi = np.concatenate([mid_b, hi_b])
    return finish(done_val, done_err)


def gl_partial(f, lo, x):
    """16-point Gauss-Legendre integral of ``f`` over [lo, x], vectorised over arrays."""
    lo = np.asarray(lo, dtype=float)
    x = np.asarray(x, dtype=float)
    return _gl_panels(f, lo.ravel(), x.ravel()).reshape(x.shape)


def integrate(f, a, b, rtol=1e-12, atol=0.0, graded=True, max_panels=20000):
    """Adaptive integral of ``f`` over [a, b]; panels graded toward both ends."""
    if not b > a:
        return 0.0
    pts = graded_points(a, b) if graded else np.array([a, b], dtype=float)
    return adaptive_gl(f, pts, rtol=rtol, atol=atol, max_panels=max_panels)[0]


def tanh_sinh(f, a, b, level=7, h0=1.0, tmax=6.5, complement=False):
    """Double-exponential quadrature of ``f`` over (a, b).

    Nodes are spaced ``h0 / 2**level`` apart in the transformed variable.
    With ``complement=True`` the integrand is called as ``f(x, b - x)`` where
    ``b - x`` is computed directly rather than by subtraction, so a
    singularity at ``b`` is resolved as finely as one at ``a``.
    """
    h = h0 / 2 ** level
    n = int(tmax / h)
    t = np.arange(-n, n + 1) * h
    s = 0.5 * math.pi * np.sinh(t)
    with np.errstate(over="ignore"):
        # distance to the nearer endpoint as a fraction of (b - a)
        d = 1.0 / (np.exp(2.0 * np.abs(s)) + 1.0)
        weight = 0.25 * math.pi * np.cosh(t) / np.cosh(s) ** 2
    length = b - a
    x = np.where(s < 0, a + length * d, b - length * d)
    xc = np.where(s < 0, length * (1.0 - d), length * d)
    ok = (x > a) & (xc > 0)
    vals = np.zeros_like(x)
    vals[ok] = f(x[ok], xc[ok]) if complement else f(x[ok])
    return float(h * length * np.sum(weight * vals))
