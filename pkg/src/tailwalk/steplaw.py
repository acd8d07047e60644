"""Step-size laws with a regularly varying right tail and bounded-below support.

Both families are shifted generalized Pareto laws

    P(X > t) = (1 + (t - a) / lam) ** (-alpha),   t >= a,

with left endpoint ``a`` and scale ``lam``:

* ``shifted_lomax``:  a = -m,        lam = sigma
* ``shifted_pareto``: a = x_m - m,   lam = x_m

so every evaluator below is written once in terms of ``(alpha, a, lam)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError

FAMILIES = ("shifted_lomax", "shifted_pareto")
FAMILY_CODES = {name: i for i, name in enumerate(FAMILIES)}


@dataclass(frozen=True)
class StepLaw:
    family: str
    alpha: float
    scale: float
    m: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConstructionError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        for name in ("alpha", "scale", "m"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ConstructionError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.alpha <= 1.0:
            raise ConstructionError(f"tail index must exceed 1 for a finite mean, got {self.alpha}")
        if self.scale <= 0.0:
            raise ConstructionError(f"scale must be positive, got {self.scale}")
        if self.mean() >= 0.0:
            raise ConstructionError(f"step law needs negative drift, mean is {self.mean():.6g}")

    # -- constructors -------------------------------------------------------

    @classmethod
    def shifted_lomax(cls, alpha, sigma, m):
        return cls("shifted_lomax", alpha, sigma, m)

    @classmethod
    def shifted_pareto(cls, alpha, x_m, m):
        return cls("shifted_pareto", alpha, x_m, m)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        family = d.pop("family", None)
        try:
            if family == "shifted_lomax":
                law = cls.shifted_lomax(d.pop("alpha"), d.pop("sigma"), d.pop("m"))
            elif family == "shifted_pareto":
                law = cls.shifted_pareto(d.pop("alpha"), d.pop("x_m"), d.pop("m"))
            else:
                raise ConstructionError(f"unknown family {family!r}")
        except KeyError as exc:
            raise ConstructionError(f"missing step-law field {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ConstructionError(str(exc)) from None
        if d:
            raise ConstructionError(f"unexpected step-law fields {sorted(d)}")
        return law

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_dict(self):
        key = "sigma" if self.family == "shifted_lomax" else "x_m"
        return {"family": self.family, "alpha": self.alpha, key: self.scale, "m": self.m}

    def to_json(self):
        return json.dumps(self.to_dict())

    # -- parametrisation ----------------------------------------------------

    @property
    def left(self):
        """Left endpoint of the support."""
        if self.family == "shifted_lomax":
            return -self.m
        return self.scale - self.m

    @property
    def code(self):
        return FAMILY_CODES[self.family]

    def params(self):
        """``(alpha, left, scale)`` tuple consumed by the compiled kernels."""
        return self.alpha, self.left, self.scale

    # -- distribution functions ---------------------------------------------

    def _base(self, t):
        # 1 + (t - a)/lam, clipped at 1 on the left of the support
        return 1.0 + np.maximum(np.asarray(t, dtype=float) - self.left, 0.0) / self.scale

    def sf(self, t):
        """P(X > t)."""
        out = self._base(t) ** (-self.alpha)
        return out if np.ndim(out) else float(out)

    def cdf(self, t):
        """P(X <= t); computed as -expm1 to keep precision near the left endpoint."""
        out = -np.expm1(-self.alpha * np.log(self._base(t)))
        return out if np.ndim(out) else float(out)

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        out = np.where(t >= self.left, self.alpha / self.scale * self._base(t) ** (-self.alpha - 1.0), 0.0)
        return out if np.ndim(out) else float(out)

    def mean(self):
        return self.left + self.scale / (self.alpha - 1.0)

    def integrated_tail(self, t):
        """Integral of sf over [t, inf), closed form; linear to the left of the support."""
        t = np.asarray(t, dtype=float)
        at_left = self.scale / (self.alpha - 1.0)
        tail = self.scale * self._base(t) ** (1.0 - self.alpha) / (self.alpha - 1.0)
        out = np.where(t >= self.left, tail, at_left + (self.left - t))
        return out if np.ndim(out) else float(out)

    def tail_integral_between(self, t1, t2):
        """Integral of sf over [t1, t2] (t1 <= t2), free of cancellation for t2 near t1."""
        t1 = np.asarray(t1, dtype=float)
        return self.tail_integral_span(t1, np.maximum(np.asarray(t2, dtype=float) - t1, 0.0))

    def tail_integral_span(self, t1, y):
        """Integral of sf over [t1, t1 + y] for y >= 0, using only the length y."""
        t1 = np.asarray(t1, dtype=float)
        y = np.maximum(np.asarray(y, dtype=float), 0.0)
        a = self.left
        linear = np.clip(a - t1, 0.0, y)
        u1 = np.maximum(t1, a)
        power = -self.integrated_tail(u1) * np.expm1(
            (1.0 - self.alpha) * np.log1p((y - linear) / (self.scale + u1 - a)))
        out = linear + power
        return out if np.ndim(out) else float(out)

    def integrated_tail_inverse(self, y):
        """Solve integrated_tail(t) = y for t (y > 0)."""
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0.0):
            raise DomainError("integrated tail is positive; cannot invert a nonpositive value")
        at_left = self.scale / (self.alpha - 1.0)
        with np.errstate(over="ignore"):
            base = ((self.alpha - 1.0) * np.minimum(y, at_left) / self.scale) ** (1.0 / (1.0 - self.alpha))
        power = self.left + self.scale * (base - 1.0)
        out = np.where(y <= at_left, power, self.left - (y - at_left))
        return out if np.ndim(out) else float(out)

    def quantile(self, u):
        """Return t with sf(t) = u, for u in (0, 1]."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0.0) | (u > 1.0)) or np.any(np.isnan(u)):
            raise DomainError("quantile argument must lie in (0, 1]")
        out = self.left + self.scale * np.expm1(-np.log(u) / self.alpha)
        return out if np.ndim(out) else float(out)

    def sample(self, rng, size=None):
        # 1 - random() lies in (0, 1]
        return self.quantile(1.0 - rng.random(size))

    def sample_step(self, rng):
        return float(self.quantile(1.0 - rng.random()))

    def sf_excess(self, t, s):
        """sf(t - s) - sf(t) without cancellation (t inside the support)."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        inside = t - s >= self.left
        arg = np.where(inside, -s / (self.scale + t - self.left), 0.0)
        ratio_m1 = np.expm1(-self.alpha * np.log1p(arg))
        out = np.where(inside, self.sf(t) * ratio_m1, 1.0 - self.sf(t))
        return out if np.ndim(out) else float(out)


# Canonical configurations; all three have mean -1.
CONFIG_A = StepLaw.shifted_lomax(1.2, 1.0, 6.0)
CONFIG_B = StepLaw.shifted_lomax(1.8, 1.0, 2.25)
CONFIG_C = StepLaw.shifted_lomax(2.5, 1.0, 5.0 / 3.0)
CANONICAL = {"A": CONFIG_A, "B": CONFIG_B, "C": CONFIG_C}
