"""Random-walk paths under the original law and under the proposal kernel.

Paths start at S_0 = 0 and stop at tau = first n with S_n > b, or when a
step budget runs out. Under the proposal the running log dP/dQ is kept; the
exact sampler accepts a proposal path when log U <= log dP/dQ.

Every replication draws from its own stream, ``replication_rng(seed, i)``,
so results do not depend on how replications are scheduled.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .bgmeasure import BGMeasure
from .errors import BudgetExceeded, DirectnessViolation, DomainError
from .steplaw import StepLaw

DEFAULT_CAP = 10_000
DEFAULT_GUARD = 10_000_000
CSV_FIELDS = ("run_id", "tau", "s_tau", "log_lr", "crossed", "guard_hit", "accepted")


def replication_rng(seed, *key):
    """PCG64 stream for replication ``key``: SeedSequence(seed, spawn_key=key)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class PathRecord:
    """One path. ``states`` holds S_0.. up to the storage cap only."""

    tau: int
    s_tau: float
    crossed: bool
    log_lr: float = 0.0
    guard_hit: bool = False
    states: np.ndarray = field(default_factory=lambda: np.zeros(1), repr=False)
    accepted: bool = False
    run_id: int = 0
    attempts: int = 1
    violations: int = 0

    @property
    def complete(self):
        """True when every state up to tau is stored."""
        return self.states.size == self.tau + 1

    def overshoot(self, b):
        return self.s_tau - b

    def row(self):
        return {"run_id": self.run_id, "tau": self.tau, "s_tau": repr(float(self.s_tau)),
                "log_lr": repr(float(self.log_lr)), "crossed": int(self.crossed),
                "guard_hit": int(self.guard_hit), "accepted": int(self.accepted)}


def _buffer(cap):
    return np.empty(max(int(cap), 1))


def walk_under_p(step: StepLaw, horizon, b, rng, cap=DEFAULT_CAP):
    """Walk with iid steps until the first crossing of b or ``horizon`` steps."""
    horizon = int(horizon)
    if horizon < 1:
        raise DomainError("horizon must be at least 1")
    states = _buffer(cap)
    tau, s_tau, crossed, stored = K.p_walk(rng, float(b), horizon, states, *step.params())
    return PathRecord(int(tau), float(s_tau), bool(crossed), 0.0, False, states[:stored].copy())


def walk_under_q(measure: BGMeasure, guard, rng, cap=DEFAULT_CAP):
    """Walk under the kernel until crossing or ``guard`` steps; log_lr accumulated on the way."""
    guard = int(guard)
    if guard < 1:
        raise DomainError("guard must be at least 1")
    t_lo, bounds, coefs = measure.table.arrays()
    alpha, a, lam, z0, em = measure._params()
    states = _buffer(cap)
    tau, s_tau, log_lr, crossed, guard_hit, stored = K.q_walk(
        rng, measure.b, measure.c, guard, states, alpha, a, lam, z0, em, t_lo, bounds, coefs)
    return PathRecord(int(tau), float(s_tau), bool(crossed), float(log_lr), bool(guard_hit),
                      states[:stored].copy())


def _decide(measure, path, rng, strict):
    # one uniform per proposal path, drawn after the path from the same stream
    u = rng.random()
    if path.crossed and path.log_lr > 0.0:
        if strict:
            raise DirectnessViolation(
                f"proposal path with log dP/dQ = {path.log_lr:.6g} > 0 (b={measure.b}, c={measure.c})",
                path=path)
        path.violations = 1
    path.accepted = bool(path.crossed and math.log1p(-u) <= path.log_lr)
    return path.accepted


def ar_attempt(measure, guard, rng, horizon=None, strict=True, cap=DEFAULT_CAP):
    """One proposal path plus its accept/reject decision.

    With ``horizon`` the path is cut at that many steps and a cut path is
    rejected; the accepted paths are then exact draws from P(. | tau <= horizon).
    """
    limit = int(guard) if horizon is None else min(int(guard), int(horizon))
    path = walk_under_q(measure, limit, rng, cap)
    if path.guard_hit and horizon is not None and limit == int(horizon):
        # cut by the horizon, not by the guard
        path.guard_hit = int(horizon) >= int(guard)
    _decide(measure, path, rng, strict)
    return path


def ar_exact_sample(measure, guard=DEFAULT_GUARD, rng=None, horizon=None, strict=True,
                    max_attempts=None, cap=DEFAULT_CAP):
    """Draw proposal paths until one is accepted.

    Returns ``(path, attempts)``. A guard hit raises BudgetExceeded. A
    crossing path with log dP/dQ > 0 raises DirectnessViolation in strict
    mode; otherwise it is accepted with probability one and counted in
    ``path.violations``.
    """
    attempts = violations = 0
    while True:
        attempts += 1
        path = ar_attempt(measure, guard, rng, horizon, strict, cap)
        violations += path.violations
        if path.guard_hit:
            raise BudgetExceeded(f"proposal path reached the guard of {guard} steps")
        if path.accepted:
            path.violations = violations
            return path, attempts
        if max_attempts is not None and attempts >= max_attempts:
            raise BudgetExceeded(f"no acceptance within {max_attempts} attempts")


def bernoulli_crossing(measure, guard=DEFAULT_GUARD, rng=None, horizon=None, strict=True,
                       cap=DEFAULT_CAP):
    """One proposal path and an indicator with mean P(tau_b < inf) (or P(tau_b <= horizon))."""
    path = ar_attempt(measure, guard, rng, horizon, strict, cap)
    if path.guard_hit:
        raise BudgetExceeded(f"proposal path reached the guard of {guard} steps")
    return int(path.accepted), path


def naive_conditional(step, horizon, b, want, rng, max_attempts=None, cap=DEFAULT_CAP,
                      return_attempts=False):
    """Plain walks kept when they cross within ``horizon``: exact draws from P(. | tau_b <= horizon)."""
    kept = []
    attempts = 0
    while len(kept) < want:
        if max_attempts is not None and attempts >= max_attempts:
            raise BudgetExceeded(f"only {len(kept)} of {want} crossing paths in {attempts} attempts")
        attempts += 1
        path = walk_under_p(step, horizon, b, rng, cap)
        if path.crossed:
            path.accepted = True
            kept.append(path)
    return (kept, attempts) if return_attempts else kept


# -- replicated runs ----------------------------------------------------------------

def _one(kind, payload, law, rng):
    if kind == "p":
        p = walk_under_p(law, payload["horizon"], payload["b"], rng, cap=1)
        p.accepted = p.crossed
    elif kind == "naive":
        kept, attempts = naive_conditional(law, payload["horizon"], payload["b"], 1, rng,
                                           payload.get("max_attempts"), cap=1,
                                           return_attempts=True)
        p = kept[0]
        p.attempts = attempts
    elif kind == "q":
        p = walk_under_q(law, payload["guard"], rng, cap=1)
    elif kind == "ar":
        p = ar_attempt(law, payload["guard"], rng, payload.get("horizon"),
                       payload.get("strict", True), cap=1)
    elif kind == "ar_sample":
        p, attempts = ar_exact_sample(law, payload["guard"], rng, payload.get("horizon"),
                                      payload.get("strict", True), payload.get("max_attempts"),
                                      cap=1)
        p.attempts = attempts
    else:
        raise ValueError(f"unknown replication kind {kind!r}")
    return p


def _run_chunk(task):
    kind, payload, seed, key, indices, stop_on_guard = task
    if kind in ("p", "naive"):
        law = StepLaw.from_dict(payload["step"])
    else:
        law = BGMeasure.from_dict(payload["measure"])
    out = []
    for i in indices:
        p = _one(kind, payload, law, replication_rng(seed, *key, i))
        p.run_id = i
        out.append(p)
        if stop_on_guard and p.guard_hit:
            break
    return out


def run_replications(kind, payload, seed, n, key=(), workers=1, chunk=500, stop_on_guard=False):
    """Run replications 0..n-1 of one kind; results come back in index order.

    Kinds: "p" (plain walk to the horizon), "naive" (plain walks until one
    crosses within the horizon), "q" (proposal walk), "ar" (one proposal
    path with its accept/reject decision), "ar_sample" (proposal paths until
    one is accepted). ``payload`` is a plain dict holding the step or
    measure as a dict plus b, horizon, guard, strict and max_attempts, so
    that it can be shipped to worker processes. Replication i draws from
    ``replication_rng(seed, *key, i)``. With ``stop_on_guard`` the run
    ends right after the first guard hit.
    """
    chunks = [range(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    tasks = [(kind, payload, seed, tuple(key), ch, stop_on_guard) for ch in chunks]
    results = []
    if workers <= 1:
        for t in tasks:
            part = _run_chunk(t)
            results.extend(part)
            if stop_on_guard and part and part[-1].guard_hit:
                break
        return results
    with ProcessPoolExecutor(max_workers=workers) as ex:
        for part in ex.map(_run_chunk, tasks):
            results.extend(part)
            if stop_on_guard and part and part[-1].guard_hit:
                ex.shutdown(wait=False, cancel_futures=True)
                break
    return results
