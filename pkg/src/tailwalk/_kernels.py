"""Compiled inner loops: step and residual draws, the conditional kernel, path walks.

Every function takes the step law as ``(alpha, a, lam)`` (tail index, left
endpoint, scale) and the residual law through ``(z0, em)`` with
``em = |E X|``. The log-ratio table is passed as plain arrays; see
``bgmeasure.LogRatioTable`` for its layout.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def sf(t, alpha, a, lam):
    if t <= a:
        return 1.0
    return math.exp(-alpha * math.log1p((t - a) / lam))


@njit(cache=True)
def log_itail(t, alpha, a, lam):
    """log of the integrated tail int_t^inf sf."""
    if t >= a:
        return math.log(lam / (alpha - 1.0)) + (1.0 - alpha) * math.log1p((t - a) / lam)
    return math.log(lam / (alpha - 1.0) + (a - t))


@njit(cache=True)
def log_rtail(t, alpha, a, lam, z0, em):
    """log P(Z > t)."""
    if t <= z0:
        return 0.0
    return min(0.0, log_itail(t, alpha, a, lam) - math.log(em))


@njit(cache=True)
def x_from_log_u(log_u, alpha, a, lam):
    # sf(x) = u
    return a + lam * math.expm1(-log_u / alpha)


@njit(cache=True)
def draw_x(rng, alpha, a, lam):
    return x_from_log_u(math.log(1.0 - rng.random()), alpha, a, lam)


@njit(cache=True)
def draw_x_above(rng, r, alpha, a, lam):
    """X conditioned on X > r."""
    if r <= a:
        return draw_x(rng, alpha, a, lam)
    log_u = math.log(1.0 - rng.random())
    return a + lam * math.expm1(-log_u / alpha + math.log1p((r - a) / lam))


@njit(cache=True)
def z_from_log_itail(log_y, alpha, a, lam):
    # integrated_tail(z) = exp(log_y)
    at_left = lam / (alpha - 1.0)
    if log_y <= math.log(at_left):
        return a + lam * math.expm1((log_y - math.log(at_left)) / (1.0 - alpha))
    return a - (math.exp(log_y) - at_left)


@njit(cache=True)
def draw_z(rng, alpha, a, lam, em):
    log_u = math.log(1.0 - rng.random())
    return z_from_log_itail(log_u + math.log(em), alpha, a, lam)


@njit(cache=True)
def draw_z_above(rng, r, alpha, a, lam, z0, em):
    """Z conditioned on Z > r."""
    if r <= z0:
        return draw_z(rng, alpha, a, lam, em)
    log_u = math.log(1.0 - rng.random())
    return z_from_log_itail(log_u + log_itail(r, alpha, a, lam), alpha, a, lam)


@njit(cache=True)
def kernel_increment(rng, s, alpha, a, lam, z0, em):
    """Exact draw of X given X + Z > s.

    On {X + Z > s} at least one of X, Z exceeds r = s/2. Propose from the
    mixture of "X | X > r, Z free" and "Z | Z > r, X free" with weights
    sf(r) and P(Z > r); the target-to-proposal density ratio is
    proportional to 1{x + z > s} / (1{x > r} + 1{z > r}) <= 1.
    """
    if s <= a + z0:
        return draw_x(rng, alpha, a, lam)
    r = 0.5 * s
    px = sf(r, alpha, a, lam)
    pz = math.exp(log_rtail(r, alpha, a, lam, z0, em))
    tot = px + pz
    while True:
        if rng.random() * tot < px:
            x = draw_x_above(rng, r, alpha, a, lam)
            z = draw_z(rng, alpha, a, lam, em)
        else:
            z = draw_z_above(rng, r, alpha, a, lam, z0, em)
            x = draw_x(rng, alpha, a, lam)
        if x + z > s:
            if x > r and z > r:
                if rng.random() < 0.5:
                    return x
            else:
                return x


@njit(cache=True)
def kernel_increments(rng, s, n, alpha, a, lam, z0, em):
    out = np.empty(n)
    for i in range(n):
        out[i] = kernel_increment(rng, s, alpha, a, lam, z0, em)
    return out


@njit(cache=True)
def draw_x_many(rng, n, alpha, a, lam):
    out = np.empty(n)
    for i in range(n):
        out[i] = draw_x(rng, alpha, a, lam)
    return out


@njit(cache=True)
def draw_z_many(rng, n, alpha, a, lam, em):
    out = np.empty(n)
    for i in range(n):
        out[i] = draw_z(rng, alpha, a, lam, em)
    return out


# -- log-ratio table -------------------------------------------------------------

@njit(cache=True)
def _clenshaw(coef, x):
    b1 = 0.0
    b2 = 0.0
    for k in range(coef.shape[0] - 1, 0, -1):
        b1, b2 = 2.0 * x * b1 - b2 + coef[k], b1
    return x * b1 - b2 + coef[0]


@njit(cache=True)
def psi_eval(xi, bounds, coefs):
    i = np.searchsorted(bounds, xi) - 1
    if i < 0:
        i = 0
    elif i > bounds.shape[0] - 2:
        i = bounds.shape[0] - 2
    lo = bounds[i]
    hi = bounds[i + 1]
    x = (2.0 * xi - lo - hi) / (hi - lo)
    return _clenshaw(coefs[i], x)


@njit(cache=True)
def phi_weight(s, t_lo, alpha, a, lam):
    """sf(s) * d^2 / (d^2 + lam^2) with d = s - t_lo; phi / weight stays bounded."""
    d = (s - t_lo) / lam
    return sf(s, alpha, a, lam) * d * d / (1.0 + d * d)


@njit(cache=True)
def phi(s, t_lo, bounds, coefs, alpha, a, lam):
    """log w(-s) - log R(s), stored as psi(log(s - t_lo)) * phi_weight(s)."""
    if s <= t_lo:
        return 0.0
    xi = math.log(s - t_lo)
    # psi is flat beyond both ends of the table
    xi = min(max(xi, bounds[0]), bounds[-1])
    return psi_eval(xi, bounds, coefs) * phi_weight(s, t_lo, alpha, a, lam)


@njit(cache=True)
def phi_many(s, t_lo, bounds, coefs, alpha, a, lam):
    out = np.empty(s.shape[0])
    for i in range(s.shape[0]):
        out[i] = phi(s[i], t_lo, bounds, coefs, alpha, a, lam)
    return out


# -- walks --------------------------------------------------------------------------

@njit(cache=True)
def p_walk(rng, b, horizon, states, alpha, a, lam):
    """Unconditioned walk from 0 until S_n > b or n = horizon.

    Returns (tau, S_tau, crossed, stored); states[:stored] holds S_0.. up to
    the buffer length.
    """
    cap = states.shape[0]
    S = 0.0
    states[0] = S
    n = 0
    crossed = False
    while n < horizon:
        S += draw_x(rng, alpha, a, lam)
        n += 1
        if n < cap:
            states[n] = S
        if S > b:
            crossed = True
            break
    return n, S, crossed, min(n + 1, cap)


@njit(cache=True)
def q_walk(rng, b, c, guard, states, alpha, a, lam, z0, em, t_lo, bounds, coefs):
    """Walk under the conditional kernel with running log dP/dQ.

    log_lr = log w(S_0-b-c) + sum_{1<=n<tau} [log w - log v](S_n-b-c)
             - log v(S_tau-b-c), with w/v carried by the table as phi.
    Returns (tau, S_tau, log_lr, crossed, guard_hit, stored).
    """
    cap = states.shape[0]
    S = 0.0
    states[0] = S
    s = b + c
    log_lr = phi(s, t_lo, bounds, coefs, alpha, a, lam) + log_rtail(s, alpha, a, lam, z0, em)
    n = 0
    crossed = False
    guard_hit = False
    while True:
        S += kernel_increment(rng, s, alpha, a, lam, z0, em)
        n += 1
        if n < cap:
            states[n] = S
        if S > b:
            crossed = True
            log_lr -= log_rtail(b + c - S, alpha, a, lam, z0, em)
            break
        if n >= guard:
            guard_hit = True
            break
        s = b + c - S
        log_lr += phi(s, t_lo, bounds, coefs, alpha, a, lam)
    return n, S, log_lr, crossed, guard_hit, min(n + 1, cap)
