"""Compiled inner loops for 1-D analytic potentials.

These mirror ``dynamics.step_sampling`` / ``step_optimizing`` and
``baselines.fixed_temp_langevin_step`` operation for operation so that, fed
the same normal draws, they reproduce the generic path up to last-ulp
differences in ``exp``. Noise is pre-drawn by the caller in row-major blocks,
which consumes the generator stream in the same order as per-step draws.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

# divergence codes returned in ``status[1]``
VAR_NAMES = ("", "theta", "r", "alpha", "r_alpha")


@njit(cache=True)
def _potential(kind, params, x):
    if kind == 0:
        h = params[0]
        y = x * x - 1.0
        return h * y * y, 4.0 * h * x * y
    n = int(params[0])
    # log-sum-exp over components of log_norm_k - 0.5 * prec_k (x - mu_k)^2
    best = -np.inf
    for k in range(n):
        d = x - params[1 + n + k]
        t = params[1 + k] - 0.5 * params[1 + 2 * n + k] * d * d
        if t > best:
            best = t
    total = 0.0
    weighted = 0.0
    for k in range(n):
        d = x - params[1 + n + k]
        t = params[1 + k] - 0.5 * params[1 + 2 * n + k] * d * d
        e = math.exp(t - best)
        total += e
        weighted += e * params[1 + 2 * n + k] * d
    return -(best + math.log(total)), weighted / total


@njit(cache=True)
def _g(a, delta, delta_prime, s):
    a = abs(a)
    if a <= delta:
        return 1.0
    if a >= delta_prime:
        return 1.0 - s
    z = (a - delta) / (delta_prime - delta)
    return 1.0 - s * (3.0 * z * z - 2.0 * z * z * z)


@njit(cache=True)
def _dg(alpha, delta, delta_prime, s):
    a = abs(alpha)
    if a <= delta or a >= delta_prime:
        return 0.0
    width = delta_prime - delta
    z = (a - delta) / width
    sign = 1.0 if alpha >= 0.0 else -1.0
    return -sign * s * (6.0 * z - 6.0 * z * z) / width


@njit(cache=True)
def ctld_chunk(state, values, noise, start, n_steps, l_s,
               eta, gamma, gamma_alpha, delta, delta_prime, s, c,
               lo, hi, k, w, sigma, kind, params,
               out_u, out_beta, out_alpha, out_theta, out_phase, status):
    """Advance ``n_steps`` iterations starting at iteration ``start``.

    ``state`` is ``[theta, r, alpha, r_alpha]`` and is updated in place, as is
    the bias ``values`` array. ``noise`` has one row of two draws per sampling
    iteration in this chunk. On divergence ``status`` receives
    ``[iteration, variable code]`` and the loop stops.
    """
    theta = state[0]
    r = state[1]
    alpha = state[2]
    r_alpha = state[3]
    damp = 1.0 - eta * gamma
    damp_a = 1.0 - eta * gamma_alpha
    bw = (hi - lo) / k
    two_sig2 = 2.0 * sigma * sigma
    row = 0
    for j in range(n_steps):
        t = start + j
        theta = theta + eta * r
        u, grad = _potential(kind, params, theta)
        if t < l_s:
            g_prev = _g(alpha, delta, delta_prime, s)
            r = damp * r - eta * grad + math.sqrt(2.0 * eta * gamma / g_prev) * noise[row, 0]
            alpha = alpha + eta * r_alpha
            centre = min(max(alpha, lo), hi)
            for i in range(k + 1):
                diff = (lo + bw * i) - centre
                values[i] += w * math.exp(-(diff * diff) / two_sig2)
            kb = int(math.floor((centre - lo) / bw))
            kb = min(max(kb, 0), k - 1)
            bias = (values[kb + 1] - values[kb]) / bw
            if abs(alpha) <= delta_prime:
                phi = 0.0
            else:
                phi = c if alpha > 0.0 else -c
            h = -_dg(alpha, delta, delta_prime, s) * (u + r * r / 2.0) - phi - bias
            r_alpha = damp_a * r_alpha + eta * h + math.sqrt(2.0 * eta * gamma_alpha) * noise[row, 1]
            row += 1
            out_phase[j] = 0
        else:
            r = damp * r - eta * grad
            out_phase[j] = 1
        out_u[j] = u
        out_beta[j] = 1.0 / _g(alpha, delta, delta_prime, s)
        out_alpha[j] = alpha
        out_theta[j] = theta
        code = 0
        if not math.isfinite(theta):
            code = 1
        elif not (math.isfinite(r) and math.isfinite(u) and math.isfinite(grad)):
            code = 2
        elif not math.isfinite(alpha):
            code = 3
        elif not math.isfinite(r_alpha):
            code = 4
        if code != 0:
            status[0] = t
            status[1] = code
            break
    state[0] = theta
    state[1] = r
    state[2] = alpha
    state[3] = r_alpha


@njit(cache=True)
def langevin_chunk(state, noise, start, n_steps, eta, gamma, temp, kind, params,
                   out_u, out_theta, status):
    theta = state[0]
    r = state[1]
    damp = 1.0 - eta * gamma
    scale = math.sqrt(2.0 * eta * gamma * temp)
    for j in range(n_steps):
        theta = theta + eta * r
        u, grad = _potential(kind, params, theta)
        r = damp * r - eta * grad + scale * noise[j, 0]
        out_u[j] = u
        out_theta[j] = theta
        if not math.isfinite(theta):
            status[0] = start + j
            status[1] = 1
            break
        if not (math.isfinite(r) and math.isfinite(u)):
            status[0] = start + j
            status[1] = 2
            break
    state[0] = theta
    state[1] = r
