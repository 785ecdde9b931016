"""Reference optimizers: momentum SGD, fixed-temperature Langevin and annealed SGD."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import (
    CHUNK,
    ChainRng,
    DivergenceError,
    ExtendedState,
    Phase,
    RunResult,
    StepTrace,
    TraceSeries,
    draw_minibatch,
)
from .objectives.base import Objective, stochastic_potential


def _require_finite(**arrays):
    for name, v in arrays.items():
        if not np.all(np.isfinite(v)):
            raise DivergenceError(name)


@dataclass(frozen=True)
class AnnealSchedule:
    """Polynomial cooling T(t) = c / (a + t)^b."""

    a: float = 1.0
    b: float = 0.75
    c: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"a must be positive, got {self.a}")
        if not 0.5 < self.b < 1.0:
            raise ValueError(f"b must lie in (0.5, 1), got {self.b}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")

    def temperature(self, t) -> float:
        return self.c / (self.a + t) ** self.b


def sgd_momentum_step(theta, velocity, grad, lr, mu):
    """velocity <- mu * velocity - lr * grad; theta <- theta + velocity."""
    _require_finite(theta=theta, velocity=velocity, grad=grad)
    velocity = mu * velocity - lr * grad
    return theta + velocity, velocity


def anneal_sgd_step(theta, grad, lr, schedule: AnnealSchedule, t, rng: np.random.Generator):
    """Euler-Maruyama step of Brownian dynamics at temperature ``schedule(t)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    _require_finite(theta=theta, grad=grad)
    theta = np.asarray(theta, dtype=float)
    noise = rng.standard_normal(theta.size)
    return theta - lr * grad + math.sqrt(2.0 * lr * schedule.temperature(t)) * noise


def fixed_temp_langevin_step(theta, r, grad_fn, lr, gamma, temp, rng: np.random.Generator):
    """Second-order Langevin step at constant temperature ``temp``.

    Same ordering as the tempered sampler: drift ``theta`` with the old
    momentum, evaluate ``grad_fn`` at the new position, then update ``r``.
    Returns ``(theta, r, grad)``.
    """
    if not temp > 0:
        raise ValueError("temp must be positive")
    theta = theta + lr * r
    grad = grad_fn(theta)
    _require_finite(theta=theta, grad=grad)
    eps = rng.standard_normal(np.size(theta))
    r = (1.0 - lr * gamma) * r - lr * grad + math.sqrt(2.0 * lr * gamma * temp) * eps
    _require_finite(r=r)
    return theta, r, grad


def _trace_put(trace, j, u, noise, phase, theta):
    trace.put(j, StepTrace(j + 1, float(u), noise, 0.0, phase), theta)


def run_sgd_momentum(obj: Objective, theta0, lr, mu, n_steps, seed=0, m=1,
                     velocity0=None, record_theta=False) -> RunResult:
    """Momentum SGD from ``theta0``; the gradient at step t uses the current iterate.

    Minibatches come from the same stream a tempered run with ``seed`` uses,
    so matched seeds give matched index sequences.
    """
    rng = ChainRng.from_seed(seed)
    theta = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    v = np.zeros_like(theta) if velocity0 is None else np.asarray(velocity0, float).copy()
    trace = TraceSeries.empty(n_steps, theta.size if record_theta else 0)
    for j in range(n_steps):
        u, grad = stochastic_potential(obj, theta, draw_minibatch(obj, m, rng))
        try:
            theta, v = sgd_momentum_step(theta, v, grad, lr, mu)
            _require_finite(theta=theta, U=u)
        except DivergenceError as err:
            raise DivergenceError(err.variable, j + 1) from None
        _trace_put(trace, j, u, 0.0, Phase.OPTIMIZING, theta)
    return RunResult(ExtendedState(theta, v), trace)


def run_anneal_sgd(obj: Objective, theta0, lr, schedule: AnnealSchedule, n_steps, seed=0,
                   m=1, record_theta=False) -> RunResult:
    rng = ChainRng.from_seed(seed)
    theta = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    trace = TraceSeries.empty(n_steps, theta.size if record_theta else 0)
    for j in range(n_steps):
        u, grad = stochastic_potential(obj, theta, draw_minibatch(obj, m, rng))
        try:
            theta = anneal_sgd_step(theta, grad, lr, schedule, j, rng.noise)
            _require_finite(theta=theta, U=u)
        except DivergenceError as err:
            raise DivergenceError(err.variable, j + 1) from None
        _trace_put(trace, j, u, schedule.temperature(j), Phase.SAMPLING, theta)
    return RunResult(ExtendedState(theta, np.zeros_like(theta)), trace)


def run_fixed_langevin(obj: Objective, theta0, eta, gamma, temp, n_steps, seed=0, m=1,
                       record_theta=False, fast=None) -> RunResult:
    """Constant-temperature Langevin chain with ``r0 ~ N(0, I)``.

    ``fast=None`` uses the compiled loop for 1-D analytic potentials.
    """
    rng = ChainRng.from_seed(seed)
    theta = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    r = rng.noise.standard_normal(theta.size)
    spec = obj.kernel_spec()
    if fast is None:
        fast = spec is not None
    trace = TraceSeries.empty(n_steps, theta.size if record_theta else 0)
    trace.noise_magnitude[:] = temp

    if fast:
        if spec is None:
            raise ValueError("compiled path only supports 1-D analytic potentials")
        kind, params = spec
        packed = np.array([theta[0], r[0]])
        path = np.empty(n_steps)
        status = np.zeros(2, dtype=np.int64)
        for start in range(0, n_steps, CHUNK):
            n = min(CHUNK, n_steps - start)
            noise = rng.noise.standard_normal((n, 1))
            sl = slice(start, start + n)
            _kernels.langevin_chunk(packed, noise, start + 1, n, eta, gamma, temp, kind, params,
                                    trace.potential[sl], path[sl], status)
            if status[0] != 0:
                raise DivergenceError(_kernels.VAR_NAMES[status[1]], int(status[0]))
        if record_theta:
            trace.theta[:, 0] = path
        return RunResult(ExtendedState([packed[0]], [packed[1]]), trace, None, {"theta_path": path})

    cache = {}

    def grad_fn(x):
        cache["u"], g = stochastic_potential(obj, x, draw_minibatch(obj, m, rng))
        return g

    for j in range(n_steps):
        try:
            theta, r, _ = fixed_temp_langevin_step(theta, r, grad_fn, eta, gamma, temp, rng.noise)
        except DivergenceError as err:
            raise DivergenceError(err.variable, j + 1) from None
        _trace_put(trace, j, cache["u"], temp, Phase.SAMPLING, theta)
    return RunResult(ExtendedState(theta, r), trace)
