"""Continuously tempered Langevin dynamics.

A run has two phases. Iterations ``t < l_s`` sample: the momentum receives
noise scaled by ``1 / g(alpha)`` while ``alpha`` itself follows Langevin
dynamics driven by the coupling force, the confining well and a
metadynamics bias. Later iterations drop the noise and the ``alpha``
machinery, which leaves SGD with momentum ``1 - eta * gamma`` and learning
rate ``eta ** 2``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .metadynamics import DEFAULT_BINS, DEFAULT_SIGMA, BiasGrid, bias_force, deposit
from .objectives.base import Objective, stochastic_potential
from .tempering import TemperingConfig, confining_force, dg_dalpha, g_alpha

CHUNK = 1 << 16


class Phase(str, Enum):
    SAMPLING = "Sampling"
    OPTIMIZING = "Optimizing"


class DivergenceError(FloatingPointError):
    """A dynamical variable became NaN or infinite."""

    def __init__(self, variable: str, iteration: int | None = None):
        self.variable = variable
        self.iteration = iteration
        where = "" if iteration is None else f" at iteration {iteration}"
        super().__init__(f"divergence{where}: {variable} is not finite")


@dataclass
class ExtendedState:
    theta: np.ndarray
    r: np.ndarray
    alpha: float = 0.0
    r_alpha: float = 0.0

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        self.r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if self.theta.shape != self.r.shape or self.theta.ndim != 1:
            raise ValueError(
                f"theta and r must be vectors of equal length, got {self.theta.shape} "
                f"and {self.r.shape}"
            )
        self.alpha = float(self.alpha)
        self.r_alpha = float(self.r_alpha)

    def copy(self) -> "ExtendedState":
        return ExtendedState(self.theta.copy(), self.r.copy(), self.alpha, self.r_alpha)

    def check_finite(self, iteration=None) -> None:
        for name in ("theta", "r", "alpha", "r_alpha"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DivergenceError(name, iteration)


@dataclass(frozen=True)
class HyperParams:
    eta: float
    c_m: float
    gamma: float
    gamma_alpha: float
    l_s: int
    m: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.c_m < 1.0:
            raise ValueError(f"c_m must lie in [0, 1), got {self.c_m}")
        if not (self.gamma > 0 and self.gamma_alpha > 0):
            raise ValueError("friction coefficients must be positive")
        if self.l_s < 1 or self.m < 1:
            raise ValueError("l_s and m must be positive integers")

    @property
    def momentum(self) -> float:
        """Equivalent SGD momentum coefficient."""
        return 1.0 - self.eta * self.gamma

    @property
    def sgd_learning_rate(self) -> float:
        return self.eta * self.eta


@dataclass(frozen=True)
class CTLDSettings:
    """Everything a run needs besides the objective and the start point."""

    hyper: HyperParams
    tempering: TemperingConfig
    w: float
    sigma: float = DEFAULT_SIGMA
    k: int = DEFAULT_BINS

    def new_grid(self) -> BiasGrid:
        return BiasGrid.symmetric(self.tempering.delta_prime, k=self.k, w=self.w, sigma=self.sigma)


def derive_hyperparams(eta, c_m, l_s, tempering: TemperingConfig | None = None,
                       k=DEFAULT_BINS, m=1, seed=0, sigma=DEFAULT_SIGMA) -> CTLDSettings:
    """Fill in every setting from the learning rate and momentum.

    gamma = (1 - c_m) / eta, gamma_alpha = 1 / eta, C = delta' / eta^2 and
    w = 20 / (eta^2 l_s k).
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    if not 0.0 <= c_m < 1.0:
        raise ValueError(f"c_m must lie in [0, 1), got {c_m}")
    if l_s < 1:
        raise ValueError("l_s must be a positive integer")
    tempering = tempering or TemperingConfig()
    hyper = HyperParams(
        eta=eta,
        c_m=c_m,
        gamma=(1.0 - c_m) / eta,
        gamma_alpha=1.0 / eta,
        l_s=int(l_s),
        m=int(m),
        seed=int(seed),
    )
    tempering = replace(tempering, c=tempering.delta_prime / eta**2)
    w = 20.0 / (eta**2 * l_s * k)
    return CTLDSettings(hyper=hyper, tempering=tempering, w=w, sigma=sigma, k=int(k))


@dataclass
class StepTrace:
    iter: int
    potential_estimate: float
    noise_magnitude: float
    alpha: float
    phase: Phase


class ChainRng:
    """Independent streams for injected noise and minibatch selection."""

    def __init__(self, noise: np.random.Generator, batch: np.random.Generator):
        self.noise = noise
        self.batch = batch

    @classmethod
    def from_seed(cls, seed: int) -> "ChainRng":
        noise_seq, batch_seq = np.random.SeedSequence(seed).spawn(2)
        return cls(np.random.default_rng(noise_seq), np.random.default_rng(batch_seq))


def draw_minibatch(obj: Objective, m: int, rng: ChainRng):
    """Index set for one step, or ``None`` when the full data is used."""
    if obj.data_size == 1:
        return None
    if m > obj.data_size:
        raise ValueError(f"minibatch size {m} exceeds dataset size {obj.data_size}")
    if m == obj.data_size:
        return None
    return rng.batch.choice(obj.data_size, size=m, replace=False)


def _check(iteration, **values):
    for name, v in values.items():
        if not np.all(np.isfinite(v)):
            raise DivergenceError(name, iteration)


def step_sampling(state: ExtendedState, obj: Objective, hp: HyperParams,
                  tempering: TemperingConfig, grid: BiasGrid, rng: ChainRng,
                  iteration: int | None = None):
    """One exploration iteration.

    Returns ``(new_state, grid, trace)``; ``grid`` is updated in place.
    """
    eta = hp.eta
    theta = state.theta + eta * state.r
    u, grad = stochastic_potential(obj, theta, draw_minibatch(obj, hp.m, rng))
    _check(iteration, theta=theta, U=u, grad_U=grad)

    g_prev = g_alpha(state.alpha, tempering)
    scale = math.sqrt(2.0 * eta * hp.gamma / g_prev)
    eps = rng.noise.standard_normal(theta.size)
    r = (1.0 - eta * hp.gamma) * state.r - eta * grad + scale * eps

    alpha = state.alpha + eta * state.r_alpha
    _check(iteration, r=r, alpha=alpha)
    deposit(grid, alpha)
    h = (-dg_dalpha(alpha, tempering) * (u + float(r @ r) / 2.0)
         - confining_force(alpha, tempering) - bias_force(grid, alpha))
    eps_a = rng.noise.standard_normal()
    r_alpha = ((1.0 - eta * hp.gamma_alpha) * state.r_alpha + eta * h
               + math.sqrt(2.0 * eta * hp.gamma_alpha) * eps_a)
    _check(iteration, r_alpha=r_alpha)

    new = ExtendedState(theta, r, alpha, r_alpha)
    trace = StepTrace(iteration if iteration is not None else -1, float(u),
                      1.0 / g_alpha(alpha, tempering), alpha, Phase.SAMPLING)
    return new, grid, trace


def step_optimizing(state: ExtendedState, obj: Objective, hp: HyperParams, rng: ChainRng,
                    iteration: int | None = None, tempering: TemperingConfig | None = None):
    """One fine-tuning iteration: momentum SGD, no noise, alpha frozen."""
    eta = hp.eta
    theta = state.theta + eta * state.r
    u, grad = stochastic_potential(obj, theta, draw_minibatch(obj, hp.m, rng))
    r = (1.0 - eta * hp.gamma) * state.r - eta * grad
    _check(iteration, theta=theta, r=r, U=u)
    new = ExtendedState(theta, r, state.alpha, state.r_alpha)
    beta = 1.0 if tempering is None else 1.0 / g_alpha(state.alpha, tempering)
    trace = StepTrace(iteration if iteration is not None else -1, float(u), beta,
                      state.alpha, Phase.OPTIMIZING)
    return new, trace


@dataclass
class TraceSeries:
    """Per-iteration record of a run, stored column-wise.

    ``phase`` holds 0 for sampling and 1 for optimizing iterations. ``theta``
    is only filled when the run was asked to record positions.
    """

    iters: np.ndarray
    phase: np.ndarray
    potential: np.ndarray
    noise_magnitude: np.ndarray
    alpha: np.ndarray
    theta: np.ndarray | None = None

    COLUMNS = ("iter", "phase", "U_estimate", "noise_magnitude", "alpha")

    @classmethod
    def empty(cls, n, record_theta_dim=0):
        return cls(
            iters=np.arange(1, n + 1),
            phase=np.zeros(n, dtype=np.int8),
            potential=np.zeros(n),
            noise_magnitude=np.zeros(n),
            alpha=np.zeros(n),
            theta=np.zeros((n, record_theta_dim)) if record_theta_dim else None,
        )

    def __len__(self):
        return len(self.iters)

    def put(self, j, tr: StepTrace, theta=None):
        self.phase[j] = 0 if tr.phase is Phase.SAMPLING else 1
        self.potential[j] = tr.potential_estimate
        self.noise_magnitude[j] = tr.noise_magnitude
        self.alpha[j] = tr.alpha
        if self.theta is not None and theta is not None:
            self.theta[j] = theta

    def truncate(self, n):
        return TraceSeries(self.iters[:n], self.phase[:n], self.potential[:n],
                           self.noise_magnitude[:n], self.alpha[:n],
                           None if self.theta is None else self.theta[:n])

    @property
    def sampling(self) -> np.ndarray:
        return self.phase == 0

    def to_csv(self, path, stride: int = 1) -> None:
        names = (Phase.SAMPLING.value, Phase.OPTIMIZING.value)
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.COLUMNS)
            for j in range(0, len(self), stride):
                writer.writerow([
                    int(self.iters[j]),
                    names[int(self.phase[j])],
                    repr(float(self.potential[j])),
                    repr(float(self.noise_magnitude[j])),
                    repr(float(self.alpha[j])),
                ])


@dataclass
class RunResult:
    state: ExtendedState
    trace: TraceSeries
    grid: BiasGrid | None = None
    extras: dict = field(default_factory=dict)


def _init_state(theta0, rng: ChainRng) -> ExtendedState:
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float)).copy()
    r0 = rng.noise.standard_normal(theta0.size)
    r_alpha0 = rng.noise.standard_normal()
    return ExtendedState(theta0, r0, 0.0, r_alpha0)


def run(obj: Objective, settings: CTLDSettings, theta0, total_iters: int,
        callbacks: Sequence[Callable] = (), record_theta: bool = False,
        fast: bool | None = None) -> RunResult:
    """Full two-phase run from ``theta0``.

    Iterations ``1 .. l_s - 1`` sample and the rest optimize. The initial
    momenta are standard normal, ``alpha`` starts at 0 and the bias at zero.
    Each callback is called as ``cb(trace, state)`` after every iteration.
    ``fast=None`` picks the compiled loop for 1-D analytic potentials when no
    callbacks are given; both paths consume the same random streams.

    Raises :class:`DivergenceError` carrying the failing iteration.
    """
    if total_iters < 1:
        raise ValueError("total_iters must be at least 1")
    hp, tempering = settings.hyper, settings.tempering
    rng = ChainRng.from_seed(hp.seed)
    state = _init_state(theta0, rng)
    grid = settings.new_grid()
    spec = obj.kernel_spec()
    if fast is None:
        fast = spec is not None and not callbacks
    if fast:
        if spec is None:
            raise ValueError("compiled path only supports 1-D analytic potentials")
        if callbacks:
            raise ValueError("callbacks are not supported on the compiled path")
        return _run_compiled(spec, settings, state, grid, rng, total_iters, record_theta)

    trace = TraceSeries.empty(total_iters, state.theta.size if record_theta else 0)
    for j in range(total_iters):
        t = j + 1
        if t < hp.l_s:
            state, grid, tr = step_sampling(state, obj, hp, tempering, grid, rng, iteration=t)
        else:
            state, tr = step_optimizing(state, obj, hp, rng, iteration=t, tempering=tempering)
        trace.put(j, tr, state.theta)
        for cb in callbacks:
            cb(tr, state)
    return RunResult(state, trace, grid)


def _run_compiled(spec, settings, state, grid, rng, total_iters, record_theta):
    kind, params = spec
    hp, tc = settings.hyper, settings.tempering
    trace = TraceSeries.empty(total_iters, 1 if record_theta else 0)
    buf_theta = np.empty(total_iters)
    packed = np.array([state.theta[0], state.r[0], state.alpha, state.r_alpha])
    status = np.zeros(2, dtype=np.int64)
    phase = np.empty(total_iters, dtype=np.int8)
    start = 0
    while start < total_iters:
        n = min(CHUNK, total_iters - start)
        first_t = start + 1
        n_sampling = max(0, min(n, hp.l_s - first_t))
        noise = rng.noise.standard_normal((n_sampling, 2))
        sl = slice(start, start + n)
        _kernels.ctld_chunk(
            packed, grid.values, noise, first_t, n, hp.l_s,
            hp.eta, hp.gamma, hp.gamma_alpha, tc.delta, tc.delta_prime, tc.s, tc.c,
            grid.lo, grid.hi, grid.k, grid.w, grid.sigma, kind, params,
            trace.potential[sl], trace.noise_magnitude[sl], trace.alpha[sl],
            buf_theta[sl], phase[sl], status,
        )
        if status[0] != 0:
            raise DivergenceError(_kernels.VAR_NAMES[status[1]], int(status[0]))
        start += n
    trace.phase[:] = phase
    if record_theta:
        trace.theta[:, 0] = buf_theta
    state = ExtendedState([packed[0]], [packed[1]], packed[2], packed[3])
    return RunResult(state, trace, grid, {"theta_path": buf_theta})
