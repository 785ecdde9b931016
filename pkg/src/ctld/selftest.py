"""Quick invariant checks runnable from an installed package (``ctld selftest``)."""
from __future__ import annotations

import itertools

import numpy as np

from .dynamics import derive_hyperparams, run
from .metadynamics import BiasGrid, bias_force, deposit
from .objectives import (
    DoubleWell1D,
    GaussianMixture,
    MlpObjective,
    analytic_density,
    finite_difference_gradient,
    make_synthetic_dataset,
    xavier_init,
)
from .tempering import TemperingConfig, dg_dalpha, g_alpha


def _relative_error(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-8)))


def check_g_alpha():
    cfg = TemperingConfig()
    alphas = np.random.default_rng(0).uniform(-3, 3, 1000)
    vals = np.array([g_alpha(a, cfg) for a in alphas])
    even = all(g_alpha(a, cfg) == g_alpha(-a, cfg) for a in alphas)
    bounded = bool(np.all((vals >= 1 - cfg.s) & (vals <= 1)))
    return even and bounded


def check_dg_dalpha():
    cfg = TemperingConfig()
    alphas = np.concatenate([np.linspace(0.45, 1.45, 50), -np.linspace(0.45, 1.45, 50)])
    fd = [(g_alpha(a + 1e-6, cfg) - g_alpha(a - 1e-6, cfg)) / 2e-6 for a in alphas]
    return _relative_error([dg_dalpha(a, cfg) for a in alphas], fd) < 1e-6


def check_gradients():
    rng = np.random.default_rng(1)
    ds = make_synthetic_dataset("xor_like", 12, 0)
    objs = [
        DoubleWell1D(4.0),
        GaussianMixture([0.3, 0.7], [[-1.0, 0.5], [1.5, -0.5]],
                        [np.eye(2) * 0.5, [[1.0, 0.3], [0.3, 0.8]]]),
        MlpObjective([2, 4, 1], ds, "tanh", "cross_entropy", 0.1),
    ]
    for obj in objs:
        for _ in range(5):
            theta = rng.normal(size=obj.dim)
            fd = finite_difference_gradient(obj.potential, theta)
            if _relative_error(obj.gradient(theta), fd) > 1e-5:
                return False
    return True


def check_minibatch_unbiased():
    ds = make_synthetic_dataset("two_clusters", 6, 3)
    obj = MlpObjective([2, 3, 1], ds, "tanh", "mse", 0.05)
    theta = xavier_init(obj.layer_sizes, 4)
    subsets = list(itertools.combinations(range(6), 2))
    us, gs = zip(*(obj.minibatch(theta, np.array(s)) for s in subsets))
    u, g = obj.value_and_grad(theta)
    return abs(np.mean(us) - u) < 1e-10 and np.max(np.abs(np.mean(gs, axis=0) - g)) < 1e-10


def check_bias_grid():
    grid = BiasGrid.symmetric(1.5, k=300, w=0.5)
    deposit(grid, 0.2)
    before = bias_force(grid, 0.3)
    grid.values += 7.0
    return abs(bias_force(grid, 0.3) - before) <= 1e-9 * max(1.0, abs(before)) and np.all(grid.values >= 7.0)


def check_density():
    table = analytic_density(DoubleWell1D(4.0), np.linspace(-3, 3, 2001))
    return abs(table.integral() - 1.0) < 1e-6


def check_determinism():
    settings = derive_hyperparams(1e-2, 0.0, 3000, seed=7)
    a = run(DoubleWell1D(4.0), settings, [0.0], 3000)
    b = run(DoubleWell1D(4.0), settings, [0.0], 3000)
    return np.array_equal(a.trace.alpha, b.trace.alpha) and np.array_equal(
        a.trace.potential, b.trace.potential)


CHECKS = {
    "g_alpha even and bounded": check_g_alpha,
    "dg_dalpha matches finite differences": check_dg_dalpha,
    "objective gradients match finite differences": check_gradients,
    "minibatch estimator unbiased": check_minibatch_unbiased,
    "bias force gauge invariant": check_bias_grid,
    "analytic density normalized": check_density,
    "runs deterministic per seed": check_determinism,
}


def run_selftest(out=print) -> bool:
    ok = True
    for name, fn in CHECKS.items():
        passed = bool(fn())
        ok &= passed
        out(f"{'PASS' if passed else 'FAIL'}  {name}")
    return ok
