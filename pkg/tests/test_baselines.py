import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctld.baselines import (
    AnnealSchedule,
    anneal_sgd_step,
    fixed_temp_langevin_step,
    run_anneal_sgd,
    run_fixed_langevin,
    run_sgd_momentum,
    sgd_momentum_step,
)
from ctld.dynamics import ChainRng, DivergenceError, ExtendedState, HyperParams, step_sampling
from ctld.metadynamics import BiasGrid
from ctld.objectives import DoubleWell1D, GaussianMixture
from ctld.tempering import TemperingConfig

QUAD = GaussianMixture([1.0], [0.0], [1.0])


def scalar_momentum(theta, v, lr, mu, steps):
    out = []
    for _ in range(steps):
        v = mu * v - lr * theta
        theta = theta + v
        out.append(theta)
    return out


def test_sgd_two_steps_on_quadratic():
    # v1 = -0.1, theta1 = 0.9; v2 = 0.5 * -0.1 - 0.1 * 0.9 = -0.14, theta2 = 0.76
    expected = scalar_momentum(1.0, 0.0, 0.1, 0.5, 2)
    assert expected == pytest.approx([0.9, 0.76], abs=1e-15)
    theta, v = np.array([1.0]), np.zeros(1)
    theta, v = sgd_momentum_step(theta, v, theta, 0.1, 0.5)
    assert theta[0] == pytest.approx(expected[0], abs=1e-15)
    theta, v = sgd_momentum_step(theta, v, theta, 0.1, 0.5)
    assert theta[0] == pytest.approx(expected[1], abs=1e-15)


def test_sgd_zero_gradient_and_plain_descent():
    theta, v = sgd_momentum_step(np.zeros(2), np.ones(2), np.zeros(2), 0.1, 0.9)
    np.testing.assert_allclose(v, 0.9)
    theta, v = sgd_momentum_step(np.ones(2), np.full(2, 5.0), np.full(2, 2.0), 0.1, 0.0)
    np.testing.assert_allclose(theta, 0.8)


def test_sgd_runner_matches_hand_iteration():
    res = run_sgd_momentum(QUAD, [1.0], 0.1, 0.5, 50)
    assert res.state.theta[0] == pytest.approx(scalar_momentum(1.0, 0.0, 0.1, 0.5, 50)[-1],
                                               rel=1e-12, abs=1e-15)


def test_sgd_rejects_nonfinite():
    with pytest.raises(DivergenceError):
        sgd_momentum_step(np.array([np.inf]), np.zeros(1), np.zeros(1), 0.1, 0.5)


def test_schedule_values():
    s = AnnealSchedule(1.0, 0.75, 1.0)
    assert s.temperature(0) == 1.0
    assert s.temperature(15) == pytest.approx(16 ** -0.75)
    with pytest.raises(ValueError):
        AnnealSchedule(b=1.0)
    with pytest.raises(ValueError):
        AnnealSchedule(a=0.0)


@given(st.integers(0, 10 ** 6), st.integers(1, 1000))
def test_schedule_monotone(t, dt):
    s = AnnealSchedule()
    assert s.temperature(t + dt) < s.temperature(t)


def test_anneal_step_limits():
    grad = np.array([2.0])
    cold = AnnealSchedule(a=1e30, b=0.9, c=1.0)
    out = anneal_sgd_step(np.array([1.0]), grad, 0.1, cold, 0, np.random.default_rng(0))
    assert out[0] == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(ValueError):
        anneal_sgd_step(np.array([1.0]), grad, 0.1, cold, -1, np.random.default_rng(0))


def test_anneal_noise_variance():
    s = AnnealSchedule()
    rng = np.random.default_rng(1)
    lr = 0.01
    draws = np.array([anneal_sgd_step(np.zeros(1), np.zeros(1), lr, s, 0, rng)[0]
                      for _ in range(100_000)])
    assert np.var(draws) == pytest.approx(2 * lr * 1.0, rel=0.05)


def test_anneal_runner_is_seeded():
    a = run_anneal_sgd(DoubleWell1D(), [0.5], 1e-3, AnnealSchedule(), 500, seed=3)
    b = run_anneal_sgd(DoubleWell1D(), [0.5], 1e-3, AnnealSchedule(), 500, seed=3)
    np.testing.assert_array_equal(a.trace.potential, b.trace.potential)


def test_langevin_zero_gradient_zero_noise(zero_rng):
    theta, r, _ = fixed_temp_langevin_step(np.zeros(1), np.array([2.0]), lambda x: np.zeros(1),
                                           0.1, 3.0, 1.0, zero_rng.noise)
    assert r[0] == pytest.approx(0.7 * 2.0)
    assert theta[0] == pytest.approx(0.2)


def test_langevin_reduces_to_ctld_on_plateau():
    # with alpha pinned at 0 (r_alpha = 0) the tempered step has g = 1
    eta, gamma = 0.05, 4.0
    hp = HyperParams(eta, 0.8, gamma, 1.0 / eta, 100)
    state = ExtendedState([0.3], [0.1], 0.0, 0.0)
    ctld_state, _, _ = step_sampling(state, DoubleWell1D(), hp, TemperingConfig(),
                                     BiasGrid.symmetric(1.5, 300, 1.0), ChainRng.from_seed(9))
    noise = ChainRng.from_seed(9).noise
    theta, r, _ = fixed_temp_langevin_step(np.array([0.3]), np.array([0.1]),
                                           DoubleWell1D().gradient, eta, gamma, 1.0, noise)
    assert theta[0] == ctld_state.theta[0]
    assert r[0] == pytest.approx(ctld_state.r[0], rel=1e-15)


def test_fixed_langevin_samples_gaussian_at_temperature():
    temp = 0.5
    res = run_fixed_langevin(QUAD, [0.0], 0.05, 2.0, temp, 400_000, seed=0, record_theta=True)
    x = res.trace.theta[40_000:, 0]
    assert np.var(x) == pytest.approx(temp, rel=0.1)


def test_fixed_langevin_paths_agree():
    a = run_fixed_langevin(DoubleWell1D(), [0.2], 0.01, 50.0, 1.0, 3000, seed=1,
                           record_theta=True, fast=True)
    b = run_fixed_langevin(DoubleWell1D(), [0.2], 0.01, 50.0, 1.0, 3000, seed=1,
                           record_theta=True, fast=False)
    np.testing.assert_allclose(a.trace.theta, b.trace.theta, rtol=1e-9, atol=1e-12)


def test_langevin_rejects_bad_temperature():
    with pytest.raises(ValueError):
        fixed_temp_langevin_step(np.zeros(1), np.zeros(1), lambda x: x, 0.1, 1.0, 0.0,
                                 np.random.default_rng(0))


def test_fixed_langevin_divergence():
    with pytest.raises(DivergenceError) as err:
        run_fixed_langevin(QUAD, [1.0], 0.1, 30.0, 1.0, 10000)
    assert err.value.iteration > 1


def test_sgd_reruns_identical():
    a = run_sgd_momentum(DoubleWell1D(), [0.3], 1e-3, 0.9, 200)
    b = run_sgd_momentum(DoubleWell1D(), [0.3], 1e-3, 0.9, 200)
    assert a.state.theta[0] == b.state.theta[0]
    assert math.isfinite(a.state.theta[0])
