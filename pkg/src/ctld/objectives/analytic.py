"""Analytic multimodal potentials with exactly computable densities."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .base import Objective

# Codes understood by the compiled 1-D kernels in ``ctld._kernels``.
KIND_DOUBLE_WELL = 0
KIND_MIXTURE_1D = 1


class DoubleWell1D(Objective):
    """U(theta) = h (theta^2 - 1)^2, minima at +-1 separated by a barrier h."""

    def __init__(self, h: float = 4.0):
        if h <= 0:
            raise ValueError(f"barrier height must be positive, got {h}")
        self.h = float(h)
        self.dim = 1
        self.data_size = 1

    def potential(self, theta):
        x = float(np.asarray(theta).reshape(-1)[0])
        return self.h * (x * x - 1.0) ** 2

    def gradient(self, theta):
        x = float(np.asarray(theta).reshape(-1)[0])
        return np.array([4.0 * self.h * x * (x * x - 1.0)])

    def potential_grid(self, x):
        x = np.asarray(x, dtype=float)
        return self.h * (x * x - 1.0) ** 2

    def describe(self):
        return {"kind": "double_well", "h": self.h}

    def kernel_spec(self):
        return KIND_DOUBLE_WELL, np.array([self.h])


class GaussianMixture(Objective):
    """Negative log density of a Gaussian mixture in any dimension.

    ``covariances`` may be given as scalars (1-D) or ``(d, d)`` matrices.
    """

    def __init__(self, weights, means, covariances):
        w = np.asarray(weights, dtype=float)
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        self.weights = w / w.sum()
        means = np.asarray(means, dtype=float)
        if means.ndim == 1:
            means = means[:, None]
        self.means = means
        n_comp, d = means.shape
        covs = np.asarray(covariances, dtype=float)
        if covs.ndim == 1:
            covs = covs[:, None, None]
        if covs.shape != (n_comp, d, d):
            raise ValueError(f"covariances must have shape {(n_comp, d, d)}, got {covs.shape}")
        if len(self.weights) != n_comp:
            raise ValueError("weights and means disagree on the number of components")
        self.covariances = covs
        self.precisions = np.linalg.inv(covs)
        _, logdets = np.linalg.slogdet(covs)
        self._log_norm = np.log(self.weights) - 0.5 * (d * np.log(2 * np.pi) + logdets)
        self.dim = d
        self.data_size = 1

    def _log_terms(self, x):
        # x: (n, d) -> (n, n_comp)
        diff = x[:, None, :] - self.means[None, :, :]
        maha = np.einsum("nki,kij,nkj->nk", diff, self.precisions, diff)
        return self._log_norm[None, :] - 0.5 * maha, diff

    def potential(self, theta):
        x = np.asarray(theta, dtype=float).reshape(1, self.dim)
        terms, _ = self._log_terms(x)
        return float(-logsumexp(terms, axis=1)[0])

    def gradient(self, theta):
        x = np.asarray(theta, dtype=float).reshape(1, self.dim)
        terms, diff = self._log_terms(x)
        resp = np.exp(terms - logsumexp(terms, axis=1, keepdims=True))
        # grad U = sum_k resp_k * P_k (x - mu_k)
        pulled = np.einsum("kij,nkj->nki", self.precisions, diff)
        return np.einsum("nk,nki->ni", resp, pulled)[0]

    def potential_grid(self, x):
        """Vectorized potential on points of shape ``(n, d)`` or ``(n,)`` for 1-D."""
        x = np.asarray(x, dtype=float)
        x = x.reshape(-1, self.dim)
        terms, _ = self._log_terms(x)
        return -logsumexp(terms, axis=1)

    def describe(self):
        return {
            "kind": "gaussian_mixture",
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    def kernel_spec(self):
        if self.dim != 1:
            return None
        n = len(self.weights)
        params = np.concatenate(
            [[n], self._log_norm, self.means[:, 0], self.precisions[:, 0, 0]]
        )
        return KIND_MIXTURE_1D, params


@dataclass
class DensityTable:
    """Normalized density on a 1-D or 2-D lattice.

    ``axes`` holds one node array per dimension; ``density`` has the matching
    lattice shape and integrates to one under the trapezoid rule.
    """

    axes: tuple
    density: np.ndarray

    @property
    def ndim(self) -> int:
        return len(self.axes)

    def bin_masses(self) -> np.ndarray:
        """Probability of each lattice cell (trapezoid rule); sums to one."""
        if self.ndim == 1:
            x = self.axes[0]
            p = self.density
            return 0.5 * (p[1:] + p[:-1]) * np.diff(x)
        x, y = self.axes
        p = self.density
        corners = 0.25 * (p[1:, 1:] + p[:-1, 1:] + p[1:, :-1] + p[:-1, :-1])
        return corners * np.outer(np.diff(x), np.diff(y))

    def integral(self) -> float:
        return float(self.bin_masses().sum())


def analytic_density(pot: Objective, grid, peak_ratio: float = 1e-8,
                     coarse_tol: float = 1e-4) -> DensityTable:
    """Density exp(-U) / Z tabulated on ``grid``.

    ``grid`` is a 1-D node array, or a pair of node arrays for a 2-D lattice.
    Raises ``ValueError`` when the boundary density exceeds ``peak_ratio`` of
    the peak (grid too narrow) or when halving the resolution shifts the
    normalization constant by more than ``coarse_tol`` (grid too coarse).
    """
    if isinstance(grid, (tuple, list)) and len(grid) == 2 and np.ndim(grid[0]) == 1:
        axes = (np.asarray(grid[0], float), np.asarray(grid[1], float))
    else:
        axes = (np.asarray(grid, float),)
    for ax in axes:
        if ax.ndim != 1 or ax.size < 3 or np.any(np.diff(ax) <= 0):
            raise ValueError("grid axes must be strictly increasing with at least 3 nodes")
    if len(axes) != pot.dim:
        raise ValueError(f"grid is {len(axes)}-D but the potential is {pot.dim}-D")

    if len(axes) == 1:
        u = pot.potential_grid(axes[0])
    else:
        xx, yy = np.meshgrid(*axes, indexing="ij")
        u = pot.potential_grid(np.column_stack([xx.ravel(), yy.ravel()])).reshape(xx.shape)
    unnorm = np.exp(-(u - u.min()))

    boundary = np.concatenate([np.atleast_1d(unnorm[0]).ravel(), np.atleast_1d(unnorm[-1]).ravel()])
    if len(axes) == 2:
        boundary = np.concatenate([boundary, unnorm[:, 0], unnorm[:, -1]])
    if boundary.max() > peak_ratio * unnorm.max():
        raise ValueError(
            f"grid too narrow: boundary density ratio {boundary.max() / unnorm.max():.3g} "
            f"exceeds {peak_ratio:g}"
        )

    table = DensityTable(axes, unnorm)
    z = table.integral()
    if len(axes) == 1:
        half = DensityTable((axes[0][::2],), unnorm[::2])
    else:
        half = DensityTable((axes[0][::2], axes[1][::2]), unnorm[::2, ::2])
    if abs(half.integral() - z) > coarse_tol * z:
        raise ValueError("grid too coarse: normalization not converged at this resolution")
    return DensityTable(axes, unnorm / z)
