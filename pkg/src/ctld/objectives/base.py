from __future__ import annotations

import numpy as np


class Objective:
    """Potential U(theta) = -sum_i log p(x_i | theta) - log p0(theta).

    Subclasses implement ``potential``, ``gradient`` and ``minibatch``.
    ``minibatch(theta, idx)`` returns the rescaled estimate
    ``-(N/m) sum_{j in idx} log p(x_j | theta) - log p0(theta)`` and its
    gradient; with ``idx`` covering the whole dataset it equals the full
    quantities.
    """

    dim: int
    data_size: int = 1

    def potential(self, theta: np.ndarray) -> float:
        raise NotImplementedError

    def gradient(self, theta: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def value_and_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        return self.potential(theta), self.gradient(theta)

    def minibatch(self, theta: np.ndarray, idx: np.ndarray) -> tuple[float, np.ndarray]:
        return self.value_and_grad(theta)

    def describe(self) -> dict:
        """JSON-friendly description used for hashing and manifests."""
        return {"kind": type(self).__name__}

    # 1-D analytic potentials override this to enable the compiled path.
    def kernel_spec(self):
        return None


def stochastic_potential(obj: Objective, theta, minibatch=None) -> tuple[float, np.ndarray]:
    """Minibatch estimate of the potential and its gradient.

    ``minibatch=None`` means the full dataset. Objectives without data
    (``data_size == 1``) always return the exact quantities.
    """
    theta = np.asarray(theta, dtype=float)
    if minibatch is None or obj.data_size == 1:
        return obj.value_and_grad(theta)
    idx = np.asarray(minibatch, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("empty minibatch")
    if idx.min() < 0 or idx.max() >= obj.data_size:
        raise IndexError(
            f"minibatch indices must lie in [0, {obj.data_size}), "
            f"got range [{idx.min()}, {idx.max()}]"
        )
    return obj.minibatch(theta, idx)


def finite_difference_gradient(fn, theta, step=1e-6) -> np.ndarray:
    """Central differences of a scalar function; used by gradient audits."""
    theta = np.asarray(theta, dtype=float)
    grad = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = step
        grad[i] = (fn(theta + e) - fn(theta - e)) / (2.0 * step)
    return grad
