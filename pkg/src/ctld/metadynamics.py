"""History-dependent bias potential over the tempering variable.

The bias lives on ``k + 1`` equally spaced nodes spanning
``[-delta_prime, delta_prime]``. Every deposit adds a Gaussian bump to all
nodes; the bias force on bin ``k*`` is the forward difference of its two
bounding nodes divided by the bin width.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SIGMA = 0.04
DEFAULT_BINS = 300


@dataclass
class BiasGrid:
    lo: float
    hi: float
    k: int
    w: float
    sigma: float = DEFAULT_SIGMA
    values: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not self.hi > self.lo:
            raise ValueError(f"need hi > lo, got lo={self.lo}, hi={self.hi}")
        if not (self.w > 0 and self.sigma > 0):
            raise ValueError("w and sigma must be positive")
        if self.values is None:
            self.values = np.zeros(self.k + 1)
        else:
            self.values = np.asarray(self.values, dtype=float)
            if self.values.shape != (self.k + 1,):
                raise ValueError(
                    f"values must have k + 1 = {self.k + 1} entries, "
                    f"got shape {self.values.shape}"
                )

    @classmethod
    def symmetric(cls, delta_prime, k=DEFAULT_BINS, w=1.0, sigma=DEFAULT_SIGMA):
        """Empty grid over ``[-delta_prime, delta_prime]``."""
        return cls(lo=-delta_prime, hi=delta_prime, k=k, w=w, sigma=sigma)

    @property
    def bin_width(self) -> float:
        return (self.hi - self.lo) / self.k

    @property
    def nodes(self) -> np.ndarray:
        return self.lo + self.bin_width * np.arange(self.k + 1)

    def copy(self) -> "BiasGrid":
        return BiasGrid(self.lo, self.hi, self.k, self.w, self.sigma, self.values.copy())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "bias"])
            for a, v in zip(self.nodes.tolist(), self.values.tolist()):
                writer.writerow([repr(a), repr(v)])


def _clamp(alpha: float, grid: BiasGrid) -> float:
    return min(max(alpha, grid.lo), grid.hi)


def bin_index(grid: BiasGrid, alpha_t: float) -> int:
    a = _clamp(alpha_t, grid)
    k = int(math.floor((a - grid.lo) / grid.bin_width))
    return min(max(k, 0), grid.k - 1)


def deposit(grid: BiasGrid, alpha_t: float) -> BiasGrid:
    """Add one Gaussian bump centred at ``alpha_t`` (clamped into range).

    The grid is updated in place and returned for chaining.
    """
    if not math.isfinite(alpha_t):
        raise ValueError(f"cannot deposit at non-finite alpha {alpha_t!r}")
    centre = _clamp(alpha_t, grid)
    diff = grid.nodes - centre
    grid.values += grid.w * np.exp(-(diff * diff) / (2.0 * grid.sigma**2))
    return grid


def bias_force(grid: BiasGrid, alpha_t: float) -> float:
    """Forward-difference slope of the bias over the bin holding ``alpha_t``.

    The caller subtracts this from the coupling force.
    """
    k = bin_index(grid, alpha_t)
    return float(grid.values[k + 1] - grid.values[k]) / grid.bin_width
