"""Sampler quality metrics over completed traces."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .objectives.analytic import DensityTable

DEFAULT_BURN_IN = 0.1
HYSTERESIS = 0.5


@dataclass
class HistogramSummary:
    edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        self.edges = np.asarray(self.edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if np.any(np.diff(self.edges) <= 0):
            raise ValueError("edges must be strictly increasing")
        if len(self.counts) != len(self.edges) - 1:
            raise ValueError("need one count per bin")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_samples(cls, samples, edges):
        """Histogram that also tallies samples falling outside ``edges``.

        ``total`` counts every sample, so ``counts.sum() <= total``.
        """
        samples = np.asarray(samples, dtype=float)
        counts, _ = np.histogram(samples, bins=edges)
        return cls(np.asarray(edges), counts, int(samples.size))

    @property
    def outside(self) -> int:
        return self.total - int(self.counts.sum())


def tv_between(p, q) -> float:
    """Half the L1 distance between two mass vectors on the same partition."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("distributions must share a partition")
    return 0.5 * float(np.abs(p - q).sum())


def tv_distance(samples, density: DensityTable, merge: int = 1) -> float:
    """TV distance between the empirical law of ``samples`` and a density table.

    Bins are the table's lattice cells, optionally merged ``merge`` at a time
    (1-D). Samples outside the lattice count as mass on a bin the density
    assigns zero probability.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ValueError("no samples")
    masses = density.bin_masses()
    if density.ndim == 1:
        edges = density.axes[0]
        if merge > 1:
            n = (len(masses) // merge) * merge
            if n != len(masses):
                raise ValueError(f"{len(masses)} cells cannot be merged in groups of {merge}")
            masses = masses.reshape(-1, merge).sum(axis=1)
            edges = edges[::merge]
        counts, _ = np.histogram(samples.ravel(), bins=edges)
        total = samples.size
    else:
        pts = samples.reshape(-1, 2)
        counts, _ = np.histogramdd(pts, bins=density.axes)
        total = len(pts)
    emp = counts / total
    outside = 1.0 - emp.sum()
    return tv_between(emp.ravel(), masses.ravel()) + 0.5 * outside


def alpha_uniformity(alphas, delta_prime: float, bins: int = 15) -> float:
    """Largest deviation of a bin's share from ``1 / bins``, in units of ``1 / bins``.

    Values outside ``[-delta_prime, delta_prime]`` are clamped into the edge
    bins. Zero means perfectly uniform.
    """
    a = np.clip(np.asarray(alphas, dtype=float), -delta_prime, delta_prime)
    if a.size == 0:
        raise ValueError("no samples")
    counts, _ = np.histogram(a, bins=bins, range=(-delta_prime, delta_prime))
    return float(np.max(np.abs(counts / a.size - 1.0 / bins)) * bins)


def count_well_transitions(thetas, barrier: float = 0.0, band: float = HYSTERESIS) -> int:
    """Crossings between the two sides of ``barrier``.

    A side is only entered once the trajectory gets past ``barrier +- band``,
    so jitter on top of the barrier is not counted.
    """
    x = np.asarray(thetas, dtype=float).ravel() - barrier
    side = np.zeros(x.size, dtype=np.int8)
    side[x > band] = 1
    side[x < -band] = -1
    committed = side[side != 0]
    if committed.size < 2:
        return 0
    return int(np.count_nonzero(committed[1:] != committed[:-1]))


def residence_fraction(alphas, delta: float) -> float:
    a = np.asarray(alphas, dtype=float)
    if a.size == 0:
        raise ValueError("no samples")
    return float(np.mean(np.abs(a) <= delta))


def burn_in_mask(n: int, fraction: float = DEFAULT_BURN_IN) -> np.ndarray:
    keep = np.ones(n, dtype=bool)
    keep[: int(n * fraction)] = False
    return keep


def plateau_samples(thetas, alphas, delta, sampling_mask=None, burn_in=DEFAULT_BURN_IN):
    """Positions recorded while ``|alpha| <= delta`` after burn-in.

    Burn-in is measured in sampling-phase iterations.
    """
    thetas = np.asarray(thetas)
    alphas = np.asarray(alphas, dtype=float)
    if sampling_mask is None:
        sampling_mask = np.ones(alphas.size, dtype=bool)
    idx = np.flatnonzero(sampling_mask)
    idx = idx[int(idx.size * burn_in):]
    idx = idx[np.abs(alphas[idx]) <= delta]
    return thetas[idx]


def metric_record(metric, value, config_hash, seed, n_samples) -> dict:
    return {
        "metric": metric,
        "value": value,
        "config_hash": config_hash,
        "seed": seed,
        "n_samples": int(n_samples),
    }


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def read_report(path) -> dict:
    return json.loads(Path(path).read_text())
