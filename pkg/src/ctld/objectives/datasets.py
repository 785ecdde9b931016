"""Seeded synthetic classification datasets with CSV round-tripping."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("two_clusters", "xor_like", "ring")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.y)

    def describe(self) -> dict:
        return dict(self.meta)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"x{i}" for i in range(self.X.shape[1])] + ["label"])
            for row, label in zip(self.X.tolist(), self.y.tolist()):
                writer.writerow([repr(v) for v in row] + [int(label)])

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        with open(Path(path), newline="") as fh:
            rows = list(csv.reader(fh))
        body = rows[1:]
        X = np.array([[float(v) for v in r[:-1]] for r in body])
        y = np.array([int(r[-1]) for r in body])
        return cls(X, y, {"kind": "csv", "path": str(path)})


def _balanced_labels(n, rng):
    labels = np.arange(n) % 2
    rng.shuffle(labels)
    return labels


def make_synthetic_dataset(kind: str, n: int, seed: int, separation: float = 10.0,
                           noise: float = 0.15) -> Dataset:
    """Two-feature binary dataset.

    ``two_clusters``: unit-variance blobs whose centres are ``separation``
    apart. ``xor_like``: four tight clusters at (+-1, +-1), class 1 on the
    diagonal. ``ring``: a disc of radius 1 (class 0) inside an annulus of radius
    2 to 3 (class 1).
    """
    if kind not in KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}; expected one of {KINDS}")
    if n < 4:
        raise ValueError("need at least 4 points")
    rng = np.random.default_rng(seed)
    meta = {"kind": kind, "n": n, "seed": seed}

    if kind == "two_clusters":
        y = _balanced_labels(n, rng)
        centres = np.where(y[:, None] == 1, separation / 2.0, -separation / 2.0) * np.array([1.0, 0.0])
        X = centres + rng.standard_normal((n, 2))
        meta["separation"] = separation
    elif kind == "xor_like":
        # one quadrant per point, cycling so every quadrant gets n // 4 or n // 4 + 1
        quadrant = np.arange(n) % 4
        rng.shuffle(quadrant)
        signs = np.array([[1, 1], [-1, -1], [1, -1], [-1, 1]], dtype=float)[quadrant]
        X = signs + noise * rng.standard_normal((n, 2))
        y = (quadrant < 2).astype(int)
        meta["noise"] = noise
    else:
        y = _balanced_labels(n, rng)
        angle = rng.uniform(0.0, 2.0 * np.pi, n)
        radius = np.where(y == 0, np.sqrt(rng.uniform(0.0, 1.0, n)),
                          np.sqrt(rng.uniform(4.0, 9.0, n)))
        X = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return Dataset(X, y, meta)
