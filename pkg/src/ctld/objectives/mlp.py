"""Small fully connected network as a minibatch potential.

Parameters are packed layer by layer: the ``(fan_out, fan_in)`` weight matrix
in row-major order followed by the ``fan_out`` biases.
"""
from __future__ import annotations

import numpy as np

from .base import Objective
from .datasets import Dataset

ACTIVATIONS = ("tanh", "relu")
LOSSES = ("mse", "cross_entropy")


def parameter_count(layer_sizes) -> int:
    return sum((fan_in + 1) * fan_out for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]))


def xavier_init(layer_sizes, seed) -> np.ndarray:
    """Weights ~ U(+-sqrt(6 / (fan_in + fan_out))), biases zero."""
    rng = np.random.default_rng(seed)
    chunks = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-limit, limit, size=fan_in * fan_out))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


class MlpObjective(Objective):
    """Data term sum_i loss_i(theta) plus ``weight_decay * |theta|^2 / 2``.

    ``mse`` uses ``0.5 * |f(x) - y|^2`` against the label value; with a single
    output ``cross_entropy`` is the logistic loss on 0/1 labels, otherwise the
    softmax cross entropy on integer labels.
    """

    def __init__(self, layer_sizes, dataset: Dataset, activation="tanh",
                 loss="mse", weight_decay=0.0):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}; expected one of {ACTIVATIONS}")
        if loss not in LOSSES:
            raise ValueError(f"unknown loss {loss!r}; expected one of {LOSSES}")
        if weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        self.layer_sizes = tuple(int(s) for s in layer_sizes)
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if dataset.X.shape[1] != self.layer_sizes[0]:
            raise ValueError(
                f"dataset has {dataset.X.shape[1]} features but the input layer has "
                f"{self.layer_sizes[0]} units"
            )
        self.dataset = dataset
        self.activation = activation
        self.loss = loss
        self.weight_decay = float(weight_decay)
        self.dim = parameter_count(self.layer_sizes)
        self.data_size = len(dataset.y)

    def unpack(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,):
            raise ValueError(f"theta must have shape ({self.dim},), got {theta.shape}")
        params, pos = [], 0
        for fan_in, fan_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            W = theta[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in)
            pos += fan_in * fan_out
            b = theta[pos:pos + fan_out]
            pos += fan_out
            params.append((W, b))
        return params

    def _act(self, z):
        if self.activation == "tanh":
            return np.tanh(z)
        return np.maximum(z, 0.0)

    def _act_grad(self, z, a):
        if self.activation == "tanh":
            return 1.0 - a * a
        return (z > 0).astype(float)

    def _data_loss_grad(self, theta, X, y):
        """Summed per-example loss over (X, y) and its gradient."""
        params = self.unpack(theta)
        acts, pre = [X], []
        h = X
        for i, (W, b) in enumerate(params):
            z = h @ W.T + b
            pre.append(z)
            h = z if i == len(params) - 1 else self._act(z)
            acts.append(h)
        out = acts[-1]

        if self.loss == "mse":
            target = y.reshape(len(y), -1).astype(float)
            if target.shape[1] != out.shape[1]:
                target = np.eye(out.shape[1])[y.astype(int)]
            resid = out - target
            total = 0.5 * float(np.sum(resid * resid))
            delta = resid
        elif out.shape[1] == 1:
            z = out[:, 0]
            t = y.astype(float)
            # softplus(z) - t z, evaluated stably
            total = float(np.sum(np.logaddexp(0.0, z) - t * z))
            sig = 0.5 * (1.0 + np.tanh(0.5 * z))
            delta = (sig - t)[:, None]
        else:
            shifted = out - out.max(axis=1, keepdims=True)
            logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            lab = y.astype(int)
            total = float(-np.sum(logp[np.arange(len(lab)), lab]))
            delta = np.exp(logp)
            delta[np.arange(len(lab)), lab] -= 1.0

        grads = []
        for i in range(len(params) - 1, -1, -1):
            W, _ = params[i]
            grads.append((delta.T @ acts[i], delta.sum(axis=0)))
            if i > 0:
                delta = (delta @ W) * self._act_grad(pre[i - 1], acts[i])
        flat = []
        for gW, gb in reversed(grads):
            flat.append(gW.ravel())
            flat.append(gb)
        return total, np.concatenate(flat)

    def _with_prior(self, theta, scale, data_loss, data_grad):
        theta = np.asarray(theta, dtype=float)
        u = scale * data_loss + 0.5 * self.weight_decay * float(theta @ theta)
        g = scale * data_grad + self.weight_decay * theta
        return u, g

    def value_and_grad(self, theta):
        loss, grad = self._data_loss_grad(theta, self.dataset.X, self.dataset.y)
        return self._with_prior(theta, 1.0, loss, grad)

    def potential(self, theta):
        return self.value_and_grad(theta)[0]

    def gradient(self, theta):
        return self.value_and_grad(theta)[1]

    def minibatch(self, theta, idx):
        idx = np.asarray(idx, dtype=np.intp)
        loss, grad = self._data_loss_grad(theta, self.dataset.X[idx], self.dataset.y[idx])
        return self._with_prior(theta, self.data_size / len(idx), loss, grad)

    def mean_loss(self, theta) -> float:
        """Average per-example loss on the full dataset, prior excluded."""
        loss, _ = self._data_loss_grad(theta, self.dataset.X, self.dataset.y)
        return loss / self.data_size

    def accuracy(self, theta) -> float:
        params = self.unpack(theta)
        h = self.dataset.X
        for i, (W, b) in enumerate(params):
            h = h @ W.T + b
            if i < len(params) - 1:
                h = self._act(h)
        if h.shape[1] == 1:
            threshold = 0.5 if self.loss == "mse" else 0.0
            pred = (h[:, 0] > threshold).astype(int)
        else:
            pred = h.argmax(axis=1)
        return float(np.mean(pred == self.dataset.y.astype(int)))

    def describe(self):
        return {
            "kind": "mlp",
            "layer_sizes": list(self.layer_sizes),
            "activation": self.activation,
            "loss": self.loss,
            "weight_decay": self.weight_decay,
            "dataset": self.dataset.describe(),
        }


def mlp_forward_backward(obj: MlpObjective, theta, minibatch=None, rng=None):
    """Rescaled minibatch loss and gradient.

    ``minibatch`` is an index array, ``None`` for the full dataset, or an
    integer size, in which case indices are drawn uniformly without
    replacement from ``rng``.
    """
    if minibatch is None:
        return obj.value_and_grad(theta)
    if np.isscalar(minibatch):
        if rng is None:
            raise ValueError("an rng is required to draw a minibatch by size")
        minibatch = rng.choice(obj.data_size, size=int(minibatch), replace=False)
    idx = np.asarray(minibatch, dtype=np.intp)
    if idx.size == 0:
        raise ValueError("empty minibatch")
    return obj.minibatch(theta, idx)
