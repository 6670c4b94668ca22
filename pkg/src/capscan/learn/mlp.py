"""Small dense networks with hand-written reverse-mode gradients.

Hidden layers use tanh; the output layer is linear. The backward pass
returns exact gradients for every weight and bias plus the gradient with
respect to the input batch (needed when a Q network feeds gradients back
into the action that produced it). Everything is float64.
"""

from __future__ import annotations

import numpy as np


def orthogonal(n_in: int, n_out: int, gain: float, rng) -> np.ndarray:
    """Orthogonal weight init (sign-fixed QR of a Gaussian matrix)."""
    a = rng.normal(size=(max(n_in, n_out), min(n_in, n_out)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if n_in < n_out:
        q = q.T
    return gain * q[:n_in, :n_out]


def flatten_params(arrays) -> np.ndarray:
    return np.concatenate([np.asarray(a).ravel() for a in arrays])


def unflatten_like(vec: np.ndarray, arrays) -> list:
    out = []
    pos = 0
    for a in arrays:
        size = a.size
        out.append(vec[pos:pos + size].reshape(a.shape))
        pos += size
    if pos != vec.size:
        raise ValueError("flat vector size does not match parameter shapes")
    return out


class Mlp:
    """Feed-forward net: sizes[0] -> tanh hidden layers -> linear sizes[-1]."""

    def __init__(self, sizes, rng, final_gain: float = 1.0):
        if len(sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.sizes = list(sizes)
        self.weights = []
        self.biases = []
        last = len(sizes) - 2
        for i, (n_in, n_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            gain = final_gain if i == last else np.sqrt(2.0)
            self.weights.append(orthogonal(n_in, n_out, gain, rng))
            self.biases.append(np.zeros(n_out))

    @property
    def params(self) -> list:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, arrays) -> None:
        n = len(self.weights)
        if len(arrays) != 2 * n:
            raise ValueError("parameter list length mismatch")
        for i in range(n):
            if arrays[2 * i].shape != self.weights[i].shape:
                raise ValueError("weight shape mismatch")
            self.weights[i] = np.asarray(arrays[2 * i], dtype=np.float64)
            self.biases[i] = np.asarray(arrays[2 * i + 1], dtype=np.float64)

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.sizes = list(self.sizes)
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        return clone

    def forward(self, x: np.ndarray, cache: bool = False):
        """Batch forward. Returns output, and the activation cache if asked."""
        h = np.asarray(x, dtype=np.float64)
        if h.ndim == 1:
            h = h[None, :]
        if h.shape[1] != self.sizes[0]:
            raise ValueError(
                f"input dim {h.shape[1]} does not match network ({self.sizes[0]})")
        acts = [h]
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            h = z if i == last else np.tanh(z)
            acts.append(h)
        return (h, acts) if cache else h

    def backward(self, acts, dout: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (param_grads aligned with .params, d(loss)/d(input)).
        """
        grads_w = [None] * len(self.weights)
        grads_b = [None] * len(self.biases)
        d = np.asarray(dout, dtype=np.float64)
        if d.ndim == 1:
            d = d[None, :]
        last = len(self.weights) - 1
        for i in range(last, -1, -1):
            if i != last:
                d = d * (1.0 - acts[i + 1] ** 2)  # tanh' via cached output
            grads_w[i] = acts[i].T @ d
            grads_b[i] = d.sum(axis=0)
            d = d @ self.weights[i].T
        grads = []
        for gw, gb in zip(grads_w, grads_b):
            grads.append(gw)
            grads.append(gb)
        return grads, d
