"""Small dense tanh networks with hand-written backpropagation."""
from __future__ import annotations

import numpy as np


class Mlp:
    """Fully connected network, tanh on hidden layers, linear output.

    All weights and biases live in one flat vector ``params`` so optimisers
    and finite-difference checks can treat the network as a point in R^d.
    Inputs are batched row-wise: ``X`` has shape ``(n, sizes[0])``.
    """

    def __init__(self, sizes, params=None, rng=None, out_scale=1.0):
        self.sizes = tuple(int(s) for s in sizes)
        if len(self.sizes) < 2 or min(self.sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.sizes}")
        n = self.n_params_for(self.sizes)
        if params is None:
            params = self._init(rng if rng is not None else np.random.default_rng(0), out_scale)
        params = np.array(params, dtype=float)
        if params.shape != (n,):
            raise ValueError(f"expected {n} parameters, got {params.shape}")
        self.params = params

    @staticmethod
    def n_params_for(sizes):
        return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))

    @property
    def n_params(self):
        return self.params.size

    def _init(self, rng, out_scale):
        chunks = []
        last = len(self.sizes) - 2
        for layer, (fan_in, fan_out) in enumerate(zip(self.sizes[:-1], self.sizes[1:])):
            w = rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / (fan_in + fan_out))
            if layer == last:
                w *= out_scale
            chunks += [w.ravel(), np.zeros(fan_out)]
        return np.concatenate(chunks)

    def layers(self, params=None):
        """Views ``(W, b)`` into the flat parameter vector."""
        p = self.params if params is None else params
        out, pos = [], 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = p[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
            pos += fan_in * fan_out
            b = p[pos : pos + fan_out]
            pos += fan_out
            out.append((w, b))
        return out

    def forward(self, X, params=None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        layers = self.layers(params)
        acts = [X]
        h = X
        for w, b in layers[:-1]:
            h = np.tanh(h @ w + b)
            acts.append(h)
        w, b = layers[-1]
        return h @ w + b, acts

    def __call__(self, X):
        return self.forward(X)[0]

    def backward(self, acts, d_out, params=None):
        """Gradient of ``sum(d_out * output)`` with respect to ``params``."""
        layers = self.layers(params)
        grads = []
        delta = np.atleast_2d(d_out)
        for idx in range(len(layers) - 1, -1, -1):
            w, _ = layers[idx]
            a_in = acts[idx]
            grads.append((a_in.T @ delta, delta.sum(axis=0)))
            if idx > 0:
                delta = (delta @ w.T) * (1.0 - a_in**2)
        flat = []
        for gw, gb in reversed(grads):
            flat += [gw.ravel(), gb]
        return np.concatenate(flat)

    def copy(self):
        return Mlp(self.sizes, self.params.copy())


class Adam:
    """Adam on a flat parameter vector (gradient *descent* on a loss)."""

    def __init__(self, n, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params, grad):
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
