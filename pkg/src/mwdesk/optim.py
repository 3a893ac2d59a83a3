"""Shared RMSProp with global gradient-norm clipping."""
from __future__ import annotations

import numpy as np

from .net import DivergedError


class RMSProp:
    """RMSProp update over named parameter blocks.

    Gradients are clipped by global norm *before* entering the running
    second-moment accumulator. State starts at zero, so zero gradients (or a
    zero learning rate) leave parameters bit-identical.
    """

    def __init__(self, learning_rate: float = 7e-4, decay: float = 0.99,
                 epsilon: float = 1e-5, clip_norm: float = 40.0):
        self.learning_rate = learning_rate
        self.decay = decay
        self.epsilon = epsilon
        self.clip_norm = clip_norm
        self.mean_square: dict[str, np.ndarray] = {}

    def clip(self, grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        total = 0.0
        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                raise DivergedError(f"diverged: non-finite gradient in {name}")
            total += float((g * g).sum())
        norm = np.sqrt(total)
        if self.clip_norm > 0 and norm > self.clip_norm:
            scale = self.clip_norm / norm
            return {k: g * scale for k, g in grads.items()}
        return grads

    def apply(self, params: dict[str, np.ndarray],
              grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        grads = self.clip(grads)
        for name, g in grads.items():
            ms = self.mean_square.get(name)
            if ms is None:
                ms = np.zeros_like(params[name])
                self.mean_square[name] = ms
            ms *= self.decay
            ms += (1.0 - self.decay) * g * g
            step = self.learning_rate * g / np.sqrt(ms + self.epsilon)
            if not np.all(np.isfinite(step)):
                raise DivergedError(f"diverged: non-finite update in {name}")
            params[name] = params[name] - step
        return params

    def state_arrays(self) -> dict[str, np.ndarray]:
        return self.mean_square
