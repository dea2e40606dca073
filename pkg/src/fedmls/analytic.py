"""Small analytic convex objectives used by the experiment harness and tests.

Each exposes exact values, subgradients, and where available the closed-form
prox, so solver outputs can be checked against independent ground truth.
"""

from __future__ import annotations

import numpy as np

from .problems import ObjectiveOracle

Array = np.ndarray


class AbsoluteValueOracle(ObjectiveOracle):
    """f(x) = scale * ||x||_1; subgradient uses sign(x) with 0 at kinks."""

    def __init__(self, scale: float = 1.0, dim: int = 1):
        self.scale = float(scale)
        self.dim = dim
        self.lipschitz_G = self.scale * np.sqrt(dim)
        self.variance_sigma2 = 0.0

    def value(self, w: Array) -> float:
        return self.scale * float(np.abs(w).sum())

    def value_batch(self, ws: Array) -> Array:
        return self.scale * np.abs(ws).sum(axis=1)

    def full_subgradient(self, w: Array) -> Array:
        return self.scale * np.sign(w)

    def prox(self, v: Array, beta: float) -> Array:
        """argmin_u f(u) + (beta/2)||u - v||^2: soft threshold at scale/beta."""
        v = np.asarray(v, dtype=float)
        return np.sign(v) * np.maximum(np.abs(v) - self.scale / beta, 0.0)


class QuadraticOracle(ObjectiveOracle):
    """f(x) = 0.5 ||x||^2, driven through its gradient like any oracle."""

    def __init__(self, dim: int = 1, lipschitz_G: float = 10.0):
        self.dim = dim
        # gradient norm equals ||x||; bounded by the working-ball radius
        self.lipschitz_G = lipschitz_G
        self.variance_sigma2 = 0.0

    def value(self, w: Array) -> float:
        return 0.5 * float(w @ w)

    def value_batch(self, ws: Array) -> Array:
        return 0.5 * (ws * ws).sum(axis=1)

    def full_subgradient(self, w: Array) -> Array:
        return np.asarray(w, dtype=float)

    def prox(self, v: Array, beta: float) -> Array:
        """argmin_u 0.5||u||^2 + (beta/2)||u - v||^2 = v * beta/(1+beta)."""
        return np.asarray(v, dtype=float) * (beta / (1.0 + beta))


class ZeroOracle(ObjectiveOracle):
    """f == 0; every solver must leave the starting point unchanged."""

    lipschitz_G = 0.0
    variance_sigma2 = 0.0

    def __init__(self, dim: int = 1):
        self.dim = dim

    def value(self, w: Array) -> float:
        return 0.0

    def value_batch(self, ws: Array) -> Array:
        return np.zeros(ws.shape[0])

    def full_subgradient(self, w: Array) -> Array:
        return np.zeros_like(np.asarray(w, dtype=float))


class LinearOracle(ObjectiveOracle):
    """f(x) = slope . x; constant subgradient, handy for hand traces."""

    def __init__(self, slope):
        self.slope = np.asarray(slope, dtype=float)
        self.lipschitz_G = float(np.linalg.norm(self.slope))
        self.variance_sigma2 = 0.0

    def value(self, w: Array) -> float:
        return float(self.slope @ w)

    def value_batch(self, ws: Array) -> Array:
        return ws @ self.slope

    def full_subgradient(self, w: Array) -> Array:
        return self.slope.copy()


class FailingOracle(ObjectiveOracle):
    """Raises after a set number of subgradient calls; exercises abort paths."""

    lipschitz_G = 1.0
    variance_sigma2 = 0.0

    def __init__(self, fail_after: int = 0, dim: int = 1):
        self.fail_after = fail_after
        self.calls = 0
        self.dim = dim

    def value(self, w: Array) -> float:
        return 0.0

    def full_subgradient(self, w: Array) -> Array:
        self.calls += 1
        if self.calls > self.fail_after:
            raise RuntimeError("oracle exploded")
        return np.zeros_like(np.asarray(w, dtype=float))
