"""Convex Lipschitz objectives with deterministic and stochastic subgradient oracles.

The central instance is the unregularized hinge-loss linear SVM: a client
with points (a_j, b_j) contributes sum_j max(0, 1 - b_j (w.a_j + theta)).
The intercept is carried as an extra model coordinate with constant feature
1, so every solver operates on a single vector of dimension d+1 and a single
Euclidean ball constraint covers weights and intercept jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatchError, InvalidInputError

Array = np.ndarray


@dataclass(frozen=True)
class LabeledPoint:
    """One sample: a real feature vector and a binary label in {-1, +1}."""

    features: Array
    label: int

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        if feats.ndim != 1:
            raise InvalidInputError("features must be a 1-D vector")
        if not np.all(np.isfinite(feats)):
            raise InvalidInputError("features must be finite")
        if self.label not in (-1, 1):
            raise InvalidInputError(f"label must be -1 or +1, got {self.label}")
        object.__setattr__(self, "features", feats)


class ClientDataset:
    """One client's ordered labeled samples, stored densely.

    Parameters
    ----------
    features : (m, d) array
    labels : (m,) array of -1/+1
    client_id : int
    """

    def __init__(self, features, labels, client_id: int = 0):
        features = np.atleast_2d(np.asarray(features, dtype=float))
        labels = np.asarray(labels)
        if features.shape[0] == 0:
            raise InvalidInputError("dataset must be nonempty")
        if labels.shape != (features.shape[0],):
            raise InvalidInputError("labels must be one per row")
        if not np.all(np.isfinite(features)):
            raise InvalidInputError("features must be finite")
        if not np.all(np.isin(labels, (-1, 1))):
            raise InvalidInputError("labels must be -1 or +1")
        self.features = features
        self.labels = labels.astype(float)
        self.client_id = int(client_id)
        # rows of -b_j * (a_j, 1): margin_j = 1 + row_j . w_aug, and row_j is
        # the active-hinge subgradient of point j
        aug = np.hstack([features, np.ones((features.shape[0], 1))])
        self._signed_aug = -self.labels[:, None] * aug
        self._row_norms = np.linalg.norm(aug, axis=1)

    @classmethod
    def from_points(cls, points, client_id: int = 0) -> "ClientDataset":
        points = list(points)
        if not points:
            raise InvalidInputError("dataset must be nonempty")
        dims = {p.features.shape[0] for p in points}
        if len(dims) != 1:
            raise InvalidInputError("all points must share one dimension")
        feats = np.stack([p.features for p in points])
        labels = np.array([p.label for p in points])
        return cls(feats, labels, client_id)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def points(self) -> list[LabeledPoint]:
        return [
            LabeledPoint(self.features[j], int(self.labels[j]))
            for j in range(self.m)
        ]

    def point_norms(self) -> Array:
        """Norms of the augmented rows (a_j, 1); bound per-point subgradients."""
        return self._row_norms.copy()

    def lipschitz_bound(self) -> float:
        """Safe Lipschitz constant of the client sum: sum_j ||(a_j, 1)||."""
        return float(self._row_norms.sum())


@dataclass
class SvmModel:
    """Linear classifier sign(w.a + theta); stored jointly as (w, theta)."""

    weights: Array
    intercept: float

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.ndim != 1:
            raise InvalidInputError("weights must be a 1-D vector")

    def as_vector(self) -> Array:
        """Augmented vector of dimension d+1, intercept last."""
        return np.append(self.weights, self.intercept)

    @classmethod
    def from_vector(cls, vec) -> "SvmModel":
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.shape[0] < 1:
            raise InvalidInputError("model vector must be 1-D, length >= 1")
        return cls(vec[:-1].copy(), float(vec[-1]))


def _check_dims(w_aug: Array, data: ClientDataset) -> None:
    if w_aug.shape != (data.d + 1,):
        raise DimensionMismatchError(
            f"model dimension {w_aug.shape} does not match data dimension "
            f"({data.d + 1},)"
        )


def hinge_loss_value(model: SvmModel, data: ClientDataset) -> float:
    """Sum over the client's points of max(0, 1 - b_j (w.a_j + theta)).

    Unnormalized client sum; the 1/n federation average lives one layer up.
    """
    w = model.as_vector()
    _check_dims(w, data)
    margins = 1.0 + data._signed_aug @ w
    return float(np.maximum(margins, 0.0).sum())


def hinge_subgradient_point(model: SvmModel, point: LabeledPoint) -> Array:
    """Subgradient of one point's hinge term at the model.

    Returns -b (a, 1) when the hinge is active (slack > 0) and the zero
    vector otherwise. At the kink (slack exactly 0) the zero vector is
    returned; it is always a member of the subdifferential there.
    """
    w = model.as_vector()
    if point.features.shape[0] + 1 != w.shape[0]:
        raise DimensionMismatchError("point and model dimensions disagree")
    aug = np.append(point.features, 1.0)
    slack = 1.0 - point.label * (aug @ w)
    if slack > 0.0:
        return -point.label * aug
    return np.zeros_like(aug)


def client_full_subgradient(model: SvmModel, data: ClientDataset) -> Array:
    """Sum of hinge_subgradient_point over all of the client's points."""
    w = model.as_vector()
    _check_dims(w, data)
    margins = 1.0 + data._signed_aug @ w
    active = (margins > 0.0).astype(float)
    return data._signed_aug.T @ active


def client_stochastic_subgradient(
    model: SvmModel, data: ClientDataset, batch_fraction: float, rng
) -> Array:
    """Unbiased mini-batch estimate of client_full_subgradient.

    Samples ceil(batch_fraction * m) points uniformly without replacement and
    rescales by m/batch so the estimator is unbiased. batch_fraction = 1
    short-circuits to the deterministic full subgradient (no RNG draw).
    """
    if not 0.0 < batch_fraction <= 1.0:
        raise InvalidInputError("batch_fraction must lie in (0, 1]")
    w = model.as_vector()
    _check_dims(w, data)
    m = data.m
    batch = int(np.ceil(batch_fraction * m))
    if batch >= m:
        return client_full_subgradient(model, data)
    idx = rng.choice(m, size=batch, replace=False)
    rows = data._signed_aug[idx]
    margins = 1.0 + rows @ w
    active = (margins > 0.0).astype(float)
    return (m / batch) * (rows.T @ active)


def minibatch_variance_bound(point_norms: Array, batch: int) -> float:
    """Upper bound on E||g_hat - g||^2 for the without-replacement estimator.

    Uses the finite-population variance of a scaled sample sum with the
    per-point subgradient norm bound r_j = ||(a_j, 1)||: population spread
    is at most (2 max_j r_j)^2 whatever the model is.
    """
    m = len(point_norms)
    if batch >= m or m <= 1:
        return 0.0
    spread = (2.0 * float(np.max(point_norms))) ** 2
    return m * (m - batch) / batch * (m / (m - 1.0)) * spread


class ObjectiveOracle:
    """Convex objective with value and (stochastic) subgradient access.

    Subclasses guarantee ``value`` convex, every returned subgradient norm at
    most ``lipschitz_G`` on the working ball, and ``stochastic_subgradient``
    unbiased for an element of the subdifferential with variance at most
    ``variance_sigma2``.
    """

    lipschitz_G: float = np.inf
    variance_sigma2: float = 0.0

    def value(self, w: Array) -> float:
        raise NotImplementedError

    def value_batch(self, ws: Array) -> Array:
        """Vectorized value over rows of (N, dim); default loops."""
        return np.array([self.value(w) for w in ws])

    def full_subgradient(self, w: Array) -> Array:
        raise NotImplementedError

    def stochastic_subgradient(self, w: Array, rng) -> Array:
        return self.full_subgradient(w)


class HingeOracle(ObjectiveOracle):
    """Oracle for one client's unnormalized hinge-loss sum.

    batch_fraction < 1 makes stochastic_subgradient a mini-batch estimate;
    batch_fraction = 1 makes the oracle fully deterministic.
    """

    def __init__(self, data: ClientDataset, batch_fraction: float = 1.0):
        if not 0.0 < batch_fraction <= 1.0:
            raise InvalidInputError("batch_fraction must lie in (0, 1]")
        self.data = data
        self.batch_fraction = batch_fraction
        self.lipschitz_G = data.lipschitz_bound()
        if batch_fraction < 1.0:
            batch = int(np.ceil(batch_fraction * data.m))
            self.variance_sigma2 = minibatch_variance_bound(
                data.point_norms(), batch
            )
        else:
            self.variance_sigma2 = 0.0

    def _model(self, w: Array) -> SvmModel:
        return SvmModel.from_vector(w)

    def value(self, w: Array) -> float:
        return hinge_loss_value(self._model(w), self.data)

    def value_batch(self, ws: Array) -> Array:
        margins = 1.0 + ws @ self.data._signed_aug.T
        return np.maximum(margins, 0.0).sum(axis=1)

    def full_subgradient(self, w: Array) -> Array:
        return client_full_subgradient(self._model(w), self.data)

    def stochastic_subgradient(self, w: Array, rng) -> Array:
        return client_stochastic_subgradient(
            self._model(w), self.data, self.batch_fraction, rng
        )


class ScaledOracle(ObjectiveOracle):
    """scale * f for a base oracle f; used for the per-client 1/n factor."""

    def __init__(self, base: ObjectiveOracle, scale: float):
        if scale <= 0:
            raise InvalidInputError("scale must be positive")
        self.base = base
        self.scale = float(scale)
        self.lipschitz_G = scale * base.lipschitz_G
        self.variance_sigma2 = scale * scale * base.variance_sigma2

    def value(self, w: Array) -> float:
        return self.scale * self.base.value(w)

    def value_batch(self, ws: Array) -> Array:
        return self.scale * self.base.value_batch(ws)

    def full_subgradient(self, w: Array) -> Array:
        return self.scale * self.base.full_subgradient(w)

    def stochastic_subgradient(self, w: Array, rng) -> Array:
        return self.scale * self.base.stochastic_subgradient(w, rng)


class CountingOracle(ObjectiveOracle):
    """Pass-through oracle counting subgradient calls (value calls are free)."""

    def __init__(self, base: ObjectiveOracle):
        self.base = base
        self.subgradient_calls = 0
        self.lipschitz_G = base.lipschitz_G
        self.variance_sigma2 = base.variance_sigma2

    def value(self, w: Array) -> float:
        return self.base.value(w)

    def value_batch(self, ws: Array) -> Array:
        return self.base.value_batch(ws)

    def full_subgradient(self, w: Array) -> Array:
        self.subgradient_calls += 1
        return self.base.full_subgradient(w)

    def stochastic_subgradient(self, w: Array, rng) -> Array:
        self.subgradient_calls += 1
        return self.base.stochastic_subgradient(w, rng)


class FederatedObjective(ObjectiveOracle):
    """f(x) = (1/n) sum_i f_i(x) over the clients' oracles.

    Deterministic view used for metrics and reference solving; subgradients
    are full-batch means of the clients' full subgradients.
    """

    def __init__(self, oracles: list[ObjectiveOracle]):
        if not oracles:
            raise InvalidInputError("need at least one client oracle")
        self.oracles = list(oracles)
        n = len(oracles)
        self.lipschitz_G = sum(o.lipschitz_G for o in oracles) / n
        self.variance_sigma2 = 0.0

    def value(self, w: Array) -> float:
        return sum(o.value(w) for o in self.oracles) / len(self.oracles)

    def value_batch(self, ws: Array) -> Array:
        total = self.oracles[0].value_batch(ws).astype(float)
        for o in self.oracles[1:]:
            total = total + o.value_batch(ws)
        return total / len(self.oracles)

    def full_subgradient(self, w: Array) -> Array:
        total = self.oracles[0].full_subgradient(w)
        for o in self.oracles[1:]:
            total = total + o.full_subgradient(w)
        return total / len(self.oracles)


def federation_lipschitz(oracles, mode: str = "global") -> float:
    """Lipschitz constant fed to the schedule formulas.

    "global": bound for the averaged objective, (1/n) sum_i G_i.
    "client_max": max_i G_i, the constant each client function satisfies.
    """
    gs = [o.lipschitz_G for o in oracles]
    if mode == "global":
        return float(sum(gs) / len(gs))
    if mode == "client_max":
        return float(max(gs))
    raise InvalidInputError(f"unknown lipschitz mode {mode!r}")
