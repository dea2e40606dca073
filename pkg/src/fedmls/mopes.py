"""Projection-efficient accelerated solver for non-smooth convex problems.

Minimizes a convex Lipschitz F over a convex set by smoothing the coupling
between the constrained variable and a ball-constrained proxy with a
quadratic of weight 1/(2*lam), then running an accelerated scheme whose prox
sub-problems are solved inexactly by an inner subgradient loop
(``approx_prox``). Projections onto the hard set and oracle calls are
decoupled: one projection per outer round, ``inner_steps(k)`` oracle calls
inside round k.

The federated protocol reuses these exact update formulas; keeping them in
one place is what makes the single-client protocol trace bit-identical to
this solver.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import InvalidInputError
from .metrics import MetricsRecord
from .problems import ObjectiveOracle

Array = np.ndarray


def prox_penalty(lam: float, k: int) -> float:
    """Quadratic weight of round k's prox sub-problem: 4 / (lam * k)."""
    if lam <= 0:
        raise InvalidInputError("lam must be positive")
    if k < 1:
        raise InvalidInputError("round index must be >= 1")
    return 4.0 / (lam * k)


def interpolation_weight(k: int) -> float:
    """Accelerated interpolation weight 2 / (k + 1); equals 1 at k = 1."""
    if k < 1:
        raise InvalidInputError("round index must be >= 1")
    return 2.0 / (k + 1)


def averaging_weight(t: int) -> float:
    """Running-average weight 2(t+1) / (t(t+3)); equals 1 at t = 1."""
    if t < 1:
        raise InvalidInputError("step index must be >= 1")
    return 2.0 * (t + 1) / (t * (t + 3))


def mix(weight: float, old: Array, new: Array) -> Array:
    """(1 - weight) * old + weight * new, the scheme's only interpolation."""
    return (1.0 - weight) * old + weight * new


def project_ball(u: Array, radius: float) -> Array:
    """Euclidean projection onto the origin-centered ball of given radius.

    Nonexpansive and exactly idempotent: the result's norm is at most radius,
    so re-projection returns it unchanged bit-for-bit. (Rescaling can leave
    the norm one ulp above radius, hence the loop; it runs at most twice in
    practice.)
    """
    if radius <= 0:
        raise InvalidInputError("radius must be positive")
    u = np.asarray(u, dtype=float)
    nrm = float(np.linalg.norm(u))
    while nrm > radius:
        u = u * (radius / nrm)
        nrm = float(np.linalg.norm(u))
    return u


@dataclass(frozen=True)
class ProxResult:
    """Last iterate and weighted-average iterate of one inner loop."""

    last_iterate: Array
    averaged_iterate: Array


def approx_prox(
    v: Array,
    z_init: Array,
    beta: float,
    steps: int,
    oracle: ObjectiveOracle,
    radius: float,
    rng=None,
) -> ProxResult:
    """Inexactly solve argmin_u f(u) + (beta/2) ||u - v||^2 over the ball.

    Runs ``steps`` subgradient iterations from u_0 = z_init with step weight
    1/(1 + t/2), projecting onto the radius ball each step, and maintains the
    weighted running average with ``averaging_weight``. Returns both the last
    iterate and the average; the average is a convex combination of the
    projected iterates.

    rng = None uses the oracle's deterministic subgradient; otherwise the
    stochastic one.
    """
    if beta <= 0:
        raise InvalidInputError("beta must be positive")
    if steps < 1:
        raise InvalidInputError("steps must be >= 1")
    v = np.asarray(v, dtype=float)
    u = np.asarray(z_init, dtype=float)
    if float(np.linalg.norm(u)) > radius:
        raise InvalidInputError("z_init must lie inside the ball")
    u_avg = u
    for t in range(1, steps + 1):
        if rng is None:
            g = oracle.full_subgradient(u)
        else:
            g = oracle.stochastic_subgradient(u, rng)
        step = 1.0 / (1.0 + t / 2.0)
        u = project_ball(u - step * (g / beta + u - v), radius)
        theta = averaging_weight(t)
        u_avg = (1.0 - theta) * u_avg + theta * u
    return ProxResult(u, u_avg)


@dataclass
class MopesConfig:
    """Parameters of one solver run.

    lam: smoothing weight (> 0); rounds: outer iteration count K;
    inner_steps: per-round oracle budget, an int or a map k -> T_k;
    radius: proxy-ball radius, must enclose a solution;
    prox_error_budget: the free error-budget constant (D) trading inner steps
    against the guarantee; lipschitz_G / variance_sigma2 describe the oracle.
    """

    lam: float
    rounds: int
    inner_steps: int | Callable[[int], int]
    radius: float
    prox_error_budget: float = 1.0
    lipschitz_G: float = 1.0
    variance_sigma2: float = 0.0

    def __post_init__(self):
        if self.lam <= 0 or self.radius <= 0 or self.prox_error_budget <= 0:
            raise InvalidInputError("lam, radius, prox_error_budget must be positive")
        if self.rounds < 1:
            raise InvalidInputError("rounds must be >= 1")
        if self.variance_sigma2 < 0:
            raise InvalidInputError("variance_sigma2 must be >= 0")

    def steps_at(self, k: int) -> int:
        t = self.inner_steps(k) if callable(self.inner_steps) else self.inner_steps
        t = int(t)
        if t < 1:
            raise InvalidInputError(f"inner_steps({k}) must be >= 1")
        return t


def run_mopes(
    config: MopesConfig,
    oracle: ObjectiveOracle,
    project_feasible: Callable[[Array], Array],
    x0: Array,
    rng=None,
    seed_label: int = 0,
) -> tuple[Array, list[MetricsRecord]]:
    """Run the accelerated scheme for config.rounds outer iterations.

    project_feasible must be the exact (idempotent) Euclidean projection onto
    the hard constraint set; x0 must be feasible and inside the proxy ball.
    Returns the final feasible iterate and one metrics record per round with
    the objective value at that round's iterate.
    """
    x0 = np.asarray(x0, dtype=float)
    if float(np.linalg.norm(x0)) > config.radius:
        raise InvalidInputError("x0 must lie inside the proxy ball")
    if not np.array_equal(project_feasible(x0), x0):
        raise InvalidInputError("x0 must be a fixed point of project_feasible")

    x = x0
    z = x0
    xp = x0  # proxy-side interpolated iterate
    zp = x0  # proxy-side prox iterate
    history: list[MetricsRecord] = []
    cum_steps = 0
    for k in range(1, config.rounds + 1):
        t0 = time.perf_counter()
        beta = prox_penalty(config.lam, k)
        gamma = interpolation_weight(k)
        coupling = 1.0 / (beta * config.lam)
        y = mix(gamma, x, z)
        yp = mix(gamma, xp, zp)
        z = project_feasible(z - coupling * (y - yp))
        v = zp - coupling * (yp - y)
        t_k = config.steps_at(k)
        prox = approx_prox(v, zp, beta, t_k, oracle, config.radius, rng)
        zp = prox.last_iterate
        x = mix(gamma, x, z)
        xp = mix(gamma, xp, prox.averaged_iterate)
        cum_steps += t_k
        history.append(
            MetricsRecord(
                algorithm="mopes",
                seed=seed_label,
                round=k,
                cum_local_steps=cum_steps,
                f_value=oracle.value(x),
                wall_ms=(time.perf_counter() - t0) * 1e3,
            )
        )
    return x, history


def suboptimality_bound(
    dist0_sq: float, prox_error_budget: float, lam: float, rounds: int, lipschitz_G: float
) -> float:
    """A-priori bound on F(x_K) - F*:
    (10 dist0^2 + 8 D) / (lam K (K+1)) + G^2 lam / 2."""
    if min(dist0_sq, prox_error_budget, lam, rounds, lipschitz_G) <= 0:
        raise InvalidInputError("all bound inputs must be positive")
    k = rounds
    return (10.0 * dist0_sq + 8.0 * prox_error_budget) / (lam * k * (k + 1)) + (
        lipschitz_G**2 * lam / 2.0
    )


def min_inner_steps(
    lipschitz_G: float,
    variance_sigma2: float,
    lam: float,
    rounds: int,
    k: int,
    prox_error_budget: float,
) -> int:
    """Smallest inner budget T_k honoring the guarantee:
    ceil((4 G^2 + sigma^2) lam^2 K k^2 / (2 D)), floored at 1."""
    if min(lipschitz_G, lam, rounds, k, prox_error_budget) <= 0:
        raise InvalidInputError("G, lam, rounds, k, prox_error_budget must be positive")
    if variance_sigma2 < 0:
        raise InvalidInputError("variance_sigma2 must be >= 0")
    raw = (
        (4.0 * lipschitz_G**2 + variance_sigma2)
        * lam**2
        * rounds
        * k**2
        / (2.0 * prox_error_budget)
    )
    return max(1, math.ceil(raw))


def default_radius(x0: Array, value0: float | None = None, slope_lower: float | None = None) -> float:
    """Proxy-ball radius heuristic when none is configured.

    With a value at x0 and a lower bound on the objective's slope, bound the
    distance to a minimizer by value0/slope and take twice (||x0|| + that);
    otherwise fall back to 10 ||x0|| + 10.
    """
    norm0 = float(np.linalg.norm(np.asarray(x0, dtype=float)))
    if value0 is not None and slope_lower is not None and slope_lower > 0:
        return 2.0 * (norm0 + value0 / slope_lower)
    return 10.0 * norm0 + 10.0
