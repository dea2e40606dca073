"""Ground-truth objective values without an external solver.

Two independent routes:
  * reference_solve: restart-certified averaged projected subgradient
    descent. Each restart re-centers on the incumbent and halves the step
    scale, which converges fast on sharp piecewise-linear minima; the
    certificate combines the spread of recent restart values with the
    plain 1/sqrt(T) term of the final restart.
  * grid_minimize: brute-force grid search, exhaustive up to 2 dimensions
    and multi-scale refined at 3, used to cross-check the first route on
    low-dimensional instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError
from .mopes import project_ball
from .problems import ObjectiveOracle

Array = np.ndarray


@dataclass
class ReferenceSolution:
    """Best point found, its value, and an achieved-accuracy estimate.

    warning is set when the step budget ran out before the certificate met
    the requested target; the solution is then best-effort.
    """

    x_star: Array
    f_star: float
    certificate: float
    warning: bool
    oracle_calls: int


def _restart_budget(c0: float, g_scale: float, target: float, steps: int) -> int:
    """Number of step-scale halvings so the final scale's 1/sqrt(T) term can
    reach the target; clamped to a practical range."""
    per_step = g_scale**2 * (1.0 + math.log(steps)) / (2.0 * math.sqrt(steps))
    c_final = target / (2.0 * max(per_step, 1e-300))
    if c_final >= c0:
        return 12
    return int(min(60, max(12, math.ceil(math.log2(c0 / c_final)) + 1)))


def reference_solve(
    oracle: ObjectiveOracle,
    dim: int,
    target_accuracy: float = 1e-6,
    radius: float | None = None,
    x0: Array | None = None,
    seed: int = 0,
    steps_per_restart: int = 2000,
    sweeps: int = 8,
    restarts: int | None = None,
) -> ReferenceSolution:
    """Minimize a deterministic convex oracle over a radius ball.

    Projected subgradient descent with eta_t = c/sqrt(t) is restarted from
    the incumbent with the step scale c halving each restart; each restart's
    candidates are every iterate plus suffix averages (full, half, quarter
    tail), scored in one batched value call. The halving schedule is swept
    repeatedly because sharp piecewise-linear valleys need the mid-range
    scales again once the incumbent has moved; the loop stops after the
    first sweep (beyond the initial one) whose total improvement plus the
    final 1/sqrt(T) estimate is within target_accuracy. The restart count is
    derived from target_accuracy; the warning flag is set when the sweep
    budget runs out above target.
    """
    if target_accuracy <= 0:
        raise InvalidInputError("target_accuracy must be positive")
    x0 = np.zeros(dim) if x0 is None else np.asarray(x0, dtype=float)
    if radius is None:
        radius = 10.0 * float(np.linalg.norm(x0)) + 10.0
    g_scale = max(float(oracle.lipschitz_G), 1e-12)
    if not math.isfinite(g_scale):
        g_scale = max(float(np.linalg.norm(oracle.full_subgradient(x0))), 1.0)
    c0 = radius / g_scale
    if restarts is None:
        restarts = _restart_budget(c0, g_scale, target_accuracy, steps_per_restart)

    x_inc = project_ball(x0, radius)
    f_inc = oracle.value(x_inc)
    calls = 0
    certificate = math.inf
    steps = steps_per_restart
    theory = math.inf
    for sweep_idx in range(sweeps):
        f_sweep_start = f_inc
        for r in range(restarts):
            c = c0 * 2.0**-r
            x_start = x_inc.copy()
            x = x_start
            iterates = np.empty((steps, dim))
            for t in range(1, steps + 1):
                g = oracle.full_subgradient(x)
                calls += 1
                x = project_ball(x - (c / math.sqrt(t)) * g, radius)
                iterates[t - 1] = x
            csum = iterates.cumsum(axis=0)
            candidates = [iterates]
            for frac in (1.0, 0.5, 0.25):
                start = int(steps * (1.0 - frac))
                tail = csum[-1] - (csum[start - 1] if start > 0 else 0.0)
                candidates.append((tail / (steps - start))[None, :])
            stacked = np.vstack(candidates)
            values = oracle.value_batch(stacked)
            j = int(np.argmin(values))
            if values[j] < f_inc:
                x_inc, f_inc = stacked[j].copy(), float(values[j])
            travel = float(np.linalg.norm(x_start - x_inc))
            theory = (
                travel**2 / (2.0 * c)
                + c * g_scale**2 * (1.0 + math.log(steps)) / 2.0
            ) / math.sqrt(steps)
        # certify at sweep boundaries only: a full pass over all step scales
        # with (almost) no improvement is the stall signal sharp valleys need
        certificate = (f_sweep_start - f_inc) + theory
        if sweep_idx >= 1 and certificate <= target_accuracy:
            return ReferenceSolution(
                x_star=x_inc,
                f_star=f_inc,
                certificate=certificate,
                warning=False,
                oracle_calls=calls,
            )
    return ReferenceSolution(
        x_star=x_inc,
        f_star=f_inc,
        certificate=certificate,
        warning=certificate > target_accuracy,
        oracle_calls=calls,
    )


def _axis(lo: float, hi: float, resolution: float) -> Array:
    count = int(round((hi - lo) / resolution)) + 1
    return lo + resolution * np.arange(count)


def _eval_grid(value_batch, axes: list[Array], chunk: int = 1_000_000):
    """Best point over the Cartesian product of axes, evaluated in chunks."""
    mesh_shape = tuple(len(a) for a in axes)
    total = int(np.prod(mesh_shape))
    best_f = math.inf
    best_idx = 0
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        flat = np.arange(start, stop)
        coords = np.unravel_index(flat, mesh_shape)
        pts = np.stack([axes[j][coords[j]] for j in range(len(axes))], axis=1)
        vals = value_batch(pts)
        j = int(np.argmin(vals))
        if vals[j] < best_f:
            best_f = float(vals[j])
            best_idx = start + j
    coords = np.unravel_index(best_idx, mesh_shape)
    point = np.array([axes[j][coords[j]] for j in range(len(axes))])
    return point, best_f


def grid_minimize(
    value_batch, bounds: list[tuple[float, float]], resolution: float
) -> tuple[Array, float]:
    """Grid search over a box; returns (best point, best value).

    Dimensions 1-2: a single exhaustive pass at the requested resolution.
    Dimension 3: multi-scale refinement (41 points per axis per level,
    shrinking the box around the incumbent by 5x) until the level spacing
    reaches the requested resolution; the incumbent is kept on every level's
    grid so values are non-increasing across levels.
    """
    dims = len(bounds)
    if dims < 1 or dims > 3:
        raise InvalidInputError("grid oracle supports 1 to 3 dimensions")
    if resolution <= 0:
        raise InvalidInputError("resolution must be positive")
    if dims <= 2:
        axes = [_axis(lo, hi, resolution) for lo, hi in bounds]
        return _eval_grid(value_batch, axes)

    per_axis = 41
    center = np.array([(lo + hi) / 2.0 for lo, hi in bounds])
    half = max((hi - lo) / 2.0 for lo, hi in bounds)
    best_point, best_f = center.copy(), float(value_batch(center[None, :])[0])
    while True:
        spacing = 2.0 * half / (per_axis - 1)
        axes = []
        for j, (lo, hi) in enumerate(bounds):
            a = center[j] + np.linspace(-half, half, per_axis)
            axes.append(np.clip(a, lo, hi))
        point, f = _eval_grid(value_batch, axes)
        if f < best_f:
            best_point, best_f = point, f
        if spacing <= resolution:
            break
        center = best_point
        half = half / 5.0
    return best_point, best_f
