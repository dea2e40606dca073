"""Experiment orchestration: problems, reference values, runs, sweeps.

Reproduces the evaluation shape end to end: build a federated problem (CSV
with k-means partitioning, a synthetic two-cluster instance, or an analytic
toy), compute a certified reference value, run any of the four algorithms
over a list of seeds from x0 = 0, and emit per-seed plus aggregate CSVs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .baselines import BASELINE_RUNNERS, BaselineConfig
from .data import (
    RawDataset,
    clients_from_partition,
    heterogeneous_partition,
    kmeans_partition,
    load_csv,
    load_wisconsin,
    synthetic_two_cluster,
)
from .analytic import AbsoluteValueOracle, QuadraticOracle
from .exceptions import InvalidInputError, SweepError
from .metrics import (
    MetricsRecord,
    RunResult,
    aggregate_by_round,
    write_aggregate,
    write_metrics,
)
from .mopes import default_radius
from .problems import FederatedObjective, HingeOracle, federation_lipschitz
from .protocol import FedmlsSchedule, run_fedmls
from .reference import ReferenceSolution, grid_minimize, reference_solve
from .rng import GENERATOR_NAME

DEFAULT_SEEDS = list(range(20))

SWEEPABLE = ("eta0", "lambda0", "t0")


@dataclass
class ProblemSpec:
    """Where the data comes from and how it is federated.

    kind: "csv" | "wisconsin" | "synthetic_two_cluster" | "analytic".
    csv problems are split with seeded k-means; the synthetic two-cluster
    instance uses the maximally heterogeneous blob split when heterogeneous
    is set (requires an even client count), otherwise k-means.
    """

    kind: str
    n_clients: int = 1
    batch_fraction: float = 1.0
    partition_seed: int = 0
    # csv
    csv_path: str | None = None
    label_column: str | None = None
    positive_label: str | None = None
    # synthetic
    d: int = 2
    per_cluster_m: int = 40
    separation: float = 3.0
    data_seed: int = 0
    heterogeneous: bool = True
    # analytic
    analytic_name: str = "abs"
    dim: int = 1


@dataclass
class ProblemInstance:
    """Materialized federated problem: per-client oracles plus the global view."""

    name: str
    oracles: list
    objective: FederatedObjective
    dim: int
    clients: list | None = None
    raw: RawDataset | None = None

    def deterministic_objective(self) -> FederatedObjective:
        """Full-batch view of the same data for reference solving/metrics."""
        if self.clients is not None:
            return FederatedObjective([HingeOracle(c, 1.0) for c in self.clients])
        return self.objective


def build_problem(spec: ProblemSpec) -> ProblemInstance:
    if spec.kind == "analytic":
        if spec.analytic_name == "abs":
            oracle = AbsoluteValueOracle(dim=spec.dim)
        elif spec.analytic_name == "quadratic":
            oracle = QuadraticOracle(dim=spec.dim)
        else:
            raise InvalidInputError(f"unknown analytic problem {spec.analytic_name!r}")
        oracles = [oracle for _ in range(spec.n_clients)]
        return ProblemInstance(
            name=f"analytic-{spec.analytic_name}-d{spec.dim}",
            oracles=oracles,
            objective=FederatedObjective(oracles),
            dim=spec.dim,
        )

    if spec.kind in ("csv", "wisconsin"):
        if spec.kind == "wisconsin":
            raw = load_wisconsin(spec.csv_path)
            name = "wisconsin"
        else:
            if not spec.csv_path or not spec.label_column or spec.positive_label is None:
                raise InvalidInputError("csv problems need csv_path, label_column, positive_label")
            raw = load_csv(spec.csv_path, spec.label_column, spec.positive_label)
            name = Path(spec.csv_path).stem
        partition = kmeans_partition(raw, spec.n_clients, seed=spec.partition_seed)
        clients = clients_from_partition(raw, partition)
    elif spec.kind == "synthetic_two_cluster":
        raw, info = synthetic_two_cluster(
            spec.d, spec.per_cluster_m, spec.separation, spec.data_seed
        )
        if spec.heterogeneous:
            partition = heterogeneous_partition(info, spec.n_clients)
        else:
            partition = kmeans_partition(raw, spec.n_clients, seed=spec.partition_seed)
        clients = clients_from_partition(raw, partition)
        name = f"two-cluster-d{spec.d}-sep{spec.separation:g}"
    else:
        raise InvalidInputError(f"unknown problem kind {spec.kind!r}")

    oracles = [HingeOracle(c, spec.batch_fraction) for c in clients]
    return ProblemInstance(
        name=name,
        oracles=oracles,
        objective=FederatedObjective(oracles),
        dim=clients[0].d + 1,
        clients=clients,
        raw=raw,
    )


@dataclass
class AlgorithmParams:
    """Union of the per-algorithm knobs; only the relevant ones are read.

    fedmls: schedule_mode + (lambda0, t0) or (lam, inner_steps) or target
    accuracy sizing (epsilon + dist0 + lipschitz_mode). baselines: eta0 and
    optional overrides.
    """

    rounds: int = 50
    # fedmls
    schedule_mode: str = "decaying"
    lambda0: float = 1.0
    t0: float = 1.0
    lam: float | None = None
    inner_steps: int | None = None
    radius: float | None = None
    epsilon: float | None = None
    dist0: float | None = None
    lipschitz_mode: str = "global"
    # baselines
    eta0: float = 0.1
    eta_global: float | None = None
    scaffold_step_counter: str = "cumulative"
    max_iters: int | None = None


def fedmls_schedule(params: AlgorithmParams, problem: ProblemInstance) -> FedmlsSchedule:
    radius = params.radius
    if radius is None:
        radius = default_problem_radius(problem)
    if params.epsilon is not None:
        if params.dist0 is None:
            raise InvalidInputError(
                "target-accuracy sizing needs dist0 (= ||x0 - x*||); supply it "
                "explicitly or run the reference solver first"
            )
        g = federation_lipschitz(problem.oracles, params.lipschitz_mode)
        sigma2 = max(o.variance_sigma2 for o in problem.oracles)
        return FedmlsSchedule.for_accuracy(
            g, sigma2, len(problem.oracles), params.dist0, params.epsilon, radius
        )
    if params.schedule_mode == "fixed":
        return FedmlsSchedule(
            mode="fixed",
            rounds=params.rounds,
            radius=radius,
            lam=params.lam,
            inner_steps=params.inner_steps,
        )
    return FedmlsSchedule(
        mode="decaying",
        rounds=params.rounds,
        radius=radius,
        lambda0=params.lambda0,
        t0=params.t0,
    )


def default_problem_radius(problem: ProblemInstance) -> float:
    """Ball radius used when none is configured: the x0 = 0 default of the
    solver's heuristic (10 ||x0|| + 10 = 10)."""
    return default_radius(np.zeros(problem.dim))


def baseline_config(algorithm: str, params: AlgorithmParams) -> BaselineConfig:
    return BaselineConfig(
        algorithm=algorithm,
        eta0=params.eta0,
        rounds=params.rounds,
        eta_global=params.eta_global,
        scaffold_step_counter=params.scaffold_step_counter,
        max_iters=params.max_iters,
    )


def run_algorithm(
    algorithm: str,
    problem: ProblemInstance,
    params: AlgorithmParams,
    seed: int,
) -> RunResult:
    """One seeded run of one algorithm, always starting from zero."""
    x0 = np.zeros(problem.dim)
    if algorithm == "fedmls":
        schedule = fedmls_schedule(params, problem)
        return run_fedmls(None, schedule, seed, oracles=problem.oracles, x0=x0)
    if algorithm not in BASELINE_RUNNERS:
        raise InvalidInputError(f"unknown algorithm {algorithm!r}")
    config = baseline_config(algorithm, params)
    runner = BASELINE_RUNNERS[algorithm]
    return runner(None, config, seed, oracles=problem.oracles, x0=x0)


def compute_reference(
    problem: ProblemInstance,
    target_accuracy: float = 1e-6,
    seed: int = 0,
    radius: float | None = None,
) -> ReferenceSolution:
    oracle = problem.deterministic_objective()
    return reference_solve(
        oracle, problem.dim, target_accuracy=target_accuracy, seed=seed, radius=radius
    )


def cross_check_reference(
    problem: ProblemInstance,
    solution: ReferenceSolution,
    box: float = 5.0,
    resolution: float = 1e-3,
) -> float:
    """Grid-oracle value for instances of dimension <= 3; returns the
    absolute objective-value gap versus the reference solution."""
    if problem.dim > 3:
        raise InvalidInputError("grid cross-check limited to dimension <= 3")
    oracle = problem.deterministic_objective()
    _, f_grid = grid_minimize(
        oracle.value_batch, [(-box, box)] * problem.dim, resolution
    )
    return abs(f_grid - solution.f_star)


@dataclass
class RunConfig:
    """One experiment request: a problem, an algorithm, seeds, outputs."""

    problem: ProblemSpec
    algorithm: str
    params: AlgorithmParams
    seeds: list[int] = field(default_factory=lambda: list(DEFAULT_SEEDS))
    output_dir: str | None = None
    f_star: float | None = None
    reference_accuracy: float = 1e-6

    def __post_init__(self):
        if not self.seeds:
            raise InvalidInputError("need at least one seed")


@dataclass
class ExperimentOutcome:
    """All per-seed results for one algorithm plus shared reference data."""

    algorithm: str
    f_star: float
    results: dict[int, RunResult]
    failures: dict[int, str]
    metrics_by_seed: dict[int, list[MetricsRecord]]
    aggregate_rows: list
    written_files: list[str] = field(default_factory=list)


def _metadata(config: RunConfig, problem: ProblemInstance, f_star: float) -> dict:
    return {
        "problem": asdict(config.problem),
        "algorithm": config.algorithm,
        "params": asdict(config.params),
        "seeds": config.seeds,
        "f_star": f_star,
        "rng": GENERATOR_NAME,
        "x0": "zeros",
    }


def run_experiment(
    config: RunConfig,
    problem: ProblemInstance | None = None,
    f_star: float | None = None,
) -> ExperimentOutcome:
    """Run one algorithm over all configured seeds.

    Computes the reference value first when not supplied. Writes one metrics
    CSV per seed and one aggregate CSV when output_dir is set; failed seeds
    are recorded and excluded from the aggregate.
    """
    if problem is None:
        problem = build_problem(config.problem)
    if f_star is None:
        f_star = config.f_star
    if f_star is None:
        f_star = compute_reference(problem, config.reference_accuracy).f_star

    results: dict[int, RunResult] = {}
    failures: dict[int, str] = {}
    metrics_by_seed: dict[int, list[MetricsRecord]] = {}
    for seed in config.seeds:
        result = run_algorithm(config.algorithm, problem, config.params, seed)
        results[seed] = result
        if result.failure is not None:
            failures[seed] = result.failure
        metrics_by_seed[seed] = [m.with_suboptimality(f_star) for m in result.metrics]

    ok_metrics = [metrics_by_seed[s] for s in config.seeds if s not in failures]
    aggregate_rows = aggregate_by_round(ok_metrics) if ok_metrics else []

    written: list[str] = []
    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = _metadata(config, problem, f_star)
        for seed in config.seeds:
            path = out / f"{config.algorithm}_seed{seed}.csv"
            write_metrics(path, metrics_by_seed[seed], {**meta, "seed": seed})
            written.append(str(path))
        agg_path = out / f"{config.algorithm}_aggregate.csv"
        agg_meta = dict(meta)
        if failures:
            agg_meta["warning"] = f"{len(failures)} seed(s) failed: {sorted(failures)}"
        write_aggregate(agg_path, aggregate_rows, agg_meta)
        written.append(str(agg_path))

    return ExperimentOutcome(
        algorithm=config.algorithm,
        f_star=f_star,
        results=results,
        failures=failures,
        metrics_by_seed=metrics_by_seed,
        aggregate_rows=aggregate_rows,
        written_files=written,
    )


def compare_algorithms(
    config: RunConfig, algorithms: tuple[str, ...] = ("fedmls", "scaffold", "scaffnew", "fedavg")
) -> dict[str, ExperimentOutcome]:
    """Run several algorithms on the same problem, seeds, and f_star."""
    problem = build_problem(config.problem)
    f_star = config.f_star
    if f_star is None:
        f_star = compute_reference(problem, config.reference_accuracy).f_star
    outcomes = {}
    for algorithm in algorithms:
        sub = RunConfig(
            problem=config.problem,
            algorithm=algorithm,
            params=config.params,
            seeds=config.seeds,
            output_dir=config.output_dir,
            f_star=f_star,
            reference_accuracy=config.reference_accuracy,
        )
        outcomes[algorithm] = run_experiment(sub, problem=problem, f_star=f_star)
    return outcomes


@dataclass
class SweepPoint:
    value: float
    mean_final_subopt: float
    excluded: bool = False
    reason: str = ""


@dataclass
class SweepOutcome:
    parameter: str
    best_value: float | None
    points: list[SweepPoint]
    warnings: list[str] = field(default_factory=list)


def _final_mean_subopt(outcome: ExperimentOutcome, seeds: list[int]) -> float:
    finals = []
    for seed in seeds:
        if seed in outcome.failures:
            continue
        records = outcome.metrics_by_seed[seed]
        if not records:
            continue
        finals.append(records[-1].suboptimality)
    if not finals:
        return math.nan
    return float(np.mean(finals))


def sweep(
    config: RunConfig, parameter: str, grid: list[float]
) -> SweepOutcome:
    """Tune one parameter over a grid; smaller mean final suboptimality wins.

    Diverging points (non-finite final value) are excluded with a recorded
    reason. Selecting an endpoint of a multi-point grid adds a widen-grid
    warning.
    """
    if parameter not in SWEEPABLE:
        raise InvalidInputError(f"parameter must be one of {SWEEPABLE}")
    if not grid:
        raise InvalidInputError("grid must be nonempty")
    problem = build_problem(config.problem)
    f_star = config.f_star
    if f_star is None:
        f_star = compute_reference(problem, config.reference_accuracy).f_star

    points: list[SweepPoint] = []
    for value in grid:
        params = AlgorithmParams(**asdict(config.params))
        setattr(params, parameter, value)
        sub = RunConfig(
            problem=config.problem,
            algorithm=config.algorithm,
            params=params,
            seeds=config.seeds,
            output_dir=None,
            f_star=f_star,
        )
        try:
            outcome = run_experiment(sub, problem=problem, f_star=f_star)
        except Exception as exc:
            points.append(SweepPoint(value, math.nan, True, f"run failed: {exc}"))
            continue
        final = _final_mean_subopt(outcome, config.seeds)
        if not math.isfinite(final):
            points.append(SweepPoint(value, final, True, "diverged (non-finite value)"))
        else:
            points.append(SweepPoint(value, final))

    usable = [p for p in points if not p.excluded]
    warnings = []
    if not usable:
        raise SweepError("all sweep points failed or diverged")
    best = min(usable, key=lambda p: p.mean_final_subopt)
    if len(grid) > 1 and best.value in (grid[0], grid[-1]):
        warnings.append(
            f"best {parameter}={best.value:g} sits on the grid boundary; widen the grid"
        )
    outcome = SweepOutcome(parameter, best.value, points, warnings)
    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"sweep_{parameter}.csv"
        with open(path, "w", newline="") as fh:
            fh.write(
                "# meta: " + repr({"parameter": parameter, "warnings": warnings}) + "\n"
            )
            fh.write("value,mean_final_subopt,excluded,reason\n")
            for p in points:
                fh.write(
                    f"{p.value!r},{p.mean_final_subopt!r},{int(p.excluded)},{p.reason}\n"
                )
    return outcome
