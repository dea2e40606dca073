"""FastAPI service wrapping the experiment harness.

Runs are synchronous: desk-scale experiments finish in seconds to minutes,
so each request performs the computation and returns the metrics in the
response. File output is the CLI client's job.
"""

from __future__ import annotations

from dataclasses import asdict

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..data import kmeans_partition
from ..exceptions import InvalidInputError, ParseError, SweepError
from ..harness import (
    AlgorithmParams,
    ExperimentOutcome,
    ProblemSpec,
    RunConfig,
    build_problem,
    compare_algorithms,
    compute_reference,
    cross_check_reference,
    run_experiment,
    sweep,
)
from ..metrics import record_to_dict
from ..rng import GENERATOR_NAME
from . import schemas


def _problem_spec(model: schemas.ProblemModel) -> ProblemSpec:
    return ProblemSpec(**model.model_dump())


def _params(model: schemas.ParamsModel) -> AlgorithmParams:
    return AlgorithmParams(**model.model_dump())


def _outcome_model(outcome: ExperimentOutcome) -> schemas.AlgorithmOutcome:
    per_seed = []
    for seed, result in outcome.results.items():
        per_seed.append(
            schemas.SeedResult(
                seed=seed,
                records=[
                    schemas.MetricsRow(**record_to_dict(r))
                    for r in outcome.metrics_by_seed[seed]
                ],
                downlinks=result.downlinks,
                uplinks=result.uplinks,
                oracle_calls=result.oracle_calls,
                rounds_completed=result.rounds_completed,
                failure=result.failure,
                x_final=[float(v) for v in result.x],
            )
        )
    return schemas.AlgorithmOutcome(
        algorithm=outcome.algorithm,
        f_star=outcome.f_star,
        per_seed=per_seed,
        aggregate=[
            schemas.AggregateRowModel(**asdict(row)) for row in outcome.aggregate_rows
        ],
        failures=outcome.failures,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="fedmls experiment service", version=__version__)

    @app.exception_handler(InvalidInputError)
    async def _invalid(request, exc):
        raise HTTPException(status_code=422, detail=str(exc))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/reference", response_model=schemas.ReferenceResponse)
    def reference(req: schemas.ReferenceRequest):
        try:
            problem = build_problem(_problem_spec(req.problem))
            solution = compute_reference(
                problem, req.target_accuracy, seed=req.seed, radius=req.radius
            )
            grid_gap = None
            if req.cross_check and problem.dim <= 3:
                grid_gap = cross_check_reference(problem, solution)
        except (InvalidInputError, ParseError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return schemas.ReferenceResponse(
            x_star=[float(v) for v in solution.x_star],
            f_star=solution.f_star,
            certificate=solution.certificate,
            warning=solution.warning,
            oracle_calls=solution.oracle_calls,
            grid_gap=grid_gap,
        )

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        config = RunConfig(
            problem=_problem_spec(req.problem),
            algorithm=req.algorithm,
            params=_params(req.params),
            seeds=list(req.seeds),
            f_star=req.f_star,
            reference_accuracy=req.reference_accuracy,
        )
        try:
            outcome = run_experiment(config)
        except (InvalidInputError, ParseError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        metadata = {
            "problem": asdict(config.problem),
            "algorithm": config.algorithm,
            "params": asdict(config.params),
            "seeds": config.seeds,
            "f_star": outcome.f_star,
            "rng": GENERATOR_NAME,
            "x0": "zeros",
        }
        return schemas.RunResponse(outcome=_outcome_model(outcome), metadata=metadata)

    @app.post("/compare", response_model=schemas.CompareResponse)
    def compare(req: schemas.CompareRequest):
        config = RunConfig(
            problem=_problem_spec(req.problem),
            algorithm="fedmls",
            params=_params(req.params),
            seeds=list(req.seeds),
            f_star=req.f_star,
            reference_accuracy=req.reference_accuracy,
        )
        try:
            outcomes = compare_algorithms(config, tuple(req.algorithms))
        except (InvalidInputError, ParseError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        f_star = next(iter(outcomes.values())).f_star
        metadata = {
            "problem": asdict(config.problem),
            "params": asdict(config.params),
            "seeds": config.seeds,
            "f_star": f_star,
            "rng": GENERATOR_NAME,
            "x0": "zeros",
        }
        return schemas.CompareResponse(
            f_star=f_star,
            outcomes={k: _outcome_model(v) for k, v in outcomes.items()},
            metadata=metadata,
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def run_sweep(req: schemas.SweepRequest):
        config = RunConfig(
            problem=_problem_spec(req.problem),
            algorithm=req.algorithm,
            params=_params(req.params),
            seeds=list(req.seeds),
            f_star=req.f_star,
        )
        try:
            outcome = sweep(config, req.parameter, list(req.grid))
        except SweepError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        except (InvalidInputError, ParseError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return schemas.SweepResponse(
            parameter=outcome.parameter,
            best_value=outcome.best_value,
            points=[schemas.SweepPointModel(**asdict(p)) for p in outcome.points],
            warnings=outcome.warnings,
        )

    @app.post("/partition", response_model=schemas.PartitionResponse)
    def partition(req: schemas.PartitionRequest):
        try:
            problem = build_problem(_problem_spec(req.problem))
            if problem.raw is None:
                raise InvalidInputError("partitioning needs a data-backed problem")
            part = kmeans_partition(problem.raw, req.problem.n_clients, seed=req.seed)
        except (InvalidInputError, ParseError, FileNotFoundError) as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return schemas.PartitionResponse(
            n_clients=part.n_clients,
            assignment=[int(v) for v in part.assignment],
            client_sizes=[int(v) for v in part.client_sizes()],
        )

    return app


app = create_app()
