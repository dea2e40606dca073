"""Pydantic request/response models for the experiment service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class ProblemModel(BaseModel):
    kind: Literal["csv", "wisconsin", "synthetic_two_cluster", "analytic"]
    n_clients: int = 1
    batch_fraction: float = Field(default=1.0, gt=0.0, le=1.0)
    partition_seed: int = 0
    csv_path: Optional[str] = None
    label_column: Optional[str] = None
    positive_label: Optional[str] = None
    d: int = 2
    per_cluster_m: int = 40
    separation: float = 3.0
    data_seed: int = 0
    heterogeneous: bool = True
    analytic_name: str = "abs"
    dim: int = 1


class ParamsModel(BaseModel):
    rounds: int = Field(default=50, ge=1)
    schedule_mode: Literal["decaying", "fixed"] = "decaying"
    lambda0: float = 1.0
    t0: float = 1.0
    lam: Optional[float] = None
    inner_steps: Optional[int] = None
    radius: Optional[float] = None
    epsilon: Optional[float] = None
    dist0: Optional[float] = None
    lipschitz_mode: Literal["global", "client_max"] = "global"
    eta0: float = 0.1
    eta_global: Optional[float] = None
    scaffold_step_counter: Literal["cumulative", "per_round"] = "cumulative"
    max_iters: Optional[int] = None


class ReferenceRequest(BaseModel):
    problem: ProblemModel
    target_accuracy: float = 1e-6
    seed: int = 0
    radius: Optional[float] = None
    cross_check: bool = False


class ReferenceResponse(BaseModel):
    x_star: list[float]
    f_star: float
    certificate: float
    warning: bool
    oracle_calls: int
    grid_gap: Optional[float] = None


class MetricsRow(BaseModel):
    algorithm: str
    seed: int
    round: int
    cum_local_steps: int
    f_value: float
    suboptimality: float
    consensus_gap: float
    wall_ms: float


class SeedResult(BaseModel):
    seed: int
    records: list[MetricsRow]
    downlinks: int
    uplinks: int
    oracle_calls: list[int]
    rounds_completed: int
    failure: Optional[str] = None
    x_final: list[float]


class AggregateRowModel(BaseModel):
    round: int
    n_seeds: int
    cum_local_steps_mean: float
    subopt_mean: float
    subopt_std: float


class RunRequest(BaseModel):
    problem: ProblemModel
    algorithm: Literal["fedmls", "fedavg", "scaffold", "scaffnew"]
    params: ParamsModel = ParamsModel()
    seeds: list[int] = Field(default_factory=lambda: list(range(20)), min_length=1)
    f_star: Optional[float] = None
    reference_accuracy: float = 1e-6


class AlgorithmOutcome(BaseModel):
    algorithm: str
    f_star: float
    per_seed: list[SeedResult]
    aggregate: list[AggregateRowModel]
    failures: dict[int, str] = Field(default_factory=dict)


class RunResponse(BaseModel):
    outcome: AlgorithmOutcome
    metadata: dict


class CompareRequest(BaseModel):
    problem: ProblemModel
    params: ParamsModel = ParamsModel()
    seeds: list[int] = Field(default_factory=lambda: list(range(20)), min_length=1)
    algorithms: list[Literal["fedmls", "fedavg", "scaffold", "scaffnew"]] = Field(
        default_factory=lambda: ["fedmls", "scaffold", "scaffnew", "fedavg"]
    )
    f_star: Optional[float] = None
    reference_accuracy: float = 1e-6


class CompareResponse(BaseModel):
    f_star: float
    outcomes: dict[str, AlgorithmOutcome]
    metadata: dict


class SweepRequest(BaseModel):
    problem: ProblemModel
    algorithm: Literal["fedmls", "fedavg", "scaffold", "scaffnew"]
    params: ParamsModel = ParamsModel()
    seeds: list[int] = Field(default_factory=lambda: [0], min_length=1)
    parameter: Literal["eta0", "lambda0", "t0"]
    grid: list[float] = Field(min_length=1)
    f_star: Optional[float] = None


class SweepPointModel(BaseModel):
    value: float
    mean_final_subopt: float
    excluded: bool
    reason: str = ""


class SweepResponse(BaseModel):
    parameter: str
    best_value: Optional[float]
    points: list[SweepPointModel]
    warnings: list[str]


class PartitionRequest(BaseModel):
    problem: ProblemModel
    seed: int = 0


class PartitionResponse(BaseModel):
    n_clients: int
    assignment: list[int]
    client_sizes: list[int]


class HealthResponse(BaseModel):
    status: str
    version: str
