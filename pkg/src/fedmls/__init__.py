"""Communication-efficient federated optimization of non-smooth convex objectives."""

__version__ = "0.1.0"

from .baselines import BaselineConfig, run_fedavg, run_scaffnew, run_scaffold
from .data import (
    Partition,
    RawDataset,
    kmeans_partition,
    load_csv,
    load_wisconsin,
    synthetic_two_cluster,
    wisconsin_csv_path,
)
from .metrics import MetricsRecord, RunResult, read_metrics, write_metrics
from .mopes import (
    MopesConfig,
    ProxResult,
    approx_prox,
    averaging_weight,
    interpolation_weight,
    min_inner_steps,
    project_ball,
    prox_penalty,
    run_mopes,
    suboptimality_bound,
)
from .problems import (
    ClientDataset,
    HingeOracle,
    LabeledPoint,
    ObjectiveOracle,
    SvmModel,
    client_full_subgradient,
    client_stochastic_subgradient,
    hinge_loss_value,
    hinge_subgradient_point,
)
from .protocol import (
    FedmlsSchedule,
    RoundMessage,
    ServerState,
    ClientState,
    consensus_project,
    run_fedmls,
    schedule_for_accuracy,
)
from .reference import ReferenceSolution, grid_minimize, reference_solve

__all__ = [
    "BaselineConfig",
    "ClientDataset",
    "ClientState",
    "FedmlsSchedule",
    "HingeOracle",
    "LabeledPoint",
    "MetricsRecord",
    "MopesConfig",
    "ObjectiveOracle",
    "Partition",
    "ProxResult",
    "RawDataset",
    "ReferenceSolution",
    "RoundMessage",
    "RunResult",
    "ServerState",
    "SvmModel",
    "approx_prox",
    "averaging_weight",
    "client_full_subgradient",
    "client_stochastic_subgradient",
    "consensus_project",
    "grid_minimize",
    "hinge_loss_value",
    "hinge_subgradient_point",
    "interpolation_weight",
    "kmeans_partition",
    "load_csv",
    "load_wisconsin",
    "min_inner_steps",
    "project_ball",
    "prox_penalty",
    "read_metrics",
    "reference_solve",
    "run_fedavg",
    "run_fedmls",
    "run_mopes",
    "run_scaffnew",
    "run_scaffold",
    "schedule_for_accuracy",
    "suboptimality_bound",
    "synthetic_two_cluster",
    "wisconsin_csv_path",
    "write_metrics",
]
