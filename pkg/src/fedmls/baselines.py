"""FedAvg, Scaffold, and Scaffnew under the non-smooth step-size rules.

All three share the problem oracles, simulated channel, RNG discipline, and
metrics schema with the main protocol, so runs are comparable point-for-point
on both the communication-round and local-step axes.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ClientFailureError, InvalidInputError
from .metrics import MetricsRecord, RunResult
from .problems import CountingOracle, FederatedObjective, HingeOracle, ObjectiveOracle
from .protocol import SimulatedChannel, consensus_project, _consensus_gap
from .rng import spawn_run_streams

Array = np.ndarray


def default_local_steps(k: int) -> int:
    """Increasing local-step rule T_k = k."""
    return k


def default_comm_probability(t: int) -> float:
    """Communication coin p_t = 1/sqrt(t)."""
    return 1.0 / math.sqrt(t)


@dataclass
class BaselineConfig:
    """Parameters for one baseline run; only the fields the chosen algorithm
    reads are consulted.

    eta0: base step size. rounds: communication-round budget. local_steps_rule:
    k -> T_k (fedavg/scaffold). prob_rule: t -> p_t (scaffnew). eta_global:
    scaffold server step, default sqrt(n). scaffold_step_counter: "cumulative"
    keeps the local step index growing across rounds (the decreasing-step
    reading); "per_round" resets it each round. max_iters caps scaffnew's
    iteration loop when the round budget is not reached first.
    """

    algorithm: str
    eta0: float
    rounds: int
    local_steps_rule: Callable[[int], int] = default_local_steps
    prob_rule: Callable[[int], float] = default_comm_probability
    eta_global: float | None = None
    scaffold_step_counter: str = "cumulative"
    max_iters: int | None = None

    def __post_init__(self):
        if self.algorithm not in ("fedavg", "scaffold", "scaffnew"):
            raise InvalidInputError(f"unknown algorithm {self.algorithm!r}")
        if self.eta0 <= 0:
            raise InvalidInputError("eta0 must be positive")
        if self.rounds < 1:
            raise InvalidInputError("rounds must be >= 1")
        if self.scaffold_step_counter not in ("cumulative", "per_round"):
            raise InvalidInputError("scaffold_step_counter must be cumulative|per_round")


@dataclass
class ScaffoldState:
    """Server model, server control variate, and per-client control variates.

    c equals the client mean after every aggregation; everything starts at
    zero.
    """

    x: Array
    c: Array
    c_clients: list[Array] = field(default_factory=list)


def _setup(clients, batch_fraction, oracles, x0):
    if oracles is None:
        if not clients:
            raise InvalidInputError("need clients or explicit oracles")
        oracles = [HingeOracle(c, batch_fraction) for c in clients]
        dim = clients[0].d + 1
    else:
        if x0 is None:
            raise InvalidInputError("x0 is required with explicit oracles")
        dim = len(np.asarray(x0))
    counting = [CountingOracle(o) for o in oracles]
    objective = FederatedObjective(counting)
    if x0 is None:
        x0 = np.zeros(dim)
    return counting, objective, np.asarray(x0, dtype=float)


def run_fedavg(
    clients,
    config: BaselineConfig,
    seed: int,
    batch_fraction: float = 1.0,
    oracles: list[ObjectiveOracle] | None = None,
    x0: Array | None = None,
) -> RunResult:
    """Local subgradient steps + model averaging.

    Round k: broadcast x, every client runs T_k steps with eta_k =
    eta0/sqrt(k) on its own objective, the server averages the models.
    """
    counting, objective, x = _setup(clients, batch_fraction, oracles, x0)
    n = len(counting)
    client_rngs, _ = spawn_run_streams(seed, n)
    channel = SimulatedChannel(n)
    records: list[MetricsRecord] = []
    cum_steps = 0
    failure = None
    rounds_done = 0
    for k in range(1, config.rounds + 1):
        t_start = time.perf_counter()
        x_k = channel.broadcast(x)
        eta = config.eta0 / math.sqrt(k)
        t_k = config.local_steps_rule(k)
        try:
            for i in range(n):
                y = x_k.copy()
                for _ in range(t_k):
                    g = counting[i].stochastic_subgradient(y, client_rngs[i])
                    y = y - eta * g
                channel.send_uplink(i, y)
        except Exception as exc:
            failure = str(ClientFailureError(i, k, exc))
            break
        uplinks = channel.collect()
        x = consensus_project(uplinks)
        cum_steps += t_k
        records.append(
            MetricsRecord(
                algorithm="fedavg",
                seed=seed,
                round=k,
                cum_local_steps=cum_steps,
                f_value=objective.value(x),
                consensus_gap=_consensus_gap(uplinks, x),
                wall_ms=(time.perf_counter() - t_start) * 1e3,
            )
        )
        rounds_done = k
    return RunResult(
        x=x,
        metrics=records,
        downlinks=channel.downlinks,
        uplinks=channel.uplinks,
        oracle_calls=[c.subgradient_calls for c in counting],
        rounds_completed=rounds_done,
        failure=failure,
    )


def run_scaffold(
    clients,
    config: BaselineConfig,
    seed: int,
    batch_fraction: float = 1.0,
    oracles: list[ObjectiveOracle] | None = None,
    x0: Array | None = None,
) -> RunResult:
    """Control-variate-corrected local steps (variance-reduced drift removal).

    Local step at overall step index t uses eta = eta0 / (eta_global * t);
    by default the index accumulates across rounds so steps keep decreasing.
    The client's new control variate is its average correction along the
    round's path: c_i+ = c_i - c + (x - y_i) / sum(eta_t), the varying-step
    generalization of the gradient-difference update. The server applies the
    global step to the averaged model delta and re-averages the variates, so
    c = mean(c_i) holds exactly after every round.
    """
    counting, objective, x = _setup(clients, batch_fraction, oracles, x0)
    n = len(counting)
    eta_g = config.eta_global if config.eta_global is not None else math.sqrt(n)
    client_rngs, _ = spawn_run_streams(seed, n)
    channel = SimulatedChannel(n)
    dim = x.shape[0]
    state = ScaffoldState(
        x=x, c=np.zeros(dim), c_clients=[np.zeros(dim) for _ in range(n)]
    )
    records: list[MetricsRecord] = []
    cum_steps = 0
    steps_taken = 0  # cumulative local-step counter shared by all clients
    failure = None
    rounds_done = 0
    for k in range(1, config.rounds + 1):
        t_start = time.perf_counter()
        channel.broadcast(state.x)  # payload: (x, c) in one message
        t_k = config.local_steps_rule(k)
        model_uplinks: list[Array] = []
        variate_uplinks: list[Array] = []
        try:
            for i in range(n):
                y = state.x.copy()
                eta_sum = 0.0
                for t_local in range(1, t_k + 1):
                    if config.scaffold_step_counter == "cumulative":
                        t_eff = steps_taken + t_local
                    else:
                        t_eff = t_local
                    eta = config.eta0 / (eta_g * t_eff)
                    g = counting[i].stochastic_subgradient(y, client_rngs[i])
                    y = y - eta * (g - state.c_clients[i] + state.c)
                    eta_sum += eta
                c_new = state.c_clients[i] - state.c + (state.x - y) / eta_sum
                channel.send_uplink(i, y)
                model_uplinks.append(y)
                variate_uplinks.append(c_new)
        except Exception as exc:
            failure = str(ClientFailureError(i, k, exc))
            break
        channel.collect()
        steps_taken += t_k
        mean_model = consensus_project(model_uplinks)
        state.x = state.x + eta_g * (mean_model - state.x)
        state.c_clients = variate_uplinks
        state.c = consensus_project(variate_uplinks)
        assert np.array_equal(state.c, consensus_project(state.c_clients))
        cum_steps += t_k
        records.append(
            MetricsRecord(
                algorithm="scaffold",
                seed=seed,
                round=k,
                cum_local_steps=cum_steps,
                f_value=objective.value(state.x),
                consensus_gap=_consensus_gap(model_uplinks, mean_model),
                wall_ms=(time.perf_counter() - t_start) * 1e3,
            )
        )
        rounds_done = k
    return RunResult(
        x=state.x,
        metrics=records,
        downlinks=channel.downlinks,
        uplinks=channel.uplinks,
        oracle_calls=[c.subgradient_calls for c in counting],
        rounds_completed=rounds_done,
        failure=failure,
    )


def run_scaffnew(
    clients,
    config: BaselineConfig,
    seed: int,
    batch_fraction: float = 1.0,
    oracles: list[ObjectiveOracle] | None = None,
    x0: Array | None = None,
) -> RunResult:
    """Probabilistic-communication loop with per-client correction terms.

    Every iteration t each client takes one corrected subgradient step with
    eta_t = eta0/sqrt(t). One shared coin with p_t = 1/sqrt(t) (drawn from the
    harness stream) decides whether all clients communicate; on success the
    server averages, the correction terms absorb the consensus residual
    (h_i += (p_t/eta_t)(mean - x_i)), and one communication round is counted.
    The loop stops after config.rounds communications or config.max_iters
    iterations, whichever comes first.
    """
    counting, objective, x_init = _setup(clients, batch_fraction, oracles, x0)
    n = len(counting)
    client_rngs, harness_rng = spawn_run_streams(seed, n)
    channel = SimulatedChannel(n)
    xs = [x_init.copy() for _ in range(n)]
    hs = [np.zeros_like(x_init) for _ in range(n)]
    records: list[MetricsRecord] = []
    comms = 0
    t = 0
    x_out = x_init
    failure = None
    while comms < config.rounds and (config.max_iters is None or t < config.max_iters):
        t += 1
        t_start = time.perf_counter()
        eta = config.eta0 / math.sqrt(t)
        p = config.prob_rule(t)
        try:
            hatted = []
            for i in range(n):
                g = counting[i].stochastic_subgradient(xs[i], client_rngs[i])
                hatted.append(xs[i] - eta * (g - hs[i]))
        except Exception as exc:
            failure = str(ClientFailureError(i, t, exc))
            break
        if harness_rng.random() < p:
            for i in range(n):
                channel.send_uplink(i, hatted[i])
            uplinks = channel.collect()
            mean = consensus_project(uplinks)
            channel.broadcast(mean)
            for i in range(n):
                hs[i] = hs[i] + (p / eta) * (mean - hatted[i])
                xs[i] = mean.copy()
            comms += 1
            x_out = mean
            records.append(
                MetricsRecord(
                    algorithm="scaffnew",
                    seed=seed,
                    round=comms,
                    cum_local_steps=t,
                    f_value=objective.value(mean),
                    consensus_gap=_consensus_gap(uplinks, mean),
                    wall_ms=(time.perf_counter() - t_start) * 1e3,
                )
            )
        else:
            xs = hatted
    return RunResult(
        x=x_out,
        metrics=records,
        downlinks=channel.downlinks,
        uplinks=channel.uplinks,
        oracle_calls=[c.subgradient_calls for c in counting],
        rounds_completed=comms,
        failure=failure,
    )


BASELINE_RUNNERS = {
    "fedavg": run_fedavg,
    "scaffold": run_scaffold,
    "scaffnew": run_scaffnew,
}
