"""Server/client round protocol for federated non-smooth optimization.

Each communication round: the server broadcasts its interpolated point, every
client runs an inexact prox loop on its own (1/n-scaled) objective inside a
shared Euclidean ball, clients upload their interpolated points, and the
server's aggregation step is exactly the Euclidean projection onto the
consensus set (column averaging). Client work between two exchanges is the
"multiple local steps" budget T_k.

All update formulas are imported from the generic solver module so that a
single-client run replays the solver bit-for-bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ClientFailureError, InvalidInputError, ProtocolError
from .metrics import MetricsRecord, RunResult
from .mopes import approx_prox, interpolation_weight, mix, prox_penalty
from .problems import (
    CountingOracle,
    FederatedObjective,
    HingeOracle,
    ObjectiveOracle,
    ScaledOracle,
)
from .rng import GENERATOR_NAME, spawn_run_streams

Array = np.ndarray


def schedule_for_accuracy(
    lipschitz_G: float,
    variance_sigma2: float,
    n_clients: int,
    dist0: float,
    epsilon: float,
) -> tuple[float, int, int]:
    """Fixed (lam, inner_steps, rounds) sized to reach a target accuracy.

    lam = eps / G^2,
    T   = ceil(36 sqrt(3 n) ||x0 - x*|| (4 G^2 + sigma^2) / (G eps)),
    K   = ceil(6 sqrt(n) ||x0 - x*|| G / eps).
    """
    if min(lipschitz_G, n_clients, dist0, epsilon) <= 0:
        raise InvalidInputError("G, n, dist0, epsilon must be positive")
    if variance_sigma2 < 0:
        raise InvalidInputError("variance_sigma2 must be >= 0")
    lam = epsilon / lipschitz_G**2
    inner = math.ceil(
        36.0
        * math.sqrt(3.0 * n_clients)
        * dist0
        * (4.0 * lipschitz_G**2 + variance_sigma2)
        / (lipschitz_G * epsilon)
    )
    rounds = math.ceil(6.0 * math.sqrt(n_clients) * dist0 * lipschitz_G / epsilon)
    return lam, inner, rounds


@dataclass
class FedmlsSchedule:
    """Round schedules for the protocol.

    mode "fixed": constant lam and inner_steps (the a-priori, target-accuracy
    sizing). mode "decaying": lam_k = lambda0 / k and T_k = ceil(t0 * k), the
    practical choice when the target accuracy is not fixed in advance.
    """

    mode: str
    rounds: int
    radius: float
    lam: float | None = None
    inner_steps: int | None = None
    lambda0: float | None = None
    t0: float | None = None

    def __post_init__(self):
        if self.rounds < 1:
            raise InvalidInputError("rounds must be >= 1")
        if self.radius <= 0:
            raise InvalidInputError("radius must be positive")
        if self.mode == "fixed":
            if self.lam is None or self.inner_steps is None:
                raise InvalidInputError("fixed mode needs lam and inner_steps")
            if self.lam <= 0 or self.inner_steps < 1:
                raise InvalidInputError("lam must be > 0 and inner_steps >= 1")
        elif self.mode == "decaying":
            if self.lambda0 is None or self.t0 is None:
                raise InvalidInputError("decaying mode needs lambda0 and t0")
            if self.lambda0 <= 0 or self.t0 <= 0:
                raise InvalidInputError("lambda0 and t0 must be positive")
        else:
            raise InvalidInputError(f"unknown schedule mode {self.mode!r}")

    @classmethod
    def for_accuracy(
        cls,
        lipschitz_G: float,
        variance_sigma2: float,
        n_clients: int,
        dist0: float,
        epsilon: float,
        radius: float,
    ) -> "FedmlsSchedule":
        lam, inner, rounds = schedule_for_accuracy(
            lipschitz_G, variance_sigma2, n_clients, dist0, epsilon
        )
        return cls(mode="fixed", rounds=rounds, radius=radius, lam=lam, inner_steps=inner)

    def lam_at(self, k: int) -> float:
        if k < 1:
            raise InvalidInputError("round index must be >= 1")
        if self.mode == "fixed":
            return self.lam
        return self.lambda0 / k

    def steps_at(self, k: int) -> int:
        if k < 1:
            raise InvalidInputError("round index must be >= 1")
        if self.mode == "fixed":
            return self.inner_steps
        return max(1, math.ceil(self.t0 * k))

    def total_local_steps(self) -> int:
        return sum(self.steps_at(k) for k in range(1, self.rounds + 1))


@dataclass
class ServerState:
    """Server iterates; z holds the current round's consensus point."""

    x: Array
    y: Array
    z: Array
    k: int = 1


@dataclass
class ClientState:
    """Client iterates persisted across rounds."""

    client_id: int
    x: Array
    y: Array
    z: Array


@dataclass
class RoundMessage:
    """One round of traffic: the broadcast point and all client uploads."""

    downlink: Array
    uplinks: list[Array]


class SimulatedChannel:
    """In-process synchronous channel with message counting.

    One broadcast per round reaches all clients (counted as one downlink);
    each client's upload is one uplink. collect() is the per-round barrier
    and validates the expected upload count.
    """

    def __init__(self, n_clients: int):
        self.n_clients = n_clients
        self.downlinks = 0
        self.uplinks = 0
        self._pending: list[tuple[int, Array]] = []

    def broadcast(self, payload: Array) -> Array:
        self.downlinks += 1
        return payload

    def send_uplink(self, client_id: int, payload: Array) -> None:
        self.uplinks += 1
        self._pending.append((client_id, payload))

    def collect(self) -> list[Array]:
        if len(self._pending) != self.n_clients:
            raise ProtocolError(
                f"expected {self.n_clients} uplinks, got {len(self._pending)}"
            )
        self._pending.sort(key=lambda item: item[0])
        payloads = [p for _, p in self._pending]
        self._pending = []
        return payloads


def consensus_project(columns: list[Array]) -> Array:
    """Projection onto the consensus set, reported as the shared column.

    The Euclidean projection of per-client columns onto "all columns equal"
    replicates their arithmetic mean. Summation runs in ascending client
    order, sequentially, for bit-reproducibility.
    """
    if len(columns) == 0:
        raise InvalidInputError("need at least one column")
    dims = {np.asarray(c).shape for c in columns}
    if len(dims) != 1:
        raise InvalidInputError("columns must share one dimension")
    total = np.asarray(columns[0], dtype=float).copy()
    for c in columns[1:]:
        total = total + c
    return total / len(columns)


def client_local_training(
    state: ClientState,
    y_server: Array,
    k: int,
    schedule: FedmlsSchedule,
    oracle: ObjectiveOracle,
    n_clients: int,
    rng,
) -> tuple[Array, ClientState]:
    """One client's round-k local phase; returns (uplink, new state).

    Anchors the prox input at the client's drift from the server point,
    runs T_k inner subgradient steps on the 1/n-scaled client objective with
    quadratic weight beta_k, then interpolates the next round's upload.
    Oracle failures abort the round naming the client.
    """
    if k < 1:
        raise InvalidInputError("round index must be >= 1")
    lam = schedule.lam_at(k)
    beta = prox_penalty(lam, k)
    coupling = 1.0 / (beta * lam)
    v = state.z - coupling * (state.y - y_server)
    scaled = ScaledOracle(oracle, 1.0 / n_clients)
    try:
        prox = approx_prox(
            v, state.z, beta, schedule.steps_at(k), scaled, schedule.radius, rng
        )
    except Exception as exc:  # oracle failures surface with the client named
        raise ClientFailureError(state.client_id, k, exc) from exc
    gamma = interpolation_weight(k)
    gamma_next = interpolation_weight(k + 1)
    x_new = mix(gamma, state.x, prox.averaged_iterate)
    y_next = mix(gamma_next, x_new, prox.last_iterate)
    return y_next, ClientState(state.client_id, x_new, y_next, prox.last_iterate)


def server_aggregate(
    state: ServerState,
    uplinks: list[Array],
    k: int,
    schedule: FedmlsSchedule,
    n_clients: int,
) -> ServerState:
    """Round-k aggregation: interpolate x_k and y_{k+1}, then move z by the
    consensus correction with the next round's coupling weight."""
    if len(uplinks) != n_clients:
        raise ProtocolError(f"expected {n_clients} uplinks, got {len(uplinks)}")
    gamma = interpolation_weight(k)
    gamma_next = interpolation_weight(k + 1)
    x_new = mix(gamma, state.x, state.z)
    y_next = mix(gamma_next, x_new, state.z)
    mean_uplink = consensus_project(uplinks)
    lam_next = schedule.lam_at(k + 1)
    beta_next = prox_penalty(lam_next, k + 1)
    z_next = state.z - (1.0 / (beta_next * lam_next)) * (y_next - mean_uplink)
    return ServerState(x=x_new, y=y_next, z=z_next, k=k + 1)


def _consensus_gap(uplinks: list[Array], mean: Array) -> float:
    return max(float(np.linalg.norm(u - mean)) for u in uplinks)


def run_fedmls(
    clients,
    schedule: FedmlsSchedule,
    seed: int,
    batch_fraction: float = 1.0,
    oracles: list[ObjectiveOracle] | None = None,
    x0: Array | None = None,
    algorithm_id: str = "fedmls",
) -> RunResult:
    """Execute the full protocol for schedule.rounds communication rounds.

    clients is a list of ClientDataset (hinge oracles are built with the
    given batch fraction) or None when explicit oracles are supplied. All
    iterates start at x0 (zeros by default). Returns the final server point,
    per-round metrics, and exact message/oracle-call counters.
    """
    if oracles is None:
        if not clients:
            raise InvalidInputError("need clients or explicit oracles")
        oracles = [HingeOracle(c, batch_fraction) for c in clients]
        dim = clients[0].d + 1
    else:
        if x0 is None:
            raise InvalidInputError("x0 is required with explicit oracles")
        dim = len(np.asarray(x0))
    n = len(oracles)
    counting = [CountingOracle(o) for o in oracles]
    objective = FederatedObjective(counting)
    if x0 is None:
        x0 = np.zeros(dim)
    x0 = np.asarray(x0, dtype=float)
    if float(np.linalg.norm(x0)) > schedule.radius:
        raise InvalidInputError("x0 must lie inside the schedule's ball")

    client_rngs, _ = spawn_run_streams(seed, n)
    channel = SimulatedChannel(n)
    server = ServerState(x=x0, y=x0, z=x0, k=1)
    states = [ClientState(i, x0, x0, x0) for i in range(n)]

    records: list[MetricsRecord] = []
    cum_steps = 0
    failure = None
    rounds_done = 0
    for k in range(1, schedule.rounds + 1):
        t_start = time.perf_counter()
        y_k = channel.broadcast(server.y)
        try:
            new_states = []
            for i in range(n):
                uplink, new_state = client_local_training(
                    states[i], y_k, k, schedule, counting[i], n, client_rngs[i]
                )
                channel.send_uplink(i, uplink)
                new_states.append(new_state)
        except ClientFailureError as exc:
            failure = str(exc)
            break
        states = new_states
        uplinks = channel.collect()
        server = server_aggregate(server, uplinks, k, schedule, n)
        cum_steps += schedule.steps_at(k)
        mean_uplink = consensus_project(uplinks)
        records.append(
            MetricsRecord(
                algorithm=algorithm_id,
                seed=seed,
                round=k,
                cum_local_steps=cum_steps,
                f_value=objective.value(server.x),
                consensus_gap=_consensus_gap(uplinks, mean_uplink),
                wall_ms=(time.perf_counter() - t_start) * 1e3,
            )
        )
        rounds_done = k
    return RunResult(
        x=server.x,
        metrics=records,
        downlinks=channel.downlinks,
        uplinks=channel.uplinks,
        oracle_calls=[c.subgradient_calls for c in counting],
        rounds_completed=rounds_done,
        failure=failure,
    )


def run_metadata(seed: int, n_clients: int) -> dict:
    """Reproducibility details recorded alongside run outputs."""
    return {"seed": seed, "n_clients": n_clients, "rng": GENERATOR_NAME}
