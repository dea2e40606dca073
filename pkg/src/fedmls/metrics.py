"""Per-round metrics records, CSV emission/parsing, and cross-seed aggregation.

CSV layout: one optional metadata comment line ("# meta: {json}"), a header
row, then one row per record. Floats are written with repr so that
parse(emit(records)) round-trips exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

CSV_COLUMNS = [
    "algorithm",
    "seed",
    "round",
    "cum_local_steps",
    "f",
    "subopt",
    "consensus_gap",
    "wall_ms",
]


@dataclass
class MetricsRecord:
    """One row of a run trace.

    round counts completed communication rounds; cum_local_steps counts the
    per-client oracle calls consumed so far. subopt and consensus_gap are NaN
    when not applicable (e.g. before a reference value is known).
    """

    algorithm: str
    seed: int
    round: int
    cum_local_steps: int
    f_value: float
    suboptimality: float = math.nan
    consensus_gap: float = math.nan
    wall_ms: float = 0.0

    def with_suboptimality(self, f_star: float) -> "MetricsRecord":
        return MetricsRecord(
            self.algorithm,
            self.seed,
            self.round,
            self.cum_local_steps,
            self.f_value,
            self.f_value - f_star,
            self.consensus_gap,
            self.wall_ms,
        )


@dataclass
class RunResult:
    """Outcome of one algorithm run on one seed.

    failure is None on success; on a client failure the metrics collected up
    to the aborted round are retained.
    """

    x: np.ndarray
    metrics: list[MetricsRecord]
    downlinks: int = 0
    uplinks: int = 0
    oracle_calls: list[int] = field(default_factory=list)
    rounds_completed: int = 0
    failure: str | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _record_row(r: MetricsRecord) -> list[str]:
    return [
        r.algorithm,
        str(r.seed),
        str(r.round),
        str(r.cum_local_steps),
        _fmt(r.f_value),
        _fmt(r.suboptimality),
        _fmt(r.consensus_gap),
        _fmt(r.wall_ms),
    ]


def emit_metrics(records: list[MetricsRecord], metadata: dict | None = None) -> str:
    buf = io.StringIO()
    if metadata is not None:
        buf.write("# meta: " + json.dumps(metadata, sort_keys=True) + "\n")
    writer = csv.writer(buf)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(_record_row(r))
    return buf.getvalue()


def write_metrics(path, records: list[MetricsRecord], metadata: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(emit_metrics(records, metadata))


def parse_metrics(text: str) -> tuple[list[MetricsRecord], dict | None]:
    metadata = None
    lines = text.splitlines()
    start = 0
    if lines and lines[0].startswith("# meta: "):
        metadata = json.loads(lines[0][len("# meta: "):])
        start = 1
    reader = csv.reader(lines[start:])
    header = next(reader)
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected metrics header: {header}")
    records = []
    for row in reader:
        if not row:
            continue
        records.append(
            MetricsRecord(
                algorithm=row[0],
                seed=int(row[1]),
                round=int(row[2]),
                cum_local_steps=int(row[3]),
                f_value=float(row[4]),
                suboptimality=float(row[5]),
                consensus_gap=float(row[6]),
                wall_ms=float(row[7]),
            )
        )
    return records, metadata


def read_metrics(path) -> tuple[list[MetricsRecord], dict | None]:
    with open(path, "r") as fh:
        return parse_metrics(fh.read())


@dataclass
class AggregateRow:
    """Cross-seed summary for one communication round."""

    round: int
    n_seeds: int
    cum_local_steps_mean: float
    subopt_mean: float
    subopt_std: float


def aggregate_by_round(per_seed: list[list[MetricsRecord]]) -> list[AggregateRow]:
    """Mean/std of suboptimality across seeds, matched by round index.

    Rounds present in only some seeds (e.g. probabilistic communication) are
    aggregated over the seeds that reached them.
    """
    by_round: dict[int, list[MetricsRecord]] = {}
    for records in per_seed:
        for r in records:
            by_round.setdefault(r.round, []).append(r)
    rows = []
    for rnd in sorted(by_round):
        group = by_round[rnd]
        subs = np.array([g.suboptimality for g in group], dtype=float)
        steps = np.array([g.cum_local_steps for g in group], dtype=float)
        rows.append(
            AggregateRow(
                round=rnd,
                n_seeds=len(group),
                cum_local_steps_mean=float(steps.mean()),
                subopt_mean=float(subs.mean()),
                subopt_std=float(subs.std(ddof=0)),
            )
        )
    return rows


def write_aggregate(path, rows: list[AggregateRow], metadata: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if metadata is not None:
            fh.write("# meta: " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["round", "n_seeds", "cum_local_steps_mean", "subopt_mean", "subopt_std"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.round,
                    row.n_seeds,
                    _fmt(row.cum_local_steps_mean),
                    _fmt(row.subopt_mean),
                    _fmt(row.subopt_std),
                ]
            )


def record_to_dict(r: MetricsRecord) -> dict:
    return asdict(r)


def record_from_dict(d: dict) -> MetricsRecord:
    return MetricsRecord(**d)
