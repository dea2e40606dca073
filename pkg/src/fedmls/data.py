"""Dataset ingestion, heterogeneity-inducing partitioning, and synthetic data.

CSV input contract: UTF-8, comma-separated, one header row, missing feature
cells marked "?" (configurable). Missing values are imputed with column means
over the non-missing cells; labels are remapped to {-1, +1}.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .exceptions import InvalidInputError, ParseError
from .problems import ClientDataset

Array = np.ndarray


@dataclass
class RawDataset:
    """Parsed rows: imputed features (m, d), labels in {-1, +1}, and the
    retained feature column names."""

    features: Array
    labels: Array
    columns: list[str]

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass
class Partition:
    """Total assignment of rows to clients 0..n-1."""

    assignment: Array
    n_clients: int

    def __post_init__(self):
        self.assignment = np.asarray(self.assignment, dtype=int)
        if self.assignment.min(initial=0) < 0 or (
            self.assignment.size and self.assignment.max() >= self.n_clients
        ):
            raise InvalidInputError("client ids out of range")

    def client_sizes(self) -> Array:
        return np.bincount(self.assignment, minlength=self.n_clients)


def load_csv(
    path,
    label_column: str,
    positive_label_value: str,
    missing_marker: str = "?",
    drop_columns: tuple[str, ...] = (),
) -> RawDataset:
    """Parse a labeled CSV with mean imputation of missing feature cells.

    Cells equal to missing_marker are imputed with their column's mean over
    non-missing cells. The label column is remapped: positive_label_value
    becomes +1, everything else -1. Non-numeric feature cells that are not
    the missing marker, and all-missing columns, raise ParseError naming the
    offending row/column.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        rows = [row for row in reader if row]
    header = [h.strip() for h in header]
    if label_column not in header:
        raise ParseError(f"{path}: label column {label_column!r} not in header")
    label_idx = header.index(label_column)
    drop_idx = set()
    for col in drop_columns:
        if col in header:
            drop_idx.add(header.index(col))
    feature_idx = [
        j for j in range(len(header)) if j != label_idx and j not in drop_idx
    ]
    columns = [header[j] for j in feature_idx]

    m = len(rows)
    if m == 0:
        raise ParseError(f"{path}: no data rows")
    features = np.empty((m, len(feature_idx)))
    missing = np.zeros((m, len(feature_idx)), dtype=bool)
    labels = np.empty(m)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ParseError(
                f"{path}: row {r + 2} has {len(row)} cells, expected {len(header)}"
            )
        raw_label = row[label_idx].strip()
        labels[r] = 1.0 if raw_label == str(positive_label_value) else -1.0
        for c, j in enumerate(feature_idx):
            cell = row[j].strip()
            if cell == missing_marker:
                missing[r, c] = True
                features[r, c] = 0.0
                continue
            try:
                features[r, c] = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: non-numeric cell {cell!r} at row {r + 2}, "
                    f"column {header[j]!r}"
                )
    for c in range(len(feature_idx)):
        col_missing = missing[:, c]
        if col_missing.all():
            raise ParseError(f"{path}: column {columns[c]!r} has no numeric cells")
        if col_missing.any():
            mean = features[~col_missing, c].mean()
            features[col_missing, c] = mean
    return RawDataset(features=features, labels=labels, columns=columns)


def wisconsin_csv_path() -> str:
    """Path of the bundled breast-cancer-style CSV (699 rows, 10 features)."""
    return str(resources.files("fedmls").joinpath("datafiles/wisconsin_breast_cancer.csv"))


def load_wisconsin(path=None) -> RawDataset:
    """Load a Wisconsin-format file: id column dropped, class codes {2, 4}
    mapped to {-1, +1} (4 = malignant = +1)."""
    if path is None:
        path = wisconsin_csv_path()
    return load_csv(
        path,
        label_column="class",
        positive_label_value="4",
        drop_columns=("id",),
    )


def _kmeanspp_init(features: Array, n: int, rng) -> Array:
    """Seeded k-means++ center initialization (squared-distance sampling)."""
    m = features.shape[0]
    centers = np.empty((n, features.shape[1]))
    centers[0] = features[rng.integers(0, m)]
    dist_sq = ((features - centers[0]) ** 2).sum(axis=1)
    for j in range(1, n):
        total = dist_sq.sum()
        if total <= 0:
            centers[j] = features[rng.integers(0, m)]
        else:
            centers[j] = features[rng.choice(m, p=dist_sq / total)]
        dist_sq = np.minimum(dist_sq, ((features - centers[j]) ** 2).sum(axis=1))
    return centers


def _wcss(features: Array, centers: Array, labels: Array) -> float:
    return float(((features - centers[labels]) ** 2).sum())


def kmeans_partition(
    dataset: RawDataset, n: int, seed: int, max_iters: int = 100
) -> Partition:
    """Partition rows by Lloyd's algorithm with seeded k-means++ starts.

    Nearest-center ties break toward the lowest center index; empty clusters
    are repaired by moving the point farthest from its center out of the
    largest cluster. The within-cluster sum of squares is asserted
    non-increasing across iterations.
    """
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    if n > dataset.m:
        raise InvalidInputError(f"cannot split {dataset.m} rows into {n} clusters")
    features = dataset.features
    rng = np.random.default_rng(seed)
    centers = _kmeanspp_init(features, n, rng)
    labels = None
    prev_obj = np.inf
    for _ in range(max_iters):
        dists = ((features[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(dists, axis=1)  # argmin takes the lowest index on ties
        # repair empty clusters: donate the farthest point of the largest one
        sizes = np.bincount(new_labels, minlength=n)
        for empty in np.flatnonzero(sizes == 0):
            donor = int(np.argmax(sizes))
            members = np.flatnonzero(new_labels == donor)
            far = members[np.argmax(dists[members, donor])]
            new_labels[far] = empty
            sizes = np.bincount(new_labels, minlength=n)
        for j in range(n):
            centers[j] = features[new_labels == j].mean(axis=0)
        obj = _wcss(features, centers, new_labels)
        assert obj <= prev_obj + 1e-9, "k-means objective increased"
        prev_obj = obj
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels
    return Partition(assignment=labels, n_clients=n)


def clients_from_partition(dataset: RawDataset, partition: Partition) -> list[ClientDataset]:
    """Materialize per-client datasets in ascending client-id order."""
    clients = []
    for i in range(partition.n_clients):
        idx = np.flatnonzero(partition.assignment == i)
        if idx.size == 0:
            raise InvalidInputError(f"client {i} received no rows")
        clients.append(
            ClientDataset(dataset.features[idx], dataset.labels[idx], client_id=i)
        )
    return clients


def export_partition(path, partition: Partition) -> None:
    """Write (row_index, client_id) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_index", "client_id"])
        for r, cid in enumerate(partition.assignment):
            writer.writerow([r, int(cid)])


@dataclass
class TwoClusterInfo:
    """Generator metadata: blob centers and each row's blob id, enough to
    build maximally heterogeneous partitions."""

    centers: Array
    blob_of_row: Array


def synthetic_two_cluster(
    d: int, per_cluster_m: int, separation: float, seed: int
) -> tuple[RawDataset, TwoClusterInfo]:
    """Two Gaussian blobs with opposite labels at +-separation/2 on axis 0.

    Rows are ordered blob 0 (+1 labels) then blob 1 (-1 labels); unit
    isotropic noise.
    """
    if d < 1 or per_cluster_m < 1:
        raise InvalidInputError("d and per_cluster_m must be positive")
    rng = np.random.default_rng(seed)
    center0 = np.zeros(d)
    center0[0] = separation / 2.0
    center1 = -center0
    blob0 = center0 + rng.standard_normal((per_cluster_m, d))
    blob1 = center1 + rng.standard_normal((per_cluster_m, d))
    features = np.vstack([blob0, blob1])
    labels = np.concatenate(
        [np.ones(per_cluster_m), -np.ones(per_cluster_m)]
    )
    info = TwoClusterInfo(
        centers=np.stack([center0, center1]),
        blob_of_row=np.concatenate(
            [np.zeros(per_cluster_m, dtype=int), np.ones(per_cluster_m, dtype=int)]
        ),
    )
    return RawDataset(features, labels, [f"x{j}" for j in range(d)]), info


def heterogeneous_partition(info: TwoClusterInfo, n: int) -> Partition:
    """Maximally heterogeneous split: blob 0 rows go round-robin to the first
    half of the clients, blob 1 rows to the second half."""
    if n < 2 or n % 2 != 0:
        raise InvalidInputError("heterogeneous partition needs an even n >= 2")
    half = n // 2
    assignment = np.empty(info.blob_of_row.shape[0], dtype=int)
    counters = [0, 0]
    for r, blob in enumerate(info.blob_of_row):
        base = 0 if blob == 0 else half
        assignment[r] = base + counters[blob] % half
        counters[blob] += 1
    return Partition(assignment=assignment, n_clients=n)
