"""Synthetic classification tasks, non-IID client partitions and CSV ingestion."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

STRATEGIES = ("dirichlet_label_skew", "feature_shift_groups")
MAX_RESAMPLES = 100


class DatasetError(ValueError):
    """Base class for dataset construction and parsing failures."""


class PartitionError(DatasetError):
    pass


class MissingFileError(DatasetError, FileNotFoundError):
    pass


class RaggedRowError(DatasetError):
    pass


class NonNumericFeatureError(DatasetError):
    pass


class LabelError(DatasetError):
    """Label cell that is not a base-10 integer."""


class NegativeLabelError(LabelError):
    pass


@dataclass(eq=False)
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    # original row ids, carried through partitions and splits
    index: np.ndarray | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise DatasetError(f"features must be a 2-D matrix, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise DatasetError("labels must have one entry per feature row")
        if self.n_classes < 2:
            raise DatasetError("need at least two classes")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DatasetError(f"labels must lie in [0, {self.n_classes})")
        if self.index is None:
            self.index = np.arange(self.features.shape[0])
        else:
            self.index = np.asarray(self.index, dtype=np.int64)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.n

    def subset(self, rows) -> LabeledDataset:
        rows = np.asarray(rows, dtype=np.int64)
        return LabeledDataset(self.features[rows], self.labels[rows], self.n_classes, self.index[rows])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)


@dataclass(frozen=True)
class PartitionConfig:
    n_clients: int = 8
    strategy: str = "dirichlet_label_skew"
    dirichlet_alpha: float = 0.5
    group_rotation_deg: float = 90.0
    group_shift: float = 0.0
    samples_per_client: int = 500
    split_fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)

    def __post_init__(self):
        object.__setattr__(self, "split_fractions", tuple(float(f) for f in self.split_fractions))
        if self.n_clients < 2:
            raise ValueError("n_clients must be >= 2")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not self.dirichlet_alpha > 0:
            raise ValueError("dirichlet_alpha must be > 0")
        if self.samples_per_client < 1:
            raise ValueError("samples_per_client must be >= 1")
        check_fractions(self.split_fractions)


def check_fractions(fractions) -> None:
    if len(fractions) != 3 or any(not f > 0 for f in fractions):
        raise ValueError("split_fractions must be three positive numbers")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"split_fractions must sum to 1, got {sum(fractions)!r}")


def gen_gaussian_task(K: int, d: int, n: int, class_sep: float, seed: int) -> LabeledDataset:
    """Balanced mixture of K unit-covariance Gaussians with means at radius ``class_sep``.

    Means are orthonormal directions when K <= d, evenly spaced angles (random
    phase) when d == 2, and random unit directions otherwise.
    """
    if K < 2 or d < 2 or n < K:
        raise DatasetError(f"invalid task dimensions K={K}, d={d}, n={n}")
    rng = np.random.default_rng(seed)
    if K <= d:
        q, _ = np.linalg.qr(rng.standard_normal((d, K)))
        directions = q.T
    elif d == 2:
        angles = rng.uniform(0, 2 * np.pi) + 2 * np.pi * np.arange(K) / K
        directions = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        directions = rng.standard_normal((K, d))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    means = class_sep * directions

    counts = np.full(K, n // K)
    counts[: n % K] += 1
    labels = np.repeat(np.arange(K), counts)
    labels = labels[rng.permutation(n)]
    features = means[labels] + rng.standard_normal((n, d))
    return LabeledDataset(features, labels, K)


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    raw = weights / weights.sum() * total
    counts = np.floor(raw).astype(np.int64)
    short = total - counts.sum()
    if short:
        # stable sort keeps ties deterministic (lowest client id first)
        order = np.argsort(-(raw - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def partition_dirichlet(data: LabeledDataset, cfg: PartitionConfig, seed: int) -> list[LabeledDataset]:
    """Label-skew partition: each client draws its class mix from Dir(alpha * 1_K).

    Class k's samples are dealt to clients in proportion to their drawn weight for
    k, so every sample lands in exactly one shard.
    """
    if cfg.strategy != "dirichlet_label_skew":
        raise PartitionError(f"partition_dirichlet called with strategy {cfg.strategy!r}")
    rng = np.random.default_rng(seed)
    K = data.n_classes
    min_size = max(K, 10)
    by_class = [np.flatnonzero(data.labels == k) for k in range(K)]
    for _ in range(MAX_RESAMPLES):
        mix = rng.dirichlet(np.full(K, cfg.dirichlet_alpha), size=cfg.n_clients)
        # dirichlet with tiny alpha can underflow to exact zeros for a whole column
        mix = np.maximum(mix, 1e-300)
        shards: list[list[np.ndarray]] = [[] for _ in range(cfg.n_clients)]
        for k, rows in enumerate(by_class):
            rows = rows[rng.permutation(rows.size)]
            counts = _largest_remainder(mix[:, k], rows.size)
            for c, chunk in enumerate(np.split(rows, np.cumsum(counts)[:-1])):
                shards[c].append(chunk)
        sizes = [sum(len(ch) for ch in s) for s in shards]
        if min(sizes) >= min_size:
            return [data.subset(np.sort(np.concatenate(s))) for s in shards]
    raise PartitionError(
        f"could not give every client >= {min_size} samples after {MAX_RESAMPLES} Dirichlet draws"
    )


def shift_group(n_clients: int) -> list[int]:
    """Client ids of the minority group whose features get transformed."""
    return list(range(n_clients - n_clients // 2, n_clients))


def rotate_and_shift(features: np.ndarray, degrees: float, shift: float) -> np.ndarray:
    """Rotate the first two coordinates by ``degrees`` and add ``shift`` to every coordinate."""
    out = features.copy()
    t = np.deg2rad(degrees)
    c, s = np.cos(t), np.sin(t)
    x0, x1 = features[:, 0], features[:, 1]
    out[:, 0] = c * x0 - s * x1
    out[:, 1] = s * x0 + c * x1
    return out + shift


def partition_feature_shift(data: LabeledDataset, cfg: PartitionConfig, seed: int) -> list[LabeledDataset]:
    """IID split into clients, then covariate shift on the minority group.

    With 5 clients the groups have sizes 3 and 2.
    """
    if cfg.strategy != "feature_shift_groups":
        raise PartitionError(f"partition_feature_shift called with strategy {cfg.strategy!r}")
    if cfg.n_clients < 2:
        raise PartitionError("feature-shift partition needs at least 2 clients")
    if data.d < 2:
        raise PartitionError("feature-shift partition needs at least 2 feature dimensions")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.n)
    counts = _largest_remainder(np.ones(cfg.n_clients), data.n)
    shifted = set(shift_group(cfg.n_clients))
    shards = []
    for c, rows in enumerate(np.split(order, np.cumsum(counts)[:-1])):
        shard = data.subset(np.sort(rows))
        if c in shifted:
            shard.features = rotate_and_shift(shard.features, cfg.group_rotation_deg, cfg.group_shift)
        shards.append(shard)
    return shards


def partition(data: LabeledDataset, cfg: PartitionConfig, seed: int) -> list[LabeledDataset]:
    if cfg.strategy == "dirichlet_label_skew":
        return partition_dirichlet(data, cfg, seed)
    return partition_feature_shift(data, cfg, seed)


def split_three_way(data: LabeledDataset, fractions=(0.7, 0.15, 0.15), seed: int = 0):
    """Shuffle, then cut into (train, val, test). Val/test sizes are floored; train takes the rest."""
    check_fractions(fractions)
    if data.n < 10:
        raise DatasetError(f"need at least 10 samples to split, got {data.n}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.n)
    n_val = int(np.floor(data.n * fractions[1]))
    n_test = int(np.floor(data.n * fractions[2]))
    n_train = data.n - n_val - n_test
    return (
        data.subset(order[:n_train]),
        data.subset(order[n_train : n_train + n_val]),
        data.subset(order[n_train + n_val :]),
    )


@dataclass(frozen=True)
class CsvSchema:
    label_column: str
    # None means every column except the label
    feature_columns: tuple[str, ...] | None = field(default=None)


def load_csv(path, schema: CsvSchema) -> LabeledDataset:
    """Read a headed, comma-separated UTF-8 file. K is inferred as max label + 1."""
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"{path}: no such file")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if schema.label_column not in header:
            raise DatasetError(f"{path}: label column {schema.label_column!r} not in header")
        feature_cols = schema.feature_columns or tuple(h for h in header if h != schema.label_column)
        missing = [c for c in feature_cols if c not in header]
        if missing:
            raise DatasetError(f"{path}: feature columns {missing} not in header")
        label_pos = header.index(schema.label_column)
        feat_pos = [header.index(c) for c in feature_cols]

        rows, labels = [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise RaggedRowError(f"{path}:{line_no}: expected {len(header)} fields, found {len(row)}")
            try:
                rows.append([float(row[p]) for p in feat_pos])
            except ValueError:
                bad = next(row[p] for p in feat_pos if not _is_float(row[p]))
                raise NonNumericFeatureError(f"{path}:{line_no}: non-numeric feature value {bad!r}") from None
            cell = row[label_pos].strip()
            try:
                label = int(cell, 10)
            except ValueError:
                raise LabelError(f"{path}:{line_no}: label {cell!r} is not an integer") from None
            if label < 0:
                raise NegativeLabelError(f"{path}:{line_no}: negative label {label}")
            labels.append(label)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    labels = np.array(labels, dtype=np.int64)
    return LabeledDataset(np.array(rows), labels, max(int(labels.max()) + 1, 2))


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True
