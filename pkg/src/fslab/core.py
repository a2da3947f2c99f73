"""Shared domain types plus feature-file ingestion and report serialization.

A "feature" here is a d-dimensional vector of channel activations, grouped
by class label into an :class:`EmbeddingDataset`. Two on-disk encodings are
supported (CSV and a little-endian binary layout), chosen so that the same
dataset written by any implementation parses bit-identically.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

BINARY_MAGIC = b"FSLF"
BINARY_VERSION = 1


class DatasetFormatError(ValueError):
    """Malformed file: bad magic, ragged row, truncated payload."""


class DatasetValidationError(ValueError):
    """Structurally parseable but semantically invalid data (NaN, dup class...)."""


class EmptyInputError(DatasetValidationError):
    """A feature file with no data rows."""


def _as_matrix(vectors, d=None):
    m = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if d is not None and m.shape[1] != d:
        raise DatasetValidationError(
            f"expected vectors of length {d}, got {m.shape[1]}"
        )
    return m


@dataclass(frozen=True)
class EmbeddingDataset:
    """Feature vectors grouped by class, all of one dimensionality d.

    ``classes`` maps class name to an (n_class, d) float64 matrix; insertion
    order is the canonical class order (first appearance in the source file).
    """

    d: int
    classes: dict[str, np.ndarray]
    non_negative: bool

    def __post_init__(self):
        if self.d <= 0:
            raise DatasetValidationError("dimensionality must be positive")
        if not self.classes:
            raise EmptyInputError("dataset has no classes")
        min_val = math.inf
        for name, mat in self.classes.items():
            if mat.ndim != 2 or mat.shape[1] != self.d:
                raise DatasetValidationError(
                    f"class {name!r}: expected shape (*, {self.d}), got {mat.shape}"
                )
            if mat.shape[0] < 1:
                raise DatasetValidationError(f"class {name!r} has no vectors")
            if not np.all(np.isfinite(mat)):
                raise DatasetValidationError(f"class {name!r} contains non-finite values")
            mat.setflags(write=False)
            min_val = min(min_val, float(mat.min()))
        if self.non_negative != (min_val >= 0.0):
            raise DatasetValidationError(
                "non_negative flag inconsistent with stored values"
            )

    @property
    def class_names(self) -> list[str]:
        return list(self.classes)

    @property
    def n_vectors(self) -> int:
        return sum(m.shape[0] for m in self.classes.values())

    def map_values(self, fn) -> "EmbeddingDataset":
        """New dataset with ``fn`` applied to each per-class matrix."""
        classes = {name: np.asarray(fn(mat), dtype=np.float64)
                   for name, mat in self.classes.items()}
        non_neg = all(float(m.min()) >= 0.0 for m in classes.values())
        return EmbeddingDataset(self.d, classes, non_neg)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingDataset):
            return NotImplemented
        if self.d != other.d or self.class_names != other.class_names:
            return False
        return all(np.array_equal(self.classes[c], other.classes[c])
                   for c in self.classes)


def dataset_from_rows(labels, rows) -> EmbeddingDataset:
    """Group (label, vector) rows into a dataset, first-appearance class order."""
    grouped: dict[str, list] = {}
    for label, row in zip(labels, rows):
        grouped.setdefault(label, []).append(row)
    d = len(rows[0])
    classes = {name: _as_matrix(vecs, d) for name, vecs in grouped.items()}
    non_neg = all(float(m.min()) >= 0.0 for m in classes.values())
    return EmbeddingDataset(d, classes, non_neg)


@dataclass(frozen=True)
class Episode:
    """One N-way K-shot task: labeled support groups plus held-out query groups."""

    n_way: int
    k_shot: int
    m_query: int
    class_names: tuple
    support: tuple  # per class, (K, d) matrix
    query: tuple    # per class, (M, d) matrix

    def __post_init__(self):
        if len(self.class_names) != self.n_way:
            raise ValueError("episode must contain exactly n_way classes")
        if len(set(self.class_names)) != self.n_way:
            raise ValueError("episode classes must be distinct")
        for s, q in zip(self.support, self.query):
            if s.shape[0] != self.k_shot or q.shape[0] != self.m_query:
                raise ValueError("per-class support/query sizes do not match config")


@dataclass(frozen=True)
class ChannelStats:
    """Per-channel mean and standard deviation of one class."""

    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if mu.shape != sigma.shape or mu.ndim != 1:
            raise ValueError("mu and sigma must be 1-d vectors of equal length")
        if np.any(sigma < 0):
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.mu.shape[0]


@dataclass(frozen=True)
class MMCVector:
    """Per-channel mean-magnitude weights, optionally l1-normalized."""

    weights: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        if self.normalized and abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("normalized MMC must have unit l1 norm")
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def l1_normalized(self) -> "MMCVector":
        total = self.weights.sum()
        if total <= 0:
            raise ValueError("cannot l1-normalize an all-zero MMC")
        return MMCVector(self.weights / total, normalized=True)


@dataclass(frozen=True)
class EvalReport:
    """Accuracy summary of one evaluation run."""

    per_episode_accuracy: list
    mean_accuracy: float
    ci95_halfwidth: float
    config_echo: dict
    seed: int

    def __post_init__(self):
        accs = [float(a) for a in self.per_episode_accuracy]
        object.__setattr__(self, "per_episode_accuracy", accs)
        if accs:
            mean = sum(accs) / len(accs)
            if abs(mean - self.mean_accuracy) > 1e-12:
                raise ValueError("mean_accuracy does not match the per-episode mean")
        if self.ci95_halfwidth < 0:
            raise ValueError("ci95_halfwidth must be non-negative")


# ---------------------------------------------------------------------------
# CSV format: header `label,c0,...,c{d-1}`, '.' decimals, '\n' lines, no quoting.

def load_features_csv(path) -> EmbeddingDataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise EmptyInputError(f"{path}: empty file")
    header = lines[0].split(",")
    d = len(header) - 1
    if d < 1 or header[0] != "label" or header[1:] != [f"c{i}" for i in range(d)]:
        raise DatasetFormatError(f"{path}: malformed header {lines[0]!r}")
    if len(lines) == 1:
        raise EmptyInputError(f"{path}: no data rows")
    labels, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != d + 1:
            raise DatasetFormatError(
                f"{path}: line {lineno}: expected {d + 1} fields, got {len(parts)}"
            )
        try:
            values = [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: line {lineno}: {exc}") from exc
        if not all(math.isfinite(v) for v in values):
            raise DatasetValidationError(
                f"{path}: line {lineno}: non-finite feature value"
            )
        labels.append(parts[0])
        rows.append(values)
    return dataset_from_rows(labels, rows)


def save_features_csv(dataset: EmbeddingDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("label," + ",".join(f"c{i}" for i in range(dataset.d)) + "\n")
        for name, mat in dataset.classes.items():
            if "," in name:
                raise DatasetValidationError(f"class name {name!r} contains ','")
            for row in mat:
                fh.write(name + "," + ",".join(format(v, ".17g") for v in row) + "\n")


# ---------------------------------------------------------------------------
# Binary format (little-endian): magic "FSLF", u16 version, u32 num_classes,
# per class (u16 name length, name bytes, u32 count), u32 d, then float32
# vectors grouped by class in declared order.

def load_features_binary(path) -> EmbeddingDataset:
    with open(path, "rb") as fh:
        data = fh.read()
    view = memoryview(data)
    pos = 0

    def take(n, what):
        nonlocal pos
        if pos + n > len(view):
            raise DatasetFormatError(f"{path}: truncated file while reading {what}")
        chunk = view[pos:pos + n]
        pos += n
        return chunk

    if bytes(take(4, "magic")) != BINARY_MAGIC:
        raise DatasetFormatError(f"{path}: bad magic bytes")
    (version,) = struct.unpack("<H", take(2, "version"))
    if version != BINARY_VERSION:
        raise DatasetFormatError(f"{path}: unsupported version {version}")
    (num_classes,) = struct.unpack("<I", take(4, "class count"))
    headers = []
    for i in range(num_classes):
        (name_len,) = struct.unpack("<H", take(2, "name length"))
        name = bytes(take(name_len, "class name")).decode("utf-8")
        (count,) = struct.unpack("<I", take(4, "vector count"))
        headers.append((name, count))
    names = [h[0] for h in headers]
    if len(set(names)) != len(names):
        raise DatasetValidationError(f"{path}: duplicate class name")
    (d,) = struct.unpack("<I", take(4, "dimensionality"))
    classes = {}
    for name, count in headers:
        raw = take(4 * d * count, f"vectors of class {name!r}")
        mat = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(count, d)
        if not np.all(np.isfinite(mat)):
            raise DatasetValidationError(f"{path}: class {name!r} has non-finite values")
        classes[name] = mat
    if pos != len(view):
        raise DatasetFormatError(f"{path}: {len(view) - pos} trailing bytes")
    non_neg = all(float(m.min()) >= 0.0 for m in classes.values())
    return EmbeddingDataset(d, classes, non_neg)


def save_features_binary(dataset: EmbeddingDataset, path) -> None:
    parts = [BINARY_MAGIC, struct.pack("<H", BINARY_VERSION),
             struct.pack("<I", len(dataset.classes))]
    for name, mat in dataset.classes.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", mat.shape[0]))
    parts.append(struct.pack("<I", dataset.d))
    for mat in dataset.classes.values():
        parts.append(np.ascontiguousarray(mat, dtype="<f4").tobytes())
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


# ---------------------------------------------------------------------------
# Report serialization: deterministic key order, 17 significant digit floats.

def _json_value(obj) -> str:
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            raise ValueError(f"cannot serialize non-finite float {v}")
        return format(v, ".17g")
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        return '"' + out + '"'
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_json_value(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(_json_value(str(k)) + ":" + _json_value(v)
                              for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_json(report: EvalReport) -> str:
    payload = {
        "per_episode_accuracy": report.per_episode_accuracy,
        "mean_accuracy": report.mean_accuracy,
        "ci95_halfwidth": report.ci95_halfwidth,
        "config_echo": report.config_echo,
        "seed": report.seed,
    }
    return _json_value(payload) + "\n"


def save_report(report: EvalReport, path) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(report_to_json(report))
    except OSError as exc:
        raise OSError(f"failed to write report to {path}: {exc}") from exc


def load_report(path) -> EvalReport:
    import json

    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return EvalReport(
        per_episode_accuracy=payload["per_episode_accuracy"],
        mean_accuracy=payload["mean_accuracy"],
        ci95_halfwidth=payload["ci95_halfwidth"],
        config_echo=payload["config_echo"],
        seed=payload["seed"],
    )
