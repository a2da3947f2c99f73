"""Mean-magnitude-of-channel (MMC) analytics: per-pair and per-dataset channel
emphasis under different transforms, and the three distance levels that
quantify how far that emphasis moves."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import EmbeddingDataset, MMCVector
from .oracle import (BinaryTaskStats, OracleConfig, class_stats, oracle_mmc,
                     original_mmc)
from .transforms import TransformSpec, apply_channelwise


@dataclass(frozen=True)
class MMCMode:
    """Which weighting a pair/dataset MMC is computed under."""

    kind: str  # original | simple | oracle
    k: float = 1.3
    oracle_config: OracleConfig = OracleConfig()

    def __post_init__(self):
        if self.kind not in ("original", "simple", "oracle"):
            raise ValueError(f"unknown MMC mode {self.kind!r}")


@dataclass(frozen=True)
class DatasetMMC:
    weights: MMCVector
    mode: MMCMode
    pair_count: int


def _pair_stats(dataset: EmbeddingDataset, ci: str, cj: str) -> BinaryTaskStats:
    for name in (ci, cj):
        if name not in dataset.classes:
            raise KeyError(f"unknown class {name!r}")
    return BinaryTaskStats(class_stats(dataset.classes[ci]),
                           class_stats(dataset.classes[cj]))


def pair_mmc(dataset: EmbeddingDataset, ci: str, cj: str,
             mode: MMCMode) -> MMCVector:
    """l1-normalized MMC of the binary task (ci, cj) under ``mode``.

    ``simple`` transforms the features first and averages the two per-class
    mean magnitudes; magnitude is the absolute value, so signed (extended)
    outputs are handled uniformly.
    """
    if ci == cj:
        raise ValueError("pair classes must be distinct")
    if mode.kind == "simple":
        spec = TransformSpec("simple", k=mode.k)
        means = [np.abs(apply_channelwise(dataset.classes[c], spec)).mean(axis=0)
                 for c in (ci, cj)]
        weights = MMCVector(0.5 * (means[0] + means[1]))
    else:
        stats = _pair_stats(dataset, ci, cj)
        if mode.kind == "original":
            weights = original_mmc(stats, mode.oracle_config.epsilon)
        else:
            weights = oracle_mmc(stats, mode.oracle_config)
    return weights.l1_normalized()


def dataset_mmc(dataset: EmbeddingDataset, mode: MMCMode) -> DatasetMMC:
    """l1-normalized sum of all C(C,2) pairwise normalized MMCs."""
    names = dataset.class_names
    if len(names) < 2:
        raise ValueError("dataset_mmc requires at least 2 classes")
    total = np.zeros(dataset.d)
    count = 0
    for ci, cj in combinations(names, 2):
        total += pair_mmc(dataset, ci, cj, mode).weights
        count += 1
    return DatasetMMC(MMCVector(total).l1_normalized(), mode, count)


def normalized_msd(x, y) -> float:
    """(1/d) sum((x - y)^2 / x^2); x is the reference ("before") vector."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if np.any(x == 0):
        raise ZeroDivisionError("normalized_msd requires nonzero reference channels")
    return float(np.mean((x - y) ** 2 / x ** 2))


def msd(x, y) -> float:
    """(1/d) sum((x - y)^2); symmetric."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d vectors of equal length")
    return float(np.mean((x - y) ** 2))


def dataset_level_distance(mmc_a: DatasetMMC, mmc_b: DatasetMMC) -> float:
    """normalized_msd between two dataset MMCs; the first is the reference."""
    return normalized_msd(mmc_a.weights.weights, mmc_b.weights.weights)


def task_level_distance(dataset: EmbeddingDataset, mode_a: MMCMode,
                        mode_b: MMCMode) -> float:
    """Mean msd between the two modes' normalized MMCs over all class pairs."""
    names = dataset.class_names
    if len(names) < 2:
        raise ValueError("task_level_distance requires at least 2 classes")
    dists = [msd(pair_mmc(dataset, ci, cj, mode_a).weights,
                 pair_mmc(dataset, ci, cj, mode_b).weights)
             for ci, cj in combinations(names, 2)]
    return float(np.mean(dists))


def image_level_distance(dataset: EmbeddingDataset, transform_a: TransformSpec,
                         transform_b: TransformSpec) -> float:
    """Mean msd between l1-normalized per-image features under two transforms."""
    dists = []
    for name, mat in dataset.classes.items():
        fa = apply_channelwise(mat, transform_a)
        fb = apply_channelwise(mat, transform_b)
        norms_a = np.abs(fa).sum(axis=1)
        norms_b = np.abs(fb).sum(axis=1)
        bad = np.flatnonzero((norms_a == 0) | (norms_b == 0))
        if bad.size:
            raise ZeroDivisionError(
                f"image {int(bad[0])} of class {name!r} has zero l1 norm"
            )
        na = fa / norms_a[:, None]
        nb = fb / norms_b[:, None]
        dists.extend(np.mean((na - nb) ** 2, axis=1).tolist())
    return float(np.mean(dists))


def mmc_channel_table(dataset: EmbeddingDataset, mode_before: MMCMode,
                      mode_after: MMCMode):
    """Per-channel (index, before, after) rows behind the scatter reports."""
    before = dataset_mmc(dataset, mode_before).weights.weights
    after = dataset_mmc(dataset, mode_after).weights.weights
    return [(l, float(before[l]), float(after[l])) for l in range(dataset.d)]
