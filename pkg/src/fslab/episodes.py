"""Seeded episodic sampling, synthetic Gaussian tasks, channel-bias injection,
Monte Carlo risk estimation, and the evaluation harness.

Every random stream is derived from a counter-based Philox generator keyed by
a SplitMix64 hash of (seed, stream_index), so episode ``e`` is bit-identical
regardless of evaluation order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ChannelStats, EmbeddingDataset, Episode, EvalReport, MMCVector
from .classify import (linear_fit, linear_predict_batch, ncc_fit,
                       ncc_predict_batch)
from .oracle import (BinaryTaskStats, OracleConfig, apply_oracle, class_stats,
                     oracle_mmc, original_mmc, standardize)
from .transforms import TransformSpec, apply_channelwise

_MASK64 = (1 << 64) - 1


class EpisodeConfigError(ValueError):
    """The dataset cannot support the requested episode shape."""


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def stream_rng(seed: int, stream_index: int = 0) -> np.random.Generator:
    """Philox generator for stream ``stream_index`` of run ``seed``."""
    key = _splitmix64(_splitmix64(seed & _MASK64) ^ (stream_index & _MASK64))
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class EpisodeConfig:
    n_way: int
    k_shot: int
    m_query: int
    episodes: int
    seed: int

    def __post_init__(self):
        if min(self.n_way, self.k_shot, self.m_query, self.episodes) < 1:
            raise EpisodeConfigError("all episode dimensions must be positive")


@dataclass(frozen=True)
class SyntheticTaskSpec:
    """Per-class diagonal-Gaussian generator parameters."""

    d: int
    class_means: dict
    class_sigmas: dict
    margin_rule: bool = True

    def __post_init__(self):
        for name in self.class_means:
            mu = np.asarray(self.class_means[name], dtype=np.float64)
            sigma = np.asarray(self.class_sigmas[name], dtype=np.float64)
            if mu.shape != (self.d,) or sigma.shape != (self.d,):
                raise ValueError(f"class {name!r}: mean/sigma must have length {self.d}")
            if np.any(sigma < 0):
                raise ValueError(f"class {name!r}: sigma must be non-negative")
            if self.margin_rule and np.any(mu < 4.0 * sigma):
                raise ValueError(
                    f"class {name!r}: margin rule requires mu >= 4*sigma per channel"
                )


@dataclass(frozen=True)
class BiasInjection:
    """Multiplicative per-channel scale applied to every feature."""

    scale: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scale, dtype=np.float64)
        if s.ndim != 1 or np.any(s <= 0) or not np.all(np.isfinite(s)):
            raise ValueError("bias scale must be a finite positive vector")
        object.__setattr__(self, "scale", s)


def sample_episode(dataset: EmbeddingDataset, cfg: EpisodeConfig,
                   episode_index: int) -> Episode:
    """Deterministically sample episode ``episode_index`` of the run.

    Classes with fewer than K+M vectors are ineligible; N classes are drawn
    without replacement, then K support + M query vectors per class.
    """
    need = cfg.k_shot + cfg.m_query
    eligible = [name for name, mat in dataset.classes.items()
                if mat.shape[0] >= need]
    if len(eligible) < cfg.n_way:
        raise EpisodeConfigError(
            f"need {cfg.n_way} classes with >= {need} vectors, "
            f"only {len(eligible)} eligible"
        )
    rng = stream_rng(cfg.seed, episode_index)
    chosen = rng.choice(len(eligible), size=cfg.n_way, replace=False)
    names, support, query = [], [], []
    for ci in chosen:
        name = eligible[int(ci)]
        mat = dataset.classes[name]
        perm = rng.permutation(mat.shape[0])[:need]
        names.append(name)
        support.append(mat[perm[:cfg.k_shot]])
        query.append(mat[perm[cfg.k_shot:]])
    return Episode(cfg.n_way, cfg.k_shot, cfg.m_query,
                   tuple(names), tuple(support), tuple(query))


def gen_gaussian_task(spec: SyntheticTaskSpec, n_per_class: int,
                      seed: int) -> EmbeddingDataset:
    """Sample a dataset with independent Gaussian channels, clipped at 0."""
    rng = stream_rng(seed, 0)
    classes = {}
    for name in spec.class_means:
        mu = np.asarray(spec.class_means[name], dtype=np.float64)
        sigma = np.asarray(spec.class_sigmas[name], dtype=np.float64)
        draws = rng.normal(mu, sigma, size=(n_per_class, spec.d))
        classes[name] = np.maximum(draws, 0.0)
    return EmbeddingDataset(spec.d, classes, non_negative=True)


def random_task_spec(n_classes: int, d: int, seed: int,
                     base_mean: float = 0.05, mean_jitter: float = 0.15,
                     sigma_frac: float = 0.25,
                     margin_rule: bool = True) -> SyntheticTaskSpec:
    """Random per-class Gaussian parameters around a shared base magnitude.

    Class means are ``|base * (1 + N(0, jitter))|`` per channel with
    ``sigma = sigma_frac * mean``; sigma_frac <= 0.25 keeps the margin rule
    satisfiable.
    """
    rng = stream_rng(seed, 17)
    means, sigmas = {}, {}
    for c in range(n_classes):
        mu = np.abs(base_mean * (1.0 + rng.normal(0.0, mean_jitter, size=d)))
        means[f"class{c}"] = mu
        sigmas[f"class{c}"] = sigma_frac * mu
    return SyntheticTaskSpec(d, means, sigmas, margin_rule=margin_rule)


def log_uniform_bias(d: int, spread: float, seed: int) -> BiasInjection:
    """Per-channel scales log-uniform on [1/spread, spread]."""
    if spread <= 1:
        raise ValueError("bias spread must exceed 1")
    rng = stream_rng(seed, 23)
    scale = np.exp(rng.uniform(-math.log(spread), math.log(spread), size=d))
    return BiasInjection(scale)


def inject_bias(dataset: EmbeddingDataset, bias: BiasInjection) -> EmbeddingDataset:
    if bias.scale.shape[0] != dataset.d:
        raise ValueError("bias scale length does not match dataset dimensionality")
    return dataset.map_values(lambda m: m * bias.scale)


def monte_carlo_risk(omega: MMCVector, stats: BinaryTaskStats, trials: int,
                     seed: int) -> float:
    """Empirical misclassification rate of weighted NCC with true means.

    Draws ``trials`` unclipped Gaussian samples per class, classifies them in
    standardized coordinates, and averages the two per-class error rates.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = stream_rng(seed, 0)
    omega_o = original_mmc(stats)
    mu1 = standardize(stats.stats1.mu, omega_o)
    mu2 = standardize(stats.stats2.mu, omega_o)
    w2 = omega.weights ** 2
    errors = 0.0
    for own_mu, other_mu, st in ((mu1, mu2, stats.stats1), (mu2, mu1, stats.stats2)):
        z = rng.normal(st.mu, st.sigma, size=(trials, stats.d))
        z = standardize(z, omega_o)
        d_own = ((z - own_mu) ** 2 * w2).sum(axis=1)
        d_other = ((z - other_mu) ** 2 * w2).sum(axis=1)
        # Own-class hit requires a strictly smaller distance; ties count
        # against class 1 and for class 2, matching the decision rule.
        if own_mu is mu1:
            errors += float(np.mean(d_own >= d_other))
        else:
            errors += float(np.mean(d_own > d_other))
    return errors / 2.0


def monte_carlo_risk_many(omegas, stats: BinaryTaskStats, trials: int,
                          seed: int) -> np.ndarray:
    """Empirical risks for many weightings over one shared sample set.

    Same estimator as :func:`monte_carlo_risk` (``trials`` draws per class),
    evaluated for every omega at once; the estimates are correlated across
    omegas but each is a full ``trials``-sample estimate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = stream_rng(seed, 0)
    omega_o = original_mmc(stats)
    mu1 = standardize(stats.stats1.mu, omega_o)
    mu2 = standardize(stats.stats2.mu, omega_o)
    W2 = np.stack([np.asarray(w.weights if isinstance(w, MMCVector) else w,
                              dtype=np.float64) ** 2 for w in omegas])
    risks = np.zeros(W2.shape[0])
    for own_mu, other_mu, st, strict in ((mu1, mu2, stats.stats1, False),
                                         (mu2, mu1, stats.stats2, True)):
        z = standardize(rng.normal(st.mu, st.sigma, size=(trials, stats.d)),
                        omega_o)
        d_own = (z - own_mu) ** 2 @ W2.T
        d_other = (z - other_mu) ** 2 @ W2.T
        err = (d_own > d_other) if strict else (d_own >= d_other)
        risks += err.mean(axis=0)
    return risks / 2.0


def verify_cantelli(mu: float, sigma: float, k: float, trials: int, seed: int):
    """(empirical one-sided tail beyond k sigma, 1/(1+k^2) bound)."""
    if trials < 10_000:
        raise ValueError("verify_cantelli requires trials >= 10^4")
    rng = stream_rng(seed, 0)
    draws = rng.normal(mu, sigma, size=trials)
    empirical = float(np.mean(draws - mu >= k * sigma))
    return empirical, 1.0 / (1.0 + k * k)


@dataclass(frozen=True)
class OracleTransform:
    """Marker selecting the oracle re-weighting (binary episodes only)."""

    config: OracleConfig = OracleConfig()


def _episode_accuracy(dataset, cfg, transform, classifier, episode_index,
                      full_stats):
    ep = sample_episode(dataset, cfg, episode_index)
    support = list(ep.support)
    query = list(ep.query)
    if isinstance(transform, OracleTransform):
        c1, c2 = ep.class_names
        stats = BinaryTaskStats(full_stats[c1], full_stats[c2])
        omega_o = original_mmc(stats, transform.config.epsilon)
        omega = oracle_mmc(stats, transform.config)
        support = [apply_oracle(s, omega, omega_o) for s in support]
        query = [apply_oracle(q, omega, omega_o) for q in query]
    elif transform.kind != "none":
        support = [apply_channelwise(s, transform) for s in support]
        query = [apply_channelwise(q, transform) for q in query]
    if classifier == "ncc":
        model = ncc_fit(support)
        predict = lambda q: ncc_predict_batch(q, model)
    elif classifier == "lc":
        model = linear_fit(support)
        predict = lambda q: linear_predict_batch(q, model)
    else:
        raise ValueError(f"unknown classifier {classifier!r}")
    correct = 0
    for true_idx, q in enumerate(query):
        correct += int(np.sum(predict(q) == true_idx))
    return correct / (cfg.n_way * cfg.m_query)


def run_evaluation(dataset: EmbeddingDataset, cfg: EpisodeConfig,
                   transform, classifier: str = "ncc",
                   threads: int = 1, config_echo: dict | None = None) -> EvalReport:
    """Evaluate a transform/classifier pair over seeded episodes.

    ``transform`` is a :class:`TransformSpec` or an :class:`OracleTransform`;
    the latter requires 2-way episodes. Episode streams are independent, so
    the report is identical for any thread count.
    """
    if isinstance(transform, OracleTransform):
        if cfg.n_way != 2:
            raise EpisodeConfigError("oracle transform requires n_way = 2")
        full_stats = {name: class_stats(mat)
                      for name, mat in dataset.classes.items()}
    elif isinstance(transform, TransformSpec):
        full_stats = None
    else:
        raise TypeError("transform must be a TransformSpec or OracleTransform")

    indices = range(cfg.episodes)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            accs = list(pool.map(
                lambda i: _episode_accuracy(dataset, cfg, transform, classifier,
                                            i, full_stats),
                indices))
    else:
        accs = [_episode_accuracy(dataset, cfg, transform, classifier, i,
                                  full_stats) for i in indices]
    mean = sum(accs) / len(accs)
    if len(accs) > 1:
        sd = float(np.std(accs, ddof=1))
        ci = 1.96 * sd / math.sqrt(len(accs))
    else:
        ci = 0.0
    echo = dict(config_echo) if config_echo else {}
    return EvalReport(per_episode_accuracy=accs, mean_accuracy=mean,
                      ci95_halfwidth=ci, config_echo=echo, seed=cfg.seed)
