"""Oracle channel importance for binary tasks.

Given full class statistics (mean, per-channel std), the best channel
re-weighting for a weighted nearest-centroid rule is proportional to
|mu1 - mu2| / (sigma1 + sigma2); this module computes it, the concentration
bound it minimizes, and the closed-form minimizer behind that claim.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelStats, MMCVector


class StatsPreconditionError(ValueError):
    """Class statistics violate the bound's assumptions on some channels."""


@dataclass(frozen=True)
class BinaryTaskStats:
    """Statistics of the two classes of a binary task."""

    stats1: ChannelStats
    stats2: ChannelStats

    def __post_init__(self):
        if self.stats1.d != self.stats2.d:
            raise ValueError("class statistics have mismatched dimensionality")

    @property
    def d(self) -> int:
        return self.stats1.d


@dataclass(frozen=True)
class OracleConfig:
    """Cap ratio and degeneracy floor for the oracle weighting."""

    alpha: float = 50.0
    epsilon: float = 1e-8

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError("alpha must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def class_stats(vectors) -> ChannelStats:
    """Per-channel sample mean and population (1/n) standard deviation."""
    mat = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if mat.size == 0:
        raise ValueError("class_stats requires at least one vector")
    return ChannelStats(mu=mat.mean(axis=0), sigma=mat.std(axis=0, ddof=0))


def original_mmc(stats: BinaryTaskStats, epsilon: float = 1e-8) -> MMCVector:
    """Task MMC (mu1 + mu2)/2, floored at epsilon so it is always invertible."""
    w = 0.5 * (stats.stats1.mu + stats.stats2.mu)
    return MMCVector(np.maximum(w, epsilon))


def standardize(v, omega_o: MMCVector):
    """Divide channel-wise by the original MMC (unit-MMC coordinates)."""
    if np.any(omega_o.weights <= 0):
        raise ZeroDivisionError("standardize requires strictly positive MMC weights")
    return np.asarray(v, dtype=np.float64) / omega_o.weights


def oracle_mmc(stats: BinaryTaskStats, cfg: OracleConfig = OracleConfig()) -> MMCVector:
    """Adjusted oracle MMC with degeneracy fallback and the alpha-cap.

    Raw weights |mu1-mu2|/(sigma1+sigma2) are rescaled to the l1 mass of the
    original MMC; channels that are degenerate (no mean gap, or no spread)
    keep their original MMC, as does any channel whose boost ratio exceeds
    alpha.
    """
    omega_o = original_mmc(stats, cfg.epsilon).weights
    delta = np.abs(stats.stats1.mu - stats.stats2.mu)
    spread = stats.stats1.sigma + stats.stats2.sigma
    degenerate = (delta < cfg.epsilon) | (spread < cfg.epsilon)
    raw = np.zeros_like(delta)
    ok = ~degenerate
    raw[ok] = delta[ok] / spread[ok]
    total = raw.sum()
    if total > 0:
        w = raw * (omega_o.sum() / total)
    else:
        w = raw
    w[degenerate] = omega_o[degenerate]
    capped = w / omega_o > cfg.alpha
    w[capped] = omega_o[capped]
    return MMCVector(w)


def oracle_mmc_uncapped(stats: BinaryTaskStats) -> MMCVector:
    """Raw oracle direction with no cap or fallback; all channels must be
    non-degenerate."""
    delta = np.abs(stats.stats1.mu - stats.stats2.mu)
    spread = stats.stats1.sigma + stats.stats2.sigma
    bad = np.flatnonzero((delta == 0) | (spread == 0))
    if bad.size:
        raise StatsPreconditionError(
            f"channels {bad.tolist()} are degenerate (equal means or zero spread)"
        )
    return MMCVector(delta / spread)


def apply_oracle(v, omega: MMCVector, omega_o: MMCVector):
    """Standardize by the original MMC, then re-weight by the adjusted one."""
    if omega.d != omega_o.d:
        raise ValueError("omega and omega_o have mismatched dimensionality")
    return omega.weights * standardize(v, omega_o)


def _standardized(stats: BinaryTaskStats):
    omega_o = original_mmc(stats)
    mu1 = stats.stats1.mu / omega_o.weights
    mu2 = stats.stats2.mu / omega_o.weights
    s1 = stats.stats1.sigma / omega_o.weights
    s2 = stats.stats2.sigma / omega_o.weights
    return mu1, mu2, s1, s2


def risk_upper_bound(omega: MMCVector, stats: BinaryTaskStats) -> float:
    """Concentration upper bound on the weighted-NCC misclassification rate.

    8 * sum(w^4 (s1~+s2~)^2) / (sum(w^2 (mu1~-mu2~)^2))^2, in standardized
    coordinates. Invariant under positive rescaling of the weights.
    """
    delta = stats.stats1.mu - stats.stats2.mu
    spread = stats.stats1.sigma + stats.stats2.sigma
    bad = np.flatnonzero((delta == 0) | (spread <= 0))
    if bad.size:
        raise StatsPreconditionError(
            f"channels {bad.tolist()} violate the bound's assumptions "
            "(equal means or zero total spread)"
        )
    w = omega.weights
    if not np.any(w > 0):
        raise ValueError("omega must have at least one positive weight")
    mu1, mu2, s1, s2 = _standardized(stats)
    num = 8.0 * np.sum(w ** 4 * (s1 + s2) ** 2)
    den = np.sum(w ** 2 * (mu1 - mu2) ** 2) ** 2
    return float(num / den)


def lemma_min(a, b):
    """Closed-form minimum of f(x) = sum(b x^2) / (sum(a x))^2 over x >= 0.

    Returns (min_value, argmin_direction) with the direction l1-normalized;
    the minimizer is x_i = a_i / b_i up to positive scale.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-d vectors of equal length")
    if np.any(a <= 0) or np.any(b <= 0):
        raise ValueError("lemma_min requires strictly positive entries")
    value = 1.0 / np.sum(a ** 2 / b)
    direction = a / b
    return float(value), direction / direction.sum()


def ratio_objective(x, a, b) -> float:
    """The lemma's objective f(x) = sum(b x^2) / (sum(a x))^2."""
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    den = np.sum(a * x) ** 2
    if den == 0:
        raise ZeroDivisionError("objective undefined at the origin")
    return float(np.sum(b * x ** 2) / den)
