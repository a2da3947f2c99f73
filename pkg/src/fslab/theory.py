"""Numerical verification suite for the statistical machinery: the Cantelli
tail bound, the closed-form ratio minimizer, and the misclassification-risk
bound with its oracle-optimality claim.

Each check compares a Monte Carlo or brute-force measurement against the
analytic statement, with a 3/sqrt(trials) margin on stochastic inequalities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .episodes import (monte_carlo_risk, monte_carlo_risk_many, stream_rng,
                       verify_cantelli)
from .core import ChannelStats, MMCVector
from .oracle import (BinaryTaskStats, lemma_min, oracle_mmc_uncapped,
                     original_mmc, ratio_objective, risk_upper_bound)


@dataclass(frozen=True)
class TheoryCheckResult:
    name: str
    passed: bool
    measured: float
    target: float
    margin: float
    trials: int
    seed: int
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "measured": self.measured,
            "target": self.target,
            "margin": self.margin,
            "trials": self.trials,
            "seed": self.seed,
            "detail": self.detail,
        }


DEFAULT_CANTELLI_CASES = (
    (0.0, 1.0, 0.5),
    (0.0, 1.0, 1.0),
    (0.0, 1.0, 2.0),
    (5.0, 2.0, 1.0),
    (5.0, 2.0, 2.0),
    (-3.0, 0.7, 0.5),
)


def check_cantelli(cases=DEFAULT_CANTELLI_CASES, trials: int = 100_000,
                   seed: int = 0):
    """Empirical Gaussian tails against the 1/(1+k^2) bound."""
    if trials < 100_000:
        raise ValueError("check_cantelli requires trials >= 10^5")
    margin = 3.0 / math.sqrt(trials)
    results = []
    for i, (mu, sigma, k) in enumerate(cases):
        empirical, bound = verify_cantelli(mu, sigma, k, trials, seed + i)
        results.append(TheoryCheckResult(
            name=f"cantelli[mu={mu},sigma={sigma},k={k}]",
            passed=empirical <= bound + margin,
            measured=empirical, target=bound, margin=margin,
            trials=trials, seed=seed,
        ))
    return results


def _simplex_grid_points(d: int, resolution: int) -> np.ndarray:
    """All lattice points of the unit simplex at the given resolution."""
    if d == 1:
        return np.array([[1.0]])
    if d == 2:
        i = np.arange(resolution + 1)
        return np.column_stack([i, resolution - i]) / resolution
    if d == 3:
        i, j = np.meshgrid(np.arange(resolution + 1), np.arange(resolution + 1),
                           indexing="ij")
        keep = (i + j) <= resolution
        i, j = i[keep], j[keep]
        return np.column_stack([i, j, resolution - i - j]) / resolution
    raise ValueError("grid search supported for d <= 3 only")


def _simplex_grid_min(a, b, resolution: int) -> float:
    """Brute-force minimum of the ratio objective over the unit simplex."""
    pts = _simplex_grid_points(len(a), resolution)
    num = pts ** 2 @ np.asarray(b, dtype=np.float64)
    den = (pts @ np.asarray(a, dtype=np.float64)) ** 2
    return float(np.min(num / den))


def check_lemma_min(n_instances: int = 20, grid_resolution: int = 200,
                    seed: int = 0):
    """Closed-form minimum against a simplex grid search, plus exactness and
    scale invariance at the analytic argmin."""
    rng = stream_rng(seed, 1)
    results = []
    for i in range(n_instances):
        d = int(rng.integers(1, 4))
        a = rng.uniform(0.1, 10.0, size=d)
        b = rng.uniform(0.1, 10.0, size=d)
        value, direction = lemma_min(a, b)
        grid_min = _simplex_grid_min(a, b, grid_resolution)
        at_argmin = ratio_objective(direction, a, b)
        scale_ok = all(
            abs(ratio_objective(c * direction, a, b) - at_argmin)
            <= 1e-9 * abs(at_argmin)
            for c in (0.1, 1.0, 10.0)
        )
        passed = (grid_min >= value * (1.0 - 0.01)
                  and abs(at_argmin - value) <= 1e-12 * abs(value)
                  and scale_ok)
        results.append(TheoryCheckResult(
            name=f"lemma_min[{i},d={d}]",
            passed=passed, measured=grid_min, target=value,
            margin=0.01 * value, trials=grid_resolution, seed=seed,
            detail=f"f(argmin)={at_argmin:.17g}",
        ))
    return results


def random_binary_stats(rng, d: int) -> BinaryTaskStats:
    """A random diagonal-Gaussian binary task satisfying the bound's
    assumptions on every channel."""
    mu1 = rng.uniform(0.05, 1.0, size=d)
    delta = rng.uniform(0.05, 0.8, size=d) * rng.choice([-1.0, 1.0], size=d)
    mu2 = np.abs(mu1 + delta)
    # A zero-width mean gap would void the assumptions; nudge if it happens.
    same = np.abs(mu1 - mu2) < 1e-6
    mu2[same] += 0.1
    sigma1 = rng.uniform(0.02, 0.4, size=d)
    sigma2 = rng.uniform(0.02, 0.4, size=d)
    return BinaryTaskStats(ChannelStats(mu1, sigma1), ChannelStats(mu2, sigma2))


def check_prop31(n_instances: int = 10, n_omegas: int = 50,
                 trials: int = 100_000, seed: int = 0,
                 n_optimality_omegas: int = 1000):
    """Bound validity (Monte Carlo risk below the bound) and oracle
    optimality (no random weighting beats the uncapped oracle's bound)."""
    rng = stream_rng(seed, 2)
    margin = 3.0 / math.sqrt(trials)
    results = []
    for i in range(n_instances):
        d = int(rng.integers(1, 9))
        stats = random_binary_stats(rng, d)
        omegas = [MMCVector(rng.uniform(0.05, 3.0, size=d))
                  for _ in range(n_omegas)]
        bounds = np.array([risk_upper_bound(w, stats) for w in omegas])
        risks = monte_carlo_risk_many(omegas, stats, trials,
                                      seed=seed * 1_000_003 + i)
        worst_excess = float(np.max(risks - bounds))
        ok = worst_excess <= margin
        results.append(TheoryCheckResult(
            name=f"prop31_bound_validity[{i},d={d}]",
            passed=ok, measured=worst_excess, target=0.0, margin=margin,
            trials=trials, seed=seed,
        ))

        oracle = oracle_mmc_uncapped(stats)
        oracle_bound = risk_upper_bound(oracle, stats)
        opt_ok = True
        worst_gap = -math.inf
        for _ in range(n_optimality_omegas):
            omega = MMCVector(rng.uniform(1e-3, 3.0, size=d))
            gap = oracle_bound - risk_upper_bound(omega, stats)
            worst_gap = max(worst_gap, gap)
            if gap > 1e-9:
                opt_ok = False
        a = (stats.stats1.mu - stats.stats2.mu) ** 2
        spread2 = (stats.stats1.sigma + stats.stats2.sigma) ** 2
        oo = original_mmc(stats).weights
        a_std = a / oo ** 2
        b_std = spread2 / oo ** 2
        closed_form, _ = lemma_min(a_std, b_std)
        closed_bound = 8.0 * closed_form
        exact_ok = abs(oracle_bound - closed_bound) <= 1e-9 * closed_bound
        results.append(TheoryCheckResult(
            name=f"prop31_oracle_optimality[{i},d={d}]",
            passed=opt_ok and exact_ok, measured=oracle_bound,
            target=closed_bound, margin=1e-9, trials=n_optimality_omegas,
            seed=seed,
            detail=f"worst_gap={worst_gap:.3e}",
        ))
    return results


CHECK_FAMILIES = ("cantelli", "lemma", "prop31")


def run_all(trials: int = 100_000, seed: int = 0, only=None,
            prop31_instances: int = 10, prop31_omegas: int = 50):
    """Run the requested check families; results in declaration order."""
    families = CHECK_FAMILIES if only is None else tuple(only)
    results = []
    if "cantelli" in families:
        results += check_cantelli(trials=max(trials, 100_000), seed=seed)
    if "lemma" in families:
        results += check_lemma_min(seed=seed)
    if "prop31" in families:
        results += check_prop31(n_instances=prop31_instances,
                                n_omegas=prop31_omegas,
                                trials=trials, seed=seed)
    return results


def format_table(results) -> str:
    lines = [f"{'check':50s} {'status':6s} {'measured':>14s} {'target':>14s}"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:50s} {status:6s} {r.measured:14.6g} {r.target:14.6g}")
    n_fail = sum(not r.passed for r in results)
    lines.append(f"{len(results)} checks, {n_fail} failed")
    return "\n".join(lines)
