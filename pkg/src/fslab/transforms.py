"""Channel-wise feature transformations and their analytic property probes.

The workhorse is the smoothing map phi_k(x) = 1/ln^k(1/x + 1): strictly
increasing, infinitely steep at the origin, concave below an inflection
threshold. The remaining variants (signed extension, power, log, piecewise
quadratic, constant offset) cover the alternative shapes studied alongside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_K = 1.3

TRANSFORM_KINDS = ("none", "simple", "extended", "power", "log", "piecewise", "offset")

# Transforms that are strictly increasing on their domain (argsort-preserving).
MONOTONE_KINDS = ("none", "simple", "extended", "power", "log", "offset")


class TransformDomainError(ValueError):
    """Input outside the transform's domain (e.g. negative value for phi_k)."""


class TransformConfigError(ValueError):
    """Inconsistent transform hyperparameters."""


@dataclass(frozen=True)
class TransformSpec:
    """A member of the closed transform family with its hyperparameters."""

    kind: str
    k: float = DEFAULT_K
    a: float = 1.0
    r: float = 0.0
    lambda0: float = 0.02
    x0: float = 0.05

    def __post_init__(self):
        if self.kind not in TRANSFORM_KINDS:
            raise TransformConfigError(f"unknown transform kind {self.kind!r}")
        if self.kind in ("simple", "extended", "power", "piecewise", "offset"):
            if self.k <= 0:
                raise TransformConfigError("k must be positive")
        if self.kind == "log" and self.a <= 0:
            raise TransformConfigError("a must be positive")
        if self.kind == "offset" and self.r < 0:
            raise TransformConfigError("r must be non-negative")
        if self.kind == "piecewise" and not 0 < self.lambda0 < self.x0:
            raise TransformConfigError(
                "piecewise requires 0 < lambda0 < x0 for a concave peak"
            )


def _maybe_scalar(out, was_scalar):
    return float(out[0]) if was_scalar else out


def simple_transform(lam, k: float = DEFAULT_K):
    """phi_k(x) = 1/ln^k(1/x + 1) for x > 0, with phi_k(0) = 0.

    Accepts scalars or arrays; defined on non-negative inputs only.
    """
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise TransformDomainError(
            "simple transform is undefined for negative values; "
            "use extended_transform for signed features"
        )
    out = np.zeros_like(arr)
    pos = arr > 0
    # Subnormal inputs overflow 1/x to inf; the limit value 0 is still right.
    with np.errstate(over="ignore"):
        out[pos] = np.log(1.0 / arr[pos] + 1.0) ** (-k)
    return _maybe_scalar(out, scalar)


def extended_transform(lam, k: float = DEFAULT_K):
    """Odd extension sign(x) * phi_k(|x|), usable on signed features."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.sign(arr) * simple_transform(np.abs(arr), k)
    return _maybe_scalar(out, scalar)


def power_transform(lam, k: float = DEFAULT_K):
    """x ** k on non-negative inputs (Tukey-ladder style power map)."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise TransformDomainError("power transform is undefined for negative values")
    return _maybe_scalar(arr ** k, scalar)


def log_transform(lam, a: float = 1.0):
    """ln(a*x + 1); slope a at the origin."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise TransformDomainError("log transform is undefined for negative values")
    return _maybe_scalar(np.log(a * arr + 1.0), scalar)


def offset_transform(lam, k: float = DEFAULT_K, r: float = 0.0):
    """phi_k(x) + r, with the zero input also lifted to r."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    return _maybe_scalar(simple_transform(arr, k) + r, scalar)


def simple_transform_deriv(lam, k: float = DEFAULT_K):
    """Analytic first derivative of phi_k on (0, inf)."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr <= 0):
        raise TransformDomainError("derivative defined only for positive values")
    u = np.log(1.0 / arr + 1.0)
    out = k * u ** (-k - 1.0) / (arr * (arr + 1.0))
    return _maybe_scalar(out, scalar)


@dataclass(frozen=True)
class PiecewiseCoefficients:
    """Quadratic-branch coefficients of the piecewise variant.

    Built so the quadratic matches phi_k in value and slope at lambda0 and
    peaks at x0; a2 < 0, so the branch decreases past the peak.
    """

    a2: float
    a1: float
    a0: float


def piecewise_coefficients(k: float, lambda0: float, x0: float) -> PiecewiseCoefficients:
    if not 0 < lambda0 < x0:
        raise TransformConfigError(
            "piecewise_coefficients requires 0 < lambda0 < x0; otherwise the "
            "quadratic branch is convex with positive derivative"
        )
    slope = simple_transform_deriv(lambda0, k)
    a2 = slope / (2.0 * (lambda0 - x0))
    a1 = -2.0 * a2 * x0
    a0 = simple_transform(lambda0, k) - a2 * lambda0 ** 2 - a1 * lambda0
    return PiecewiseCoefficients(a2=a2, a1=a1, a0=a0)


def piecewise_transform(lam, coeffs: PiecewiseCoefficients,
                        k: float = DEFAULT_K, lambda0: float = 0.02):
    """phi_k below lambda0, the smooth quadratic continuation above it."""
    arr = np.asarray(lam, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(arr < 0):
        raise TransformDomainError("piecewise transform is undefined for negative values")
    out = np.where(
        arr < lambda0,
        simple_transform(arr, k),
        coeffs.a2 * arr ** 2 + coeffs.a1 * arr + coeffs.a0,
    )
    return _maybe_scalar(out, scalar)


def apply_channelwise(v, spec: TransformSpec):
    """Apply a transform element-wise to a feature vector (or matrix of them)."""
    arr = np.asarray(v, dtype=np.float64)
    if spec.kind == "none":
        return arr.copy()
    if spec.kind != "extended" and np.any(arr < 0):
        bad = int(np.argmax(np.ravel(arr < 0)))
        channel = bad % arr.shape[-1] if arr.ndim > 1 else bad
        raise TransformDomainError(
            f"channel {channel} is negative; {spec.kind!r} requires non-negative "
            "features (use kind='extended')"
        )
    if spec.kind == "simple":
        return simple_transform(arr, spec.k)
    if spec.kind == "extended":
        return extended_transform(arr, spec.k)
    if spec.kind == "power":
        return power_transform(arr, spec.k)
    if spec.kind == "log":
        return log_transform(arr, spec.a)
    if spec.kind == "offset":
        return offset_transform(arr, spec.k, spec.r)
    coeffs = piecewise_coefficients(spec.k, spec.lambda0, spec.x0)
    return piecewise_transform(arr, coeffs, spec.k, spec.lambda0)


def second_derivative(lam: float, k: float = DEFAULT_K, step: float = 1e-5) -> float:
    """phi_k'' via central differences on the analytic first derivative."""
    h = min(step, lam / 2.0)
    return (simple_transform_deriv(lam + h, k)
            - simple_transform_deriv(lam - h, k)) / (2.0 * h)


def inflection_threshold(k: float, tol: float = 1e-6) -> float:
    """The point where phi_k'' changes sign, by bisection on (1e-6, 10)."""
    if not 0.1 <= k <= 10.0:
        raise TransformConfigError("inflection_threshold supports k in [0.1, 10]")
    lo, hi = 1e-6, 10.0
    f_lo = second_derivative(lo, k)
    # Walk a coarse grid to bracket the sign change before bisecting.
    bracket = None
    grid = np.geomspace(lo, hi, 400)
    prev_x, prev_f = lo, f_lo
    for x in grid[1:]:
        f = second_derivative(float(x), k)
        if f_lo != 0 and np.sign(f) != np.sign(prev_f):
            bracket = (prev_x, float(x), prev_f, f)
            break
        prev_x, prev_f = float(x), f
    if bracket is None:
        raise ArithmeticError(f"no sign change of phi'' found for k={k}")
    a, b, fa, fb = bracket
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = second_derivative(mid, k)
        if np.sign(fm) == np.sign(fa):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    return 0.5 * (a + b)
