"""The channel-wise transform family and its analytic probes."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fslab.transforms import (DEFAULT_K, MONOTONE_KINDS, TransformConfigError,
                              TransformDomainError, TransformSpec,
                              apply_channelwise, extended_transform,
                              inflection_threshold, log_transform,
                              offset_transform, piecewise_coefficients,
                              piecewise_transform, power_transform,
                              second_derivative, simple_transform,
                              simple_transform_deriv)

positive = st.floats(1e-6, 50.0, allow_nan=False)
ks = st.floats(0.2, 5.0, allow_nan=False)


class TestSimpleTransform:
    def test_zero_maps_to_zero(self):
        assert simple_transform(0.0) == 0.0

    def test_known_value(self):
        # phi_1(e/(e-1) - 1 ... ) easier: at x with ln(1/x+1)=1, phi_k(x)=1
        x = 1.0 / (math.e - 1.0)
        assert simple_transform(x, 2.7) == pytest.approx(1.0, rel=1e-12)

    def test_matches_direct_formula(self):
        for x in (0.01, 0.1, 0.5, 2.0, 100.0):
            expected = 1.0 / math.log(1.0 / x + 1.0) ** 1.3
            assert simple_transform(x, 1.3) == pytest.approx(expected, rel=1e-14)

    def test_rejects_negative(self):
        with pytest.raises(TransformDomainError):
            simple_transform(-0.1)

    def test_array_input(self):
        out = simple_transform(np.array([0.0, 0.5]))
        assert out.shape == (2,)
        assert out[0] == 0.0

    @given(st.tuples(positive, positive), ks)
    @settings(max_examples=100, deadline=None)
    def test_strictly_increasing(self, pair, k):
        x, y = sorted(pair)
        assert simple_transform(x, k) <= simple_transform(y, k)
        # Strictness only makes sense beyond float rounding of the inputs.
        if y > x * (1.0 + 1e-9):
            assert simple_transform(x, k) < simple_transform(y, k)

    @given(positive, ks)
    @settings(max_examples=100, deadline=None)
    def test_positive_on_positive(self, x, k):
        assert simple_transform(x, k) > 0.0

    @given(positive)
    @settings(max_examples=50, deadline=None)
    def test_derivative_matches_finite_difference(self, x):
        h = x * 1e-7
        numeric = (simple_transform(x + h) - simple_transform(x - h)) / (2 * h)
        assert simple_transform_deriv(x) == pytest.approx(numeric, rel=1e-4)


class TestVariants:
    @given(st.floats(-50.0, 50.0, allow_nan=False), ks)
    @settings(max_examples=100, deadline=None)
    def test_extended_is_odd(self, x, k):
        assert extended_transform(-x, k) == pytest.approx(-extended_transform(x, k))

    @given(positive, ks)
    @settings(max_examples=50, deadline=None)
    def test_extended_agrees_on_positives(self, x, k):
        assert extended_transform(x, k) == simple_transform(x, k)

    def test_power(self):
        assert power_transform(4.0, 0.5) == pytest.approx(2.0)
        with pytest.raises(TransformDomainError):
            power_transform(-1.0)

    def test_log(self):
        assert log_transform(0.0) == 0.0
        assert log_transform(math.e - 1.0, 1.0) == pytest.approx(1.0)
        assert log_transform(1.0, 2.0) == pytest.approx(math.log(3.0))

    def test_offset(self):
        assert offset_transform(0.0, r=0.25) == 0.25
        assert offset_transform(0.5, r=0.25) == pytest.approx(
            simple_transform(0.5) + 0.25)

    @given(st.tuples(positive, positive), st.sampled_from(MONOTONE_KINDS))
    @settings(max_examples=100, deadline=None)
    def test_monotone_kinds_preserve_order(self, pair, kind):
        x, y = sorted(pair)
        spec = TransformSpec(kind, k=0.8, a=2.0, r=0.1)
        fx, fy = apply_channelwise(np.array([x]), spec), \
            apply_channelwise(np.array([y]), spec)
        assert fx[0] <= fy[0]
        if kind != "none" and y > x * (1.0 + 1e-9):
            assert fx[0] < fy[0]


class TestPiecewise:
    def test_continuity_and_slope_at_breakpoint(self):
        k, lam0, x0 = 1.3, 0.02, 0.05
        coeffs = piecewise_coefficients(k, lam0, x0)
        left = simple_transform(lam0, k)
        right = coeffs.a2 * lam0 ** 2 + coeffs.a1 * lam0 + coeffs.a0
        assert right == pytest.approx(left, rel=1e-12)
        slope_right = 2 * coeffs.a2 * lam0 + coeffs.a1
        assert slope_right == pytest.approx(simple_transform_deriv(lam0, k),
                                            rel=1e-12)

    def test_peak_at_x0(self):
        coeffs = piecewise_coefficients(1.3, 0.02, 0.05)
        assert -coeffs.a1 / (2 * coeffs.a2) == pytest.approx(0.05)
        assert coeffs.a2 < 0

    def test_decreasing_past_peak(self):
        spec = TransformSpec("piecewise", k=1.3, lambda0=0.02, x0=0.05)
        vals = apply_channelwise(np.array([0.05, 0.1, 0.5]), spec)
        assert vals[0] > vals[1] > vals[2]

    def test_rejects_bad_breakpoints(self):
        with pytest.raises(TransformConfigError):
            piecewise_coefficients(1.3, 0.05, 0.02)
        with pytest.raises(TransformConfigError):
            TransformSpec("piecewise", lambda0=0.05, x0=0.05)


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(TransformConfigError):
            TransformSpec("fourier")

    def test_nonpositive_k(self):
        with pytest.raises(TransformConfigError):
            TransformSpec("simple", k=0.0)

    def test_log_slope(self):
        with pytest.raises(TransformConfigError):
            TransformSpec("log", a=-1.0)

    def test_negative_offset(self):
        with pytest.raises(TransformConfigError):
            TransformSpec("offset", r=-0.5)


class TestApplyChannelwise:
    def test_none_copies(self):
        x = np.array([[1.0, -2.0]])
        out = apply_channelwise(x, TransformSpec("none"))
        assert np.array_equal(out, x)
        assert out is not x

    def test_negative_channel_named(self):
        x = np.array([[0.1, 0.2, -0.3], [0.1, 0.2, 0.3]])
        with pytest.raises(TransformDomainError, match="channel 2"):
            apply_channelwise(x, TransformSpec("simple"))

    def test_extended_accepts_signed(self):
        out = apply_channelwise(np.array([-0.5, 0.5]), TransformSpec("extended"))
        assert out[0] == -out[1]

    def test_matrix_shape_preserved(self):
        x = np.full((4, 7), 0.3)
        assert apply_channelwise(x, TransformSpec("simple")).shape == (4, 7)


# Dense-grid oracle for the curvature sign change, independent of the
# bisection implementation: sign of phi'' from second differences of phi
# itself on a fine grid.
def _grid_sign_change(k, lo=1e-4, hi=5.0, n=200_000):
    xs = np.linspace(lo, hi, n)
    ys = 1.0 / np.log(1.0 / xs + 1.0) ** k
    curv = np.diff(ys, 2)
    signs = np.sign(curv)
    flips = np.flatnonzero(np.diff(signs) != 0)
    if flips.size == 0:
        return None
    return float(xs[flips[0] + 1])


class TestInflectionThreshold:
    def test_reference_k(self):
        # The concave/convex switch of phi_1.3 sits at ~0.344.
        t = inflection_threshold(1.3)
        assert t == pytest.approx(0.344, abs=1e-3)
        assert t == pytest.approx(0.34437322602934795, abs=2e-6)

    def test_matches_grid_scan(self):
        for k in (1.2, 1.3, 2.0, 3.0):
            t = inflection_threshold(k)
            t_grid = _grid_sign_change(k)
            assert t_grid is not None
            assert t == pytest.approx(t_grid, abs=1e-3)

    def test_sign_pattern_around_threshold(self):
        t = inflection_threshold(1.3)
        assert second_derivative(t * 0.9, 1.3) * second_derivative(t * 1.1, 1.3) < 0

    def test_no_inflection_for_k_at_most_one(self):
        # phi_k is concave throughout for k <= 1: the grid oracle finds no
        # sign flip, and bisection correctly reports failure.
        assert _grid_sign_change(1.0) is None
        with pytest.raises(ArithmeticError):
            inflection_threshold(1.0)

    def test_threshold_shrinks_with_k(self):
        # Larger k sharpens the transform, moving the concave region inward.
        ts = [inflection_threshold(k) for k in (1.2, 1.5, 2.0, 3.0)]
        assert ts == sorted(ts, reverse=True)

    def test_k_range_enforced(self):
        with pytest.raises(TransformConfigError):
            inflection_threshold(0.01)
        with pytest.raises(TransformConfigError):
            inflection_threshold(11.0)

    def test_default_k_constant(self):
        assert DEFAULT_K == 1.3
