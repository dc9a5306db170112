import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhkernel.kernels import (
    GeometricPmf,
    WrpConfig,
    generalized_binomial,
    manifold_hilbert_kernel,
    same_cell_probability,
    wrp_kernel_closed_form,
    wrp_kernel_series,
    wrp_series_partial_sums,
    wrp_weight,
    wrp_weight_table,
)

CFG_HALF = WrpConfig(2, -2.0, GeometricPmf(0.5))  # pmf(h) = 2^-(h+1)
CFG_DEFAULT = WrpConfig(2, -2.0)


class TestManifoldHilbertKernel:
    def test_singular_at_coincidence(self):
        assert manifold_hilbert_kernel(0.0, 3) == math.inf

    def test_direct_powers(self):
        assert manifold_hilbert_kernel(math.pi, 2) == pytest.approx(math.pi**-2, rel=1e-15)
        assert manifold_hilbert_kernel(0.5, 3) == 8.0

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            manifold_hilbert_kernel(-0.1, 2)

    def test_never_negative_never_nan(self):
        for dist in np.linspace(0.0, math.pi, 100):
            value = manifold_hilbert_kernel(float(dist), 4)
            assert value >= 0.0 and not math.isnan(value)


class TestGeneralizedBinomial:
    def test_empty_product(self):
        assert generalized_binomial(-3.7, 0) == 1.0

    def test_q_minus_one_alternates(self):
        # oracle: direct product evaluation of (1/h!) prod (q - j)
        for h in range(6):
            product = 1.0
            for j in range(h):
                product *= (-1.0 - j) / (j + 1)
            assert generalized_binomial(-1.0, h) == product == (-1.0) ** h

    def test_minus_two_choose_three(self):
        # (-2)(-3)(-4) / 3! = -4
        assert generalized_binomial(-2.0, 3) == -4.0

    def test_negative_h_rejected(self):
        with pytest.raises(ValueError):
            generalized_binomial(-1.0, -1)


class TestWrpWeight:
    def test_geometric_half_h0(self):
        # pi^q * pmf(0)^-1 * 1 = pi^-2 * 2
        assert wrp_weight(CFG_HALF, 0) == pytest.approx(2.0 / math.pi**2, rel=1e-14)

    def test_geometric_half_h1(self):
        # (-1)^1 binom(-2, 1) = 2, pmf(1)^-1 = 4
        assert wrp_weight(CFG_HALF, 1) == pytest.approx(8.0 / math.pi**2, rel=1e-14)

    @pytest.mark.parametrize("q", [-0.5, -1.0, -2.0, -5.0])
    def test_positive_for_all_h(self, q):
        cfg = WrpConfig(2, q)
        for h in range(51):
            assert wrp_weight(cfg, h) > 0.0

    def test_table_matches_scalar(self):
        table = wrp_weight_table(CFG_HALF, 20)
        for h in range(21):
            assert table[h] == pytest.approx(wrp_weight(CFG_HALF, h), rel=1e-12)


class TestGeometricPmf:
    def test_ratio_bounds(self):
        with pytest.raises(ValueError):
            GeometricPmf(0.0)
        with pytest.raises(ValueError):
            GeometricPmf(1.0)

    def test_sums_to_one_and_positive(self):
        pmf = GeometricPmf(0.9)
        masses = pmf.pmf(np.arange(4000))
        assert np.all(masses > 0.0)
        assert masses.sum() == pytest.approx(1.0, abs=1e-12)

    def test_mean(self):
        assert GeometricPmf(0.5).mean == 1.0


class TestClosedForm:
    def test_singular_at_zero(self):
        assert wrp_kernel_closed_form(0.0, CFG_HALF) == math.inf

    def test_at_pi(self):
        assert wrp_kernel_closed_form(math.pi, CFG_HALF) == math.pi**-2.0

    def test_at_half_pi(self):
        assert wrp_kernel_closed_form(math.pi / 2, CFG_HALF) == pytest.approx(
            4.0 / math.pi**2, rel=1e-14
        )

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            wrp_kernel_closed_form(-0.1, CFG_HALF)
        with pytest.raises(ValueError):
            wrp_kernel_closed_form(math.pi + 0.1, CFG_HALF)

    def test_quarter_pi_q_minus_one(self):
        assert wrp_kernel_closed_form(math.pi / 4, WrpConfig(2, -1.0)) == pytest.approx(
            4.0 / math.pi, rel=1e-14
        )

    def test_symmetry_inherited_from_distance(self):
        # kernels are functions of the distance alone, so symmetry holds
        # whenever the distance is symmetric; assert the composition
        from mhkernel.geometry import SpherePoint, geodesic_distance
        from mhkernel.rng import RngStream

        gen = RngStream(88).generator()
        for _ in range(50):
            a, b = gen.standard_normal((2, 3))
            x = SpherePoint(a / np.linalg.norm(a))
            z = SpherePoint(b / np.linalg.norm(b))
            assert manifold_hilbert_kernel(
                geodesic_distance(x, z), 2
            ) == manifold_hilbert_kernel(geodesic_distance(z, x), 2)

    @pytest.mark.parametrize("d", [1, 2, 3, 4])
    def test_q_equals_minus_d_matches_hilbert_bitwise(self, d):
        cfg = WrpConfig(d, float(-d))
        for angle in np.linspace(0.05, math.pi, 40):
            assert wrp_kernel_closed_form(float(angle), cfg) == manifold_hilbert_kernel(
                float(angle), d
            )


class TestSeries:
    def test_exact_at_pi_with_zero_terms(self):
        value, truncated = wrp_kernel_series(math.pi, CFG_HALF, h_max=0)
        assert value == math.pi**-2.0
        assert not truncated

    def test_half_pi_geometric_derivative_oracle(self):
        # independent oracle: pi^-2 * sum (h+1) (1/2)^h, and the analytic
        # value of that sum is 4
        oracle = math.pi**-2 * math.fsum((h + 1) * 0.5**h for h in range(200))
        assert oracle == pytest.approx(4.0 / math.pi**2, rel=1e-12)
        value, truncated = wrp_kernel_series(math.pi / 2, CFG_HALF, h_max=200)
        assert value == pytest.approx(oracle, rel=1e-12)
        assert abs(value - 4.0 / math.pi**2) <= 1e-8
        assert not truncated

    def test_quarter_pi_converges_to_closed_form(self):
        closed = wrp_kernel_closed_form(math.pi / 4, CFG_HALF)
        errors = [
            abs(wrp_kernel_series(math.pi / 4, CFG_HALF, h_max=h).value - closed)
            for h in (5, 10, 20, 40, 80)
        ]
        assert all(a > b for a, b in zip(errors, errors[1:]))
        assert abs(wrp_kernel_series(math.pi / 4, CFG_HALF, h_max=400).value - closed) <= 1e-10

    def test_zero_angle_rejected(self):
        with pytest.raises(ValueError):
            wrp_kernel_series(0.0, CFG_HALF)

    def test_truncation_flag(self):
        assert wrp_kernel_series(0.05 * math.pi, CFG_HALF, h_max=5).truncated
        assert not wrp_kernel_series(math.pi / 2, CFG_HALF, h_max=400).truncated

    @pytest.mark.parametrize("q", [-1.0, -2.0, -3.0])
    def test_identity_on_angle_grid(self, q):
        cfg = WrpConfig(2, q)
        for angle in np.linspace(0.1 * math.pi, math.pi, 20):
            closed = wrp_kernel_closed_form(float(angle), cfg)
            err = abs(wrp_kernel_series(float(angle), cfg, h_max=400).value - closed)
            assert err <= 1e-8 * max(1.0, closed)

    def test_partial_sums_monotone_and_bounded(self):
        for phi in (0.25, 0.5, 0.75, 1.0):
            angle = phi * math.pi
            sums = wrp_series_partial_sums(angle, CFG_DEFAULT, 400)
            assert np.all(np.diff(sums) >= 0.0)
            closed = wrp_kernel_closed_form(angle, CFG_DEFAULT)
            assert sums[-1] <= closed * (1.0 + 1e-12)
            assert closed - sums[-1] < 1e-8


class TestSameCellProbability:
    def test_trivial_partition(self):
        for angle in (0.0, 1.0, math.pi):
            assert same_cell_probability(angle, 0) == 1.0

    def test_coincident_points(self):
        for h in (0, 1, 5):
            assert same_cell_probability(0.0, h) == 1.0

    def test_half_pi_three_planes(self):
        assert same_cell_probability(math.pi / 2, 3) == 0.125

    def test_validation(self):
        with pytest.raises(ValueError):
            same_cell_probability(-0.1, 1)
        with pytest.raises(ValueError):
            same_cell_probability(0.1, -1)


class TestConfigValidation:
    def test_q_must_be_negative(self):
        with pytest.raises(ValueError):
            WrpConfig(2, 0.0)
        with pytest.raises(ValueError):
            WrpConfig(2, 1.5)

    def test_dim_positive(self):
        with pytest.raises(ValueError):
            WrpConfig(0, -1.0)


@settings(max_examples=200, derandomize=True)
@given(
    q=st.floats(min_value=-6.0, max_value=-0.1),
    h=st.integers(min_value=0, max_value=200),
    ratio=st.floats(min_value=0.05, max_value=0.95),
)
def test_weight_positive_property(q, h, ratio):
    value = wrp_weight(WrpConfig(2, q, GeometricPmf(ratio)), h)
    assert value > 0.0 and math.isfinite(value)


@settings(max_examples=100, derandomize=True)
@given(
    q=st.floats(min_value=-4.0, max_value=-0.1),
    phi=st.floats(min_value=0.05, max_value=1.0),
)
def test_series_monotone_property(q, phi):
    sums = wrp_series_partial_sums(phi * math.pi, WrpConfig(2, q), 150)
    assert np.all(np.diff(sums) >= 0.0)
    assert np.all(sums >= 0.0) and not np.any(np.isnan(sums))
