"""Determinant machinery: discretization, z-families, contour
derivatives, error control, and the resolvent blow-up solver."""

import math

import numpy as np
import pytest

from rmtdist.errors import (
    IllConditionedRadiusWarning,
    NoConvergenceError,
    NumericalFailureError,
)
from rmtdist.fredholm import (
    DiscretizedOperator,
    ValueWithError,
    blowup_point,
    det_at,
    det_family,
    discretize,
    dz_derivative,
    dzdet,
    partial_z_family,
    spectral_radius,
    with_error_control,
)
from rmtdist.kernels import airy_kernel, bessel_kernel, sine_kernel, v_airy_kernel
from rmtdist.quadrature import Interval, clenshaw_curtis

AIRY_TAIL = Interval(-2.0, np.inf)

# reference determinant ladder of the soft-edge kernel at -2, frozen
# once the quadrature selection was locked; these four numbers pin the
# discretization end to end
FROZEN_PROFILE = {
    8: 0.410017118327672,
    16: 0.413223405423308,
    32: 0.413224142863929,
    64: 0.413224142505122,
}
SOFT_EDGE_AT_M2 = 0.4132241425051225546881


def airy_det(m, z=1.0):
    return det_at(discretize(airy_kernel(), AIRY_TAIL, m), z)


class TestDiscretize:
    def test_matrix_is_weighted_kernel(self):
        iv = Interval(0.0, 1.0)
        kern = sine_kernel()
        a = discretize(kern, iv, 6)
        rule = clenshaw_curtis(iv, 6)
        sqw = np.sqrt(rule.weights)
        manual = kern.eval(rule.nodes[:, None], rule.nodes[None, :]) * np.outer(
            sqw, sqw
        )
        assert np.max(np.abs(a.matrix - manual)) <= 1e-15

    def test_symmetric_single_block(self):
        a = discretize(sine_kernel(), Interval(0.0, 1.0), 12)
        assert a.symmetric
        assert np.array_equal(a.matrix, a.matrix.T)

    def test_block_layout_and_column_slice(self):
        kern = sine_kernel()
        ivs = [Interval(0.0, 1.0), Interval(2.0, 3.0)]
        a = discretize([[kern, kern], [kern, kern]], ivs, 10)
        assert not a.symmetric
        assert a.size == 20
        assert len(a.block_layout) == 2
        assert a.column_slice(1) == slice(10, 20)
        assert a.block_layout[0][0] == ivs[0]

    def test_matrix_is_readonly(self):
        a = discretize(sine_kernel(), Interval(0.0, 1.0), 5)
        with pytest.raises(ValueError):
            a.matrix[0, 0] = 2.0

    def test_singular_kernel_selects_matched_rule(self):
        a = discretize(bessel_kernel(0.5), Interval(0.0, 6.0), 16)
        rule = a.block_layout[0][1]
        plain = clenshaw_curtis(Interval(0.0, 6.0), 16)
        assert rule.nodes[0] > 0.0
        assert np.all(rule.weights > 0.0)
        assert np.max(np.abs(rule.nodes - plain.nodes)) > 1e-3

    def test_rejects_mismatched_blocks(self):
        kern = sine_kernel()
        with pytest.raises(ValueError):
            discretize([[kern, kern]], [Interval(0.0, 1.0)], 8)
        with pytest.raises(ValueError):
            discretize([[kern, "kernel"]], [Interval(0.0, 1.0), Interval(2.0, 3.0)], 8)
        with pytest.raises(ValueError):
            discretize(kern, [], 8)


class TestDetAt:
    def test_z_zero_is_one(self):
        rng = np.random.default_rng(1)
        assert det_at(rng.standard_normal((7, 7)), 0.0) == 1.0

    def test_one_by_one(self):
        assert abs(det_at(np.array([[0.25]]), 2.0) - 0.5) <= 1e-15

    def test_two_by_two_hand_expansion(self):
        a = np.array([[0.3, -0.2], [0.5, 0.1]])
        trace, det = 0.4, 0.3 * 0.1 - (-0.2) * 0.5
        for z in (0.7, -1.3, 0.4 + 0.9j):
            expected = 1.0 - z * trace + z * z * det
            assert abs(det_at(a, z) - expected) <= 1e-14

    def test_matches_dense_determinant(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal((20, 20)) / 20.0
        for z in (1.0, -2.0, 0.5 + 1.5j, 3.0j):
            direct = np.linalg.det(np.eye(20, dtype=complex) - z * a)
            assert abs(det_at(a, z) - direct) <= 1e-12 * abs(direct)


class TestDetFamily:
    def test_zero_matrix_family_is_one(self):
        fam = det_family(np.zeros((5, 5)))
        for z in (0.0, 1.0, -3.5, 2.0j):
            assert fam(z) == 1.0

    def test_diagonal_matrix(self):
        d = np.array([0.5, -0.25, 0.125])
        fam = det_family(np.diag(d))
        for z in (1.0, -1.5, 0.3 + 0.4j):
            expected = np.prod(1.0 - z * d)
            assert abs(fam(z) - expected) <= 1e-14 * abs(expected)

    def test_matches_det_at_on_random_matrix(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((30, 30)) / 30.0
        fam = det_family(a)
        for z in rng.standard_normal(20) + 1j * rng.standard_normal(20):
            direct = det_at(a, z)
            assert abs(fam(z) - direct) <= 1e-12 * max(1.0, abs(direct))

    def test_symmetric_route_stores_eigenvalues(self):
        a = discretize(sine_kernel(), Interval(0.0, 1.0), 20)
        fam = det_family(a)
        assert fam.eigenvalues is not None
        for z in (1.0, -2.0, 1.5 + 0.5j):
            assert abs(fam(z) - det_at(a, z)) <= 1e-13

    def test_soft_edge_eigenvalues_inside_unit_interval(self):
        a = discretize(airy_kernel(), AIRY_TAIL, 64)
        lam = det_family(a).eigenvalues
        assert lam.max() < 1.0
        assert lam.min() > -1e-10

    def test_exactly_one_representation(self):
        with pytest.raises(ValueError):
            from rmtdist.fredholm import DeterminantFamily

            DeterminantFamily(prefactor=1.0)


class TestPartialZFamily:
    @staticmethod
    def union_operator(m=14):
        kern = sine_kernel()
        ivs = [Interval(0.0, 1.0), Interval(2.0, 3.0)]
        return discretize([[kern, kern], [kern, kern]], ivs, m)

    def test_all_columns_reduce_to_plain_family(self):
        a = self.union_operator()
        fam_all = partial_z_family(a, [0, 1])
        fam = det_family(a)
        for z in (0.0, 1.0, -0.7, 0.3 + 1.1j):
            assert abs(fam_all(z) - fam(z)) <= 1e-12 * max(1.0, abs(fam(z)))

    def test_matches_direct_scaled_determinant(self):
        a = self.union_operator()
        fam = partial_z_family(a, [1])
        rng = np.random.default_rng(4)
        cols = a.column_slice(1)
        for z in rng.standard_normal(10) + 1j * rng.standard_normal(10):
            scaled = np.array(a.matrix, dtype=complex)
            scaled[:, cols] *= z
            direct = np.linalg.det(np.eye(a.size, dtype=complex) - scaled)
            assert abs(fam(z) - direct) <= 1e-12 * max(1.0, abs(direct))

    def test_singular_fixed_block_raises(self):
        iv = Interval(0.0, 1.0)
        rule = clenshaw_curtis(iv, 4)
        kern = sine_kernel()
        layout = ((iv, rule, kern), (iv, rule, kern))
        matrix = np.zeros((8, 8))
        matrix[:4, :4] = np.eye(4)
        a = DiscretizedOperator(matrix=matrix, block_layout=layout, symmetric=False)
        with pytest.raises(NumericalFailureError):
            partial_z_family(a, [1])

    def test_rejects_bad_columns(self):
        a = self.union_operator(6)
        with pytest.raises(ValueError):
            partial_z_family(a, [])
        with pytest.raises(ValueError):
            partial_z_family(a, [2])


class TestUnionAssembly:
    def test_two_interval_union_matches_hand_assembly(self):
        kern = sine_kernel()
        ivs = [Interval(0.0, 1.0), Interval(2.0, 3.0)]
        m = 18
        a = discretize([[kern, kern], [kern, kern]], ivs, m)
        rules = [clenshaw_curtis(iv, m) for iv in ivs]
        nodes = np.concatenate([r.nodes for r in rules])
        sqw = np.sqrt(np.concatenate([r.weights for r in rules]))
        manual = kern.eval(nodes[:, None], nodes[None, :]) * np.outer(sqw, sqw)
        assert np.max(np.abs(a.matrix - manual)) <= 1e-15
        d_block = det_at(a, 1.0)
        d_manual = det_at(manual, 1.0)
        assert abs(d_block - d_manual) <= 1e-14

    def test_union_gap_probability_converges(self):
        kern = sine_kernel()
        ivs = [Interval(0.0, 1.0), Interval(2.0, 3.0)]

        def compute(m):
            return det_at(discretize([[kern, kern], [kern, kern]], ivs, m), 1.0)

        res = with_error_control(compute)
        assert res.err <= 5e-15
        assert 0.0 < res.value.real < 1.0
        assert abs(res.value.imag) == 0.0


class TestDzDerivative:
    def test_monomial_second_derivative(self):
        for radius in (0.1, 1.0):
            val = dz_derivative(lambda zs: zs**3, 1.0, 2, radius)
            assert abs(val - 6.0) <= 1e-12

    def test_exponential_fifth_derivative(self):
        val = dz_derivative(np.exp, 0.0, 5, 1.0)
        assert abs(val - 1.0) <= 1e-12

    def test_zeroth_order_is_mean_value(self):
        val = dz_derivative(np.exp, 0.3, 0, 0.5)
        assert abs(val - math.exp(0.3)) <= 1e-13

    def test_heavy_cancellation_warns(self):
        with pytest.warns(IllConditionedRadiusWarning):
            val = dz_derivative(lambda zs: np.ones_like(zs), 0.0, 1, 0.5)
        assert abs(val) <= 1e-13

    def test_rough_function_raises(self):
        rng = np.random.default_rng(5)

        def rough(zs):
            return rng.standard_normal(np.shape(zs)) + 0j

        with pytest.raises(NoConvergenceError):
            dz_derivative(rough, 0.0, 1, 1.0)

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            dz_derivative(np.exp, 0.0, -1, 1.0)
        with pytest.raises(ValueError):
            dz_derivative(np.exp, 0.0, 1, 0.0)


class TestWithErrorControl:
    def test_constant_certifies_at_first_doubling(self):
        res = with_error_control(lambda m: 0.7)
        assert res.value == 0.7
        assert res.err == 0.0
        assert res.m_used == 16

    def test_single_rung_reports_unknown_error(self):
        res = with_error_control(lambda m: 1.0, m_min=8, m_max=8)
        assert res.m_used == 8
        assert res.err == math.inf

    def test_ladder_stops_at_tolerance(self):
        res = with_error_control(lambda m: 2.0**-m, tol=1e-3)
        assert res.m_used == 32
        assert abs(res.err - (2.0**-16 - 2.0**-32)) <= 1e-18

    def test_m_max_returns_last_value_without_raising(self):
        res = with_error_control(lambda m: 1.0 / m, tol=0.0, m_max=64)
        assert res.m_used == 64
        assert abs(res.err - (1.0 / 32 - 1.0 / 64)) <= 1e-15

    def test_validates_ladder(self):
        with pytest.raises(ValueError):
            with_error_control(lambda m: 1.0, m_min=0)
        with pytest.raises(ValueError):
            with_error_control(lambda m: 1.0, m_min=16, m_max=8)
        with pytest.raises(ValueError):
            with_error_control(lambda m: 1.0, tol=-1.0)

    def test_error_estimate_must_be_nonnegative(self):
        with pytest.raises(ValueError):
            ValueWithError(value=1.0, err=-0.1)


class TestSoftEdgeProfile:
    def test_frozen_determinant_ladder(self):
        for m, ref in FROZEN_PROFILE.items():
            d = airy_det(m)
            assert abs(d.imag) == 0.0
            assert abs(d.real - ref) <= 5e-15

    def test_converged_value_matches_reference(self):
        assert abs(airy_det(64) - SOFT_EDGE_AT_M2) <= 4.5e-16

    def test_superlinear_error_decay(self):
        d64 = airy_det(64)
        digits = [
            -math.log10(abs(airy_det(m) - d64)) for m in (8, 16, 32)
        ]
        assert digits[1] >= 1.4 * digits[0]
        assert digits[2] >= 1.4 * digits[1]
        assert abs(airy_det(32) - d64) <= 1e-9

    def test_error_control_runs_to_m128(self):
        res = with_error_control(airy_det)
        assert res.m_used == 128
        assert res.err <= 5e-15
        assert abs(res.value - SOFT_EDGE_AT_M2) <= 5e-16


class TestDzdet:
    def test_soft_edge_gap_at_zero(self):
        res = dzdet(airy_kernel(), Interval(0.0, np.inf))
        assert abs(res.value - 0.969372828355262) <= 2e-15
        assert res.err <= 1e-13

    def test_rank_compressed_route_at_zero(self):
        res = dzdet(v_airy_kernel(), Interval(0.0, np.inf))
        assert abs(res.value - 0.831908066202953) <= 2e-15

    def test_hard_edge_first_derivative(self):
        targets = {-0.5: 0.86114217058328861, 0.5: 0.524976779218593}
        for alpha, ref in targets.items():
            res = dzdet(bessel_kernel(alpha), Interval(0.0, 6.0), k=1, z0=1.0)
            assert abs(res.value - ref) <= 5e-15
            assert res.err <= 1e-13

    def test_sqrt_of_det_derivative_identity(self):
        # -(sqrt D)'(1) must equal -D'(1) / (2 sqrt(D(1)))
        blocks, iv = airy_kernel(), AIRY_TAIL
        d0 = dzdet(blocks, iv).value
        d1 = dzdet(blocks, iv, k=1).value
        rs = dzdet(blocks, iv, k=1, transform="sqrt-of-det").value
        assert abs(rs - d1 / (2.0 * np.sqrt(d0))) <= 1e-10

    def test_det_of_sqrt_z_signs(self):
        a = discretize(airy_kernel(), AIRY_TAIL, 128)
        plus = dzdet(airy_kernel(), AIRY_TAIL, transform="det-of-sqrt-z")
        minus = dzdet(
            airy_kernel(), AIRY_TAIL, transform="det-of-sqrt-z", sqrt_sign=-1
        )
        assert abs(plus.value - det_at(a, 1.0)) <= 1e-12
        assert abs(minus.value - det_at(a, -1.0)) <= 1e-12

    def test_validates_arguments(self):
        with pytest.raises(ValueError):
            dzdet(airy_kernel(), AIRY_TAIL, transform="cube-root")
        with pytest.raises(ValueError):
            dzdet(airy_kernel(), AIRY_TAIL, k=-2)
        with pytest.raises(ValueError):
            dzdet(airy_kernel(), AIRY_TAIL, sqrt_sign=0.5)


class TestSpectralRadius:
    def test_grows_as_interval_extends_left(self):
        radii = [
            spectral_radius(discretize(airy_kernel(), Interval(s, 16.0), 96))
            for s in (2.0, 0.0, -2.0, -4.0)
        ]
        assert all(0.0 < r < 1.0 for r in radii)
        assert all(b > a for a, b in zip(radii, radii[1:]))

    def test_requires_symmetric_operator(self):
        with pytest.raises(ValueError):
            spectral_radius(np.eye(3))
        kern = sine_kernel()
        ivs = [Interval(0.0, 1.0), Interval(2.0, 3.0)]
        a = discretize([[kern, kern], [kern, kern]], ivs, 6)
        with pytest.raises(ValueError):
            spectral_radius(a)


class TestBlowupPoint:
    def test_first_table_value(self):
        res = blowup_point(1e-4)
        assert abs(res.value - (-5.40049302922392)) <= 5e-12
        assert res.err <= 1e-10

    def test_validates_epsilon(self):
        with pytest.raises(ValueError):
            blowup_point(0.0)
        with pytest.raises(ValueError):
            blowup_point(-1e-4)
