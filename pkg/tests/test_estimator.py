import numpy as np
import pytest
from hypothesis import given, seed, settings

from conftest import RHO_34, SIGMA_X, SIGMA_Z, XI_PLUS, dims, random_instance, seeds
from densitygeom.core.algebra import HermitianMatrix, hs_inner, principal_sqrt, unitary_evolve
from densitygeom.core.ensembles import random_hermitian, random_pure
from densitygeom.core.errors import (
    InvalidInputError,
    InvalidOrderError,
    RankDeficientError,
    ZeroVelocityError,
)
from densitygeom.estimation.curve import acceleration_curvature, bhattacharyya_directions
from densitygeom.estimation.estimator import (
    EstimatorT,
    gradient_t,
    make_locally_unbiased,
    perturb_estimator,
    shift_estimator,
    time_estimate,
)


class TestSaturatingEstimator:

    @seed(20240601)
    @settings(max_examples=60, deadline=None)
    @given(seed_=seeds, dim=dims)
    def test_unbiased_and_saturating(self, seed_, dim):
        xi, h = random_instance(dim, seed_)
        est = make_locally_unbiased(xi, h)
        assert est.unbiasedness(xi, h) == pytest.approx(1.0, abs=1e-9)
        d1 = -1j * (h.data @ xi.data - xi.data @ h.data)
        v = hs_inner(d1, d1)
        # ∇t = ξ'/tr(ξ'ξ')
        np.testing.assert_allclose(gradient_t(xi, est.matrix).data, d1 / v, atol=1e-9 * max(1.0, 1 / v))

    def test_pure_example(self):
        est = make_locally_unbiased(XI_PLUS, SIGMA_Z)
        t = est.matrix.data
        var_t = np.trace(t @ t @ XI_PLUS).real - np.trace(t @ XI_PLUS).real ** 2
        assert var_t == pytest.approx(0.25, abs=1e-12)

    def test_reference_time_shifts_matrix(self):
        base = make_locally_unbiased(XI_PLUS, SIGMA_Z)
        moved = make_locally_unbiased(XI_PLUS, SIGMA_Z, reference_time=2.5)
        np.testing.assert_allclose(moved.matrix.data - base.matrix.data, 2.5 * np.eye(2), atol=1e-14)
        np.testing.assert_allclose(moved.shifted(), base.shifted(), atol=1e-14)

    def test_commuting_hamiltonian(self):
        with pytest.raises(ZeroVelocityError):
            make_locally_unbiased(principal_sqrt(RHO_34), SIGMA_Z)

    def test_singular_lyapunov_pair(self):
        # λ = ±1/√2: λ_0 + λ_1 = 0 при ненулевой ξ'_01
        xi = np.diag([1.0, -1.0]) / np.sqrt(2)
        with pytest.raises(RankDeficientError):
            make_locally_unbiased(xi, SIGMA_X)

    def test_pure_state_kernel_block(self, rng):
        xi = random_pure(4, rng).sqrt_state()
        h = random_hermitian(4, rng)
        est = make_locally_unbiased(xi, h)
        assert est.is_locally_unbiased(xi, h)


class TestPerturbation:

    def test_perturbed_estimator_stays_unbiased(self, rng):
        xi, h = random_instance(3, 5)
        est = make_locally_unbiased(xi, h)
        for _ in range(5):
            moved = perturb_estimator(xi, h, est, rng, scale=3.0)
            assert moved.is_locally_unbiased(xi, h)
            assert not np.allclose(moved.matrix.data, est.matrix.data)

    def test_scale_must_be_positive(self, rng):
        xi, h = random_instance(2, 5)
        with pytest.raises(InvalidInputError):
            perturb_estimator(xi, h, make_locally_unbiased(xi, h), rng, scale=0.0)

    def test_shift(self):
        est = EstimatorT(HermitianMatrix(SIGMA_Z), reference_time=1.0)
        moved = shift_estimator(est, SIGMA_X, weight=0.5)
        np.testing.assert_allclose(moved.matrix.data, SIGMA_Z + 0.5 * SIGMA_X)
        assert moved.reference_time == 1.0


class TestTimeField:

    def test_time_estimate_is_scale_invariant(self, rng):
        xi, _ = random_instance(3, 17)
        t = random_hermitian(3, rng)
        assert time_estimate(3.0 * xi.data, t) == pytest.approx(time_estimate(xi, t), rel=1e-12)

    def test_gradient_is_tangent(self, rng):
        xi, _ = random_instance(3, 17)
        g = gradient_t(xi, random_hermitian(3, rng))
        assert hs_inner(g, xi) == pytest.approx(0.0, abs=1e-12)


class TestCurve:

    def test_qubit_third_order_is_dependent(self):
        xi, h = random_instance(2, 3)
        directions = bhattacharyya_directions(xi, h, 3)
        assert directions.orders == [1, 2]
        assert directions.dropped == [3]
        assert directions.beta_overlap() is None

    @pytest.mark.parametrize("seed_", [1, 2, 3])
    def test_qutrit_has_three_directions(self, seed_):
        xi, h = random_instance(3, seed_)
        directions = bhattacharyya_directions(xi, h, 3)
        assert directions.orders == [1, 2, 3]
        assert directions.max_overlap() < 1e-10
        for e in directions.directions:
            assert hs_inner(e, e) == pytest.approx(1.0, abs=1e-12)
            assert abs(hs_inner(e, xi)) < 1e-10
        overlap = directions.beta_overlap()
        assert overlap is not None and -1.0 - 1e-12 <= overlap <= 1.0 + 1e-12

    def test_invalid_order(self):
        with pytest.raises(InvalidOrderError):
            bhattacharyya_directions(XI_PLUS, SIGMA_Z, 4)

    def test_curvature_is_tangent_and_nonnegative(self):
        xi, h = random_instance(4, 8)
        alpha, gamma2 = acceleration_curvature(xi, h)
        assert gamma2 >= 0
        assert hs_inner(alpha, xi) == pytest.approx(0.0, abs=1e-12)

    def test_pure_qubit_curvature(self):
        # ξ' = σy, ξ'' = −2σx, α = I − σx
        alpha, gamma2 = acceleration_curvature(XI_PLUS, SIGMA_Z)
        np.testing.assert_allclose(alpha.data, np.eye(2) - SIGMA_X, atol=1e-14)
        assert gamma2 == pytest.approx(32.0)

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_curvature_invariant_along_curve(self, dim):
        xi, h = random_instance(dim, 40 + dim)
        _, gamma0 = acceleration_curvature(xi, h)
        for t in (0.2, -0.9, 2.5, 11.0):
            _, gamma_t = acceleration_curvature(unitary_evolve(xi, h, t), h)
            assert gamma_t == pytest.approx(gamma0, rel=1e-9, abs=1e-12)
