import logging

import numpy as np
import pytest
from hypothesis import given, seed, settings

from conftest import SIGMA_X, SIGMA_Z, XI_PLUS, dims, random_instance, seeds
from densitygeom.core.algebra import HermitianMatrix, SqrtState
from densitygeom.core.ensembles import random_unitary
from densitygeom.core.errors import InvalidInputError, TheoremViolationError
from densitygeom.estimation import bounds
from densitygeom.estimation.bounds import BoundReport, bound_report, second_moments, verify_report
from densitygeom.estimation.estimator import EstimatorT, make_locally_unbiased, perturb_estimator

CHECKS = ("crb", "luo", "dual", "symmetric", "third_order", "var_T_ge_delta_T2")


def assert_all_hold(report: BoundReport, slack: float = 1e-9):
    for name, lhs, rhs in report.checks():
        assert lhs >= rhs - slack * max(1.0, abs(rhs)), name


class TestTheorems:

    @seed(20240601)
    @settings(max_examples=100, deadline=None)
    @given(seed_=seeds, dim=dims)
    def test_saturating_estimator(self, seed_, dim):
        xi, h = random_instance(dim, seed_)
        report = bound_report(xi, h, make_locally_unbiased(xi, h))
        assert_all_hold(report)
        # оценка Ляпунова насыщает неравенство Крамера-Рао
        assert report.crb_lhs == pytest.approx(report.crb_rhs, rel=1e-8)
        # I_ρ(H) считается через главный корень ξ² независимо от δH²
        assert abs(report.decomposition_residual) <= 1e-9
        assert report.velocity_sq == pytest.approx(2 * report.skew_I, rel=1e-7)

    @seed(20240602)
    @settings(max_examples=100, deadline=None)
    @given(seed_=seeds, dim=dims)
    def test_perturbed_estimator(self, seed_, dim):
        xi, h = random_instance(dim, seed_)
        est = perturb_estimator(xi, h, make_locally_unbiased(xi, h), np.random.default_rng(seed_))
        report = bound_report(xi, h, est)
        assert_all_hold(report)
        assert report.crb_lhs >= report.crb_rhs
        assert report.delta_T2 >= -1e-12

    def test_symmetric_is_average_of_crb_and_dual(self):
        xi, h = random_instance(3, 41)
        est = perturb_estimator(xi, h, make_locally_unbiased(xi, h), np.random.default_rng(41))
        r = bound_report(xi, h, est)
        crb = (r.var_T + r.delta_T2) * (r.var_H - r.delta_H2)
        lhs, rhs = r.symmetric_lhs_rhs
        assert lhs - rhs == pytest.approx(0.5 * (crb - 0.25) + 0.5 * (r.dual_lhs - 0.25), abs=1e-12)

    def test_unitary_covariance(self):
        xi, h = random_instance(3, 7)
        est = perturb_estimator(xi, h, make_locally_unbiased(xi, h), np.random.default_rng(7))
        u = random_unitary(3, np.random.default_rng(8))
        ud = u.conj().T
        moved = bound_report(
            SqrtState(u @ xi.data @ ud),
            HermitianMatrix(u @ h.data @ ud),
            EstimatorT(HermitianMatrix(u @ est.matrix.data @ ud)),
        )
        ref = bound_report(xi, h, est)
        for key in ("var_T", "delta_T2", "var_H", "delta_H2", "velocity_sq", "curvature_gamma2", "third_order_rhs"):
            assert getattr(moved, key) == pytest.approx(getattr(ref, key), rel=1e-8, abs=1e-12), key

    def test_constant_shift_of_estimator(self):
        xi, h = random_instance(2, 13)
        est = make_locally_unbiased(xi, h)
        moved = EstimatorT(HermitianMatrix(est.matrix.data + 3.0 * np.eye(2)), reference_time=3.0)
        a, b = bound_report(xi, h, est), bound_report(xi, h, moved)
        assert b.mean_T == pytest.approx(a.mean_T + 3.0)
        assert b.var_T == pytest.approx(a.var_T, rel=1e-10)


class TestPureExample:

    def test_pure_qubit(self):
        report = bound_report(XI_PLUS, SIGMA_Z, make_locally_unbiased(XI_PLUS, SIGMA_Z))
        assert report.velocity_sq == pytest.approx(2.0)
        assert report.luo_rhs == pytest.approx(1 / 8)
        assert report.crb_rhs == pytest.approx(1 / 4)
        assert report.var_T == pytest.approx(0.25, abs=1e-12)
        assert report.delta_T2 == pytest.approx(0.0, abs=1e-12)
        assert report.uncertainty_product == pytest.approx(0.25, abs=1e-12)
        assert report.skew_I == pytest.approx(1.0)
        assert report.curvature_gamma2 == pytest.approx(32.0)

    def test_report_dict(self):
        doc = bound_report(XI_PLUS, SIGMA_Z, make_locally_unbiased(XI_PLUS, SIGMA_Z)).to_dict()
        assert isinstance(doc["symmetric_lhs_rhs"], list)
        assert {"var_T", "crb_rhs", "luo_rhs", "third_order_rhs", "crb_skew_rhs", "dual_lhs"} <= doc.keys()

    def test_check_names(self):
        report = bound_report(XI_PLUS, SIGMA_Z, make_locally_unbiased(XI_PLUS, SIGMA_Z))
        assert tuple(name for name, _, _ in report.checks()) == CHECKS


class TestFailures:

    def test_biased_estimator_rejected(self):
        est = EstimatorT(HermitianMatrix(np.zeros((2, 2))))
        with pytest.raises(InvalidInputError, match="not locally unbiased"):
            bound_report(XI_PLUS, SIGMA_Z, est)

    def test_violation_is_audited(self, monkeypatch, caplog):
        monkeypatch.setattr(bounds, "odd_projection_terms", lambda xi, h, est: (100.0, 0.0))
        xi, h = random_instance(3, 2)
        caplog.set_level(logging.CRITICAL, logger="DensityGeomAudit")
        with pytest.raises(TheoremViolationError) as info:
            bound_report(xi, h, make_locally_unbiased(xi, h))
        assert info.value.dump["violated"] == ["third_order"]
        assert info.value.dump["xi"]["dim"] == 3
        assert any(r.name == "DensityGeomAudit" and r.levelno == logging.CRITICAL for r in caplog.records)

    def test_verify_report_flags_negative_delta(self):
        report = BoundReport(
            var_T=1.0, delta_T2=-0.5, var_H=1.0, delta_H2=0.0, skew_I=1.0, velocity_sq=2.0,
            crb_rhs=0.25, luo_rhs=0.125, symmetric_lhs_rhs=(1.0, 0.25), curvature_gamma2=0.0,
            third_order_rhs=0.25, dual_lhs=1.5,
        )
        assert verify_report(report, xi_positive=True) == ["delta_T2_nonnegative"]
        assert verify_report(report, xi_positive=False) == []

    def test_gap_unknown_name(self):
        report = bound_report(XI_PLUS, SIGMA_Z, make_locally_unbiased(XI_PLUS, SIGMA_Z))
        assert report.gap("crb") == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(KeyError):
            report.gap("nope")


def test_second_moments_of_identity_are_zero():
    xi, _ = random_instance(3, 4)
    mean, var, delta = second_moments(xi, 2.0 * np.eye(3))
    assert mean == pytest.approx(2.0)
    assert var == pytest.approx(0.0, abs=1e-12)
    assert delta == pytest.approx(0.0, abs=1e-12)


class TestSkewInformationInReport:

    def test_non_positive_root_uses_principal_root(self):
        xi = SqrtState(np.diag([np.sqrt(0.9), -np.sqrt(0.1)]))
        report = bound_report(xi, SIGMA_X, make_locally_unbiased(xi, SIGMA_X))
        # ρ = diag(0.9, 0.1): I_ρ(σx) = 1 − 2·0.3; δH² по ξ отрицательно
        assert report.skew_I == pytest.approx(0.4, abs=1e-12)
        assert report.delta_H2 == pytest.approx(-0.6, abs=1e-12)
        assert report.crb_skew_rhs == pytest.approx(1 / 1.6)
        assert report.decomposition_residual is None

    def test_decomposition_mismatch_is_flagged(self, monkeypatch, caplog):
        real = bounds.skew_information
        monkeypatch.setattr(bounds, "skew_information", lambda rho, h: real(rho, h) + 0.1)
        xi, h = random_instance(3, 5)
        caplog.set_level(logging.CRITICAL, logger="DensityGeomAudit")
        with pytest.raises(TheoremViolationError) as info:
            bound_report(xi, h, make_locally_unbiased(xi, h))
        assert "variance_decomposition" in info.value.dump["violated"]

    def test_decomposition_not_checked_for_non_positive_root(self):
        report = BoundReport(
            var_T=1.0, delta_T2=0.0, var_H=1.0, delta_H2=0.0, skew_I=0.2, velocity_sq=2.0,
            crb_rhs=0.25, luo_rhs=0.125, symmetric_lhs_rhs=(1.0, 0.25), curvature_gamma2=0.0,
            third_order_rhs=0.25, dual_lhs=1.0, decomposition_residual=0.8,
        )
        assert verify_report(report, xi_positive=False) == []
        assert verify_report(report, xi_positive=True) == ["variance_decomposition"]

    @pytest.mark.parametrize("dim", [2, 3, 4])
    def test_skew_information_is_half_velocity(self, dim):
        xi, h = random_instance(dim, 70 + dim)
        report = bound_report(xi, h, make_locally_unbiased(xi, h))
        scale = max(1.0, np.trace(h.data @ h.data).real)
        assert report.skew_I == pytest.approx(report.velocity_sq / 2, abs=1e-9 * scale)
        assert report.crb_skew_rhs == pytest.approx(report.crb_rhs, rel=1e-6)
