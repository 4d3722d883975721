import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kyfanreg.operators import (
    AutoconvGrid,
    SvdOperator,
    autoconv_apply,
    autoconv_derivative_adjoint_apply,
)
from kyfanreg.regularization import (
    LandweberFilter,
    NonConvergence,
    Tikhonov,
    Tsvd,
    filter_reconstruct,
    filter_value,
    landweber_nonlinear,
    operator_norm_squared,
    prox_gradient_solve,
    prox_weighted_lp,
    soft_threshold,
)

rng = np.random.default_rng(7)


class TestFilterValue:
    def test_tikhonov(self):
        assert filter_value(Tikhonov(1.0), 1.0) == pytest.approx(0.5)

    def test_tsvd_boundary_included(self):
        assert filter_value(Tsvd(0.25), 0.5) == 1.0
        assert filter_value(Tsvd(0.25), 0.499) == 0.0

    def test_landweber(self):
        assert filter_value(LandweberFilter(1, 1.0), 1.0) == pytest.approx(1.0)
        assert filter_value(LandweberFilter(3, 0.5), 1.0) == pytest.approx(1.0 - 0.5**3)

    def test_range(self):
        sigmas = np.logspace(-4, 0, 50)
        for kind in (Tikhonov(0.01), Tsvd(0.01), LandweberFilter(25, 1.0)):
            vals = filter_value(kind, sigmas)
            assert np.all(vals >= 0.0) and np.all(vals <= 1.0)


class TestFilterConditions:
    """Numerical verification of the two filter inequalities with beta = 1/2."""

    sigmas = np.logspace(-6, 0, 400)
    alphas = np.logspace(-8, 0, 25)

    def _condition1_slope(self, make_kind):
        sups = [np.max(filter_value(make_kind(a), self.sigmas) / self.sigmas) for a in self.alphas]
        return np.polyfit(np.log(self.alphas), np.log(sups), 1)[0]

    def _condition2_slope(self, make_kind, nu_star):
        sups = [
            np.max((1.0 - filter_value(make_kind(a), self.sigmas)) * self.sigmas**nu_star)
            for a in self.alphas
        ]
        return np.polyfit(np.log(self.alphas), np.log(sups), 1)[0]

    def test_tikhonov_condition1(self):
        assert self._condition1_slope(Tikhonov) == pytest.approx(-0.5, abs=0.02)

    def test_tsvd_condition1(self):
        assert self._condition1_slope(Tsvd) == pytest.approx(-0.5, abs=0.02)

    def test_tikhonov_condition2_qualification(self):
        # beta * nu_star = 0.5 * 2 = 1 for the Tikhonov qualification nu* = 2
        assert self._condition2_slope(Tikhonov, 2.0) == pytest.approx(1.0, abs=0.02)

    @pytest.mark.parametrize("nu_star", [1.0, 2.0, 4.0])
    def test_tsvd_condition2_any_order(self, nu_star):
        assert self._condition2_slope(Tsvd, nu_star) == pytest.approx(
            0.5 * nu_star, abs=0.02 * nu_star
        )


class TestFilterReconstruct:
    def test_full_filter_is_generalized_inverse(self):
        op = SvdOperator.diagonal([1.0, 0.5, 0.25])
        y = rng.standard_normal(3)
        got = filter_reconstruct(op, y, Tsvd(0.25**2 / 2.0))
        assert np.allclose(got, op.generalized_inverse_apply(y), atol=1e-14)

    def test_large_alpha_shrinks_to_zero(self):
        op = SvdOperator.diagonal([1.0, 0.5])
        y = rng.standard_normal(2)
        for alpha in (1e2, 1e4, 1e6):
            x = filter_reconstruct(op, y, Tikhonov(alpha))
            assert np.linalg.norm(x) <= np.linalg.norm(y) * op.singular_values[0] / alpha

    def test_hand_computed_tikhonov(self):
        op = SvdOperator.diagonal([1.0, 0.5])
        got = filter_reconstruct(op, [1.0, 1.0], Tikhonov(0.25))
        assert np.allclose(got, [0.8, 1.0], atol=1e-14)

    def test_linear_in_data(self):
        op = SvdOperator.from_matrix(rng.standard_normal((5, 4)))
        kind = Tikhonov(0.1)
        y1, y2 = rng.standard_normal(5), rng.standard_normal(5)
        lhs = filter_reconstruct(op, 2.0 * y1 - 3.0 * y2, kind)
        rhs = 2.0 * filter_reconstruct(op, y1, kind) - 3.0 * filter_reconstruct(op, y2, kind)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_landweber_contraction_checked(self):
        op = SvdOperator.diagonal([2.0])
        with pytest.raises(ValueError):
            filter_reconstruct(op, [1.0], LandweberFilter(5, 1.0))


class TestSoftThreshold:
    def test_examples(self):
        assert soft_threshold(0.0, 1.0) == 0.0
        assert soft_threshold(3.0, 1.0) == 2.0
        assert soft_threshold(-0.5, 1.0) == 0.0

    def test_vectorized(self):
        v = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
        assert np.allclose(soft_threshold(v, 1.0), [-1.0, 0.0, 0.0, 0.0, 1.0])

    def test_rejects_negative_threshold(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)


class TestProxWeightedLp:
    def test_p1_reduces_to_soft(self):
        for v in np.linspace(-3, 3, 13):
            for t in (0.0, 0.5, 2.0):
                assert prox_weighted_lp(v, t, 1.0) == pytest.approx(
                    soft_threshold(v, t), abs=1e-15
                )

    def test_p2_closed_form(self):
        assert prox_weighted_lp(1.0, 0.5, 2.0) == pytest.approx(0.5)

    @given(
        st.floats(min_value=-50.0, max_value=50.0),
        st.floats(min_value=0.0, max_value=10.0),
        st.floats(min_value=1.1, max_value=1.99),
    )
    @settings(max_examples=200, deadline=None)
    def test_defining_equation(self, v, t, p):
        x = prox_weighted_lp(v, t, p)
        residual = x + t * p * np.sign(x) * abs(x) ** (p - 1.0) - v
        assert abs(residual) <= 1e-12

    def test_underflowing_root_returns_soft_threshold_limit(self):
        # for p ~ 1 the root (|v|/(tp))^(1/(p-1)) can underflow doubles; the
        # best representable answer is 0 with residual |v|
        x = prox_weighted_lp(1e-4, 1.0, 1.0 + 1.0 / 85.0)
        assert x == 0.0

    def test_vector_inputs(self):
        v = rng.standard_normal(20) * 3.0
        t = np.abs(rng.standard_normal(20))
        x = prox_weighted_lp(v, t, 1.5)
        res = x + t * 1.5 * np.sign(x) * np.abs(x) ** 0.5 - v
        assert np.max(np.abs(res)) <= 1e-12

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            prox_weighted_lp(1.0, 0.1, 0.5)


class TestProxGradient:
    def test_matches_tikhonov_oracle(self):
        op = SvdOperator.diagonal(np.linspace(1.0, 0.2, 8))
        y = rng.standard_normal(8)
        alpha = 0.3
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=alpha, weights=None,
            p=2.0, step=0.9, x0=np.zeros(8), tol=1e-14, max_iter=50_000,
        )
        oracle = filter_reconstruct(op, y, Tikhonov(alpha))
        assert np.max(np.abs(report.solution - oracle)) < 1e-8

    def test_identity_operator_soft_threshold(self):
        op = SvdOperator.diagonal(np.ones(6))
        y = rng.standard_normal(6) * 2.0
        alpha = 0.8
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=alpha, weights=None,
            p=1.0, step=1.0, x0=np.zeros(6), tol=1e-14, max_iter=10_000,
        )
        assert np.allclose(report.solution, soft_threshold(y, alpha / 2.0), atol=1e-10)

    def test_huge_alpha_returns_zero(self):
        op = SvdOperator.diagonal([1.0, 0.5])
        y = np.array([1.0, 1.0])
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=1e6, weights=None,
            p=1.0, step=0.9, x0=np.zeros(2), tol=1e-13, max_iter=1000,
        )
        assert np.allclose(report.solution, 0.0)

    def test_objective_monotone_in_linear_case(self):
        op = SvdOperator.diagonal(np.linspace(1.0, 0.1, 10))
        y = rng.standard_normal(10)
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=0.2, weights=None,
            p=1.0, step=0.9, x0=rng.standard_normal(10), tol=1e-12, max_iter=20_000,
            record_objective=True,
        )
        trace = np.asarray(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_weighted_thresholds(self):
        op = SvdOperator.diagonal(np.ones(4))
        y = np.array([2.0, 2.0, 2.0, 2.0])
        w = np.array([1.0, 2.0, 4.0, 8.0])
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=0.5, weights=w,
            p=1.0, step=1.0, x0=np.zeros(4), tol=1e-14, max_iter=5000,
        )
        assert np.allclose(report.solution, soft_threshold(y, 0.5 * w / 2.0), atol=1e-10)

    def test_nonconvergence_carries_state(self):
        op = SvdOperator.diagonal(np.linspace(1.0, 0.01, 12))
        y = rng.standard_normal(12)
        with pytest.raises(NonConvergence) as info:
            prox_gradient_solve(
                op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=1e-6, weights=None,
                p=2.0, step=0.9, x0=np.zeros(12), tol=1e-16, max_iter=5,
            )
        assert info.value.report.iterations == 5
        assert info.value.report.solution.shape == (12,)

    def test_residual_floor_stops_early(self):
        op = SvdOperator.diagonal(np.ones(5))
        y = np.full(5, 3.0)
        report = prox_gradient_solve(
            op.apply, lambda x, r: op.apply_adjoint(r), y, alpha=1e-8, weights=None,
            p=1.0, step=1.0, x0=np.zeros(5), tol=1e-16, max_iter=1000,
            residual_floor=1.0,
        )
        assert report.final_residual <= 1.0
        assert report.iterations < 1000


class TestLandweberNonlinear:
    grid = AutoconvGrid(64)

    def _forward(self, x):
        return autoconv_apply(self.grid, x)

    def _adjoint(self, x, r):
        return autoconv_derivative_adjoint_apply(self.grid, x, r)

    def _bump(self):
        t = (np.arange(64) + 0.5) / 64.0
        return 1.0 + np.exp(-0.5 * ((t - 0.4) / 0.12) ** 2)

    def test_exact_data_stops_immediately(self):
        x0 = self._bump()
        y = self._forward(x0)
        report = landweber_nonlinear(
            self._forward, self._adjoint, y, x0, gamma=0.1, tau_hat=2.5,
            delta_eff=1e-8, max_iter=50,
        )
        assert report.iterations == 0
        assert report.final_residual == 0.0

    def test_huge_delta_stops_immediately(self):
        x_true = self._bump()
        y = self._forward(x_true)
        x0 = np.zeros(64)
        delta = np.linalg.norm(y) / 2.5 + 1.0
        report = landweber_nonlinear(
            self._forward, self._adjoint, y, x0, gamma=0.1, tau_hat=2.5,
            delta_eff=delta, max_iter=50,
        )
        assert report.iterations == 0

    def test_monotone_residuals_until_stop(self):
        x_true = self._bump()
        y_exact = self._forward(x_true)
        noise_rng = np.random.default_rng(0)
        noise = noise_rng.standard_normal(64)
        noise *= 0.01 * np.linalg.norm(y_exact) / np.linalg.norm(noise)
        y = y_exact + noise
        x0 = np.full(64, 1.2)
        norm_sq = operator_norm_squared(
            lambda v: 2.0 * self.grid.h * np.convolve(x0, v)[:64],
            lambda r: self._adjoint(x0, r),
            64,
        )
        report = landweber_nonlinear(
            self._forward, self._adjoint, y, x0, gamma=0.9 / norm_sq, tau_hat=2.2,
            delta_eff=np.linalg.norm(noise) / 2.0, max_iter=20_000,
        )
        trace = np.asarray(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-10)
        assert report.iterations > 0
        # first-crossing property: the previous residual was above threshold
        assert trace[-2] > 2.2 * np.linalg.norm(noise) / 2.0

    def test_nonconvergence_reported(self):
        x_true = self._bump()
        y = self._forward(x_true)
        with pytest.raises(NonConvergence) as info:
            landweber_nonlinear(
                self._forward, self._adjoint, y, np.zeros(64), gamma=0.05,
                tau_hat=2.5, delta_eff=1e-12, max_iter=3,
            )
        assert len(info.value.report.objective_trace) == 4

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            landweber_nonlinear(
                self._forward, self._adjoint, np.zeros(64), np.zeros(64),
                gamma=0.1, tau_hat=2.0, delta_eff=0.1,
            )


class TestOperatorNormSquared:
    def test_diagonal(self):
        op = SvdOperator.diagonal([3.0, 1.0, 0.1])
        est = operator_norm_squared(op.apply, op.apply_adjoint, 3, iters=100)
        assert est == pytest.approx(9.0, rel=1e-6)
