"""Flow-limit map, its calculus, and the projected curvature flows."""

import numpy as np
import pytest

from samlab.errors import ConvergenceError, EigengapError
from samlab.losses import QuadraticLoss, Toy4DLoss, hessian
from samlab.manifold import (
    PhiOptions,
    grad_lambda1,
    grad_trace,
    phi,
    phi_annihilation_residual,
    riemannian_flow,
)


@pytest.fixture
def toy():
    return Toy4DLoss()


@pytest.fixture
def quad():
    return QuadraticLoss(np.diag([2.0, 1.0, 0.5]))


class TestPhi:
    def test_quadratic_flows_to_origin(self, quad):
        mp = phi(quad, np.array([0.3, -0.4, 0.5]))
        assert np.linalg.norm(mp.p) <= 1e-9
        assert mp.residual_grad_norm <= 1e-10
        assert mp.converged

    def test_manifold_point_is_fixed(self, toy):
        x = np.array([0.3, 0.8, 0.0, 0.0])
        mp = phi(toy, x)
        np.testing.assert_array_equal(mp.p, x)

    def test_matches_fine_fixed_step_oracle(self, toy):
        x = np.array([0.5, 0.5, 0.1, 0.0])
        default = phi(toy, x)
        oracle = phi(
            toy, x, PhiOptions(tol=1e-12, fixed_dt=1e-4, use_kernel=False,
                               max_steps=10**7)
        )
        assert np.linalg.norm(default.p - oracle.p) <= 1e-6

    def test_spectrum_and_projector(self, toy):
        mp = phi(toy, np.array([0.5, 0.5, 0.1, 0.05]))
        assert mp.rank == 2
        lam1 = mp.spectrum.values[0]
        # tangent projector annihilates the Hessian at the landing point
        assert np.linalg.norm(mp.tangent_projector @ hessian(toy, mp.p)) <= 1e-6 * lam1
        p2 = mp.tangent_projector @ mp.tangent_projector
        assert np.linalg.norm(p2 - mp.tangent_projector) <= 1e-12

    def test_idempotence(self, toy):
        mp = phi(toy, np.array([0.2, 0.7, 0.15, -0.1]))
        again = phi(toy, mp.p)
        assert np.linalg.norm(again.p - mp.p) <= 10 * 1e-10

    def test_budget_exhaustion_raises(self, toy):
        with pytest.raises(ConvergenceError):
            phi(toy, np.array([0.5, 0.5, 0.3, 0.2]), PhiOptions(max_steps=3))

    def test_loss_monotone_along_descent(self, toy):
        mp = phi(toy, np.array([0.5, 0.5, 0.25, 0.2]),
                 PhiOptions(track_values=True, use_kernel=False))
        vals = mp.loss_values
        assert vals is not None and len(vals) > 5
        diffs = np.diff(vals)
        assert np.all(diffs <= 1e-12 * (1.0 + np.abs(vals[:-1])))


class TestAnnihilationResidual:
    def test_quadratic_everywhere_zero(self, quad):
        res = phi_annihilation_residual(quad, np.array([0.4, 0.1, -0.3]), h=1e-4)
        assert res <= 1e-9

    def test_near_manifold_toy(self, toy):
        rng = np.random.default_rng(21)
        for _ in range(5):
            x = np.array(
                [rng.uniform(0, 1), rng.uniform(0, 1),
                 rng.uniform(-0.03, 0.03), rng.uniform(-0.03, 0.03)]
            )
            assert phi_annihilation_residual(toy, x, h=1e-4) <= 1e-3

    def test_tangent_direction_moves_the_limit(self, toy):
        # along a direction tangent to the minimizer set the limit map is
        # the identity, so the difference quotient has norm about 1
        x = np.array([0.5, 0.5, 0.0, 0.0])
        res = phi_annihilation_residual(
            toy, x, h=1e-4, direction=np.array([1.0, 0.0, 0.0, 0.0])
        )
        assert abs(res - 1.0) <= 1e-6


class TestCurvatureGradients:
    def test_grad_lambda1_analytic(self, toy):
        # top curvature on the manifold is 2*F1, so its gradient is
        # (4 x1, 24 x2, 0, 0)
        got = grad_lambda1(toy, np.array([1.0, 1.0, 0.0, 0.0]))
        np.testing.assert_allclose(got, [4.0, 24.0, 0.0, 0.0], atol=1e-6)

    def test_grad_lambda1_fd_oracle(self, toy):
        from samlab.eigen import eig_sym

        p = np.array([0.7, 0.4, 0.0, 0.0])
        got = grad_lambda1(toy, p)
        h = 1e-6
        fd = np.zeros(4)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            lp = eig_sym(hessian(toy, p + e)).values[0]
            lm = eig_sym(hessian(toy, p - e)).values[0]
            fd[j] = (lp - lm) / (2 * h)
        np.testing.assert_allclose(got, fd, atol=1e-5)

    def test_grad_lambda1_zero_at_curvature_minimum(self, toy):
        got = grad_lambda1(toy, np.zeros(4))
        assert np.linalg.norm(got) <= 1e-8

    def test_grad_lambda1_needs_eigengap(self):
        quad_deg = QuadraticLoss(np.eye(2))
        with pytest.raises(EigengapError):
            grad_lambda1(quad_deg, np.zeros(2))

    def test_grad_trace_analytic(self, toy):
        got = grad_trace(toy, np.array([0.5, 0.5, 0.0, 0.0]))
        np.testing.assert_allclose(got, [-6.0, 10.0, 0.0, 0.0], atol=1e-7)

    def test_grad_trace_zero_at_trace_argmin(self, toy):
        got = grad_trace(toy, np.array([0.8, 1.0 / 7.0, 0.0, 0.0]))
        assert np.linalg.norm(got) <= 1e-8

    def test_grad_trace_quadratic(self, quad):
        got = grad_trace(quad, np.array([0.3, 0.3, 0.3]))
        assert np.linalg.norm(got) <= 1e-9


class TestRiemannianFlow:
    def test_trace_flow_endpoint(self, toy):
        sol = riemannian_flow(toy, np.array([0.5, 0.5, 0.01, 0.01]), "trace", 3.0)
        assert sol.aborted is None
        assert np.linalg.norm(sol.xs[-1][:2] - [0.8, 1.0 / 7.0]) <= 1e-3

    def test_lambda1_flow_endpoint(self, toy):
        sol = riemannian_flow(toy, np.array([0.5, 0.5, 0.01, 0.01]), "lambda1", 4.0)
        assert sol.aborted is None
        assert np.linalg.norm(sol.xs[-1][:2]) <= 1e-3

    def test_zero_field_is_constant(self, quad):
        sol = riemannian_flow(quad, np.array([0.4, -0.2, 0.1]), "trace", 0.5)
        assert np.allclose(sol.xs, sol.xs[0], atol=1e-12)

    def test_starts_at_flow_limit(self, toy):
        x0 = np.array([0.5, 0.5, 0.05, 0.02])
        sol = riemannian_flow(toy, x0, "trace", 0.01)
        mp = phi(toy, x0)
        np.testing.assert_allclose(sol.xs[0], mp.p, atol=1e-12)
        assert sol.taus[0] == 0.0

    def test_stays_on_manifold(self, toy):
        sol = riemannian_flow(toy, np.array([0.5, 0.5, 0.05, 0.0]), "trace", 0.5,
                              reproject_every=10)
        # after each reprojection the gradient is at tolerance; between
        # reprojections the recorded drift stays small
        for i in range(0, len(sol.taus), 10):
            g = np.linalg.norm(Toy4DLoss().grad(sol.xs[i]))
            assert g <= 10 * 1e-10 or i % 10 != 0

    def test_objective_monotone_along_own_flow(self, toy):
        from samlab.eigen import eig_sym

        sol = riemannian_flow(toy, np.array([0.5, 0.5, 0.01, 0.0]), "lambda1", 1.0)
        lam1 = [eig_sym(hessian(toy, x)).values[0] for x in sol.xs[::50]]
        assert np.all(np.diff(lam1) <= 1e-10)
        sol2 = riemannian_flow(toy, np.array([0.5, 0.5, 0.01, 0.0]), "trace", 1.0)
        tr = [float(np.trace(hessian(toy, x))) for x in sol2.xs[::50]]
        assert np.all(np.diff(tr) <= 1e-10)

    def test_interpolation(self, toy):
        sol = riemannian_flow(toy, np.array([0.5, 0.5, 0.01, 0.0]), "trace", 0.2)
        mid = 0.5 * (sol.taus[10] + sol.taus[11])
        want = 0.5 * (sol.xs[10] + sol.xs[11])
        np.testing.assert_allclose(sol.at(mid), want, atol=1e-12)

    def test_kind_validation(self, toy):
        with pytest.raises(ValueError):
            riemannian_flow(toy, np.zeros(4), "curvature", 1.0)
