"""Loss model contracts: values, derivatives, components, FD consistency."""

import numpy as np
import pytest

from samlab.eigen import eig_sym
from samlab.errors import NonFiniteError
from samlab.losses import (
    FactoredRegressionLoss,
    PolynomialMap,
    QuadraticLoss,
    Toy4DLoss,
    component,
    evaluate,
    hessian,
    third_directional,
)


@pytest.fixture
def toy():
    return Toy4DLoss()


@pytest.fixture
def quad():
    return QuadraticLoss(np.diag([2.0, 1.0]))


def make_factored(dim=5, seed=3, n_data=3):
    maps = [
        PolynomialMap.from_terms(dim, [(2.0, {1: 1}), (0.5, {2: 2, 3: 1})]),
        PolynomialMap.from_terms(dim, [(1.0, {4: 1}), (-1.0, {5: 2})]),
        PolynomialMap.from_terms(dim, [(1.0, {1: 1, 2: 1}), (0.3, {3: 2})]),
    ][:n_data]
    p = np.array([0.5, -0.3, 0.8, 0.1, -0.6])[:dim]
    labels = [m.value(p) for m in maps]
    return FactoredRegressionLoss(maps, labels), p


def fd_gradient(loss, x, h):
    g = np.zeros(loss.dimension)
    for j in range(loss.dimension):
        e = np.zeros(loss.dimension)
        e[j] = h
        g[j] = (loss.value(x + e) - loss.value(x - e)) / (2.0 * h)
    return g


class TestEvaluate:
    def test_quadratic_example(self, quad):
        val, g = evaluate(quad, np.array([0.1, 0.0]))
        assert val == pytest.approx(0.01, abs=1e-15)
        np.testing.assert_allclose(g, [0.2, 0.0], atol=1e-15)

    def test_toy_off_manifold(self, toy):
        val, g = evaluate(toy, np.array([0.0, 0.0, 0.1, 0.0]))
        assert val == pytest.approx(0.08, abs=1e-15)
        np.testing.assert_allclose(g, [0.0, 0.0, 1.6, 0.0], atol=1e-15)

    def test_toy_manifold_is_flat(self, toy):
        for a, b in ((0.2, 0.9), (-0.4, 1.3)):
            val, g = evaluate(toy, np.array([a, b, 0.0, 0.0]))
            assert val == 0.0
            np.testing.assert_array_equal(g, np.zeros(4))

    def test_rejects_nonfinite_point(self, toy):
        with pytest.raises(NonFiniteError):
            evaluate(toy, np.array([np.inf, 0.0, 0.0, 0.0]))

    def test_dimension_mismatch(self, toy):
        with pytest.raises(ValueError):
            evaluate(toy, np.zeros(3))


class TestHessian:
    def test_toy_origin(self, toy):
        np.testing.assert_allclose(
            hessian(toy, np.zeros(4)), np.diag([0.0, 0.0, 16.0, 12.0]), atol=1e-14
        )

    def test_quadratic_constant(self, quad):
        rng = np.random.default_rng(0)
        for _ in range(3):
            x = rng.standard_normal(2)
            np.testing.assert_array_equal(hessian(quad, x), quad.a)

    def test_factored_rank_one_at_interpolation(self):
        fact, p = make_factored()
        lk = component(fact, 1)
        h = hessian(lk, p)
        e = eig_sym(h)
        assert e.values[0] == pytest.approx(
            float(np.linalg.norm(lk.fmap.grad(p)) ** 2), rel=1e-12
        )
        assert abs(e.values[-1]) <= 1e-12 * e.values[0]

    def test_fd_consistency_all_models(self, toy, quad):
        fact, _ = make_factored()
        rng = np.random.default_rng(11)
        for loss in (toy, quad, fact):
            for _ in range(3):
                x = rng.uniform(-0.8, 0.8, size=loss.dimension)
                h_analytic = hessian(loss, x)
                step = 1e-6 * (1.0 + np.linalg.norm(x))
                for j in range(loss.dimension):
                    e = np.zeros(loss.dimension)
                    e[j] = step
                    col = (loss.grad(x + e) - loss.grad(x - e)) / (2.0 * step)
                    np.testing.assert_allclose(
                        col, h_analytic[:, j],
                        atol=1e-6 * (1.0 + np.abs(h_analytic[:, j]).max()),
                    )

    def test_gradient_fd_consistency(self, toy, quad):
        fact, _ = make_factored()
        rng = np.random.default_rng(12)
        for loss in (toy, quad, fact):
            for _ in range(4):
                x = rng.uniform(-0.8, 0.8, size=loss.dimension)
                g = loss.grad(x)
                fd = fd_gradient(loss, x, 1e-6 * (1.0 + np.linalg.norm(x)))
                assert np.linalg.norm(g - fd) <= 1e-6 * (1.0 + np.linalg.norm(g))


class TestThirdDirectional:
    def test_quadratic_vanishes(self, quad):
        out = third_directional(quad, np.array([0.3, -0.7]), np.array([1.0, 0.0]))
        np.testing.assert_allclose(out, np.zeros(2), atol=1e-8)

    def test_toy_at_corner(self, toy):
        # second derivative of the gradient field along e3 equals the
        # gradient of twice the first curvature factor: (4 x1, 24 x2, 0, 0)
        out = third_directional(
            toy, np.array([1.0, 1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, 0.0])
        )
        np.testing.assert_allclose(out, [4.0, 24.0, 0.0, 0.0], atol=1e-7)

    def test_toy_at_origin(self, toy):
        out = third_directional(toy, np.zeros(4), np.array([0.0, 0.0, 1.0, 0.0]))
        np.testing.assert_allclose(out, np.zeros(4), atol=1e-7)

    def test_requires_unit_direction(self, toy):
        with pytest.raises(ValueError):
            third_directional(toy, np.zeros(4), np.array([0.0, 0.0, 2.0, 0.0]))


class TestComponents:
    def test_toy_component_values(self, toy):
        x = np.array([0.3, -0.2, 0.5, 0.7])
        f1, f2 = Toy4DLoss.curvature_factors(0.3, -0.2)
        assert component(toy, 1).value(x) == pytest.approx(2.0 * f1 * 0.25, rel=1e-14)
        assert component(toy, 2).value(x) == pytest.approx(2.0 * f2 * 0.49, rel=1e-14)

    def test_component_mean_matches_total(self, toy):
        fact, _ = make_factored()
        rng = np.random.default_rng(13)
        for loss in (toy, fact):
            m = loss.component_count
            for _ in range(4):
                x = rng.uniform(-0.6, 0.6, size=loss.dimension)
                mean_val = np.mean(
                    [component(loss, k).value(x) for k in range(1, m + 1)]
                )
                mean_grad = np.mean(
                    [component(loss, k).grad(x) for k in range(1, m + 1)], axis=0
                )
                assert mean_val == pytest.approx(loss.value(x), abs=1e-12)
                assert np.linalg.norm(mean_grad - loss.grad(x)) <= 1e-10

    def test_single_component_loss_returns_itself(self, quad):
        assert component(quad, 1) is quad

    def test_out_of_range(self, toy, quad):
        for loss, bad in ((toy, 0), (toy, 3), (quad, 2), (quad, 0)):
            with pytest.raises(ValueError):
                component(loss, bad)

    def test_factored_component_is_squared_error(self):
        fact, p = make_factored()
        x = p + 0.1
        lk = component(fact, 2)
        expect = 0.5 * (lk.fmap.value(x) - lk.label) ** 2
        assert lk.value(x) == pytest.approx(expect, rel=1e-14)


class TestToyStructure:
    def test_eigengap_on_unit_square(self, toy):
        rng = np.random.default_rng(14)
        for _ in range(25):
            a, b = rng.uniform(0.0, 1.0, size=2)
            e = eig_sym(hessian(toy, np.array([a, b, 0.0, 0.0])))
            f1, f2 = Toy4DLoss.curvature_factors(a, b)
            assert f1 > f2
            assert e.values[0] - e.values[1] >= 2.0 * (f1 - f2) - 1e-9

    def test_manifold_spectrum(self, toy):
        e = eig_sym(hessian(toy, np.array([1.0, 1.0, 0.0, 0.0])))
        np.testing.assert_allclose(e.values, [30.0, 2.0, 0.0, 0.0], atol=1e-12)

    def test_value_batch_matches_value(self, toy, quad):
        rng = np.random.default_rng(15)
        for loss in (toy, quad):
            xs = rng.uniform(-1.0, 1.0, size=(20, loss.dimension))
            np.testing.assert_allclose(
                loss.value_batch(xs), [loss.value(x) for x in xs], rtol=1e-12
            )


class TestPolynomialMap:
    def test_derivatives(self):
        pm = PolynomialMap.from_terms(3, [(2.0, {1: 2, 3: 1}), (-1.5, {2: 3})])
        x = np.array([0.7, -0.4, 1.2])
        # value: 2 x1^2 x3 - 1.5 x2^3
        assert pm.value(x) == pytest.approx(2 * 0.49 * 1.2 - 1.5 * (-0.4) ** 3)
        np.testing.assert_allclose(
            pm.grad(x),
            [4 * 0.7 * 1.2, -4.5 * 0.16, 2 * 0.49],
            rtol=1e-12,
        )
        h = pm.hess(x)
        np.testing.assert_allclose(h, h.T, atol=1e-15)
        assert h[0, 0] == pytest.approx(4 * 1.2)
        assert h[0, 2] == pytest.approx(4 * 0.7)
        assert h[1, 1] == pytest.approx(-9.0 * (-0.4))

    def test_validation(self):
        with pytest.raises(ValueError):
            PolynomialMap.from_terms(2, [(1.0, {3: 1})])
        with pytest.raises(ValueError):
            FactoredRegressionLoss([], [])


class TestQuadraticValidation:
    def test_rejects_indefinite(self):
        with pytest.raises(ValueError):
            QuadraticLoss(np.diag([1.0, -1.0]))

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            QuadraticLoss(np.array([[1.0, 0.5], [0.0, 1.0]]))
