"""Symmetric eigensolver contracts: reconstruction, ordering, projectors."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from samlab.eigen import eig_sym, numerical_rank, spectral_projector
from samlab.errors import NonFiniteError


def char_poly_roots_2x2(a):
    """Closed-form eigenvalues of a symmetric 2x2, descending."""
    tr = a[0, 0] + a[1, 1]
    det = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    disc = np.sqrt(max(tr * tr / 4.0 - det, 0.0))
    return np.array([tr / 2.0 + disc, tr / 2.0 - disc])


def char_poly_roots_3x3(a):
    """Eigenvalues of a symmetric 3x3 via the trigonometric cubic formula."""
    q = np.trace(a) / 3.0
    b = a - q * np.eye(3)
    p = np.sqrt(np.trace(b @ b) / 6.0)
    if p < 1e-300:
        return np.full(3, q)
    det = np.linalg.det(b / p)
    phi = np.arccos(np.clip(det / 2.0, -1.0, 1.0)) / 3.0
    roots = [q + 2.0 * p * np.cos(phi + 2.0 * np.pi * k / 3.0) for k in range(3)]
    return np.sort(roots)[::-1]


class TestEigSym:
    def test_identity(self):
        e = eig_sym(np.eye(3))
        assert np.array_equal(e.values, np.ones(3))

    def test_diagonal(self):
        e = eig_sym(np.diag([3.0, 1.0]))
        assert np.array_equal(e.values, [3.0, 1.0])
        assert np.array_equal(e.vectors[:, 0], [1.0, 0.0])

    def test_2x2_against_characteristic_polynomial(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.standard_normal((2, 2))
            a = 0.5 * (a + a.T)
            expect = char_poly_roots_2x2(a)
            got = eig_sym(a).values
            np.testing.assert_allclose(got, expect, atol=1e-12, rtol=1e-12)

    def test_3x3_against_characteristic_polynomial(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            a = rng.standard_normal((3, 3))
            a = 0.5 * (a + a.T)
            expect = char_poly_roots_3x3(a)
            got = eig_sym(a).values
            np.testing.assert_allclose(got, expect, atol=1e-10, rtol=1e-10)

    def test_random_6x6_reconstruction(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = rng.standard_normal((6, 6))
            a = 0.5 * (a + a.T)
            e = eig_sym(a)
            assert np.linalg.norm(e.reconstruct() - a) <= 1e-10 * (
                1.0 + np.linalg.norm(a)
            )
            assert np.max(np.abs(e.vectors.T @ e.vectors - np.eye(6))) <= 1e-12
            assert np.all(np.diff(e.values) <= 1e-14)

    def test_sign_convention(self):
        rng = np.random.default_rng(8)
        a = rng.standard_normal((5, 5))
        a = 0.5 * (a + a.T)
        e = eig_sym(a)
        for i in range(5):
            col = e.vectors[:, i]
            lead = col[np.abs(col) > 1e-12][0]
            assert lead >= 0.0

    def test_rejects_nonfinite(self):
        bad = np.array([[1.0, np.nan], [np.nan, 1.0]])
        with pytest.raises(NonFiniteError):
            eig_sym(bad)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.25, 8.0))
    def test_eigenvalue_scaling_property(self, seed, c):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 8))
        a = rng.standard_normal((d, d))
        a = 0.5 * (a + a.T)
        np.testing.assert_allclose(
            eig_sym(c * a).values, c * eig_sym(a).values, rtol=1e-10, atol=1e-12
        )


class TestNumericalRank:
    def test_toy_hessian_spectrum(self):
        e = eig_sym(np.diag([16.0, 12.0, 0.0, 0.0]))
        assert numerical_rank(e, 1e-8) == 2

    def test_zero_matrix(self):
        assert numerical_rank(eig_sym(np.zeros((4, 4))), 1e-8) == 0

    def test_full_rank(self):
        assert numerical_rank(eig_sym(np.diag([2.0, 1.0, 0.5])), 1e-8) == 3

    def test_rel_tol_validation(self):
        e = eig_sym(np.eye(2))
        with pytest.raises(ValueError):
            numerical_rank(e, 0.0)
        with pytest.raises(ValueError):
            numerical_rank(e, 1.5)


class TestSpectralProjector:
    def test_top_direction(self):
        e = eig_sym(np.diag([3.0, 1.0]))
        np.testing.assert_allclose(
            spectral_projector(e, {1}), np.array([[1.0, 0.0], [0.0, 0.0]]), atol=1e-14
        )

    def test_completeness(self):
        rng = np.random.default_rng(9)
        a = rng.standard_normal((6, 6))
        a = 0.5 * (a + a.T)
        e = eig_sym(a)
        np.testing.assert_allclose(
            spectral_projector(e, range(1, 7)), np.eye(6), atol=1e-12
        )

    def test_kernel_of_toy_origin_hessian(self):
        e = eig_sym(np.diag([0.0, 0.0, 16.0, 12.0]))
        proj = spectral_projector(e, {3, 4})  # indices of the zero eigenvalues
        np.testing.assert_allclose(proj, np.diag([1.0, 1.0, 0.0, 0.0]), atol=1e-12)

    def test_idempotent(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal((7, 7))
        a = 0.5 * (a + a.T)
        p = spectral_projector(eig_sym(a), {2, 4, 5})
        assert np.linalg.norm(p @ p - p) <= 1e-10
        np.testing.assert_allclose(p, p.T, atol=1e-14)

    def test_out_of_range_rejected(self):
        e = eig_sym(np.eye(3))
        with pytest.raises(ValueError):
            spectral_projector(e, {0})
        with pytest.raises(ValueError):
            spectral_projector(e, {4})
