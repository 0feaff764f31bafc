"""Dense symmetric eigendecomposition, spectral projectors, numerical rank.

Everything here is small and dense (the losses in this package live in
dimension <= 20), so eigenpairs are computed with cyclic Jacobi rotations:
simple, deterministic and accurate to near machine precision, with no
dependence on the vagaries of whichever LAPACK a given NumPy links.

Conventions
-----------
* Eigenvalues are returned in non-increasing order.
* Each eigenvector is sign-normalized so that its first entry of magnitude
  above 1e-12 is non-negative, which makes decompositions reproducible.
* Index arguments (``spectral_projector``) are 1-based, matching the usual
  v_1, ..., v_D labelling of a descending spectrum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteError

__all__ = [
    "EigenDecomposition",
    "eig_sym",
    "numerical_rank",
    "spectral_projector",
    "sym_check",
]

#: Relative off-diagonal mass at which Jacobi sweeps stop.
_JACOBI_TOL = 1e-15

#: Hard cap on Jacobi sweeps; convergence is quadratic so ~8 suffice for D<=20.
_MAX_SWEEPS = 60

#: Threshold used by the eigenvector sign convention.
_SIGN_EPS = 1e-12


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectrum of a symmetric matrix.

    values : (D,) eigenvalues, non-increasing.
    vectors : (D, D) orthonormal eigenvectors, column i pairs with values[i].
    rank_tol : relative threshold recorded for numerical-rank queries.
    """

    values: np.ndarray
    vectors: np.ndarray
    rank_tol: float = 1e-8

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return V diag(values) V^T."""
        return (self.vectors * self.values) @ self.vectors.T


def sym_check(a: np.ndarray, atol: float = 0.0) -> np.ndarray:
    """Validate a finite square symmetric matrix and return it as float64."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError("matrix has non-finite entries")
    if np.max(np.abs(a - a.T), initial=0.0) > atol:
        raise ValueError("matrix is not symmetric")
    return a


def eig_sym(a: np.ndarray, rank_tol: float = 1e-8) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Raises NonFiniteError for non-finite input and ValueError for
    non-square or asymmetric input.  Asymmetry up to 1e-12 * max|a| is
    tolerated and symmetrized away, so Hessians assembled from finite
    differences are accepted.
    """
    scale = float(np.max(np.abs(np.asarray(a, dtype=float)), initial=0.0))
    a = sym_check(a, atol=1e-12 * max(scale, 1.0))
    a = 0.5 * (a + a.T)
    d = a.shape[0]

    m = a.copy()
    v = np.eye(d)
    off_tol = _JACOBI_TOL * max(np.linalg.norm(a), 1e-300)

    for _ in range(_MAX_SWEEPS):
        off = np.sqrt(np.sum(np.tril(m, -1) ** 2) * 2.0)
        if off <= off_tol:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = m[p, q]
                if abs(apq) <= 1e-300:
                    continue
                tau = (m[q, q] - m[p, p]) / (2.0 * apq)
                # smaller-magnitude root of t^2 + 2 tau t - 1 = 0
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                m[[p, q], :] = rot.T @ m[[p, q], :]
                m[:, [p, q]] = m[:, [p, q]] @ rot
                m[p, q] = 0.0
                m[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rot

    values = np.diag(m).copy()
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = v[:, order]

    for i in range(d):
        col = vectors[:, i]
        big = np.nonzero(np.abs(col) > _SIGN_EPS)[0]
        if big.size and col[big[0]] < 0.0:
            vectors[:, i] = -col

    return EigenDecomposition(values=values, vectors=vectors, rank_tol=rank_tol)


def numerical_rank(e: EigenDecomposition, rel_tol: float | None = None) -> int:
    """Count of eigenvalues with |lambda_i| above rel_tol * spectral radius.

    The zero matrix has rank 0.  rel_tol defaults to the decomposition's
    recorded rank_tol and must lie in (0, 1).
    """
    tol = e.rank_tol if rel_tol is None else rel_tol
    if not 0.0 < tol < 1.0:
        raise ValueError(f"rel_tol must be in (0, 1), got {tol}")
    radius = max(abs(e.values[0]), abs(e.values[-1]))
    if radius == 0.0:
        return 0
    return int(np.sum(np.abs(e.values) > tol * radius))


def spectral_projector(e: EigenDecomposition, indices) -> np.ndarray:
    """Orthogonal projector onto span{v_i : i in indices}, indices 1-based.

    Symmetric and idempotent by construction: sum of v_i v_i^T over the
    requested eigenvectors.
    """
    idx = sorted(set(int(i) for i in indices))
    if any(i < 1 or i > e.dim for i in idx):
        raise ValueError(f"indices must lie in 1..{e.dim}, got {idx}")
    cols = e.vectors[:, [i - 1 for i in idx]]
    return cols @ cols.T
