"""Loss models: quadratic, the 4D two-curvature toy, factored regression.

A loss model exposes value/gradient/Hessian plus an optional split into M
per-datum components whose mean recovers the total loss.  All models here
are immutable and provide analytic derivatives; the base class supplies a
finite-difference Hessian for models that do not.

Component indexing is 1-based (k = 1..M), matching the v_1..v_D convention
used elsewhere in the package.

Notes on the 4D toy
-------------------
With curvature factors F1(x1,x2) = x1^2 + 6 x2^2 + 8 and
F2(x1,x2) = 4(1-x1)^2 + (1-x2)^2 + 1, the loss

    L(x) = F1(x1,x2) x3^2 + F2(x1,x2) x4^2

vanishes exactly on the plane {x3 = x4 = 0}, where its Hessian is
diag(0, 0, 2*F1, 2*F2).  Some writeups of this construction quote the
nonzero curvatures as F1 and F2 themselves; direct differentiation gives
the factor-2 values, which is what this package reports throughout (the
locations of curvature minima are unaffected).  The stochastic split keeps
L as the component mean: component 1 is 2*F1*x3^2, component 2 is
2*F2*x4^2.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NonFiniteError
from .eigen import sym_check

__all__ = [
    "LossModel",
    "QuadraticLoss",
    "Toy4DLoss",
    "PolynomialMap",
    "FactoredRegressionLoss",
    "evaluate",
    "hessian",
    "third_directional",
    "component",
    "fd_step_hessian",
    "fd_step_third",
]

_EPS = float(np.finfo(float).eps)


def fd_step_hessian(x: np.ndarray) -> float:
    """Central-difference step for Hessian-from-gradient."""
    return _EPS ** (1.0 / 3.0) * (1.0 + float(np.linalg.norm(x)))


def fd_step_third(x: np.ndarray) -> float:
    """Central-difference step for third-derivative contractions."""
    return _EPS**0.25 * (1.0 + float(np.linalg.norm(x)))


class LossModel:
    """Evaluatable differentiable loss on R^D.

    Subclasses implement ``value`` and ``grad``; ``hessian`` defaults to
    central finite differences of the gradient.  Stochastic losses override
    ``component_count`` and ``component``.
    """

    dimension: int

    def value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, x: np.ndarray) -> np.ndarray:
        x = self.check_point(x)
        h = fd_step_hessian(x)
        d = self.dimension
        out = np.empty((d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            out[:, j] = (self.grad(x + e) - self.grad(x - e)) / (2.0 * h)
        return 0.5 * (out + out.T)

    def value_batch(self, xs: np.ndarray) -> np.ndarray:
        """Values at the rows of xs; overridden where vectorization pays."""
        return np.array([self.value(x) for x in xs])

    @property
    def component_count(self) -> int:
        return 1

    def component(self, k: int) -> "LossModel":
        if k != 1:
            raise ValueError(f"component index {k} out of range 1..1")
        return self

    def check_point(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"point has shape {x.shape}, expected ({self.dimension},)"
            )
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"non-finite point {x!r}")
        return x


def evaluate(loss: LossModel, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Value and gradient at x, rejecting non-finite results."""
    x = loss.check_point(x)
    val = float(loss.value(x))
    g = np.asarray(loss.grad(x), dtype=float)
    if not np.isfinite(val) or not np.all(np.isfinite(g)):
        raise NonFiniteError(f"loss evaluation not finite at x={x!r}")
    return val, g


def hessian(loss: LossModel, x: np.ndarray) -> np.ndarray:
    """Symmetric Hessian at x (analytic where the model provides one)."""
    h = np.asarray(loss.hessian(loss.check_point(x)), dtype=float)
    if not np.all(np.isfinite(h)):
        raise NonFiniteError(f"Hessian not finite at x={x!r}")
    return 0.5 * (h + h.T)


def third_directional(loss: LossModel, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Second directional derivative of the gradient field along u.

    Returns (grad(x+hu) + grad(x-hu) - 2 grad(x)) / h^2, the contraction
    of the third-derivative tensor with u twice.  Requires ``u`` to be a
    unit vector.
    """
    x = loss.check_point(x)
    u = np.asarray(u, dtype=float)
    nu = float(np.linalg.norm(u))
    if abs(nu - 1.0) > 1e-10:
        raise ValueError(f"direction must have unit norm, got {nu}")
    h = fd_step_third(x)
    hu = h * u
    return (loss.grad(x + hu) + loss.grad(x - hu) - 2.0 * loss.grad(x)) / (h * h)


def component(loss: LossModel, k: int) -> LossModel:
    """The k-th per-datum loss (1-based); mean over k recovers the total."""
    m = loss.component_count
    if not 1 <= k <= m:
        raise ValueError(f"component index {k} out of range 1..{m}")
    return loss.component(k)


# ---------------------------------------------------------------------------
# Quadratic loss
# ---------------------------------------------------------------------------


class QuadraticLoss(LossModel):
    """L(x) = x^T A x / 2 for a positive semi-definite symmetric A."""

    def __init__(self, a: np.ndarray):
        a = sym_check(np.asarray(a, dtype=float), atol=0.0)
        evals = np.linalg.eigvalsh(a)
        if evals[0] < -1e-10 * max(abs(evals[-1]), 1.0):
            raise ValueError(f"matrix is not positive semi-definite: {evals}")
        self.a = a
        self.dimension = a.shape[0]

    def value(self, x):
        x = self.check_point(x)
        return 0.5 * float(x @ self.a @ x)

    def grad(self, x):
        return self.a @ self.check_point(x)

    def hessian(self, x):
        self.check_point(x)
        return self.a.copy()

    def value_batch(self, xs):
        xs = np.asarray(xs, dtype=float)
        return 0.5 * np.einsum("ij,jk,ik->i", xs, self.a, xs)


# ---------------------------------------------------------------------------
# 4D toy with two curvature wells
# ---------------------------------------------------------------------------


def _f1(x1: float, x2: float) -> float:
    return x1 * x1 + 6.0 * x2 * x2 + 8.0


def _f2(x1: float, x2: float) -> float:
    return 4.0 * (1.0 - x1) ** 2 + (1.0 - x2) ** 2 + 1.0


class _ToyComponent(LossModel):
    """One datum of the toy split: 2*F*(coordinate)^2."""

    dimension = 4

    def __init__(self, which: int):
        self.which = which  # 1 -> 2*F1*x3^2, 2 -> 2*F2*x4^2

    def value(self, x):
        x = self.check_point(x)
        if self.which == 1:
            return 2.0 * _f1(x[0], x[1]) * x[2] * x[2]
        return 2.0 * _f2(x[0], x[1]) * x[3] * x[3]

    def grad(self, x):
        x = self.check_point(x)
        x1, x2, x3, x4 = x
        if self.which == 1:
            return np.array(
                [
                    4.0 * x1 * x3 * x3,
                    24.0 * x2 * x3 * x3,
                    4.0 * _f1(x1, x2) * x3,
                    0.0,
                ]
            )
        return np.array(
            [
                -16.0 * (1.0 - x1) * x4 * x4,
                -4.0 * (1.0 - x2) * x4 * x4,
                0.0,
                4.0 * _f2(x1, x2) * x4,
            ]
        )

    def hessian(self, x):
        x = self.check_point(x)
        x1, x2, x3, x4 = x
        h = np.zeros((4, 4))
        if self.which == 1:
            h[0, 0] = 4.0 * x3 * x3
            h[1, 1] = 24.0 * x3 * x3
            h[2, 2] = 4.0 * _f1(x1, x2)
            h[0, 2] = h[2, 0] = 8.0 * x1 * x3
            h[1, 2] = h[2, 1] = 48.0 * x2 * x3
        else:
            h[0, 0] = 16.0 * x4 * x4
            h[1, 1] = 4.0 * x4 * x4
            h[3, 3] = 4.0 * _f2(x1, x2)
            h[0, 3] = h[3, 0] = -32.0 * (1.0 - x1) * x4
            h[1, 3] = h[3, 1] = -8.0 * (1.0 - x2) * x4
        return h


class Toy4DLoss(LossModel):
    """L(x) = F1(x1,x2) x3^2 + F2(x1,x2) x4^2 (see module docstring)."""

    dimension = 4

    def value(self, x):
        x = self.check_point(x)
        x1, x2, x3, x4 = x
        return _f1(x1, x2) * x3 * x3 + _f2(x1, x2) * x4 * x4

    def grad(self, x):
        x = self.check_point(x)
        x1, x2, x3, x4 = x
        return np.array(
            [
                2.0 * x1 * x3 * x3 - 8.0 * (1.0 - x1) * x4 * x4,
                12.0 * x2 * x3 * x3 - 2.0 * (1.0 - x2) * x4 * x4,
                2.0 * _f1(x1, x2) * x3,
                2.0 * _f2(x1, x2) * x4,
            ]
        )

    def hessian(self, x):
        x = self.check_point(x)
        x1, x2, x3, x4 = x
        h = np.zeros((4, 4))
        h[0, 0] = 2.0 * x3 * x3 + 8.0 * x4 * x4
        h[1, 1] = 12.0 * x3 * x3 + 2.0 * x4 * x4
        h[2, 2] = 2.0 * _f1(x1, x2)
        h[3, 3] = 2.0 * _f2(x1, x2)
        h[0, 2] = h[2, 0] = 4.0 * x1 * x3
        h[0, 3] = h[3, 0] = -16.0 * (1.0 - x1) * x4
        h[1, 2] = h[2, 1] = 24.0 * x2 * x3
        h[1, 3] = h[3, 1] = -4.0 * (1.0 - x2) * x4
        return h

    def value_batch(self, xs):
        xs = np.asarray(xs, dtype=float)
        x1, x2, x3, x4 = xs[:, 0], xs[:, 1], xs[:, 2], xs[:, 3]
        f1 = x1 * x1 + 6.0 * x2 * x2 + 8.0
        f2 = 4.0 * (1.0 - x1) ** 2 + (1.0 - x2) ** 2 + 1.0
        return f1 * x3 * x3 + f2 * x4 * x4

    @property
    def component_count(self):
        return 2

    def component(self, k):
        if k not in (1, 2):
            raise ValueError(f"component index {k} out of range 1..2")
        return _ToyComponent(k)

    @staticmethod
    def curvature_factors(x1: float, x2: float) -> tuple[float, float]:
        """(F1, F2) at a manifold location; the nonzero Hessian eigenvalues
        there are 2*F1 and 2*F2."""
        return _f1(x1, x2), _f2(x1, x2)


# ---------------------------------------------------------------------------
# Factored per-datum regression
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialMap:
    """Polynomial R^D -> R as an explicit term table with analytic derivatives.

    terms: sequence of (coefficient, powers) where ``powers`` is a length-D
    tuple of non-negative integer exponents.
    """

    dimension: int
    terms: tuple[tuple[float, tuple[int, ...]], ...]

    @staticmethod
    def from_terms(dimension: int, terms: Sequence[tuple[float, dict[int, int]]]):
        """Build from sparse terms: (coeff, {1-based var index: power})."""
        packed = []
        for coeff, powers in terms:
            vec = [0] * dimension
            for var, p in powers.items():
                if not 1 <= var <= dimension:
                    raise ValueError(f"variable x{var} out of range 1..{dimension}")
                if p < 0:
                    raise ValueError("negative exponent")
                vec[var - 1] += p
            packed.append((float(coeff), tuple(vec)))
        return PolynomialMap(dimension, tuple(packed))

    def value(self, x: np.ndarray) -> float:
        total = 0.0
        for coeff, powers in self.terms:
            term = coeff
            for xi, p in zip(x, powers):
                if p:
                    term *= xi**p
            total += term
        return total

    def grad(self, x: np.ndarray) -> np.ndarray:
        g = np.zeros(self.dimension)
        for coeff, powers in self.terms:
            for j, pj in enumerate(powers):
                if pj == 0:
                    continue
                term = coeff * pj
                for i, p in enumerate(powers):
                    q = p - 1 if i == j else p
                    if q:
                        term *= x[i] ** q
                g[j] += term
        return g

    def hess(self, x: np.ndarray) -> np.ndarray:
        h = np.zeros((self.dimension, self.dimension))
        for coeff, powers in self.terms:
            for j, pj in enumerate(powers):
                if pj == 0:
                    continue
                for l, pl in enumerate(powers):
                    mult = pj * (pj - 1) if l == j else pj * pl
                    if mult == 0:
                        continue
                    term = coeff * mult
                    for i, p in enumerate(powers):
                        q = p
                        if i == j:
                            q -= 1
                        if i == l:
                            q -= 1
                        if q:
                            term *= x[i] ** q
                    h[j, l] += term
        return h


class _DatumLoss(LossModel):
    """Squared-error loss on one datum: (f(x) - y)^2 / 2."""

    def __init__(self, fmap: PolynomialMap, label: float):
        self.fmap = fmap
        self.label = float(label)
        self.dimension = fmap.dimension

    def value(self, x):
        x = self.check_point(x)
        r = self.fmap.value(x) - self.label
        return 0.5 * r * r

    def grad(self, x):
        x = self.check_point(x)
        r = self.fmap.value(x) - self.label
        return r * self.fmap.grad(x)

    def hessian(self, x):
        x = self.check_point(x)
        r = self.fmap.value(x) - self.label
        g = self.fmap.grad(x)
        return np.outer(g, g) + r * self.fmap.hess(x)


class FactoredRegressionLoss(LossModel):
    """Mean of per-datum squared-error losses on polynomial feature maps.

    L_k(x) = (f_k(x) - y_k)^2 / 2 and L = mean_k L_k.  At a point
    interpolating datum k the per-datum Hessian collapses to the rank-one
    matrix grad f_k grad f_k^T (the squared loss has unit second derivative
    at its argmin).
    """

    def __init__(self, maps: Sequence[PolynomialMap], labels: Sequence[float]):
        maps = list(maps)
        labels = [float(y) for y in labels]
        if not maps:
            raise ValueError("need at least one datum")
        if len(maps) != len(labels):
            raise ValueError("maps and labels differ in length")
        dims = {m.dimension for m in maps}
        if len(dims) != 1:
            raise ValueError("feature maps disagree on dimension")
        self.dimension = dims.pop()
        self._data = [_DatumLoss(m, y) for m, y in zip(maps, labels)]

    @property
    def component_count(self):
        return len(self._data)

    def component(self, k):
        if not 1 <= k <= len(self._data):
            raise ValueError(
                f"component index {k} out of range 1..{len(self._data)}"
            )
        return self._data[k - 1]

    def value(self, x):
        x = self.check_point(x)
        return sum(d.value(x) for d in self._data) / len(self._data)

    def grad(self, x):
        x = self.check_point(x)
        g = np.zeros(self.dimension)
        for d in self._data:
            g += d.grad(x)
        return g / len(self._data)

    def hessian(self, x):
        x = self.check_point(x)
        h = np.zeros((self.dimension, self.dimension))
        for d in self._data:
            h += d.hessian(x)
        return h / len(self._data)
