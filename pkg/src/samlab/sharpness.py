"""Sharpness functionals, their small-radius limits, and phase diagnostics.

Three measurements of how much the loss can rise within a radius-rho
neighborhood of x:

worst direction   max over unit v of L(x + rho v) - L(x), computed by
                  multistart projected gradient ascent on the sphere
                  (reported value is a certified lower bound on the max);
ascent direction  L(x + rho g) - L(x) along the normalized gradient g,
                  undefined where the gradient vanishes;
average direction Monte-Carlo mean of L(x + rho u) - L(x) over uniform
                  unit vectors u.

On the minimizer set these scale as rho^2 times, respectively, half the
top Hessian eigenvalue, half the smallest nonzero Hessian eigenvalue, and
the Hessian trace over twice the dimension; ``limiting_regularizers``
returns those limits directly from the spectrum.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .eigen import eig_sym, numerical_rank
from .errors import ZeroGradientError
from .losses import LossModel, hessian
from .manifold import ManifoldPoint, PhiOptions, phi

__all__ = [
    "ASCENT_UNDEFINED",
    "AscentUndefined",
    "WorstOptions",
    "SharpnessReport",
    "worst_sharpness",
    "ascent_sharpness",
    "avg_sharpness",
    "limiting_regularizers",
    "LimitingRegularizers",
    "alignment_angle",
    "phase_residual",
    "sharpness_report",
]


class AscentUndefined:
    """Tagged value for the ascent-direction sharpness at zero gradient."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "ASCENT_UNDEFINED"


#: Singleton returned by ascent_sharpness where the gradient vanishes.
ASCENT_UNDEFINED = AscentUndefined()


def _zero_grad(g, x):
    return float(np.linalg.norm(g)) <= 1e-14 * (1.0 + float(np.linalg.norm(x)))


@dataclass(frozen=True)
class WorstOptions:
    """Multistart settings for the sphere maximization."""

    n_random: int = 8
    max_iter: int = 200
    step0: float = 0.1
    seed: int = 0
    extra_inits: tuple = ()


def _sphere_ascent(objective, v0, step0, max_iter):
    """Monotone projected ascent on the unit sphere with backtracking.

    The nominal step starts at ``step0`` and halves on failure to
    improve, so iterates converge to a stationary direction to near
    machine precision instead of orbiting at a fixed step length.
    """
    v = v0 / np.linalg.norm(v0)
    val, grad_v = objective(v)
    step = step0
    for _ in range(max_iter):
        g_tan = grad_v - (grad_v @ v) * v
        gnorm = float(np.linalg.norm(g_tan))
        if gnorm <= 1e-15 * (1.0 + abs(val)):
            break
        trial = v + (step / gnorm) * g_tan
        trial /= np.linalg.norm(trial)
        tval, tgrad = objective(trial)
        if tval > val:
            v, val, grad_v = trial, tval, tgrad
            step = min(step * 1.3, 0.5)
        else:
            step *= 0.5
            if step < 1e-16:
                break
    return val, v


def worst_sharpness(
    loss: LossModel,
    x: np.ndarray,
    rho: float,
    opts: WorstOptions | None = None,
) -> tuple[float, np.ndarray]:
    """Best-found value of max over the unit ball of L(x + rho v) - L(x).

    Multistart inits: both signs of the top Hessian eigenvector, both
    signs of the normalized gradient when defined, ``n_random`` seeded
    random directions and any ``extra_inits``.  Returns (value, v*) with
    v* attaining the reported value; v = 0 (value 0) is always a
    candidate, so the result is never negative.
    """
    opts = opts or WorstOptions()
    x = loss.check_point(np.asarray(x, dtype=float))
    if rho < 0.0:
        raise ValueError("rho must be >= 0")
    base = loss.value(x)
    d = loss.dimension

    if rho == 0.0:
        return 0.0, np.zeros(d)

    def objective(v):
        y = x + rho * v
        return loss.value(y) - base, rho * loss.grad(y)

    inits = []
    e = eig_sym(hessian(loss, x))
    inits.append(e.vectors[:, 0])
    inits.append(-e.vectors[:, 0])
    g = loss.grad(x)
    if not _zero_grad(g, x):
        ghat = g / np.linalg.norm(g)
        inits.append(ghat)
        inits.append(-ghat)
    rng = np.random.default_rng(opts.seed)
    for _ in range(opts.n_random):
        r = rng.standard_normal(d)
        inits.append(r / np.linalg.norm(r))
    for extra in opts.extra_inits:
        extra = np.asarray(extra, dtype=float)
        if np.linalg.norm(extra) > 0:
            inits.append(extra / np.linalg.norm(extra))

    best_val, best_v = 0.0, np.zeros(d)
    for v0 in inits:
        val, v = _sphere_ascent(objective, v0, opts.step0, opts.max_iter)
        if val > best_val:
            best_val, best_v = val, v
    return best_val, best_v


def ascent_sharpness(loss: LossModel, x: np.ndarray, rho: float):
    """L(x + rho g/|g|) - L(x), or ASCENT_UNDEFINED at zero gradient."""
    x = loss.check_point(np.asarray(x, dtype=float))
    g = loss.grad(x)
    if _zero_grad(g, x):
        return ASCENT_UNDEFINED
    ghat = g / np.linalg.norm(g)
    return loss.value(x + rho * ghat) - loss.value(x)


def avg_sharpness(
    loss: LossModel,
    x: np.ndarray,
    rho: float,
    n_samples: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Monte-Carlo mean and standard error of L(x + rho u) - L(x).

    u is uniform on the unit sphere (normalized standard normal draws
    from a seeded generator).  The mean is reduced in sample order by
    NumPy pairwise summation, so results are reproducible for a given
    (seed, n_samples).
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x = loss.check_point(np.asarray(x, dtype=float))
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n_samples, loss.dimension))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    base = loss.value(x)
    vals = loss.value_batch(x + rho * u) - base
    mean = float(np.add.reduce(vals) / n_samples)
    if n_samples == 1:
        return mean, 0.0
    return mean, float(vals.std(ddof=1) / np.sqrt(n_samples))


@dataclass(frozen=True)
class LimitingRegularizers:
    """Second-order content of the three sharpness notions on the
    minimizer set, plus the per-component (stochastic) variant when the
    loss splits into data."""

    s_max: float
    s_asc: float
    s_avg: float
    s_stochastic: float | None = None


def limiting_regularizers(
    loss: LossModel, p: np.ndarray, rank_tol: float = 1e-8
) -> LimitingRegularizers:
    """(lambda_1/2, lambda_M/2, trace/(2D)) of the Hessian at p.

    lambda_M is the smallest eigenvalue above the numerical-rank
    threshold.  For losses with M > 1 components additionally returns the
    mean over components of half their top Hessian eigenvalue, which for
    rank-one component Hessians equals half the total-Hessian trace.
    """
    p = loss.check_point(np.asarray(p, dtype=float))
    g = loss.grad(p)
    if np.linalg.norm(g) > 1e-5 * (1.0 + float(np.linalg.norm(p))):
        warnings.warn(
            f"limiting regularizers evaluated off the minimizer set "
            f"(|grad| = {np.linalg.norm(g):.3e})",
            stacklevel=2,
        )
    e = eig_sym(hessian(loss, p), rank_tol=rank_tol)
    m = numerical_rank(e)
    if m == 0:
        raise ValueError("Hessian has numerical rank 0; no nonzero eigenvalue")
    d = loss.dimension
    s_stochastic = None
    if loss.component_count > 1:
        tops = [
            eig_sym(hessian(loss.component(k), p)).values[0]
            for k in range(1, loss.component_count + 1)
        ]
        s_stochastic = float(np.mean(tops) / 2.0)
    return LimitingRegularizers(
        s_max=float(e.values[0] / 2.0),
        s_asc=float(e.values[m - 1] / 2.0),
        s_avg=float(np.sum(e.values) / (2.0 * d)),
        s_stochastic=s_stochastic,
    )


def alignment_angle(
    loss: LossModel,
    x: np.ndarray,
    point: ManifoldPoint | None = None,
    phi_opts: PhiOptions | None = None,
) -> float:
    """Angle in [0, pi/2] between grad L(x) and the top Hessian
    eigendirection at the flow limit of x."""
    x = loss.check_point(np.asarray(x, dtype=float))
    g = loss.grad(x)
    if _zero_grad(g, x):
        raise ZeroGradientError("alignment angle undefined at zero gradient")
    if point is None:
        point = phi(loss, x, phi_opts)
    v1 = point.spectrum.vectors[:, 0]
    cosine = abs(float(g @ v1)) / float(np.linalg.norm(g))
    return float(np.arccos(min(1.0, max(0.0, cosine))))


def phase_residual(
    loss: LossModel,
    x: np.ndarray,
    eta: float,
    rho: float,
    j: int,
    point: ManifoldPoint | None = None,
    phi_opts: PhiOptions | None = None,
) -> float:
    """Excess of the trailing normal displacement over its ceiling.

    Using the spectrum at p = phi(x) with numerical rank M, returns

        sqrt( sum_{i=j}^{M} lambda_i^2 <v_i, x - p>^2 ) - eta rho lambda_j^2

    for 1 <= j <= M.  Non-positive values mean the displacement components
    from mode j down sit inside the invariant ceiling.
    """
    x = loss.check_point(np.asarray(x, dtype=float))
    if point is None:
        point = phi(loss, x, phi_opts)
    m = point.rank
    if not 1 <= j <= m:
        raise ValueError(f"j must lie in 1..{m}, got {j}")
    delta = x - point.p
    lams = point.spectrum.values
    vecs = point.spectrum.vectors
    total = 0.0
    for i in range(j - 1, m):
        total += (lams[i] * float(vecs[:, i] @ delta)) ** 2
    return float(np.sqrt(total) - eta * rho * lams[j - 1] ** 2)


@dataclass
class SharpnessReport:
    """All three sharpness measurements at one (x, rho)."""

    rho: float
    worst: float
    worst_direction: np.ndarray
    ascent: object  # float or ASCENT_UNDEFINED
    average: float
    average_stderr: float
    average_samples: int
    seed: int
    diagnostics: dict = field(default_factory=dict)


def sharpness_report(
    loss: LossModel,
    x: np.ndarray,
    rho: float,
    n_samples: int = 100_000,
    seed: int = 0,
    worst_opts: WorstOptions | None = None,
) -> SharpnessReport:
    worst, vstar = worst_sharpness(loss, x, rho, worst_opts)
    asc = ascent_sharpness(loss, x, rho)
    mean, stderr = avg_sharpness(loss, x, rho, n_samples=n_samples, seed=seed)
    return SharpnessReport(
        rho=rho,
        worst=worst,
        worst_direction=vstar,
        ascent=asc,
        average=mean,
        average_stderr=stderr,
        average_samples=n_samples,
        seed=seed,
    )
