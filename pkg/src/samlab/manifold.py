"""Gradient-flow limit map, tangent projectors, and the two limiting flows.

``phi`` integrates dX/dtau = -grad L(X) with classical RK4 until the
gradient norm falls below a tolerance, returning the landing point
together with its Hessian spectrum and the projector onto the tangent
space of the minimizer set there.  The step size is controlled by a
Gershgorin bound on the initial Hessian (deterministic, needs no
eigensolve) and adapts by halving whenever a step fails to decrease the
loss.

``riemannian_flow`` integrates the projected descent flow

    dX/dtau = -1/2 * P_tangent(X) * grad S(X)

for S either the top Hessian eigenvalue or the Hessian trace, pulling the
iterate back onto the minimizer set with ``phi`` at a fixed cadence.
"""

from dataclasses import dataclass

import numpy as np

from .eigen import EigenDecomposition, eig_sym, numerical_rank
from .errors import ConvergenceError, EigengapError, ZeroGradientError
from .losses import LossModel, hessian, third_directional, fd_step_third

__all__ = [
    "ManifoldPoint",
    "FlowSolution",
    "PhiOptions",
    "phi",
    "phi_annihilation_residual",
    "grad_lambda1",
    "grad_trace",
    "riemannian_flow",
    "tangent_projector",
]

DEFAULT_TOL_PHI = 1e-10
DEFAULT_PHI_BUDGET = 10**7
DEFAULT_GAP_RTOL = 1e-6
DEFAULT_RANK_TOL = 1e-8


@dataclass(frozen=True)
class PhiOptions:
    tol: float = DEFAULT_TOL_PHI
    max_steps: int = DEFAULT_PHI_BUDGET
    fixed_dt: float | None = None
    rank_tol: float = DEFAULT_RANK_TOL
    use_kernel: bool = True
    track_values: bool = False  # record accepted-step loss values (generic path)


@dataclass
class ManifoldPoint:
    """Landing point of the gradient flow with local curvature data."""

    p: np.ndarray
    residual_grad_norm: float
    spectrum: EigenDecomposition
    rank: int
    tangent_projector: np.ndarray
    converged: bool = True
    loss_values: np.ndarray | None = None


@dataclass
class FlowSolution:
    """Samples of a projected descent flow on the minimizer set."""

    taus: np.ndarray
    xs: np.ndarray
    kind: str
    dt: float
    reproject_every: int
    aborted: str | None = None

    def at(self, tau: float) -> np.ndarray:
        """Linear interpolation of X at time tau (clamped to the range)."""
        taus = self.taus
        if tau <= taus[0]:
            return self.xs[0].copy()
        if tau >= taus[-1]:
            return self.xs[-1].copy()
        i = int(np.searchsorted(taus, tau))
        w = (tau - taus[i - 1]) / (taus[i] - taus[i - 1])
        return (1.0 - w) * self.xs[i - 1] + w * self.xs[i]


def _gershgorin_radius(h: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(h), axis=1)))


def tangent_projector(e: EigenDecomposition, rank: int) -> np.ndarray:
    """I minus the projector onto the top-``rank`` eigenvectors."""
    d = e.dim
    cols = e.vectors[:, :rank]
    return np.eye(d) - cols @ cols.T


def _descend(loss, x, tol, max_steps, fixed_dt, values_out=None):
    """RK4 descent core; returns (point, grad_norm) or raises."""
    x = loss.check_point(np.array(x, dtype=float))
    g = loss.grad(x)
    gnorm = float(np.linalg.norm(g))
    if gnorm <= tol:
        return x, gnorm

    radius = _gershgorin_radius(hessian(loss, x))
    dt_cap = 1.0 / radius if radius > 0.0 else 1.0
    dt = fixed_dt if fixed_dt is not None else dt_cap / 8.0
    val = loss.value(x)
    if values_out is not None:
        values_out.append(val)

    for _ in range(max_steps):
        k1 = -g
        k2 = -loss.grad(x + 0.5 * dt * k1)
        k3 = -loss.grad(x + 0.5 * dt * k2)
        k4 = -loss.grad(x + dt * k3)
        x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        val_new = loss.value(x_new)
        if not np.isfinite(val_new) or val_new > val + 1e-12 * (1.0 + abs(val)):
            if fixed_dt is not None:
                raise ConvergenceError(
                    f"fixed-step descent increased the loss at dt={dt}"
                )
            dt *= 0.5
            if dt < 1e-14 * dt_cap:
                raise ConvergenceError("descent step collapsed to zero")
            continue
        x, val = x_new, val_new
        if values_out is not None:
            values_out.append(val)
        g = loss.grad(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            return x, gnorm
        if fixed_dt is None:
            dt = min(dt * 1.25, dt_cap)
    raise ConvergenceError(
        f"gradient flow did not converge within {max_steps} steps "
        f"(|grad| = {gnorm:.3e} > {tol:.1e}); the start may lie outside "
        "the attraction set"
    )


def _point_data(loss, p, gnorm, rank_tol):
    e = eig_sym(hessian(loss, p), rank_tol=rank_tol)
    rank = numerical_rank(e)
    return ManifoldPoint(
        p=p,
        residual_grad_norm=gnorm,
        spectrum=e,
        rank=rank,
        tangent_projector=tangent_projector(e, rank),
        converged=True,
    )


def phi(loss: LossModel, x: np.ndarray, opts: PhiOptions | None = None) -> ManifoldPoint:
    """Limit point of the gradient flow started at x.

    Raises ConvergenceError when the step budget runs out before the
    gradient norm reaches the tolerance, which numerically flags x as
    outside the attraction set.
    """
    opts = opts or PhiOptions()
    if opts.use_kernel and opts.fixed_dt is None and not opts.track_values:
        from . import kernels

        fast = kernels.phi_fast(loss, np.asarray(x, dtype=float), opts.tol, opts.max_steps)
        if fast is not None:
            p, gnorm = fast
            return _point_data(loss, p, gnorm, opts.rank_tol)
    values = [] if opts.track_values else None
    p, gnorm = _descend(loss, x, opts.tol, opts.max_steps, opts.fixed_dt, values)
    point = _point_data(loss, p, gnorm, opts.rank_tol)
    if values is not None:
        point.loss_values = np.array(values)
    return point


def phi_annihilation_residual(
    loss: LossModel,
    x: np.ndarray,
    h: float = 1e-4,
    direction: np.ndarray | None = None,
    opts: PhiOptions | None = None,
) -> float:
    """Finite-difference norm of the limit map's derivative along a direction.

    With the default direction (the normalized gradient) this estimates
    |dPhi(x) g|, which vanishes identically: displacing the start along
    its own flow line cannot change the landing point.  Both limit points
    are computed with a shared fixed step size so discretization bias
    cancels between the two evaluations.
    """
    opts = opts or PhiOptions()
    x = loss.check_point(np.array(x, dtype=float))
    if direction is None:
        g = loss.grad(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm <= 1e-14 * (1.0 + float(np.linalg.norm(x))):
            raise ZeroGradientError("no gradient direction at x")
        direction = g / gnorm
    else:
        direction = np.asarray(direction, dtype=float)
        direction = direction / np.linalg.norm(direction)

    radius = _gershgorin_radius(hessian(loss, x))
    dt = (1.0 / radius if radius > 0.0 else 1.0) / 4.0
    p_plus, _ = _descend(loss, x + h * direction, opts.tol, opts.max_steps, dt)
    p_minus, _ = _descend(loss, x - h * direction, opts.tol, opts.max_steps, dt)
    return float(np.linalg.norm(p_plus - p_minus) / (2.0 * h))


def grad_lambda1(
    loss: LossModel, p: np.ndarray, gap_rtol: float = DEFAULT_GAP_RTOL
) -> np.ndarray:
    """Gradient of x -> lambda_1(hessian(x)) at a point with an eigengap.

    Uses the variational identity: the gradient equals the second
    directional derivative of grad L along the top eigenvector.
    """
    e = eig_sym(hessian(loss, p))
    lam1, lam2 = e.values[0], e.values[1]
    if lam1 - lam2 <= gap_rtol * max(abs(lam1), 1e-300):
        raise EigengapError(
            f"top eigenvalue not separated (lambda1={lam1:.6g}, lambda2={lam2:.6g})"
        )
    return third_directional(loss, p, e.vectors[:, 0])


def grad_trace(loss: LossModel, p: np.ndarray) -> np.ndarray:
    """Central finite differences of x -> Tr(hessian(x))."""
    p = loss.check_point(np.array(p, dtype=float))
    h = fd_step_third(p)
    d = loss.dimension
    out = np.empty(d)
    for j in range(d):
        e = np.zeros(d)
        e[j] = h
        tp = float(np.trace(hessian(loss, p + e)))
        tm = float(np.trace(hessian(loss, p - e)))
        out[j] = (tp - tm) / (2.0 * h)
    return out


def riemannian_flow(
    loss: LossModel,
    x_init: np.ndarray,
    kind: str,
    t_end: float,
    dt: float = 1e-3,
    reproject_every: int = 10,
    gap_rtol: float = DEFAULT_GAP_RTOL,
    phi_opts: PhiOptions | None = None,
) -> FlowSolution:
    """Integrate the projected descent flow of a curvature functional.

    kind selects the scalar field S: "lambda1" (top Hessian eigenvalue;
    requires an eigengap along the way) or "trace" (Hessian trace).  The
    state starts at phi(x_init), moves by explicit Euler on
    -1/2 P_tangent grad S, and is reprojected onto the minimizer set by
    ``phi`` every ``reproject_every`` steps.  On mid-flow failure
    (eigengap loss or reprojection failure) the solution collected so far
    is returned with ``aborted`` set.
    """
    if kind not in ("lambda1", "trace"):
        raise ValueError(f"kind must be 'lambda1' or 'trace', got {kind!r}")
    if t_end < 0.0 or dt <= 0.0:
        raise ValueError("need t_end >= 0 and dt > 0")
    phi_opts = phi_opts or PhiOptions()

    start = phi(loss, x_init, phi_opts)
    rank = start.rank
    x = start.p.copy()
    n_steps = int(round(t_end / dt))
    taus = [0.0]
    xs = [x.copy()]
    aborted = None

    for step in range(n_steps):
        try:
            e = eig_sym(hessian(loss, x), rank_tol=phi_opts.rank_tol)
            if kind == "lambda1":
                lam1, lam2 = e.values[0], e.values[1]
                if lam1 - lam2 <= gap_rtol * max(abs(lam1), 1e-300):
                    raise EigengapError(
                        f"eigengap lost at tau={step * dt:.6g} "
                        f"(lambda1={lam1:.6g}, lambda2={lam2:.6g})"
                    )
                field = third_directional(loss, x, e.vectors[:, 0])
            else:
                field = grad_trace(loss, x)
            proj = tangent_projector(e, rank)
            x = x - 0.5 * dt * (proj @ field)
            if (step + 1) % reproject_every == 0 or step + 1 == n_steps:
                x = phi(loss, x, phi_opts).p
        except (EigengapError, ConvergenceError) as exc:
            aborted = str(exc)
            break
        taus.append((step + 1) * dt)
        xs.append(x.copy())

    return FlowSolution(
        taus=np.array(taus),
        xs=np.array(xs),
        kind=kind,
        dt=dt,
        reproject_every=reproject_every,
        aborted=aborted,
    )
