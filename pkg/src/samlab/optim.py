"""Discrete-time steppers and a trajectory runner.

Four update rules on a loss model L with learning rate eta and
perturbation radius rho:

``gd``       x - eta * grad L(x)
``sam``      x - eta * grad L(x + rho * g),   g = grad L(x) normalized
``one_sam``  the same rule applied to a single uniformly sampled
             per-datum component, used for both the perturbation and the
             descent gradient
``asc_gd``   exact gradient descent on the perturbed-along-the-gradient
             loss  x -> L(x + rho * g(x)),  differentiated through g by
             the chain rule

When the gradient vanishes (below 1e-14 * (1 + |x|)), the normalized
direction in ``sam``/``one_sam`` is replaced by the configured unit-norm
fallback direction.  ``asc_gd`` is undefined there and raises instead.

Single-datum sampling uses the counter-based generator in ``_rng``; the
index drawn at step t is a pure function of (seed, t), so sequences are
reproducible and independent of which inner-loop implementation runs.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _rng
from .errors import NonFiniteError, StepFailure, ZeroGradientError
from .losses import LossModel

__all__ = [
    "OptimizerConfig",
    "RngState",
    "Trajectory",
    "ZERO_GRAD_RTOL",
    "gd_step",
    "sam_step",
    "one_sam_step",
    "asc_gd_step",
    "ascent_loss_gradient",
    "run",
    "ALGORITHMS",
]

#: A gradient with norm below this times (1 + |x|) counts as zero.
ZERO_GRAD_RTOL = 1e-14

ALGORITHMS = ("gd", "sam", "one_sam", "asc_gd")


@dataclass(frozen=True)
class OptimizerConfig:
    """Stepper hyperparameters.

    fallback_dir is the unit vector used in place of the normalized
    gradient when the gradient vanishes; None means e_1 in the loss's
    dimension.
    """

    eta: float
    rho: float = 0.0
    fallback_dir: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.eta) or self.eta <= 0.0:
            raise ValueError(f"eta must be finite and positive, got {self.eta}")
        if not np.isfinite(self.rho) or self.rho < 0.0:
            raise ValueError(f"rho must be finite and >= 0, got {self.rho}")
        if self.fallback_dir is not None:
            fb = np.asarray(self.fallback_dir, dtype=float)
            if abs(np.linalg.norm(fb) - 1.0) > 1e-10:
                raise ValueError("fallback_dir must have unit norm")
            object.__setattr__(self, "fallback_dir", fb)

    def fallback(self, dimension: int) -> np.ndarray:
        if self.fallback_dir is not None:
            if self.fallback_dir.shape != (dimension,):
                raise ValueError("fallback_dir dimension mismatch")
            return self.fallback_dir
        e1 = np.zeros(dimension)
        e1[0] = 1.0
        return e1


@dataclass
class RngState:
    """Counter state for single-datum sampling."""

    seed: int
    t: int = 0

    def next_index(self, m: int) -> int:
        k = _rng.component_index(self.seed, self.t, m)
        self.t += 1
        return k


def _is_zero_grad(g: np.ndarray, x: np.ndarray) -> bool:
    return np.linalg.norm(g) <= ZERO_GRAD_RTOL * (1.0 + np.linalg.norm(x))


def gd_step(loss: LossModel, x: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    x = loss.check_point(x)
    return x - cfg.eta * loss.grad(x)


def _perturbed_grad_step(loss, x, cfg):
    g = loss.grad(x)
    if _is_zero_grad(g, x):
        direction = cfg.fallback(loss.dimension)
    else:
        direction = g / np.linalg.norm(g)
    return x - cfg.eta * loss.grad(x + cfg.rho * direction)


def sam_step(loss: LossModel, x: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    """One update of the perturbed-gradient rule on the full loss."""
    x = loss.check_point(x)
    return _perturbed_grad_step(loss, x, cfg)


def one_sam_step(
    loss: LossModel, x: np.ndarray, cfg: OptimizerConfig, rng: RngState
) -> tuple[np.ndarray, int]:
    """One update on a uniformly sampled component; returns (x_new, k)."""
    x = loss.check_point(x)
    k = rng.next_index(loss.component_count)
    return _perturbed_grad_step(loss.component(k), x, cfg), k


def ascent_loss_gradient(loss: LossModel, x: np.ndarray, rho: float) -> np.ndarray:
    """Exact gradient of x -> L(x + rho * grad L(x) / |grad L(x)|).

    Chain rule: (I + rho * J_g)^T grad L(x + rho g) with
    J_g = H/|g| - grad L (grad L^T H) / |g|^3, H the Hessian at x.
    Undefined at zero gradient.
    """
    x = loss.check_point(x)
    g = loss.grad(x)
    gnorm = float(np.linalg.norm(g))
    if _is_zero_grad(g, x):
        raise ZeroGradientError(
            f"ascent-direction loss undefined at zero gradient (|g|={gnorm:.3e})"
        )
    h = loss.hessian(x)
    ghat = g / gnorm
    gp = loss.grad(x + rho * ghat)
    jg = h / gnorm - np.outer(g, g @ h) / gnorm**3
    return gp + rho * (jg.T @ gp)


def asc_gd_step(loss: LossModel, x: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    return x - cfg.eta * ascent_loss_gradient(loss, x, cfg.rho)


@dataclass
class Trajectory:
    """Recorded iterates of a stepper.

    Rows are the steps 0, record_every, 2*record_every, ... plus the final
    step.  ``diagnostics`` holds per-record arrays keyed by diagnostic
    name.  When a step fails, ``error`` carries the failure and the arrays
    hold the records up to (and including) the last finite iterate.
    """

    ts: np.ndarray
    xs: np.ndarray
    values: np.ndarray
    grad_norms: np.ndarray
    record_every: int
    algorithm: str
    diagnostics: dict = field(default_factory=dict)
    error: StepFailure | None = None

    def __len__(self):
        return self.ts.shape[0]

    @property
    def final_x(self) -> np.ndarray:
        return self.xs[-1]


_DIAGNOSTICS = ("alignment_angle", "phi_distance", "worst_sharpness")


def _compute_diagnostics(names, loss, xs, cfg):
    # Imported lazily: diagnostics are defined in higher-level modules.
    from . import manifold as _manifold
    from . import sharpness as _sharpness

    out = {}
    cache = [None] * len(xs)

    def phi_of(i):
        if cache[i] is None:
            cache[i] = _manifold.phi(loss, xs[i])
        return cache[i]

    if "phi_distance" in names:
        out["phi_distance"] = np.array(
            [np.linalg.norm(xs[i] - phi_of(i).p) for i in range(len(xs))]
        )
    if "alignment_angle" in names:
        vals = []
        for i in range(len(xs)):
            try:
                vals.append(_sharpness.alignment_angle(loss, xs[i], point=phi_of(i)))
            except ZeroGradientError:
                vals.append(np.nan)
        out["alignment_angle"] = np.array(vals)
    if "worst_sharpness" in names:
        out["worst_sharpness"] = np.array(
            [_sharpness.worst_sharpness(loss, x, cfg.rho)[0] for x in xs]
        )
    return out


def run(
    loss: LossModel,
    algorithm: str,
    x0: np.ndarray,
    cfg: OptimizerConfig,
    n_steps: int,
    record_every: int = 1,
    diagnostics: tuple[str, ...] = (),
) -> Trajectory:
    """Apply a stepper n_steps times, recording every record_every steps.

    The fast compiled kernel is used when one matches (see ``kernels``);
    otherwise the reference steppers above run in a Python loop.  Both
    paths share the recording rule and the sampling sequence.
    """
    from . import kernels  # lazy: kernels imports this module's config type

    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected {ALGORITHMS}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    for name in diagnostics:
        if name not in _DIAGNOSTICS:
            raise ValueError(f"unknown diagnostic {name!r}; expected {_DIAGNOSTICS}")
    x = loss.check_point(np.array(x0, dtype=float))

    fast = kernels.run_fast(loss, algorithm, x, cfg, n_steps, record_every)
    if fast is not None:
        ts, xs, values, gnorms, error = fast
        traj = Trajectory(
            ts=ts,
            xs=xs,
            values=values,
            grad_norms=gnorms,
            record_every=record_every,
            algorithm=algorithm,
            error=error,
        )
    else:
        traj = _run_reference(loss, algorithm, x, cfg, n_steps, record_every)

    if diagnostics and traj.error is None:
        traj.diagnostics.update(
            _compute_diagnostics(diagnostics, loss, traj.xs, cfg)
        )
    return traj


def _run_reference(loss, algorithm, x, cfg, n_steps, record_every):
    rng = RngState(cfg.seed)
    ts, xs, values, gnorms = [], [], [], []
    error = None

    def record(t, xt):
        ts.append(t)
        xs.append(xt.copy())
        values.append(loss.value(xt))
        gnorms.append(float(np.linalg.norm(loss.grad(xt))))

    record(0, x)
    last_recorded = 0
    for t in range(n_steps):
        try:
            if algorithm == "gd":
                x_new = gd_step(loss, x, cfg)
            elif algorithm == "sam":
                x_new = sam_step(loss, x, cfg)
            elif algorithm == "one_sam":
                x_new, _ = one_sam_step(loss, x, cfg, rng)
            else:
                x_new = asc_gd_step(loss, x, cfg)
        except (ZeroGradientError, NonFiniteError) as exc:
            error = StepFailure(t, str(exc))
            break
        if not np.all(np.isfinite(x_new)):
            error = StepFailure(t, f"non-finite iterate {x_new!r}")
            break
        x = x_new
        if (t + 1) % record_every == 0 and t + 1 != n_steps:
            record(t + 1, x)
            last_recorded = t + 1
    if error is not None:
        # keep the last finite iterate in the record
        t_good = error.step
        if t_good != last_recorded and t_good > 0:
            record(t_good, x)
    elif n_steps > 0:
        record(n_steps, x)

    return Trajectory(
        ts=np.array(ts, dtype=np.int64),
        xs=np.array(xs),
        values=np.array(values),
        grad_norms=np.array(gnorms),
        record_every=record_every,
        algorithm=algorithm,
        error=error,
    )
