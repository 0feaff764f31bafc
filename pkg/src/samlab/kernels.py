"""Backend selection for the hot loops.

At import time this module picks the compiled extension
(``samlab._fastloops``) when it is built, else the pure-Python
transliteration (``samlab._pyloops``).  Both expose the same functions
and produce bit-identical trajectories.  Set SAMLAB_BACKEND=python or
SAMLAB_BACKEND=compiled to force a choice (the latter raises if the
extension is missing).

``run_fast``/``phi_fast`` return None when no specialization matches the
(loss, algorithm) pair, in which case callers fall back to the generic
reference implementations.
"""

import os

import numpy as np

from .errors import StepFailure
from .losses import LossModel, QuadraticLoss, Toy4DLoss

__all__ = ["backend", "implementations", "run_fast", "phi_fast"]

_pure = None
_compiled = None


def _load():
    global _pure, _compiled
    from . import _pyloops as _pure_mod

    _pure = _pure_mod
    try:
        from . import _fastloops as _fast_mod

        _compiled = _fast_mod
    except ImportError:
        _compiled = None


_load()

_choice = os.environ.get("SAMLAB_BACKEND", "")
if _choice == "python":
    _impl = _pure
elif _choice == "compiled":
    if _compiled is None:
        raise ImportError(
            "SAMLAB_BACKEND=compiled but the samlab._fastloops extension "
            "is not built; reinstall with the extension or unset the variable"
        )
    _impl = _compiled
elif _choice:
    raise ValueError(f"SAMLAB_BACKEND must be 'python' or 'compiled', got {_choice!r}")
else:
    _impl = _compiled if _compiled is not None else _pure


def backend() -> str:
    """Name of the active backend: 'compiled' or 'python'."""
    return _impl.BACKEND_NAME


def implementations() -> dict:
    """All importable backends, keyed by name (for tests and benchmarks)."""
    out = {"python": _pure}
    if _compiled is not None:
        out["compiled"] = _compiled
    return out


_ALG_CODES = {"gd": 0, "sam": 1, "one_sam": 2, "asc_gd": 3}


def _wrap(result, algorithm):
    ts, xs, values, gnorms, status, fail_step = result
    error = None
    if status == 1:
        error = StepFailure(int(fail_step), "non-finite iterate")
    elif status == 2:
        error = StepFailure(
            int(fail_step), "ascent-direction loss undefined at zero gradient"
        )
    return (
        np.asarray(ts, dtype=np.int64),
        np.asarray(xs),
        np.asarray(values),
        np.asarray(gnorms),
        error,
    )


def run_fast(loss: LossModel, algorithm: str, x, cfg, n_steps, record_every):
    """Run a specialized loop if one exists for (loss, algorithm)."""
    code = _ALG_CODES[algorithm]
    x = np.ascontiguousarray(x, dtype=float)
    fb = np.ascontiguousarray(cfg.fallback(loss.dimension), dtype=float)
    if type(loss) is Toy4DLoss:
        result = _impl.toy4d_run(
            code, x, cfg.eta, cfg.rho, fb, cfg.seed, n_steps, record_every
        )
        return _wrap(result, algorithm)
    if type(loss) is QuadraticLoss and algorithm in ("gd", "sam"):
        a = np.ascontiguousarray(loss.a, dtype=float)
        result = _impl.quad_run(
            code, a, x, cfg.eta, cfg.rho, fb, n_steps, record_every
        )
        return _wrap(result, algorithm)
    return None


def phi_fast(loss: LossModel, x, tol, max_steps):
    """Specialized descent-to-the-limit map; None when not specialized."""
    if type(loss) is Toy4DLoss:
        x = np.ascontiguousarray(x, dtype=float)
        p, gnorm, status = _impl.toy4d_phi(x, tol, max_steps)
        if status != 0:
            from .errors import ConvergenceError

            raise ConvergenceError(
                f"gradient flow did not converge (status {status}, "
                f"|grad| = {gnorm:.3e} > {tol:.1e})"
            )
        return np.asarray(p), float(gnorm)
    return None
