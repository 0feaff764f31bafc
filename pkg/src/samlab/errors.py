"""Exception types shared across the package."""

__all__ = [
    "SamlabError",
    "NonFiniteError",
    "ZeroGradientError",
    "EigengapError",
    "ConvergenceError",
    "StepFailure",
]


class SamlabError(Exception):
    """Base class for package errors."""


class NonFiniteError(SamlabError):
    """A computation produced or received NaN/inf."""


class ZeroGradientError(SamlabError):
    """An operation that needs a gradient direction met a zero gradient."""


class EigengapError(SamlabError):
    """Top eigenvalue is not separated, so its derivative is undefined."""


class ConvergenceError(SamlabError):
    """An iterative procedure exhausted its budget without converging."""


class StepFailure(SamlabError):
    """An optimizer step produced a non-finite iterate.

    Carries the step index at which the run aborted.
    """

    def __init__(self, step: int, message: str):
        super().__init__(f"step {step}: {message}")
        self.step = step
