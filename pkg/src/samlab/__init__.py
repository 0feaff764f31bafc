"""samlab: a numerical laboratory for sharpness-aware minimization dynamics.

Small dense losses with known minimizer sets, the perturbed-gradient
optimizer family, three sharpness functionals, the gradient-flow limit
map, and the projected curvature flows they track, plus an experiment
harness exposing everything on the command line.
"""

from .eigen import EigenDecomposition, eig_sym, numerical_rank, spectral_projector
from .errors import (
    ConvergenceError,
    EigengapError,
    NonFiniteError,
    SamlabError,
    StepFailure,
    ZeroGradientError,
)
from .kernels import backend
from .lossfile import load_loss
from .losses import (
    FactoredRegressionLoss,
    LossModel,
    PolynomialMap,
    QuadraticLoss,
    Toy4DLoss,
    component,
    evaluate,
    hessian,
    third_directional,
)
from .manifold import (
    FlowSolution,
    ManifoldPoint,
    PhiOptions,
    grad_lambda1,
    grad_trace,
    phi,
    phi_annihilation_residual,
    riemannian_flow,
)
from .optim import (
    OptimizerConfig,
    RngState,
    Trajectory,
    asc_gd_step,
    gd_step,
    one_sam_step,
    run,
    sam_step,
)
from .sharpness import (
    ASCENT_UNDEFINED,
    LimitingRegularizers,
    SharpnessReport,
    WorstOptions,
    alignment_angle,
    ascent_sharpness,
    avg_sharpness,
    limiting_regularizers,
    phase_residual,
    worst_sharpness,
)

__version__ = "0.1.0"
