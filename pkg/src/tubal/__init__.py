"""Recovery of third-order tensors with low tubal rank.

The t-product algebra lives in :mod:`tubal.tensor_core`, the tensor SVD and
hard thresholding in :mod:`tubal.tsvd`, measurement operators and objectives
in :mod:`tubal.objectives`, and the iterative solvers in
:mod:`tubal.solvers`. :mod:`tubal.estimator` wraps the solvers as
scikit-learn estimators.
"""

__version__ = "0.1.0"

from .data import (gen_gaussian_op, gen_lowrank, make_checkerboard, make_facade,
                   occlude_center, recovery_error)
from .estimator import TubalImputer, TubalRankProjector, TubalSensingRegressor
from .exceptions import (ArgumentError, DivergenceError, FormatError, NumericalError,
                         ShapeError, SVDError, TubalError)
from .experiments import ExperimentSpec, run_experiment
from .objectives import (MeasurementOp, SamplingDistribution, SeparableObjective,
                         cs_objective, estimate_rip, inpainting_objective, noisy_observe)
from .ppm import load_image, save_image
from .solvers import RunTrace, SolverConfig, aistht, bstoistht, istht, solve, stoistht
from .tensor_core import (bcirc, fold, identity_tensor, read_tns3, tprod, ttranspose,
                          unfold, write_tns3)
from .tsvd import stht, tsvd, tubal_rank

__all__ = [
    "ArgumentError", "DivergenceError", "ExperimentSpec", "FormatError", "MeasurementOp",
    "NumericalError", "RunTrace", "SVDError", "SamplingDistribution", "SeparableObjective",
    "ShapeError", "SolverConfig", "TubalError", "TubalImputer", "TubalRankProjector",
    "TubalSensingRegressor", "aistht", "bcirc", "bstoistht", "cs_objective", "estimate_rip",
    "fold", "gen_gaussian_op", "gen_lowrank", "identity_tensor", "inpainting_objective",
    "istht", "load_image", "make_checkerboard", "make_facade", "noisy_observe",
    "occlude_center", "read_tns3", "recovery_error", "run_experiment", "save_image",
    "solve", "stht", "stoistht", "tprod", "tsvd", "ttranspose", "tubal_rank", "unfold",
    "write_tns3",
]
