"""Sparse acoustic source characterisation from cross-spectral matrices.

Fits ``A X A^H ~ C`` with an l1 penalty on ``X`` using split Bregman
iterations, either over full matrices with entrywise weights or directly
over diagonal matrices, then clusters the recovered diagonal into sources.
"""

from .errors import (
    DimensionError,
    DivergenceError,
    GeometryError,
    InsufficientDataError,
    NumericalError,
    OversizeError,
    ParameterError,
    ScenarioError,
    SparseCSMError,
)
from .linalg import check_solvable, frob_inner, frob_norm_sq, kron, pinv, vec
from .postprocess import choose_k, kmeans, remap_diagonal, summarize
from .propagation import build_steering_matrix, steering_coeff
from .prox import shrink_complex, shrink_real
from .scenario import Scenario, load_builtin, load_scenario
from .solvers import (
    SolveReport,
    SolverConfig,
    grad_diagonal,
    grad_unstructured,
    objective_weighted,
    optimal_step,
    solve_structured,
    solve_weighted,
)
from .spectra import CrossSpectralMatrix, welch_csm
from .synthesis import estimate_csm, perturb_mic_positions, synthesize_block_spectra, true_solution

__version__ = "0.1.0"

__all__ = [
    "CrossSpectralMatrix",
    "DimensionError",
    "DivergenceError",
    "GeometryError",
    "InsufficientDataError",
    "NumericalError",
    "OversizeError",
    "ParameterError",
    "Scenario",
    "ScenarioError",
    "SolveReport",
    "SolverConfig",
    "SparseCSMError",
    "build_steering_matrix",
    "check_solvable",
    "choose_k",
    "estimate_csm",
    "frob_inner",
    "frob_norm_sq",
    "grad_diagonal",
    "grad_unstructured",
    "kmeans",
    "kron",
    "load_builtin",
    "load_scenario",
    "objective_weighted",
    "optimal_step",
    "perturb_mic_positions",
    "pinv",
    "remap_diagonal",
    "shrink_complex",
    "shrink_real",
    "solve_structured",
    "solve_weighted",
    "steering_coeff",
    "summarize",
    "synthesize_block_spectra",
    "true_solution",
    "vec",
    "welch_csm",
]
