"""Total-variation phase demodulation of single fringe patterns.

Two solvers for the same TV-regularized fringe model: an augmented Lagrangian
splitting (:func:`alm_demodulate`) and the lagged-diffusivity fixed point
baseline (:func:`fp_demodulate`), plus the ROF denoiser built from the same
parts, synthetic test patterns, and file formats.
"""

from ._kernels import backend
from .alm import AlmState, alm_demodulate
from .common import FringeEstimate, RunReport, SolverConfig, TraceRow
from .fields import GridGeometry, div, grad, magnitude_smoothed, relative_change, soft_threshold
from .fp import energy, fp_demodulate
from .linsolve import CGResult, LinearSolveError, LinSolveConfig, ScreenedPoissonOperator, cg_solve
from .synth import GroundTruth, SyntheticSpec, add_noise, eval_fringe, q_error, synthesize
from .tvdenoise import tv_denoise

__all__ = [
    "AlmState", "CGResult", "FringeEstimate", "GridGeometry", "GroundTruth", "LinSolveConfig",
    "LinearSolveError", "RunReport", "ScreenedPoissonOperator", "SolverConfig", "SyntheticSpec",
    "TraceRow", "add_noise", "alm_demodulate", "backend", "cg_solve", "div", "energy",
    "eval_fringe", "fp_demodulate", "grad", "magnitude_smoothed", "q_error", "relative_change",
    "soft_threshold", "synthesize", "tv_denoise",
]
