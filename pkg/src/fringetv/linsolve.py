"""Screened-Poisson operators ``c(x) Id - r div(kappa grad)`` and a CG solver.

Every primal update in the demodulators reduces to one of these symmetric
positive (semi-)definite systems.  The solver is Jacobi-preconditioned CG;
the coefficients vary per pixel, which rules out a plain FFT solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import _kernels
from .fields import as_scalar, check_same_shape


class LinearSolveError(RuntimeError):
    """Raised when CG produces a non-finite iterate."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (CG iteration {iteration})")
        self.iteration = iteration


@dataclass(frozen=True)
class LinSolveConfig:
    rel_residual_tol: float = 1e-6
    max_inner_iters: int = 200
    nullspace_shift: float = 1e-12
    jacobi: bool = True

    def __post_init__(self):
        if self.rel_residual_tol <= 0:
            raise ValueError("rel_residual_tol must be positive")
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")


@dataclass
class ScreenedPoissonOperator:
    """``A d = coeff * d - r * div(diffusivity * grad d)``.

    ``diffusivity`` defaults to all ones (plain Laplacian).
    """

    coeff: np.ndarray
    r: float
    diffusivity: Optional[np.ndarray] = None

    def __post_init__(self):
        self.coeff = as_scalar(self.coeff, "coeff")
        if self.r <= 0:
            raise ValueError("diffusion weight r must be positive")
        if np.any(self.coeff < 0):
            raise ValueError("coeff must be pointwise >= 0")
        if self.diffusivity is not None:
            self.diffusivity = as_scalar(self.diffusivity, "diffusivity")
            check_same_shape(self.coeff, self.diffusivity)
            if np.any(self.diffusivity <= 0):
                raise ValueError("diffusivity must be pointwise > 0")

    @property
    def shape(self):
        return self.coeff.shape

    def apply(self, d) -> np.ndarray:
        d = as_scalar(d)
        check_same_shape(self.coeff, d)
        return _kernels.apply(self.coeff, self.r, self.diffusivity, d)

    __call__ = apply


def apply(op: ScreenedPoissonOperator, d) -> np.ndarray:
    return op.apply(d)


class CGResult(NamedTuple):
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    history: np.ndarray


def cg_solve(op: ScreenedPoissonOperator, rhs, x0=None, cfg: LinSolveConfig | None = None) -> CGResult:
    """Solve ``op x = rhs`` to ``||A x - rhs|| <= tol * ||rhs||``.

    Hitting ``max_inner_iters`` is not an error; check ``converged``.  When the
    coefficient vanishes everywhere the constant mode is pinned by adding
    ``nullspace_shift`` to it.  ``residual`` is the true final residual norm
    and ``history`` the recurrence residual per iteration.
    """
    cfg = cfg or LinSolveConfig()
    rhs = as_scalar(rhs, "rhs")
    check_same_shape(op.coeff, rhs)
    x0 = np.zeros_like(rhs) if x0 is None else as_scalar(x0, "x0")
    check_same_shape(rhs, x0)
    if not np.all(np.isfinite(rhs)):
        raise LinearSolveError("non-finite right-hand side", 0)

    coeff = op.coeff
    if not np.any(coeff > 0):
        coeff = coeff + cfg.nullspace_shift

    x, iters, hist, status = _kernels.pcg(coeff, op.r, op.diffusivity, rhs, x0,
                                         cfg.rel_residual_tol, cfg.max_inner_iters, cfg.jacobi)
    if status != _kernels.CG_OK:
        raise LinearSolveError("non-finite residual", int(iters))
    res = rhs - _kernels.apply(coeff, op.r, op.diffusivity, x)
    resnorm = float(np.sqrt(np.dot(res.ravel(), res.ravel())))
    bnorm = float(np.sqrt(np.dot(rhs.ravel(), rhs.ravel())))
    last = hist[iters]
    converged = last == 0.0 or last <= cfg.rel_residual_tol * bnorm
    return CGResult(x, int(iters), resnorm, bool(converged), hist[: iters + 1])
