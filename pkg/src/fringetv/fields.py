"""Scalar/vector fields on the pixel grid and the shared difference operators.

A scalar field is a 2-D float64 array of shape ``(height, width)`` stored
row-major.  A vector field is a ``(2, height, width)`` array; component 0 is
the difference along columns (x), component 1 along rows (y).  The grid step
is one pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels

#: below this norm a field counts as zero in :func:`relative_change`
ZERO_NORM = 1e-12


@dataclass(frozen=True)
class GridGeometry:
    width: int
    height: int
    spacing: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @classmethod
    def of(cls, field: np.ndarray) -> "GridGeometry":
        return cls(width=field.shape[-1], height=field.shape[-2])


def as_scalar(s, name: str = "field") -> np.ndarray:
    a = np.ascontiguousarray(s, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D (height, width), got shape {a.shape}")
    return a


def as_vector(v, name: str = "vector field") -> np.ndarray:
    a = np.ascontiguousarray(v, dtype=np.float64)
    if a.ndim != 3 or a.shape[0] != 2:
        raise ValueError(f"{name} must have shape (2, height, width), got {a.shape}")
    return a


def check_same_shape(*fields: np.ndarray) -> None:
    shapes = {f.shape[-2:] for f in fields}
    if len(shapes) > 1:
        raise ValueError(f"dimension mismatch: {sorted(shapes)}")


def grad(s) -> np.ndarray:
    """Forward differences with zero flux across the image border.

    ``v[0, j, i] = s[j, i+1] - s[j, i]`` and zero on the last column; the row
    component is defined the same way along axis 0.
    """
    return _kernels.grad(as_scalar(s))


def div(v) -> np.ndarray:
    """Backward-difference divergence, the negative adjoint of :func:`grad`."""
    return _kernels.div(as_vector(v))


def laplacian(s) -> np.ndarray:
    return div(grad(s))


def soft_threshold(w, r: float) -> np.ndarray:
    """Vector shrinkage ``(1/r)(1 - 1/|w|) w`` where ``|w| > 1``, zero elsewhere.

    This is the pointwise minimizer of ``|q| + mu.q + (r/2)|q - p|^2`` with
    ``w = r p - mu``.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    return _kernels.soft_threshold(as_vector(w), r)


def magnitude(v) -> np.ndarray:
    v = as_vector(v)
    return np.sqrt(v[0] * v[0] + v[1] * v[1])


def magnitude_smoothed(v, beta: float) -> np.ndarray:
    """Pointwise ``sqrt(v1^2 + v2^2 + beta)``."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    v = as_vector(v)
    return np.sqrt(v[0] * v[0] + v[1] * v[1] + beta)


def inner(x, y) -> float:
    """Field inner product (sum over all pixels and components)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.dot(x.ravel(), y.ravel()))


def norm(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sqrt(np.dot(x.ravel(), x.ravel())))


def relative_change(curr, prev) -> float:
    """``||curr - prev|| / ||prev||``.

    When ``prev`` is (numerically) zero the ratio is undefined: returns 0.0 if
    ``curr`` equals it as well and ``inf`` otherwise, so a solver started from
    zero always takes another step.
    """
    curr = np.asarray(curr, dtype=np.float64)
    prev = np.asarray(prev, dtype=np.float64)
    if curr.shape != prev.shape:
        raise ValueError(f"dimension mismatch: {curr.shape} vs {prev.shape}")
    diff = norm(curr - prev)
    base = norm(prev)
    if base < ZERO_NORM:
        return 0.0 if diff < ZERO_NORM else float("inf")
    return diff / base


def constraint_residual(q, d) -> float:
    """``||q - grad d|| / max(||grad d||, 1e-12)``."""
    gd = grad(d)
    return norm(as_vector(q) - gd) / max(norm(gd), ZERO_NORM)
