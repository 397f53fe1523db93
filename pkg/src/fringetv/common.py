"""Solver configuration, the (phi, a, b) estimate, and the run report."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .linsolve import LinSolveConfig


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 10.0
    r: float = 11.5
    beta: float = 1e-3
    eps: float = 1e-5
    max_outer_iters: int = 20000
    linsolve: LinSolveConfig = field(default_factory=LinSolveConfig)
    seed: int = 0
    # smoothing used only when the energy is logged
    energy_beta: float = 1e-6
    sweep: str = "gauss-seidel"

    def __post_init__(self):
        for name in ("lam", "r", "beta", "eps"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive and finite, got {v}")
        if self.sweep not in ("gauss-seidel", "jacobi"):
            raise ValueError(f"unknown sweep {self.sweep!r}")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class FringeEstimate:
    phi: np.ndarray
    b: np.ndarray
    a: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "FringeEstimate":
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape))

    def psi(self, omega) -> np.ndarray:
        return omega + self.phi

    def copy(self) -> "FringeEstimate":
        return FringeEstimate(self.phi.copy(), self.b.copy(), self.a.copy())


@dataclass
class TraceRow:
    iter: int
    rel_phi: Optional[float] = None
    rel_b: Optional[float] = None
    rel_a: Optional[float] = None
    energy: Optional[float] = None
    res_q_phi: Optional[float] = None
    res_q_b: Optional[float] = None
    res_q_a: Optional[float] = None
    q_err: Optional[float] = None
    wall_ms: Optional[float] = None


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))


@dataclass
class RunReport:
    method: str
    rows: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    inner_iterations: int = 0
    final: Optional[TraceRow] = None

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows])

    @property
    def wall_ms(self) -> float:
        return self.rows[-1].wall_ms if self.rows and self.rows[-1].wall_ms is not None else 0.0
