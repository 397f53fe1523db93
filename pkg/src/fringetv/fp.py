"""Lagged-diffusivity fixed-point demodulator with beta-smoothed TV weights.

Baseline solver.  Each iteration freezes ``1/sqrt(|grad d|^2 + beta)`` and the
phase-dependent data coefficients at iterate k, linearizes ``cos(psi)`` about
``psi^k``, and solves three screened-Poisson systems for phi, b and a.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .common import FringeEstimate, RunReport, SolverConfig, TraceRow
from .fields import as_scalar, check_same_shape, div, grad, magnitude_smoothed, norm, relative_change
from .linsolve import ScreenedPoissonOperator, cg_solve
from .synth import eval_fringe, q_error


@dataclass
class FpState:
    estimate: FringeEstimate
    psi: np.ndarray
    iteration: int = 0
    inner_iterations: int = 0

    @classmethod
    def initial(cls, omega) -> "FpState":
        est = FringeEstimate.zeros(omega.shape)
        return cls(est, omega + est.phi, 0)


def smoothed_tv(d, beta: float) -> float:
    return float(np.sum(magnitude_smoothed(grad(d), beta)))


def energy(estimate: FringeEstimate, g, omega, lam: float, beta: float) -> float:
    """Discrete objective: ``(lam/2) sum (I - g)^2`` plus smoothed TV of phi, a and b."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    resid = eval_fringe(estimate.a, estimate.b, estimate.phi, omega) - g
    data = 0.5 * lam * float(np.dot(resid.ravel(), resid.ravel()))
    return data + sum(smoothed_tv(d, beta) for d in (estimate.phi, estimate.a, estimate.b))


def data_gradients(estimate: FringeEstimate, g, omega, lam: float):
    """Analytic derivatives of ``(lam/2) sum (I - g)^2`` w.r.t. phi, b, a (per pixel)."""
    psi = omega + estimate.phi
    resid = estimate.a + estimate.b * np.cos(psi) - g
    return (-lam * resid * estimate.b * np.sin(psi),
            lam * resid * np.cos(psi),
            lam * resid)


def euler_lagrange_residuals(estimate: FringeEstimate, g, omega, lam: float, beta: float):
    """Relative norms of the smoothed optimality residuals for phi, b, a."""
    out = []
    for d, dg in zip((estimate.phi, estimate.b, estimate.a), data_gradients(estimate, g, omega, lam)):
        gd = grad(d)
        tv = div(gd / magnitude_smoothed(gd, beta))
        out.append(norm(dg - tv) / max(norm(dg) + norm(tv), 1e-12))
    return tuple(out)


def fp_step(state: FpState, g, omega, cfg: SolverConfig) -> FpState:
    """One k -> k+1 sweep over phi, b, a.

    Diffusivities are always lagged at iterate k.  With ``cfg.sweep ==
    "jacobi"`` every data coefficient uses iterate k; with ``"gauss-seidel"``
    the b and a systems see the phi (and b) already updated in this sweep.
    """
    lam = cfg.lam
    seidel = cfg.sweep == "gauss-seidel"
    phi, b, a = state.estimate.phi, state.estimate.b, state.estimate.a
    inner = 0

    def solve(coeff, d, rhs):
        nonlocal inner
        kappa = 1.0 / magnitude_smoothed(grad(d), cfg.beta)
        res = cg_solve(ScreenedPoissonOperator(coeff, 1.0, kappa), rhs, d, cfg.linsolve)
        inner += res.iterations
        return res.x

    psi = state.psi
    s, c = np.sin(psi), np.cos(psi)
    bs = b * s
    phi_new = solve(lam * bs * bs, phi, lam * bs * (a + b * c + phi * bs - g))
    if seidel:
        c = np.cos(omega + phi_new)
    b_new = solve(lam * c * c, b, -lam * (a - g) * c)
    a_new = solve(np.full(g.shape, lam), a, -lam * ((b_new if seidel else b) * c - g))
    est = FringeEstimate(phi_new, b_new, a_new)
    return FpState(est, omega + est.phi, state.iteration + 1, state.inner_iterations + inner)


def fp_demodulate(g, omega, cfg: SolverConfig | None = None, truth=None, log_energy: bool = True):
    """Run the fixed-point iteration from the all-zero estimate.

    Stops once the relative change of phi, b and a are all ``<= cfg.eps`` or
    after ``cfg.max_outer_iters`` sweeps (then ``report.converged`` is False).
    ``truth`` (a phase map) adds Q to the trace.
    """
    cfg = cfg or SolverConfig()
    g = as_scalar(g, "g")
    omega = as_scalar(omega, "omega")
    check_same_shape(g, omega)
    state = FpState.initial(omega)
    report = RunReport(method="fp")
    t0 = time.perf_counter()
    for _ in range(cfg.max_outer_iters):
        prev = state.estimate
        state = fp_step(state, g, omega, cfg)
        est = state.estimate
        rels = (relative_change(est.phi, prev.phi),
                relative_change(est.b, prev.b),
                relative_change(est.a, prev.a))
        row = TraceRow(iter=state.iteration, rel_phi=rels[0], rel_b=rels[1], rel_a=rels[2])
        if log_energy:
            row.energy = energy(est, g, omega, cfg.lam, cfg.energy_beta)
        if truth is not None:
            row.q_err = q_error(est.phi, truth)
        row.wall_ms = 1e3 * (time.perf_counter() - t0)
        report.append(row)
        if max(rels) <= cfg.eps:
            report.converged = True
            break
    report.iterations = state.iteration
    report.inner_iterations = state.inner_iterations
    report.final = report.rows[-1]
    return state.estimate, report
