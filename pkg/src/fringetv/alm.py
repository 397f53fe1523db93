"""Augmented Lagrangian demodulation of a single fringe pattern.

The TV terms of phi, b and a are split off through auxiliary fields
``q_d ~ grad d`` with multipliers ``mu_d``.  One outer iteration is a primal
sweep (three screened-Poisson solves with the data terms linearized about
iterate k), a vector shrinkage for every ``q_d``, and a multiplier ascent step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .common import FringeEstimate, RunReport, SolverConfig, TraceRow
from .fields import (as_scalar, check_same_shape, constraint_residual, div, grad,
                     relative_change, soft_threshold)
from .fp import energy
from .linsolve import ScreenedPoissonOperator, cg_solve
from .synth import q_error

VARIABLES = ("phi", "b", "a")


@dataclass
class AlmState:
    estimate: FringeEstimate
    q_phi: np.ndarray
    q_b: np.ndarray
    q_a: np.ndarray
    mu_phi: np.ndarray
    mu_b: np.ndarray
    mu_a: np.ndarray
    iteration: int = 0
    inner_iterations: int = 0

    @classmethod
    def initial(cls, shape) -> "AlmState":
        z = lambda: np.zeros((2,) + tuple(shape))  # noqa: E731
        return cls(FringeEstimate.zeros(shape), z(), z(), z(), z(), z(), z())

    def q(self, name):
        return getattr(self, "q_" + name)

    def mu(self, name):
        return getattr(self, "mu_" + name)

    def var(self, name):
        return getattr(self.estimate, name)


def alm_primal_step(state: AlmState, g, omega, cfg: SolverConfig, stats=None) -> FringeEstimate:
    """Solve the three linearized primal systems in the order phi, b, a.

    With ``cfg.sweep == "gauss-seidel"`` the b and a systems see the freshly
    updated phi (through psi) and b; with ``"jacobi"`` every coefficient and
    right-hand side uses iterate k.  ``stats``, when given, is a list that
    receives the ``CGResult`` of each solve.
    """
    lam, r = cfg.lam, cfg.r
    seidel = cfg.sweep == "gauss-seidel"
    phi, b, a = state.estimate.phi, state.estimate.b, state.estimate.a

    def solve(name, coeff, data_rhs):
        rhs = data_rhs - div(state.mu(name) + r * state.q(name))
        res = cg_solve(ScreenedPoissonOperator(coeff, r), rhs, state.var(name), cfg.linsolve)
        if stats is not None:
            stats.append(res)
        return res.x

    psi = omega + phi
    s, c = np.sin(psi), np.cos(psi)
    bs = b * s
    # lam (a b sin + b^2 cos sin + phi b^2 sin^2 - g b sin)
    phi_new = solve("phi", lam * bs * bs, lam * bs * (a + b * c + phi * bs - g))
    if seidel:
        c = np.cos(omega + phi_new)
    b_new = solve("b", lam * c * c, -lam * (a - g) * c)
    a_new = solve("a", np.full(g.shape, lam), -lam * ((b_new if seidel else b) * c - g))
    return FringeEstimate(phi_new, b_new, a_new)


def alm_shrink_step(state: AlmState, cfg: SolverConfig):
    """``q_d = shrink(r grad d - mu_d, r)`` for phi, b, a (uses the updated primal)."""
    return tuple(soft_threshold(cfg.r * grad(state.var(n)) - state.mu(n), cfg.r) for n in VARIABLES)


def alm_multiplier_update(state: AlmState, cfg: SolverConfig):
    return tuple(state.mu(n) + cfg.r * (state.q(n) - grad(state.var(n))) for n in VARIABLES)


def alm_iteration(state: AlmState, g, omega, cfg: SolverConfig) -> AlmState:
    stats = []
    est = alm_primal_step(state, g, omega, cfg, stats)
    nxt = AlmState(est, state.q_phi, state.q_b, state.q_a, state.mu_phi, state.mu_b, state.mu_a,
                   state.iteration + 1, state.inner_iterations + sum(s.iterations for s in stats))
    nxt.q_phi, nxt.q_b, nxt.q_a = alm_shrink_step(nxt, cfg)
    nxt.mu_phi, nxt.mu_b, nxt.mu_a = alm_multiplier_update(nxt, cfg)
    return nxt


def alm_demodulate(g, omega, cfg: SolverConfig | None = None, truth=None, log_energy: bool = True,
                   return_state: bool = False):
    """Demodulate ``g`` given the carrier ``omega``; returns ``(estimate, report)``.

    Starts from all-zero primal, auxiliary and multiplier fields and stops when
    the relative changes of phi, b and a are all ``<= cfg.eps``.
    """
    cfg = cfg or SolverConfig()
    g = as_scalar(g, "g")
    omega = as_scalar(omega, "omega")
    check_same_shape(g, omega)
    if truth is not None:
        truth = as_scalar(truth, "truth")
        check_same_shape(g, truth)

    state = AlmState.initial(g.shape)
    report = RunReport(method="alm")
    t0 = time.perf_counter()
    for _ in range(cfg.max_outer_iters):
        prev = state.estimate
        state = alm_iteration(state, g, omega, cfg)
        est = state.estimate
        rels = (relative_change(est.phi, prev.phi),
                relative_change(est.b, prev.b),
                relative_change(est.a, prev.a))
        row = TraceRow(iter=state.iteration, rel_phi=rels[0], rel_b=rels[1], rel_a=rels[2],
                       res_q_phi=constraint_residual(state.q_phi, est.phi),
                       res_q_b=constraint_residual(state.q_b, est.b),
                       res_q_a=constraint_residual(state.q_a, est.a))
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
    if return_state:
        return state.estimate, report, state
    return state.estimate, report
