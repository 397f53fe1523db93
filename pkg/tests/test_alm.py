import numpy as np
import pytest
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from fringetv.alm import AlmState, alm_demodulate, alm_iteration, alm_multiplier_update, alm_shrink_step
from fringetv.common import FringeEstimate, SolverConfig
from fringetv.fields import grad, magnitude, norm
from fringetv.linsolve import LinSolveConfig
from fringetv.synth import SyntheticSpec, q_error, synthesize


@pytest.fixture(scope="module")
def small():
    return synthesize(SyntheticSpec(width=64, height=48))


def screened_poisson_matrix(coeff, r):
    """``diag(coeff) - r * Laplacian`` with Neumann boundaries, assembled via Kronecker sums."""
    h, w = coeff.shape

    def d1(n):
        # forward difference with the last row zeroed
        m = sp.lil_matrix((n, n))
        for k in range(n - 1):
            m[k, k], m[k, k + 1] = -1.0, 1.0
        return m.tocsr()

    dx = sp.kron(sp.identity(h), d1(w))
    dy = sp.kron(d1(h), sp.identity(w))
    return sp.diags(coeff.ravel()) + r * (dx.T @ dx + dy.T @ dy)


def test_first_iteration_from_zero(small):
    cfg = SolverConfig(linsolve=LinSolveConfig(rel_residual_tol=1e-12, max_inner_iters=2000))
    st = alm_iteration(AlmState.initial(small.g.shape), small.g, small.omega, cfg)
    lam, r = cfg.lam, cfg.r
    c = np.cos(small.omega)
    # phi: zero coefficient and zero rhs
    assert np.all(st.estimate.phi == 0.0)
    b = spsolve(screened_poisson_matrix(lam * c * c, r).tocsc(), (lam * small.g * c).ravel()).reshape(c.shape)
    a = spsolve(screened_poisson_matrix(np.full(c.shape, lam), r).tocsc(),
                (lam * (small.g - b * c)).ravel()).reshape(c.shape)
    np.testing.assert_allclose(st.estimate.b, b, rtol=0, atol=1e-5)
    np.testing.assert_allclose(st.estimate.a, a, rtol=0, atol=1e-5)
    assert st.iteration == 1


def _state_with(est, rng, exact_q):
    shape = est.phi.shape
    st = AlmState.initial(shape)
    st.estimate = est
    for n in ("phi", "b", "a"):
        q = grad(getattr(est, n)) if exact_q else rng.standard_normal((2,) + shape)
        setattr(st, "q_" + n, q)
        setattr(st, "mu_" + n, rng.standard_normal((2,) + shape))
    return st


def _rand_est(shape, rng):
    return FringeEstimate(rng.standard_normal(shape), rng.standard_normal(shape), rng.standard_normal(shape))


def test_multiplier_unchanged_when_constraint_holds(rng):
    st = _state_with(_rand_est((9, 11), rng), rng, exact_q=True)
    for new, n in zip(alm_multiplier_update(st, SolverConfig()), ("phi", "b", "a")):
        np.testing.assert_array_equal(new, st.mu(n))


def test_multiplier_ascent_step(rng):
    cfg = SolverConfig(r=3.0)
    st = _state_with(_rand_est((5, 6), rng), rng, exact_q=False)
    mu_phi = alm_multiplier_update(st, cfg)[0]
    np.testing.assert_allclose(mu_phi, st.mu_phi + 3.0 * (st.q_phi - grad(st.estimate.phi)), atol=1e-14)


def test_shrink_step_minimizes_pointwise_objective(rng):
    cfg = SolverConfig()
    r = cfg.r
    st = _state_with(_rand_est((8, 8), rng), rng, exact_q=False)
    q_new = alm_shrink_step(st, cfg)
    for q, n in zip(q_new, ("phi", "b", "a")):
        gd, mu = grad(st.var(n)), st.mu(n)

        def obj(qq):
            d = qq - gd
            return magnitude(qq) + np.sum(mu * qq, axis=0) + 0.5 * r * np.sum(d * d, axis=0)

        base = obj(q)
        for _ in range(20):
            trial = q + 1e-3 * rng.standard_normal(q.shape)
            assert np.all(base <= obj(trial) + 1e-12)


def test_deterministic(small):
    cfg = SolverConfig(max_outer_iters=15)
    e1, r1 = alm_demodulate(small.g, small.omega, cfg, log_energy=False)
    e2, r2 = alm_demodulate(small.g, small.omega, cfg, log_energy=False)
    for x, y in zip((e1.phi, e1.b, e1.a), (e2.phi, e2.b, e2.a)):
        assert x.tobytes() == y.tobytes()
    assert [r.rel_phi for r in r1.rows] == [r.rel_phi for r in r2.rows]


def test_constant_pattern_is_fitted():
    shape = (24, 32)
    g = np.full(shape, 1.5)
    omega = 0.7 * np.tile(np.arange(shape[1], dtype=float), (shape[0], 1))
    est, rep = alm_demodulate(g, omega, SolverConfig(max_outer_iters=3000))
    fit = est.a + est.b * np.cos(omega + est.phi)
    assert np.max(np.abs(fit - g)) <= 1e-3


@pytest.mark.slow
def test_recovers_small_pattern(small):
    est, rep, st = alm_demodulate(small.g, small.omega, SolverConfig(), truth=small.phi, return_state=True)
    assert rep.converged
    assert q_error(est.phi, small.phi) < 0.08
    f = rep.final
    assert f.res_q_phi <= 5e-2
    # b is flat here, so q_b is shrunk to zero and the relative residual is 1;
    # in absolute terms both flat variables satisfy the constraint closely
    n = np.sqrt(small.g.size)
    for name in ("b", "a"):
        assert norm(st.q(name) - grad(st.var(name))) / n <= 1e-3
    assert f.q_err == pytest.approx(q_error(est.phi, small.phi))
    assert st.iteration == rep.iterations


def test_jacobi_sweep_runs(small):
    est, rep = alm_demodulate(small.g, small.omega, SolverConfig(sweep="jacobi", max_outer_iters=4))
    assert rep.iterations == 4 and np.all(np.isfinite(est.a))


def test_shape_checks():
    with pytest.raises(ValueError):
        alm_demodulate(np.zeros((4, 4)), np.zeros((4, 3)))
    with pytest.raises(ValueError):
        alm_demodulate(np.zeros((4, 4)), np.zeros((4, 4)), truth=np.zeros((3, 4)))
