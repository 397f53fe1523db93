import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fringetv.synth import (SyntheticSpec, add_noise, carrier, eval_fringe, q_error, step_mask, synthesize,
                            unit_coords)


def test_eval_fringe_constant_phase():
    ones = np.ones((3, 4))
    z = np.zeros((3, 4))
    np.testing.assert_allclose(eval_fringe(ones, ones, z, z), 2.0)
    np.testing.assert_allclose(eval_fringe(ones, ones, np.full((3, 4), math.pi), z), 0.0, atol=1e-15)


def test_eval_fringe_single_pixel():
    v = eval_fringe([[0.5]], [[2.0]], [[0.25]], [[1.0]])
    assert v[0, 0] == pytest.approx(0.5 + 2.0 * math.cos(1.25), abs=1e-15)


def test_eval_fringe_shape_mismatch():
    with pytest.raises(ValueError):
        eval_fringe(np.ones((2, 2)), np.ones((2, 2)), np.ones((2, 3)), np.ones((2, 2)))


def test_carrier_is_linear_ramp():
    om = carrier(5, 3, 0.7)
    assert om.shape == (3, 5)
    np.testing.assert_allclose(om[2], 0.7 * np.arange(5))
    np.testing.assert_array_equal(om[0], om[1])


def test_unit_coords_endpoints():
    x, y = unit_coords(11, 6)
    assert x[0, 0] == 0.0 and x[0, -1] == 1.0 and y[-1, 0] == 1.0


def test_canonical_pattern_shape_and_defaults():
    gt = synthesize()
    assert gt.phi.shape == gt.g.shape == gt.omega.shape == (480, 640)
    np.testing.assert_array_equal(gt.g, gt.g_noisy)
    np.testing.assert_allclose(gt.g, gt.a + gt.b * np.cos(gt.omega + gt.phi))


def test_phase_has_jump_of_step_height():
    spec = SyntheticSpec(width=128, height=96, step_height=0.8)
    gt = synthesize(spec)
    mask = step_mask(spec)
    # locate a boundary column along a row that crosses the step
    row = int(np.argmax(mask.any(axis=1))) + 5
    j = int(np.argmax(mask[row]))
    jump = gt.phi[row, j] - gt.phi[row, j - 1]
    smooth_part = gt.phi[row, j - 1] - gt.phi[row, j - 2]
    assert abs(jump - 0.8) < 0.05
    assert abs(smooth_part) < 0.05


def test_noise_statistics():
    g = np.zeros((480, 640))
    noisy = add_noise(g, 0.1, seed=3)
    assert abs(noisy.std() - 0.1) <= 0.002
    assert abs(noisy.mean()) < 0.002


def test_noise_deterministic_per_seed():
    g = np.ones((20, 30))
    np.testing.assert_array_equal(add_noise(g, 0.2, 5), add_noise(g, 0.2, 5))
    assert not np.array_equal(add_noise(g, 0.2, 5), add_noise(g, 0.2, 6))


def test_noise_zero_sigma_copies():
    g = np.arange(12.0).reshape(3, 4)
    out = add_noise(g, 0.0)
    np.testing.assert_array_equal(out, g)
    assert out is not g
    with pytest.raises(ValueError):
        add_noise(g, -0.1)


def test_synthesize_is_deterministic():
    spec = SyntheticSpec(width=64, height=48, noise_sigma=0.1, seed=9)
    a, b = synthesize(spec), synthesize(spec)
    np.testing.assert_array_equal(a.g_noisy, b.g_noisy)


def test_invalid_specs():
    with pytest.raises(ValueError):
        SyntheticSpec(width=4, height=4)
    with pytest.raises(ValueError):
        SyntheticSpec(modulation_b=0.0)
    with pytest.raises(ValueError):
        SyntheticSpec(noise_sigma=-1)
    with pytest.raises(ValueError):
        SyntheticSpec(step_region=(0.5, 0.4, 0.1, 0.2))


def test_q_identical_and_opposite():
    mu = np.random.default_rng(0).standard_normal((6, 6))
    assert q_error(mu, mu) == 0.0
    assert q_error(mu, -mu) == pytest.approx(1.0, abs=1e-15)
    assert q_error(mu, np.zeros_like(mu)) == pytest.approx(1.0)


def test_q_undefined_for_two_zero_fields():
    with pytest.raises(ValueError):
        q_error(np.zeros((2, 2)), np.zeros((2, 2)))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 1e3))
def test_q_bounded_and_symmetric(seed, scale):
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal((5, 7)) * scale
    nu = rng.standard_normal((5, 7))
    q = q_error(mu, nu)
    assert 0.0 <= q <= 1.0
    assert q == pytest.approx(q_error(nu, mu), rel=1e-14)
    # scale invariance
    assert q_error(3 * mu, 3 * nu) == pytest.approx(q, rel=1e-12)
