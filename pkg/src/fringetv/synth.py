"""Synthetic fringe patterns with a known discontinuous phase, noise, and Q."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import as_scalar, check_same_shape, norm


def eval_fringe(a, b, phi, omega) -> np.ndarray:
    """Fringe intensity ``a + b cos(omega + phi)``."""
    a, b, phi, omega = (as_scalar(x) for x in (a, b, phi, omega))
    check_same_shape(a, b, phi, omega)
    return a + b * np.cos(omega + phi)


def q_error(mu, nu) -> float:
    """Normalized error ``||mu - nu|| / (||mu|| + ||nu||)``, in [0, 1]."""
    mu = np.asarray(mu, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    if mu.shape != nu.shape:
        raise ValueError(f"dimension mismatch: {mu.shape} vs {nu.shape}")
    den = norm(mu) + norm(nu)
    if den == 0.0:
        raise ValueError("Q is undefined when both fields are identically zero")
    return norm(mu - nu) / den


def add_noise(g, sigma: float, seed=0) -> np.ndarray:
    """Add i.i.d. Gaussian noise of standard deviation ``sigma``; deterministic per seed."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    g = as_scalar(g)
    if sigma == 0:
        return g.copy()
    rng = np.random.default_rng(seed)
    return g + rng.normal(0.0, sigma, size=g.shape)


@dataclass(frozen=True)
class SyntheticSpec:
    width: int = 640
    height: int = 480
    carrier_fx: float = 0.7
    phase_amplitude: float = 1.0
    step_height: float = 0.8
    # (x0, x1, y0, y1) in unit-normalized coordinates
    step_region: tuple = (0.55, 0.95, 0.55, 0.9)
    background_a: float = 1.0
    modulation_b: float = 1.0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.width < 8 or self.height < 8:
            raise ValueError(f"synthetic pattern must be at least 8x8, got {self.width}x{self.height}")
        if self.modulation_b <= 0:
            raise ValueError("modulation_b must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        x0, x1, y0, y1 = self.step_region
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"empty step region {self.step_region}")


@dataclass
class GroundTruth:
    phi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    omega: np.ndarray
    g: np.ndarray
    g_noisy: np.ndarray
    spec: SyntheticSpec = field(default_factory=SyntheticSpec)


def unit_coords(width: int, height: int):
    """Pixel centres mapped to [0, 1] along each axis (end points included)."""
    x = np.linspace(0.0, 1.0, width)
    y = np.linspace(0.0, 1.0, height)
    return np.meshgrid(x, y)


def peaks_surface(x, y) -> np.ndarray:
    """Smooth two-Gaussian surface (one peak, one shallower well), unit amplitude."""
    return (np.exp(-((x - 0.4) ** 2 + (y - 0.5) ** 2) / 0.08)
            - 0.7 * np.exp(-((x - 0.7) ** 2 + (y - 0.3) ** 2) / 0.05))


def step_mask(spec: SyntheticSpec) -> np.ndarray:
    x, y = unit_coords(spec.width, spec.height)
    x0, x1, y0, y1 = spec.step_region
    return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


def carrier(width: int, height: int, fx: float) -> np.ndarray:
    cols = np.arange(width, dtype=np.float64)
    return np.tile(fx * cols, (height, 1))


def synthesize(spec: SyntheticSpec | None = None) -> GroundTruth:
    spec = spec or SyntheticSpec()
    x, y = unit_coords(spec.width, spec.height)
    phi = spec.phase_amplitude * peaks_surface(x, y) + spec.step_height * step_mask(spec)
    omega = carrier(spec.width, spec.height, spec.carrier_fx)
    a = np.full(phi.shape, float(spec.background_a))
    b = np.full(phi.shape, float(spec.modulation_b))
    g = eval_fringe(a, b, phi, omega)
    g_noisy = add_noise(g, spec.noise_sigma, spec.seed)
    return GroundTruth(phi=phi, a=a, b=b, omega=omega, g=g, g_noisy=g_noisy, spec=spec)
