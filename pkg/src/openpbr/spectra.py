"""Three-channel values, complex helpers and Cauchy/Abbe dispersion."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LAMBDA_RGB = (650.0, 550.0, 450.0)
LAMBDA_C = 656.3
LAMBDA_D = 587.6
LAMBDA_F = 486.1

LUM709 = np.array([0.2126, 0.7152, 0.0722])


@dataclass(frozen=True)
class Spectrum3:
    c: tuple[float, float, float]
    lam: tuple[float, float, float] = LAMBDA_RGB

    def __post_init__(self):
        if len(self.c) != 3 or len(self.lam) != 3:
            raise ValueError("Spectrum3 needs three channels")
        if not all(math.isfinite(x) for x in self.c):
            raise ValueError("non-finite spectrum value")
        if not (self.lam[0] > self.lam[1] > self.lam[2]):
            raise ValueError("wavelengths must decrease from R to B")

    def array(self) -> np.ndarray:
        return np.asarray(self.c, dtype=float)


def spectrum(x) -> np.ndarray:
    """Broadcast a scalar or 3-sequence to a float array with a trailing channel axis."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        return np.full(3, float(a))
    return a


def luminance(c) -> np.ndarray:
    return np.asarray(c, dtype=float) @ LUM709


# Complex arithmetic uses Python/numpy complex numbers. The one place where a
# branch choice matters is the refracted cosine, handled in thinfilm.snell_cos.

def csqrt(z):
    return np.sqrt(np.asarray(z, dtype=complex))


def cexp_i(theta):
    return np.exp(1j * np.asarray(theta, dtype=float))


@dataclass(frozen=True)
class CauchyCoefficients:
    A: float
    B: float  # nm^2


def abbe_number(scale: float, abbe: float) -> float:
    if scale <= 0.0:
        return math.inf
    if abbe <= 0.0:
        # zero Abbe number would mean infinite dispersion; keep it finite
        abbe = 1e-6
    return abbe / scale


def cauchy_fit(n_d: float, V_d: float) -> CauchyCoefficients:
    if not math.isfinite(V_d) or n_d <= 1.0:
        return CauchyCoefficients(float(n_d), 0.0)
    B = (n_d - 1.0) / (V_d * (LAMBDA_F ** -2 - LAMBDA_C ** -2))
    A = n_d - B / LAMBDA_D ** 2
    return CauchyCoefficients(A, B)


def ior_at_wavelength(c: CauchyCoefficients, lam):
    return c.A + c.B / np.asarray(lam, dtype=float) ** 2


def sample_wavelengths(rng: np.random.Generator, half_width: float = 60.0, n: int | None = None):
    """Draw one wavelength per channel from triangular densities around 650/550/450 nm.

    The triangle doubles as the channel's sensitivity curve, so sampling it is
    exact importance sampling and every weight is 1.
    """
    centers = np.asarray(LAMBDA_RGB)
    shape = (3,) if n is None else (n, 3)
    if half_width <= 0.0:
        return np.broadcast_to(centers, shape).copy(), np.ones(shape)
    t = rng.random(shape) + rng.random(shape) - 1.0  # triangular on [-1, 1]
    return centers + half_width * t, np.ones(shape)
