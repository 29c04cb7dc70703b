"""Transmission volume coefficients and the Henyey-Greenstein phase function."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .subsurface import MediumCoefficients

EXTINCTION_CAP = 1e7  # per unit length, stands in for a zero transmission_color channel


@dataclass(frozen=True)
class TintOnly:
    color: tuple[float, float, float]


def transmission_medium(m) -> MediumCoefficients | TintOnly:
    depth = float(m.transmission_depth)
    T = np.asarray(m.transmission_color, dtype=float)
    if depth == 0.0:
        return TintOnly(tuple(T))
    S = np.asarray(m.transmission_scatter, dtype=float)
    with np.errstate(divide="ignore"):
        mu_t = np.where(T > 0.0, -np.log(np.where(T > 0.0, T, 1.0)) / depth, EXTINCTION_CAP)
    mu_t = np.minimum(mu_t, EXTINCTION_CAP)
    mu_s = S / depth
    mu_a = mu_t - mu_s
    lo = mu_a.min()
    if lo < 0.0:
        mu_a = mu_a - lo
        mu_t = mu_a + mu_s
    g = float(np.clip(m.transmission_scatter_anisotropy, -0.99, 0.99))
    return MediumCoefficients(mu_a, mu_s, mu_t, g, m.specular_ior)


def hg_phase_eval(g, cos_theta):
    g = np.asarray(g, dtype=float)
    c = np.asarray(cos_theta, dtype=float)
    d = 1.0 + g * g - 2.0 * g * c
    return (1.0 - g * g) / (4.0 * np.pi * d * np.sqrt(d))


def hg_sample_cos(g, u):
    """Cosine between the incoming propagation direction and the scattered direction."""
    u = np.asarray(u, dtype=float)
    if abs(g) < 1e-4:
        return 1.0 - 2.0 * u
    sq = (1.0 - g * g) / (1.0 - g + 2.0 * g * u)
    return np.clip((1.0 + g * g - sq * sq) / (2.0 * g), -1.0, 1.0)


def hg_sample(g, rng: np.random.Generator, n: int | None = None):
    return hg_sample_cos(g, rng.random(n))


def orthonormal_basis(n):
    """Frisvad-style (Duff et al.) basis around unit vectors n (..., 3)."""
    sign = np.where(n[..., 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + n[..., 2])
    b = n[..., 0] * n[..., 1] * a
    t = np.stack([1.0 + sign * n[..., 0] ** 2 * a, sign * b, -sign * n[..., 0]], axis=-1)
    s = np.stack([b, sign + n[..., 1] ** 2 * a, -n[..., 1]], axis=-1)
    return t, s


def scatter_direction(d, cos_theta, u_phi):
    """Rotate propagation direction d by the given polar cosine and azimuth uniform."""
    t, s = orthonormal_basis(d)
    sin_theta = np.sqrt(np.maximum(1.0 - cos_theta ** 2, 0.0))
    phi = 2.0 * np.pi * u_phi
    return ((sin_theta * np.cos(phi))[..., None] * t + (sin_theta * np.sin(phi))[..., None] * s
            + cos_theta[..., None] * d)
