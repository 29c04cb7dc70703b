"""Subsurface medium parameterization and albedo inversion."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

G_CLAMP = 0.99
DENSE = np.inf  # extinction sentinel for a zero mean free path


@dataclass(frozen=True)
class MediumCoefficients:
    mu_a: np.ndarray
    mu_s: np.ndarray
    mu_t: np.ndarray
    g: float = 0.0
    ior: float = 1.0

    def __post_init__(self):
        for name in ("mu_a", "mu_s", "mu_t"):
            v = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, v)

    @property
    def albedo(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            a = self.mu_s / self.mu_t
        return np.where(self.mu_t > 0, a, 0.0)

    @property
    def dense(self) -> np.ndarray:
        return ~np.isfinite(self.mu_t)


def vdh_multiscatter(s):
    s = np.asarray(s, dtype=float)
    return (1.0 - s) * (1.0 - 0.139 * s) / (1.0 + 1.17 * s)


def vdh_invert(C):
    C = np.asarray(C, dtype=float)
    s = 4.09712 + 4.20863 * C - np.sqrt(9.59217 + 41.6808 * C + 17.7126 * C * C)
    return np.clip(s, 0.0, 1.0)


def vdh_albedo(C):
    """Single-scatter albedo alpha* = 1 - s^2 for an index-matched half-space."""
    return 1.0 - vdh_invert(C) ** 2


def hyperion_invert(C):
    C = np.asarray(C, dtype=float)
    return 1.0 - np.exp(-11.43 * C + 15.38 * C ** 2 - 13.91 * C ** 3)


def anisotropic_albedo(alpha_star, g):
    a = np.asarray(alpha_star, dtype=float)
    return a / (1.0 - g * (1.0 - a))


def similarity_remap(mu_s, g, g_target):
    return np.asarray(mu_s, dtype=float) * (1.0 - g) / (1.0 - g_target)


def clamp_g(g: float) -> float:
    return float(np.clip(g, -G_CLAMP, G_CLAMP))


def subsurface_medium(m, inversion: str = "hyperion") -> MediumCoefficients:
    """Medium coefficients from the subsurface_* parameters of a validated material."""
    r = m.subsurface_radius * np.asarray(m.subsurface_radius_scale, dtype=float)
    finite = r > 0.0
    mu_t = np.where(finite, 1.0 / np.where(finite, r, 1.0), DENSE)
    C = np.asarray(m.subsurface_color, dtype=float)
    if inversion == "hyperion":
        a_star = hyperion_invert(C)
    elif inversion == "vdh":
        a_star = vdh_albedo(C)
    else:
        raise ValueError(f"unknown inversion {inversion!r}")
    g = clamp_g(m.subsurface_anisotropy)
    alpha = np.clip(anisotropic_albedo(a_star, g), 0.0, 1.0)
    mu_s = np.where(finite, alpha * np.where(finite, mu_t, 0.0), DENSE)
    mu_a = np.where(finite, (1.0 - alpha) * np.where(finite, mu_t, 0.0), 0.0)
    return MediumCoefficients(mu_a, mu_s, mu_t, g, m.specular_ior)
