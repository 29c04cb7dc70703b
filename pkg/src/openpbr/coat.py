"""Coat layer: darkening, view-dependent absorption, roughening and IOR handling.

The interfaced-Lambertian functions here are exact smooth-coat references
used to check the cheaper darkening factor.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .fresnel import fresnel_albedo_numeric, fresnel_dielectric, refract_cos


def lerp(a, b, t):
    return a + (b - a) * t


@dataclass(frozen=True)
class CoatContext:
    eta_c: float           # coat IOR relative to the ambient medium
    eta_s: float           # base specular IOR relative to its surroundings
    T_coat: np.ndarray     # normal-incidence transmittance, T^2 == coat_color
    C: float
    delta: float
    r_b: float

    @classmethod
    def from_material(cls, m, n_a: float = 1.0, r_b: float | None = None):
        eta_c = m.coat_ior / n_a
        eta_s = surrounding_eta(m.specular_ior, m.coat_ior, n_a, m.coat_weight)
        T = np.sqrt(np.asarray(m.coat_color, dtype=float))
        if r_b is None:
            r_b = base_roughness_estimate(m, n_a)
        return cls(eta_c, eta_s, T, m.coat_weight, m.coat_darkening, r_b)


def surrounding_eta(n_b, n_c, n_a, C):
    n_bc = n_c / n_b if n_c > n_b else n_b / n_c
    return lerp(n_b / n_a, n_bc, C)


def refracted_fresnel_blend(mu_i, n_a, n_b, n_c, C):
    mu_i = np.asarray(mu_i, dtype=float)
    eta_ca = n_c / n_a
    mu_c, tir = refract_cos(mu_i, eta_ca)
    F_top = fresnel_dielectric(mu_i, n_b / n_a)
    # seen from inside the coat; tir at the coat top contributes nothing
    F_coat = np.where(tir, 0.0, fresnel_dielectric(np.where(tir, 1.0, mu_c), n_b / n_c))
    return lerp(F_top, F_coat, C)


def _gl01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def internal_reflection_K(eta, T, n: int = 128):
    """K(eta, T) = 2 int_0^1 T^(2/mu) F(mu, 1/eta) mu dmu, per channel of T.

    mu is the cosine inside the coat; the integrand has a kink at the
    critical cosine, so each side gets its own Gauss-Legendre rule.
    """
    T = np.atleast_1d(np.asarray(T, dtype=float))
    eta = float(eta)
    x, w = _gl01(n)
    mu_c = np.sqrt(max(1.0 - 1.0 / (eta * eta), 0.0)) if eta > 1.0 else 0.0
    out = np.zeros_like(T)
    for a, b in ((0.0, mu_c), (mu_c, 1.0)):
        if b <= a:
            continue
        mu = a + (b - a) * x
        F = fresnel_dielectric(mu, 1.0 / eta)
        with np.errstate(divide="ignore", over="ignore", under="ignore"):
            att = np.where(T[:, None] > 0, np.power(np.maximum(T[:, None], 1e-300), 2.0 / mu[None, :]), 0.0)
        out += (b - a) * np.sum(w * 2.0 * att * F * mu, axis=-1)
    return out


@functools.lru_cache(maxsize=256)
def K_rough(eta):
    """Internal diffuse reflection for a clear coat over a Lambertian base."""
    eta = float(eta)
    return 1.0 - (1.0 - fresnel_albedo_numeric(eta)) / (eta * eta)


def K0(eta):
    return K_rough(eta)


def K_smooth(mu_o, eta):
    return fresnel_dielectric(mu_o, eta)


def base_roughness_estimate(m, n_a: float = 1.0, eta_s: float | None = None):
    """r_b = lerp(r_d, r_m, M), r_d = lerp(1, r, clamp(xi_s F_s))."""
    r = m.specular_roughness
    if eta_s is None:
        eta_s = surrounding_eta(m.specular_ior, m.coat_ior, n_a, m.coat_weight)
    F_s = ((1.0 - eta_s) / (1.0 + eta_s)) ** 2
    r_d = lerp(1.0, r, float(np.clip(m.specular_weight * F_s, 0.0, 1.0)))
    return lerp(r_d, r, m.base_metalness)


def darkening_delta(K, E_b, T2):
    E_b = np.asarray(E_b, dtype=float)
    return (1.0 - K) / (1.0 - E_b * K * T2)


def darkening_factor(ctx: CoatContext, E_b, mu_o=1.0):
    """Modulated darkening factor lerp(1, Delta, delta) T^2 applied to the base."""
    T2 = np.asarray(ctx.T_coat, dtype=float) ** 2
    if ctx.eta_c == 1.0:
        return T2 * np.ones_like(np.asarray(E_b, dtype=float))
    K = lerp(K_smooth(mu_o, ctx.eta_c), K_rough(ctx.eta_c), ctx.r_b)
    K = np.asarray(K, dtype=float)
    if K.ndim:
        K = K[..., None]
    D = darkening_delta(K, E_b, T2)
    return lerp(1.0, D, ctx.delta) * T2


def view_dependent_absorption(T, mu_i, mu_o, eta_c):
    T = np.asarray(T, dtype=float)
    mi, _ = refract_cos(np.abs(mu_i), eta_c)
    mo, _ = refract_cos(np.abs(mu_o), eta_c)
    e = 1.0 / np.maximum(mi, 1e-6) + 1.0 / np.maximum(mo, 1e-6)
    e = np.asarray(e)
    with np.errstate(under="ignore"):
        return np.power(T, e[..., None] if e.ndim else e)


def coat_roughen(r_B, r_C, eta_ca, C):
    x_C = 1.0 - min(eta_ca, 1.0 / eta_ca)
    r = min(1.0, r_B ** 4 + 2.0 * x_C * r_C ** 4) ** 0.25
    return lerp(r_B, r, C)


# ----------------------------------------------------------------- exact references

def interfaced_lambertian(mu_i, mu_o, rho_d, eta, T=1.0):
    """Lambertian base of albedo rho_d under a smooth, absorbing dielectric coat."""
    mu_i = np.asarray(mu_i, dtype=float)
    mu_o = np.asarray(mu_o, dtype=float)
    rho_d = np.asarray(rho_d, dtype=float)
    T = np.asarray(T, dtype=float)
    ti, _ = refract_cos(mu_i, eta)
    to, _ = refract_cos(mu_o, eta)
    FTi = 1.0 - fresnel_dielectric(mu_i, eta)
    FTo = 1.0 - fresnel_dielectric(mu_o, eta)
    K = internal_reflection_K(eta, T).reshape(T.shape) if T.ndim else float(internal_reflection_K(eta, T)[0])
    with np.errstate(under="ignore"):
        att = T ** (1.0 / np.maximum(ti, 1e-12) + 1.0 / np.maximum(to, 1e-12))
    return rho_d / (np.pi * eta * eta) * FTi * FTo * att / (1.0 - rho_d * K)


def interfaced_lambertian_albedo(mu_o, rho_d, eta):
    """Clear-coat directional albedo, specular reflection included."""
    E_F = fresnel_albedo_numeric(eta)
    F_R = fresnel_dielectric(mu_o, eta)
    return F_R + (rho_d / eta ** 2) * (1.0 - F_R) * (1.0 - E_F) / (1.0 - rho_d * (1.0 - (1.0 - E_F) / eta ** 2))


def interfaced_lambertian_albedo_quadrature(mu_o, rho_d, eta, T=1.0, n: int = 256):
    """Specular term plus the numerically integrated diffuse BRDF."""
    x, w = _gl01(n)
    f = interfaced_lambertian(x, mu_o, rho_d, eta, T)
    return fresnel_dielectric(mu_o, eta) + 2.0 * np.pi * np.sum(w * f * x)


def smooth_base_darkened_albedo(F_R, C_abs, rho_b):
    F_R = np.asarray(F_R, dtype=float)
    c = np.asarray(C_abs, dtype=float) * np.asarray(rho_b, dtype=float)
    return F_R + (1.0 - F_R) ** 2 * c / (1.0 - F_R * c)
