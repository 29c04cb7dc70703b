"""Dielectric and F82-tint conductor Fresnel factors.

Angles are given as cosines measured from the side of the incident ray.
eta is always the ratio (transmitted side IOR) / (incident side IOR).
"""

from __future__ import annotations

import csv
import functools
import math
from importlib import resources
from typing import NamedTuple

import numpy as np

MU_BAR = 1.0 / 7.0


class OutOfFitRange(ValueError):
    def __init__(self, eta):
        super().__init__(f"eta={eta} outside the [1, 3] fit range")
        self.eta = eta


class FresnelResult(NamedTuple):
    F: np.ndarray
    mu_t: np.ndarray  # refracted cosine, 0 where tir
    tir: np.ndarray

    @property
    def T(self):
        return 1.0 - self.F


def refract_cos(mu_i, eta):
    """Refracted cosine and TIR flag."""
    mu_i = np.asarray(mu_i, dtype=float)
    eta = np.asarray(eta, dtype=float)
    mu_t2 = 1.0 - (1.0 - mu_i * mu_i) / (eta * eta)
    tir = mu_t2 <= 0.0
    return np.sqrt(np.maximum(mu_t2, 0.0)), tir


def fresnel_dielectric(mu_i, eta):
    """Unpolarized Fresnel reflectance; 1 under TIR."""
    c = np.abs(np.asarray(mu_i, dtype=float))
    eta = np.asarray(eta, dtype=float)
    g2 = eta * eta - 1.0 + c * c
    tir = g2 <= 0.0
    g = np.sqrt(np.maximum(g2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (g - c) / (g + c)
        b = (c * (g + c) - 1.0) / (c * (g - c) + 1.0)
        F = 0.5 * a * a * (1.0 + b * b)
    F = np.where(tir, 1.0, F)
    # c == 0 with no tir is the grazing limit
    F = np.where(np.isfinite(F), F, 1.0)
    return np.clip(F, 0.0, 1.0)


def f0_from_eta(eta):
    eta = np.asarray(eta, dtype=float)
    return ((1.0 - eta) / (1.0 + eta)) ** 2


def modulated_eta(eta, xi):
    """IOR ratio whose normal-incidence reflectance is min(xi * F0, 1)."""
    eta = np.asarray(eta, dtype=float)
    F0 = f0_from_eta(eta)
    eps = np.sign(eta - 1.0) * np.sqrt(np.minimum(np.asarray(xi, dtype=float) * F0, 1.0))
    with np.errstate(divide="ignore"):
        out = (1.0 + eps) / (1.0 - eps)
    # eps == 1 means a perfect reflector; keep it finite
    return np.where(np.isfinite(out), out, 1e30)


def specular_reflectance(mu_i, eta, xi=1.0) -> FresnelResult:
    """Reflectance with the specular_weight modulation applied consistently on both sides.

    Outside the TIR regime the modulated ratio is used directly. When the ray
    starts in the denser medium the reflectance is taken from the equivalent
    exterior configuration (refracted cosine, inverted ratio) so that the
    Stokes relations hold. The refracted cosine always comes from the
    unmodified ratio.
    """
    mu_i = np.asarray(mu_i, dtype=float)
    eta = np.asarray(eta, dtype=float)
    mu_t, tir = refract_cos(mu_i, eta)
    eta_m = modulated_eta(eta, xi)
    outside = fresnel_dielectric(mu_i, eta_m)
    inside = fresnel_dielectric(mu_t, 1.0 / eta_m)
    F = np.where(eta >= 1.0, outside, np.where(tir, 1.0, inside))
    return FresnelResult(F, np.where(tir, 0.0, mu_t), tir)


def refract(wi, n, eta):
    """Refract unit direction wi (pointing away from the surface, on the side of n).

    Returns (wt, tir). wt points away from the surface on the opposite side.
    """
    wi = np.asarray(wi, dtype=float)
    n = np.asarray(n, dtype=float)
    eta = np.asarray(eta, dtype=float)
    cos_i = np.sum(wi * n, axis=-1)
    mu_t, tir = refract_cos(cos_i, eta)
    inv = 1.0 / eta
    wt = -inv[..., None] * wi + (inv * cos_i - mu_t)[..., None] * n
    return wt, tir


# ----------------------------------------------------------------- albedo

@functools.lru_cache(maxsize=None)
def _gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def _gl_interval(f, a, b, n=64):
    x, w = _gauss_legendre(n)
    t = 0.5 * (b - a) * x + 0.5 * (b + a)
    return 0.5 * (b - a) * np.sum(w * f(t))


def fresnel_albedo_numeric(eta: float, n: int = 64, adaptive: bool = False) -> float:
    """2 * int_0^1 F(mu, eta) mu dmu."""
    eta = float(eta)
    if eta == 1.0:
        return 0.0
    mu_c = 0.0
    if eta < 1.0:
        mu_c = math.sqrt(1.0 - eta * eta)  # critical cosine, F == 1 below it

    def integrand(mu):
        return 2.0 * fresnel_dielectric(mu, eta) * mu

    if adaptive:
        from scipy.integrate import quad

        val, _ = quad(lambda m: float(integrand(m)), mu_c, 1.0, epsabs=1e-10, epsrel=1e-10, limit=200)
    else:
        # substitute mu = mu_c + (1-mu_c) s^2 to smooth the sqrt edge at the critical angle
        def g(s):
            mu = mu_c + (1.0 - mu_c) * s * s
            return integrand(mu) * 2.0 * (1.0 - mu_c) * s

        val = _gl_interval(g, 0.0, 1.0, n)
    return mu_c * mu_c + val


def fresnel_albedo_fit(eta: float) -> float:
    if not 1.0 <= eta <= 3.0:
        raise OutOfFitRange(eta)
    return math.log((10893.0 * eta - 1438.2) / (-774.4 * eta * eta + 10212.0 * eta + 1.0))


def fresnel_hemispherical_albedo(eta: float, approximate: bool = False) -> float:
    if approximate:
        return fresnel_albedo_fit(eta)
    return fresnel_albedo_numeric(eta)


# ----------------------------------------------------------------- F82-tint

def f82_b(F0, tint):
    F0 = np.asarray(F0, dtype=float)
    tint = np.asarray(tint, dtype=float)
    fs = F0 + (1.0 - F0) * (1.0 - MU_BAR) ** 5
    return (fs - tint * fs) / (MU_BAR * (1.0 - MU_BAR) ** 6)


def f82_unclamped(mu, F0, tint):
    F0 = np.asarray(F0, dtype=float)
    b = f82_b(F0, tint)
    m = np.asarray(mu, dtype=float)
    if F0.ndim:
        m = m[..., None]
    return F0 + (1.0 - F0) * (1.0 - m) ** 5 - b * m * (1.0 - m) ** 6


def f82_fresnel(mu, F0, tint, xi=1.0):
    return np.clip(xi * f82_unclamped(mu, F0, tint), 0.0, 1.0)


def f82_average_albedo(F0, tint):
    F0 = np.asarray(F0, dtype=float)
    return F0 + (1.0 - F0) / 21.0 - f82_b(F0, tint) / 126.0


@functools.lru_cache(maxsize=1)
def metal_table() -> dict[str, dict[str, tuple[float, float, float]]]:
    """Measured-metal F82-tint fits shipped as package data."""
    out = {}
    text = resources.files("openpbr").joinpath("data/metals.csv").read_text()
    for row in csv.DictReader(text.splitlines()):
        def trip(prefix):
            return tuple(float(row[f"{prefix}_{c}"]) for c in "rgb")
        out[row["metal"]] = {
            "f0_srgb": trip("f0_srgb"), "f0_acescg": trip("f0_acescg"),
            "tint_srgb": trip("tint_srgb"), "tint_acescg": trip("tint_acescg"),
        }
    return out
