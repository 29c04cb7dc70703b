"""Single-film interference: complex Snell, amplitude Fresnel and Airy summation.

Everything is evaluated per wavelength with numpy complex arithmetic and
broadcasts over array inputs. Thickness d and wavelength lam share units (nm).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DENOM_EPS = 1e-9


class ConductorSubstrate(ValueError):
    pass


@dataclass(frozen=True)
class FilmStack:
    n1: float
    n2: float
    n3: complex
    d: float      # nm
    lam: float    # nm
    cos1: float


class Amplitudes(NamedTuple):
    rs: np.ndarray
    rp: np.ndarray
    ts: np.ndarray
    tp: np.ndarray


def snell_cos(n_i, n_j, cos_i):
    """Complex cosine in medium j on the branch with Im(n_j cos) >= 0."""
    n_i = np.asarray(n_i, dtype=complex)
    n_j = np.asarray(n_j, dtype=complex)
    cos_i = np.asarray(cos_i, dtype=complex)
    sin_i = np.sqrt(1.0 - cos_i * cos_i)
    sin_j = n_i / n_j * sin_i
    c = np.sqrt(1.0 - sin_j * sin_j)
    return np.where((n_j * c).imag < 0.0, -c, c)


def fresnel_amplitudes(n_i, n_j, cos_i, cos_j) -> Amplitudes:
    n_i = np.asarray(n_i, dtype=complex)
    n_j = np.asarray(n_j, dtype=complex)
    a = n_i * cos_i
    b = n_j * cos_j
    rs = (a - b) / (a + b)
    ts = 2.0 * a / (a + b)
    c = n_j * cos_i
    e = n_i * cos_j
    rp = (c - e) / (c + e)
    tp = 2.0 * a / (c + e)
    return Amplitudes(rs, rp, ts, tp)


def interface_power(n_i, n_j, cos_i, cos_j, amp: Amplitudes | None = None):
    """(R_s, R_p, T_s, T_p) power coefficients at one interface."""
    if amp is None:
        amp = fresnel_amplitudes(n_i, n_j, cos_i, cos_j)
    n_i = np.asarray(n_i, dtype=complex)
    n_j = np.asarray(n_j, dtype=complex)
    base = n_i * cos_i
    Ts = np.real(n_j * cos_j / base) * np.abs(amp.ts) ** 2
    Tp = np.real(n_j * np.conj(cos_j) / base) * np.abs(amp.tp) ** 2
    return np.abs(amp.rs) ** 2, np.abs(amp.rp) ** 2, Ts, Tp


def reverse_amplitudes(n1, n2, cos1, cos2, fwd: Amplitudes):
    """(r21, t21) for s and p from the forward coefficients."""
    ratio = (np.asarray(n2, dtype=complex) * cos2) / (np.asarray(n1, dtype=complex) * cos1)
    return (-fwd.rs, -fwd.rp), (fwd.ts * ratio, fwd.tp * ratio)


def _safe_div(num, den):
    mag = np.abs(den)
    den = np.where(mag < DENOM_EPS, DENOM_EPS * np.where(mag > 0, den / np.where(mag > 0, mag, 1.0), 1.0), den)
    return num / den


def airy_polarized(n1, n2, n3, d, lam, cos1):
    """(R_s, R_p) of an ambient/film/substrate stack."""
    n1 = np.asarray(n1, dtype=complex)
    n2 = np.asarray(n2, dtype=complex)
    n3 = np.asarray(n3, dtype=complex)
    cos1 = np.asarray(cos1, dtype=float)
    cos2 = snell_cos(n1, n2, cos1)
    # TIR into the film (real indices only): nothing enters
    sin2_sq = (n1.real / n2.real) ** 2 * (1.0 - cos1 ** 2)
    tir = (np.abs(n2.imag) == 0) & (sin2_sq >= 1.0)
    cos3 = snell_cos(n2, n3, cos2)
    a12 = fresnel_amplitudes(n1, n2, cos1, cos2)
    a23 = fresnel_amplitudes(n2, n3, cos2, cos3)
    (r21s, r21p), (t21s, t21p) = reverse_amplitudes(n1, n2, cos1, cos2, a12)
    delta = 4.0 * np.pi * n2 * np.asarray(d, dtype=float) * cos2 / np.asarray(lam, dtype=float)
    ph = np.exp(1j * delta)
    rs = a12.rs + _safe_div(a12.ts * a23.rs * t21s * ph, 1.0 - r21s * a23.rs * ph)
    rp = a12.rp + _safe_div(a12.tp * a23.rp * t21p * ph, 1.0 - r21p * a23.rp * ph)
    Rs = np.where(tir, 1.0, np.abs(rs) ** 2)
    Rp = np.where(tir, 1.0, np.abs(rp) ** 2)
    return np.clip(Rs, 0.0, 1.0), np.clip(Rp, 0.0, 1.0)


def airy_reflectance(n1, n2, n3, d, lam, cos1):
    Rs, Rp = airy_polarized(n1, n2, n3, d, lam, cos1)
    return 0.5 * (Rs + Rp)


def airy_transmittance(n1, n2, n3, d, lam, cos1):
    if np.any(np.asarray(n3, dtype=complex).imag > 0):
        raise ConductorSubstrate("transmittance requires a dielectric substrate")
    return 1.0 - airy_reflectance(n1, n2, n3, d, lam, cos1)


def stack_reflectance(s: FilmStack) -> float:
    return float(airy_reflectance(s.n1, s.n2, s.n3, s.d, s.lam, s.cos1))


def bare_reflectance(n1, n3, cos1):
    """Single-interface unpolarized reflectance via the complex amplitudes."""
    c3 = snell_cos(n1, n3, cos1)
    a = fresnel_amplitudes(n1, n3, np.asarray(cos1, dtype=complex), c3)
    return 0.5 * (np.abs(a.rs) ** 2 + np.abs(a.rp) ** 2)


def effective_complex_ior(F0):
    """Real IOR whose normal-incidence reflectance is F0 (k = 0)."""
    s = np.sqrt(np.clip(np.asarray(F0, dtype=float), 0.0, 1.0 - 1e-12))
    return (1.0 + s) / (1.0 - s) + 0j
