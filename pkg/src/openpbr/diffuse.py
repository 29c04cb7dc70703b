"""Energy-preserving Oren-Nayar (EON) diffuse BRDF."""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .microfacet import Lobe, LobeSample, bilinear

C1 = 0.5 - 2.0 / (3.0 * np.pi)
C2 = 2.0 / 3.0 - 28.0 / (15.0 * np.pi)

EON_N = 32
EON_MU = np.arange(EON_N) / (EON_N - 1)
EON_SIGMA = np.arange(EON_N) / (EON_N - 1)


def fon_A(sigma):
    return 1.0 / (1.0 + C1 * np.asarray(sigma, dtype=float))


def fon_B(sigma):
    return np.asarray(sigma, dtype=float) * fon_A(sigma)


@dataclass(frozen=True)
class EonParams:
    rho: tuple[float, float, float]
    sigma: float
    w_d: float = 1.0


def _gl(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def _fon_shape_integral(mu_o: float, n: int = 64) -> float:
    """int over the hemisphere of (s/t) cos(theta_i) / pi, i.e. the B coefficient of E_FON.

    The azimuthal integral is done in closed form; the polar one by
    Gauss-Legendre on each side of the kink at mu_i = mu_o.
    """
    sin_o = np.sqrt(max(1.0 - mu_o * mu_o, 0.0))
    x, w = _gl(n)

    def piece(a, b):
        mu = a + (b - a) * x
        sin_i = np.sqrt(np.maximum(1.0 - mu * mu, 0.0))
        ratio = mu / np.maximum(np.maximum(mu, mu_o), 1e-300)
        g = sin_i * sin_o * (2.0 * ratio - 2.0 * mu)
        return (b - a) * np.sum(w * g)

    return (piece(0.0, mu_o) + piece(mu_o, 1.0)) / np.pi


@functools.lru_cache(maxsize=1)
def _shape_table():
    return np.array([_fon_shape_integral(m) for m in EON_MU])


@functools.lru_cache(maxsize=1)
def eon_albedo_table() -> np.ndarray:
    """E_hat_FON(mu, sigma) on a 32 x 32 grid (rho = 1, w_d = 1)."""
    g = _shape_table()
    t = fon_A(EON_SIGMA)[None, :] + fon_B(EON_SIGMA)[None, :] * g[:, None]
    t.setflags(write=False)
    return t


def eon_directional_albedo(mu, sigma):
    return bilinear(eon_albedo_table(), EON_MU, EON_SIGMA, mu, sigma)


@functools.lru_cache(maxsize=None)
def _avg_table_column(sigma: float) -> float:
    # cosine-weighted average of the interpolated directional albedo
    x, w = _gl(64)
    return float(np.sum(w * 2.0 * x * eon_directional_albedo(x, sigma)))


def eon_average_albedo(sigma) -> float:
    return _avg_table_column(float(sigma))


def eon_directional_albedo_analytic(mu, sigma):
    """Closed-form FON albedo, used as an independent check of the table."""
    mu = np.clip(np.asarray(mu, dtype=float), 1e-12, 1.0)
    theta = np.arccos(mu)
    s = np.sin(theta)
    G = s * (theta - s * mu) + (2.0 / 3.0) * ((s / mu) * (1.0 - s ** 3) - s)
    return fon_A(sigma) + fon_B(sigma) / np.pi * G


def eon_average_albedo_analytic(sigma):
    return fon_A(sigma) * (1.0 + C2 * np.asarray(sigma, dtype=float))


def _rho_ms(rho, avg):
    rho = np.asarray(rho, dtype=float)
    one_m = 1.0 - avg
    if one_m < 1e-9:
        return np.zeros_like(rho)
    return rho * rho * avg / (one_m * (1.0 - rho * one_m))


def _s_over_t(wi, wo):
    s = np.sum(wi[..., :2] * wo[..., :2], axis=-1)
    t = np.where(s > 0.0, np.maximum(wi[..., 2], wo[..., 2]), 1.0)
    return s / t


def eon_eval(wi, wo, p: EonParams):
    wi = np.atleast_2d(wi)
    wo = np.atleast_2d(wo)
    rho = np.asarray(p.rho, dtype=float)
    sigma = p.sigma
    up = (wi[..., 2] > 0) & (wo[..., 2] > 0)
    f_on = p.w_d * rho / np.pi * (fon_A(sigma) + fon_B(sigma) * _s_over_t(wi, wo))[..., None]
    if sigma > 0.0:
        avg = eon_average_albedo(sigma)
        ei = eon_directional_albedo(wi[..., 2], sigma)
        eo = eon_directional_albedo(wo[..., 2], sigma)
        f_comp = (p.w_d / np.pi) * _rho_ms(rho, avg) * ((1.0 - ei) * (1.0 - eo))[..., None]
    else:
        f_comp = 0.0
    return np.where(up[..., None], f_on + f_comp, 0.0)


def eon_albedo(mu_o, p: EonParams):
    """Directional albedo of the full compensated lobe."""
    rho = np.asarray(p.rho, dtype=float)
    e = np.asarray(eon_directional_albedo(mu_o, p.sigma))[..., None]
    if p.sigma <= 0.0:
        return p.w_d * rho * np.ones_like(e)
    avg = eon_average_albedo(p.sigma)
    return p.w_d * (rho * e + _rho_ms(rho, avg) * (1.0 - e) * (1.0 - avg))


def sample_cosine(u):
    r = np.sqrt(u[..., 0])
    phi = 2.0 * np.pi * u[..., 1]
    z = np.sqrt(np.maximum(1.0 - u[..., 0], 0.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def eon_sample(wo, p: EonParams, rng_or_u):
    """Cosine-weighted sampling; accepts a Generator or an (N, 2) array of uniforms."""
    wo = np.atleast_2d(wo)
    if isinstance(rng_or_u, np.random.Generator):
        u = rng_or_u.random((wo.shape[0], 2))
    else:
        u = np.asarray(rng_or_u)
    wi = sample_cosine(u)
    pdf = wi[..., 2] / np.pi
    w = eon_eval(wi, wo, p) * np.pi
    return LobeSample(wi, pdf, w, np.zeros(wi.shape[0], dtype=bool))


class DiffuseLobe(Lobe):
    """EON lobe; flip=True mirrors it into the lower hemisphere (thin-wall transmission)."""

    def __init__(self, p: EonParams, flip: bool = False):
        self.p = p
        self.flip = flip
        self.transmissive = flip

    def _f(self, w):
        return w * np.array([1.0, 1.0, -1.0]) if self.flip else w

    def eval(self, wi, wo):
        return eon_eval(self._f(wi), wo, self.p)

    def pdf(self, wi, wo):
        z = self._f(wi)[..., 2]
        return np.where((z > 0) & (wo[..., 2] > 0), z / np.pi, 0.0)

    def sample(self, wo, u):
        s = eon_sample(wo, self.p, u)
        return LobeSample(self._f(s.wi), s.pdf, s.weight, s.delta)

    def albedo(self, mu_o):
        return eon_albedo(mu_o, self.p)
