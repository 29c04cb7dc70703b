"""GGX microfacet distribution, Smith masking, visible-normal sampling and lobes.

All directions are unit vectors in the local shading frame (normal = +z) with
shape (..., 3). Both wi and wo point away from the surface.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

ALPHA_FLOOR = 1e-4
TABLE_N = 32


class RoughnessAlphas(NamedTuple):
    at: float
    ab: float

    @property
    def delta(self) -> bool:
        return max(self.at, self.ab) <= ALPHA_FLOOR

    @property
    def rms(self) -> float:
        return float(np.sqrt(0.5 * (self.at ** 2 + self.ab ** 2)))


class LobeSample(NamedTuple):
    wi: np.ndarray       # (N, 3)
    pdf: np.ndarray      # (N,), solid-angle density; inf for delta samples
    weight: np.ndarray   # (N, 3) = f |cos| / pdf, or the delta throughput
    delta: np.ndarray    # (N,) bool


def roughness_to_alphas_raw(r, a):
    r = np.asarray(r, dtype=float)
    a = np.asarray(a, dtype=float)
    at = r * r * np.sqrt(2.0 / (1.0 + (1.0 - a) ** 2))
    ab = (1.0 - a) * at
    return at, ab


def roughness_to_alphas(r: float, a: float = 0.0) -> RoughnessAlphas:
    at, ab = roughness_to_alphas_raw(r, a)
    return RoughnessAlphas(max(float(at), ALPHA_FLOOR), max(float(ab), ALPHA_FLOOR))


def dot(a, b):
    return np.sum(a * b, axis=-1)


def normalize(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def reflect(w, m):
    return 2.0 * dot(w, m)[..., None] * m - w


def ggx_ndf(m, at, ab=None):
    """D(m), normalized so that the integral of D(m) cos(theta_m) is 1."""
    ab = at if ab is None else ab
    m = np.asarray(m, dtype=float)
    x, y, z = m[..., 0] / at, m[..., 1] / ab, m[..., 2]
    q = x * x + y * y + z * z
    return np.where(z > 0.0, 1.0 / (np.pi * at * ab * q * q), 0.0)


def smith_lambda(w, at, ab=None):
    ab = at if ab is None else ab
    w = np.asarray(w, dtype=float)
    z2 = w[..., 2] ** 2
    a2 = (at * w[..., 0]) ** 2 + (ab * w[..., 1]) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = 0.5 * (np.sqrt(1.0 + a2 / z2) - 1.0)
    return np.where(z2 > 0.0, lam, np.inf)


def smith_g1(w, at, ab=None):
    return 1.0 / (1.0 + smith_lambda(w, at, ab))


def smith_g(wi, wo, at, ab=None):
    """Height-correlated masking-shadowing."""
    return 1.0 / (1.0 + smith_lambda(wi, at, ab) + smith_lambda(wo, at, ab))


def sample_visible_normal(wo, at, ab, u1, u2):
    """Visible-normal sampling by the stretch/hemisphere-projection method."""
    wo = np.asarray(wo, dtype=float)
    vh = normalize(np.stack([at * wo[..., 0], ab * wo[..., 1], wo[..., 2]], axis=-1))
    lensq = vh[..., 0] ** 2 + vh[..., 1] ** 2
    inv = np.where(lensq > 0.0, 1.0 / np.sqrt(np.maximum(lensq, 1e-300)), 0.0)
    t1 = np.stack([-vh[..., 1] * inv, vh[..., 0] * inv, np.zeros_like(inv)], axis=-1)
    t1 = np.where((lensq > 0.0)[..., None], t1, np.array([1.0, 0.0, 0.0]))
    t2 = np.cross(vh, t1)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    p1 = r * np.cos(phi)
    p2 = r * np.sin(phi)
    s = 0.5 * (1.0 + vh[..., 2])
    p2 = (1.0 - s) * np.sqrt(np.maximum(1.0 - p1 * p1, 0.0)) + s * p2
    p3 = np.sqrt(np.maximum(1.0 - p1 * p1 - p2 * p2, 0.0))
    nh = p1[..., None] * t1 + p2[..., None] * t2 + p3[..., None] * vh
    m = np.stack([at * nh[..., 0], ab * nh[..., 1], np.maximum(nh[..., 2], 1e-12)], axis=-1)
    return normalize(m)


def visible_normal_pdf(m, wo, at, ab):
    cos_o = wo[..., 2]
    return smith_g1(wo, at, ab) * np.maximum(dot(wo, m), 0.0) * ggx_ndf(m, at, ab) / cos_o


# ----------------------------------------------------------------- compensation

def _stratified(n: int):
    g = (np.arange(n) + 0.5) / n
    u1, u2 = np.meshgrid(g, g, indexing="ij")
    return u1.ravel(), u2.ravel()


def _ss_albedo(mu, alpha, n1=96, n2=48, k=4):
    """White single-scatter GGX reflection albedo by warped stratified quadrature.

    The GGX tail that reflects below the horizon lives in u1 -> 1, so u1 is
    warped as 1 - (1 - v)^k to put most rows there.
    """
    v = (np.arange(n1) + 0.5) / n1
    w1 = k * (1.0 - v) ** (k - 1) / n1
    u1, u2 = np.meshgrid(1.0 - (1.0 - v) ** k, (np.arange(n2) + 0.5) / n2, indexing="ij")
    s = np.sqrt(max(1.0 - mu * mu, 0.0))
    wo = np.broadcast_to(np.array([s, 0.0, mu]), (u1.size, 3))
    m = sample_visible_normal(wo, alpha, alpha, u1.ravel(), u2.ravel())
    wi = reflect(wo, m)
    ok = wi[..., 2] > 0.0
    w = np.where(ok, smith_g(np.where(ok[..., None], wi, [0, 0, 1.0]), wo, alpha) / smith_g1(wo, alpha), 0.0)
    return float(np.sum(w * np.repeat(w1, n2)) / n2)


# geometric in mu (the grazing end changes fastest), uniform in roughness r = sqrt(alpha)
TABLE_MU = np.geomspace(0.01, 1.0, TABLE_N)
TABLE_ALPHA = (np.arange(TABLE_N) / (TABLE_N - 1)) ** 2


@functools.lru_cache(maxsize=1)
def ess_table() -> np.ndarray:
    """E_ss(mu, alpha) on a 32 x 32 grid; alpha = 0 row is exactly 1."""
    t = np.ones((TABLE_N, TABLE_N))
    for j, a in enumerate(TABLE_ALPHA[1:], start=1):
        for i, mu in enumerate(TABLE_MU):
            t[i, j] = _ss_albedo(mu, a)
    t.setflags(write=False)
    return t


def bilinear(table, xs, ys, x, y):
    x = np.clip(np.asarray(x, dtype=float), xs[0], xs[-1])
    y = np.clip(np.asarray(y, dtype=float), ys[0], ys[-1])
    i = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 2)
    j = np.clip(np.searchsorted(ys, y, side="right") - 1, 0, len(ys) - 2)
    fx = (x - xs[i]) / (xs[i + 1] - xs[i])
    fy = (y - ys[j]) / (ys[j + 1] - ys[j])
    return ((1 - fx) * (1 - fy) * table[i, j] + fx * (1 - fy) * table[i + 1, j]
            + (1 - fx) * fy * table[i, j + 1] + fx * fy * table[i + 1, j + 1])


def ess(mu, alpha):
    return bilinear(ess_table(), TABLE_MU, TABLE_ALPHA, mu, alpha)


def energy_compensation(mu_o, alpha, F_avg):
    """Multiplicative albedo-scaling factor 1 + F_avg (1 - E_ss) / E_ss."""
    e = ess(mu_o, alpha)
    F_avg = np.asarray(F_avg, dtype=float)
    return 1.0 + F_avg * ((1.0 - e) / e)[..., None]


def hazy_roughness(r, spread):
    return float(np.clip(r + spread * (1.0 - r), 0.0, 1.0))


def hazy_blend(f_core, f_haze, w_h):
    return (1.0 - w_h) * np.asarray(f_core) + w_h * np.asarray(f_haze)


# ----------------------------------------------------------------- lobes

FresnelFn = Callable[[np.ndarray], np.ndarray]  # cos(wo, m) -> (N, 3)


def _delta_sample(wi, weight):
    n = wi.shape[0]
    return LobeSample(wi, np.full(n, np.inf), weight, np.ones(n, dtype=bool))


class Lobe:
    """Interface shared by every primitive lobe."""

    delta = False
    transmissive = False

    def eval(self, wi, wo):  # pragma: no cover - interface
        raise NotImplementedError

    def pdf(self, wi, wo):  # pragma: no cover - interface
        raise NotImplementedError

    def sample(self, wo, u):  # pragma: no cover - interface
        raise NotImplementedError

    def weight_from(self, wi, wo, pdf):
        f = self.eval(wi, wo)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = f * (np.abs(wi[..., 2]) / pdf)[..., None]
        return np.where((pdf > 0)[..., None] & np.isfinite(w), w, 0.0)


@dataclass
class MicrofacetReflection(Lobe):
    alphas: RoughnessAlphas
    fresnel: FresnelFn
    F_avg: np.ndarray | None = None  # compensation off when None

    def __post_init__(self):
        self.delta = self.alphas.delta

    def _comp(self, mu_o):
        if self.F_avg is None:
            return 1.0
        return energy_compensation(mu_o, self.alphas.rms, self.F_avg)

    def eval(self, wi, wo):
        n = wi.shape[0]
        if self.delta:
            return np.zeros((n, 3))
        at, ab = self.alphas
        h = wi + wo
        up = (wi[..., 2] > 0) & (wo[..., 2] > 0)
        h = normalize(np.where(up[..., None], h, [0.0, 0.0, 1.0]))
        cos_oh = np.abs(dot(wo, h))
        D = ggx_ndf(h, at, ab)
        G = smith_g(np.where(up[..., None], wi, [0, 0, 1.0]), np.where(up[..., None], wo, [0, 0, 1.0]), at, ab)
        denom = 4.0 * np.where(up, wi[..., 2] * wo[..., 2], 1.0)
        f = (D * G / denom)[..., None] * self.fresnel(cos_oh) * self._comp(wo[..., 2])
        return np.where(up[..., None], f, 0.0)

    def pdf(self, wi, wo):
        if self.delta:
            return np.zeros(wi.shape[0])
        at, ab = self.alphas
        up = (wi[..., 2] > 0) & (wo[..., 2] > 0)
        h = normalize(np.where(up[..., None], wi + wo, [0.0, 0.0, 1.0]))
        wo_s = np.where(up[..., None], wo, [0, 0, 1.0])
        p = visible_normal_pdf(h, wo_s, at, ab) / (4.0 * np.maximum(dot(wo_s, h), 1e-300))
        return np.where(up, p, 0.0)

    def sample(self, wo, u):
        if self.delta:
            wi = wo * np.array([-1.0, -1.0, 1.0])
            F = self.fresnel(wo[..., 2])
            return _delta_sample(wi, F * self._comp(wo[..., 2]))
        at, ab = self.alphas
        m = sample_visible_normal(wo, at, ab, u[..., 0], u[..., 1])
        wi = reflect(wo, m)
        ok = wi[..., 2] > 0
        wi_s = np.where(ok[..., None], wi, [0.0, 0.0, 1.0])
        cos_om = np.abs(dot(wo, m))
        pdf = np.where(ok, visible_normal_pdf(m, wo, at, ab) / (4.0 * cos_om), 0.0)
        w = (smith_g(wi_s, wo, at, ab) / smith_g1(wo, at, ab))[..., None] * self.fresnel(cos_om)
        w = np.where(ok[..., None], w * self._comp(wo[..., 2]), 0.0)
        return LobeSample(wi, pdf, w, np.zeros(wi.shape[0], dtype=bool))


def _refract_through(wo, m, eta):
    """Refract wo (outside, upper hemisphere) through microfacet m into a medium with ratio eta."""
    c = dot(wo, m)
    k = 1.0 - (1.0 - c * c) / (eta * eta)
    tir = k <= 0.0
    wt = -wo / eta + (c / eta - np.sqrt(np.maximum(k, 0.0)))[..., None] * m
    return normalize(wt), tir


@dataclass
class MicrofacetTransmission(Lobe):
    """Rough dielectric BTDF without the Fresnel factor.

    Written in the energy-throughput form: its albedo from outside equals the
    mean of G2/G1 over visible normals, with no eta^2 radiance scaling. With
    ``normalize`` set, the lobe is divided by its own directional albedo so it
    transmits all the energy it receives. That only holds up for eta >= 1:
    below it the TIR cutoff is too sharp to tabulate over mu, so the lobe
    stays physical (albedo <= 1, missing energy belongs to reflection).
    """

    alphas: RoughnessAlphas
    eta: float
    tint: np.ndarray | None = None
    normalize: bool = True
    fresnel_T: Callable[[np.ndarray], np.ndarray] | None = None  # cos(wo, m) -> (N,) transmitted fraction
    transmissive = True

    def __post_init__(self):
        self.delta = self.alphas.delta
        self._norm = None
        if self.normalize and not self.delta and self.eta >= 1.0:
            self._norm = AlbedoTable(self, raw=True)

    @property
    def normalized(self):
        return self._norm is not None

    def _scale(self, mu_o):
        s = np.ones((np.shape(mu_o)[0], 3))
        if self.tint is not None:
            s = s * self.tint
        if self._norm is not None:
            s = s / np.maximum(self._norm(mu_o), 1e-6)
        return s

    def _half(self, wi, wo):
        h = -(wo + self.eta * wi)
        h = normalize(np.where((np.linalg.norm(h, axis=-1) > 0)[..., None], h, [0, 0, 1.0]))
        return np.where((h[..., 2] < 0)[..., None], -h, h)

    def _raw(self, wi, wo):
        at, ab = self.alphas
        ok = (wo[..., 2] > 0) & (wi[..., 2] < 0)
        h = self._half(wi, wo)
        oh = dot(wo, h)
        ih = dot(wi, h)
        ok &= (oh > 0) & (ih < 0)
        denom = (oh + self.eta * ih) ** 2
        wi_flip = wi * np.array([1.0, 1.0, -1.0])
        G = smith_g(np.where(ok[..., None], wi_flip, [0, 0, 1.0]), np.where(ok[..., None], wo, [0, 0, 1.0]), at, ab)
        D = ggx_ndf(h, at, ab)
        with np.errstate(divide="ignore", invalid="ignore"):
            f = self.eta ** 2 * np.abs(ih) * np.abs(oh) * D * G / (np.abs(wi[..., 2]) * np.abs(wo[..., 2]) * denom)
        if self.fresnel_T is not None:
            f = f * self.fresnel_T(np.abs(oh))
        return np.where(ok & np.isfinite(f), f, 0.0)

    def eval(self, wi, wo, raw=False):
        if self.delta:
            return np.zeros((wi.shape[0], 3))
        f = self._raw(wi, wo)[..., None]
        return f if raw else f * self._scale(wo[..., 2])

    def pdf(self, wi, wo):
        if self.delta:
            return np.zeros(wi.shape[0])
        at, ab = self.alphas
        ok = (wo[..., 2] > 0) & (wi[..., 2] < 0)
        h = self._half(wi, wo)
        oh = dot(wo, h)
        ih = dot(wi, h)
        ok &= (oh > 0) & (ih < 0)
        jac = self.eta ** 2 * np.abs(ih) / np.maximum((oh + self.eta * ih) ** 2, 1e-300)
        p = visible_normal_pdf(h, np.where(ok[..., None], wo, [0, 0, 1.0]), at, ab) * jac
        return np.where(ok, p, 0.0)

    def sample(self, wo, u, raw=False):
        n = wo.shape[0]
        if self.delta:
            m = np.broadcast_to(np.array([0.0, 0.0, 1.0]), wo.shape)
            wi, tir = _refract_through(wo, m, self.eta)
            w = np.where(tir[..., None], 0.0, self._scale(wo[..., 2]))
            return _delta_sample(wi, w)
        at, ab = self.alphas
        m = sample_visible_normal(wo, at, ab, u[..., 0], u[..., 1])
        wi, tir = _refract_through(wo, m, self.eta)
        ok = ~tir & (wi[..., 2] < 0)
        wi_s = np.where(ok[..., None], wi, [0.0, 0.0, -1.0])
        ih = dot(wi_s, m)
        oh = dot(wo, m)
        jac = self.eta ** 2 * np.abs(ih) / np.maximum((oh + self.eta * ih) ** 2, 1e-300)
        pdf = np.where(ok, visible_normal_pdf(m, wo, at, ab) * jac, 0.0)
        wi_flip = wi_s * np.array([1.0, 1.0, -1.0])
        g = np.where(ok, smith_g(wi_flip, wo, at, ab) / smith_g1(wo, at, ab), 0.0)
        if self.fresnel_T is not None:
            g = g * self.fresnel_T(np.abs(oh))
        w = g[..., None] * (np.ones((n, 3)) if raw else self._scale(wo[..., 2]))
        return LobeSample(wi, pdf, w, np.zeros(n, dtype=bool))


@dataclass
class Retroreflective(Lobe):
    """Back-vector variant: the view direction is mirrored about the normal upfront."""

    base: Lobe

    def __post_init__(self):
        self.delta = self.base.delta

    @staticmethod
    def mirror(wo):
        return wo * np.array([-1.0, -1.0, 1.0])

    def eval(self, wi, wo):
        return self.base.eval(wi, self.mirror(wo))

    def pdf(self, wi, wo):
        return self.base.pdf(wi, self.mirror(wo))

    def sample(self, wo, u):
        return self.base.sample(self.mirror(wo), u)


# ----------------------------------------------------------------- albedo tables

ALBEDO_MU = np.concatenate([[1e-3], (np.arange(TABLE_N) + 0.5) / TABLE_N, [1.0]])


def directional_albedo(lobe: Lobe, mu_o, n: int = 24, phis=(0.0,), raw: bool = False):
    """Deterministic albedo of ``lobe`` at cosine(s) mu_o using its own sampler
    driven by a stratified grid. Returns (len(mu_o), 3)."""
    mu_o = np.atleast_1d(np.asarray(mu_o, dtype=float))
    u1, u2 = _stratified(n)
    u = np.stack([u1, u2], axis=-1)
    k = u1.size
    out = np.zeros((mu_o.size, 3))
    for phi in phis:
        s = np.sqrt(np.maximum(1.0 - mu_o ** 2, 0.0))
        wo = np.stack([s * np.cos(phi), s * np.sin(phi), mu_o], axis=-1)
        wo_rep = np.repeat(wo, k, axis=0)
        uu = np.tile(u, (mu_o.size, 1))
        smp = lobe.sample(wo_rep, uu, raw=True) if raw else lobe.sample(wo_rep, uu)
        w = np.where(smp.delta[..., None] | (smp.pdf > 0)[..., None], smp.weight, 0.0)
        out += w.reshape(mu_o.size, k, 3).mean(axis=1)
    return out / len(phis)


class AlbedoTable:
    """Directional albedo of a lobe tabulated over mu_o and linearly interpolated."""

    def __init__(self, lobe: Lobe, n: int = 24, raw: bool = False):
        anis = getattr(lobe, "alphas", None)
        phis = (0.0,)
        if anis is not None and abs(anis.at - anis.ab) > 1e-12:
            phis = tuple(np.pi * (np.arange(4) + 0.5) / 8.0)  # quarter period of the NDF
        self.values = directional_albedo(lobe, ALBEDO_MU, n=n, phis=phis, raw=raw)

    def __call__(self, mu_o):
        mu = np.clip(np.asarray(mu_o, dtype=float), ALBEDO_MU[0], 1.0)
        return np.stack([np.interp(mu, ALBEDO_MU, self.values[:, c]) for c in range(3)], axis=-1)
