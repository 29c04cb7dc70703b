"""Assembly of a validated material into a weighted mixture of primitive lobes.

The weight cascade follows the albedo-scaling mixture form of the model:

    f      = lerp(transparent, surface, alpha)
    surface = F fuzz + (1 - F E_fuzz_white) coated
    coated  = C coat + lerp(1, A (1 - E_coat) D, C) base
    base    = lerp(dielectric, conductor, M)
    dielectric = spec_R + (1 - E_specR) lerp(lerp(diffuse, sss, S), spec_T, T)

where A is the view-dependent coat absorption (T^2 at normal incidence) and
D the modulated darkening factor. Directional albedos are read from the
per-lobe tables at the actual outgoing direction.

Directions passed to a mixture are in the world frame; each lobe carries its
own local frame (base, coat or fuzz normal).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import coat as coatm
from .diffuse import DiffuseLobe, EonParams
from .fresnel import (
    f82_average_albedo,
    f82_fresnel,
    fresnel_albedo_numeric,
    modulated_eta,
    specular_reflectance,
)
from .fuzz import FuzzLobe, fuzz_albedo, fuzz_roughen
from .microfacet import (
    AlbedoTable,
    Lobe,
    LobeSample,
    MicrofacetReflection,
    MicrofacetTransmission,
    Retroreflective,
    hazy_roughness,
    roughness_to_alphas,
)
from .params import MaterialParams, ValidatedMaterial, validate
from .spectra import LAMBDA_RGB, LUM709, cauchy_fit, abbe_number, ior_at_wavelength
from .thinfilm import airy_reflectance, effective_complex_ior

SELECT_FLOOR = 1e-3

KINDS = ("transparent", "fuzz", "coat", "conductor", "specular_R", "specular_T", "diffuse", "sss_proxy")


# ----------------------------------------------------------------- geometry

def _frame(n, t=None):
    n = np.asarray(n, dtype=float)
    n = n / np.linalg.norm(n)
    if t is None:
        t = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t = np.asarray(t, dtype=float)
    t = t - n * np.dot(t, n)
    if np.linalg.norm(t) < 1e-12:
        return _frame(n, None)
    t = t / np.linalg.norm(t)
    b = np.cross(n, t)
    return np.stack([t, b, n])  # rows; local = R @ world


@dataclass(frozen=True)
class ShadingGeometry:
    normal: tuple = (0.0, 0.0, 1.0)
    tangent: tuple | None = (1.0, 0.0, 0.0)
    coat_normal: tuple | None = None
    coat_tangent: tuple | None = None
    entering: bool = True   # False when wo lies on the inside of the base
    n_a: float = 1.0
    lam: float | None = None  # hero wavelength (nm) for dispersion; None disables it

    @classmethod
    def from_material(cls, m, **kw):
        g = {}
        if m.geometry_normal is not None:
            g["normal"] = m.geometry_normal
        if m.geometry_tangent is not None:
            g["tangent"] = m.geometry_tangent
        if m.geometry_coat_normal is not None:
            g["coat_normal"] = m.geometry_coat_normal
        if m.geometry_coat_tangent is not None:
            g["coat_tangent"] = m.geometry_coat_tangent
        g.update(kw)
        return cls(**g)

    def base_frame(self):
        return _frame(self.normal, self.tangent)

    def coat_frame(self):
        n = self.coat_normal if self.coat_normal is not None else self.normal
        t = self.coat_tangent if self.coat_tangent is not None else self.tangent
        return _frame(n, t)

    def fuzz_frame(self, C):
        nb = np.asarray(self.normal, dtype=float)
        nc = np.asarray(self.coat_normal if self.coat_normal is not None else self.normal, dtype=float)
        n = (1.0 - C) * nb / np.linalg.norm(nb) + C * nc / np.linalg.norm(nc)
        if np.linalg.norm(n) < 1e-9:
            n = nb
        return _frame(n, self.tangent)


# ----------------------------------------------------------------- small lobes

class Transparent(Lobe):
    """Pass-through delta BTDF."""

    delta = True
    transmissive = True

    def eval(self, wi, wo):
        return np.zeros((wi.shape[0], 3))

    def pdf(self, wi, wo):
        return np.zeros(wi.shape[0])

    def sample(self, wo, u):
        n = wo.shape[0]
        return LobeSample(-wo, np.full(n, np.inf), np.ones((n, 3)), np.ones(n, dtype=bool))


class Flipped(Lobe):
    """A reflection lobe mirrored into the lower hemisphere."""

    transmissive = True

    def __init__(self, base: Lobe):
        self.base = base
        self.delta = base.delta

    @staticmethod
    def _f(w):
        return w * np.array([1.0, 1.0, -1.0])

    def eval(self, wi, wo):
        return self.base.eval(self._f(wi), wo)

    def pdf(self, wi, wo):
        return self.base.pdf(self._f(wi), wo)

    def sample(self, wo, u):
        s = self.base.sample(wo, u)
        return LobeSample(self._f(s.wi), s.pdf, s.weight, s.delta)


# ----------------------------------------------------------------- mixture

WeightFn = Callable[[np.ndarray | None, np.ndarray], np.ndarray]  # (wi|None, wo) local -> (N, 3)


@dataclass
class LobeEntry:
    kind: str
    lobe: Lobe
    weight: WeightFn
    frame: np.ndarray
    albedo: Callable[[np.ndarray], np.ndarray]  # mu_o -> (N, 3), used for selection only
    scale: float = 1.0   # scalar coefficient from the cascade; entries with 0 are dropped


def _const(c):
    c = np.asarray(c, dtype=float) * np.ones(3)

    def w(wi, wo):
        return np.broadcast_to(c, (wo.shape[0], 3)).copy()
    return w


def _mul(*fns):
    def w(wi, wo):
        out = fns[0](wi, wo)
        for f in fns[1:]:
            out = out * f(wi, wo)
        return out
    return w


def _table_albedo(table):
    return lambda mu: table(np.abs(mu))


@dataclass
class LobeMixture:
    entries: list[LobeEntry]
    emission: np.ndarray
    auto_orient: bool = False
    view_sign: float = 1.0   # +1: wo must lie above the base normal; -1: below
    base_frame: np.ndarray = field(default_factory=lambda: np.eye(3))
    tables: dict = field(default_factory=dict)

    @property
    def kinds(self):
        return [e.kind for e in self.entries]

    # -- helpers
    def _orient(self, wi, wo):
        wi = np.atleast_2d(np.asarray(wi, dtype=float))
        wo = np.atleast_2d(np.asarray(wo, dtype=float))
        if not self.auto_orient:
            return wi, wo, None
        n = self.base_frame[2]
        below = wo @ n < 0.0
        if not np.any(below):
            return wi, wo, below
        # mirror both directions through the base plane
        refl = np.eye(3) - 2.0 * np.outer(n, n)
        wi = np.where(below[:, None], wi @ refl, wi)
        wo = np.where(below[:, None], wo @ refl, wo)
        return wi, wo, below

    def _valid(self, wo):
        return (wo @ self.base_frame[2]) * self.view_sign > 0.0

    def weights(self, wo, wi=None):
        """Per-entry mixture weights (n_entries, N, 3) at world wo (and wi if given)."""
        wo = np.atleast_2d(wo)
        out = []
        for e in self.entries:
            lo = wo @ e.frame.T
            li = None if wi is None else np.atleast_2d(wi) @ e.frame.T
            out.append(e.weight(li, lo))
        return np.stack(out) if out else np.zeros((0, wo.shape[0], 3))

    def eval(self, wi, wo, projected: bool = False):
        """Sum of weighted lobe BSDFs. With ``projected`` each term carries the
        cosine to its own lobe normal, which is what integrators need."""
        wi, wo, _ = self._orient(wi, wo)
        total = np.zeros((wo.shape[0], 3))
        ok = self._valid(wo)
        for e in self.entries:
            if e.lobe.delta:
                continue
            li = wi @ e.frame.T
            lo = wo @ e.frame.T
            f = e.lobe.eval(li, lo) * e.weight(li, lo)
            if projected:
                f = f * np.abs(li[:, 2])[:, None]
            total += f
        return np.where(ok[:, None], total, 0.0)

    def selection_probabilities(self, wo):
        wo = np.atleast_2d(wo)
        ps = []
        for e in self.entries:
            lo = wo @ e.frame.T
            w = e.weight(None, lo) * e.albedo(lo[:, 2])
            ps.append(np.maximum(w @ LUM709, 0.0))
        if not ps:
            return np.zeros((0, wo.shape[0]))
        p = np.stack(ps)
        tot = p.sum(axis=0)
        p = np.where(tot > 0, p / np.where(tot > 0, tot, 1.0), 1.0 / len(ps))
        # floor nonzero-weight lobes so none is starved
        nz = np.stack([np.any(e.weight(None, wo @ e.frame.T) > 0, axis=-1) for e in self.entries])
        p = np.where(nz, np.maximum(p, SELECT_FLOOR), 0.0)
        s = p.sum(axis=0)
        return np.where(s > 0, p / np.where(s > 0, s, 1.0), 0.0)

    def pdf(self, wi, wo, probs=None):
        wi, wo, _ = self._orient(wi, wo)
        if probs is None:
            probs = self.selection_probabilities(wo)
        total = np.zeros(wo.shape[0])
        for k, e in enumerate(self.entries):
            if e.lobe.delta:
                continue
            total += probs[k] * e.lobe.pdf(wi @ e.frame.T, wo @ e.frame.T)
        return total

    def sample(self, wo, rng: np.random.Generator) -> LobeSample:
        """One-sample MIS over the lobes. Returns world-space wi and the
        throughput f |cos| / pdf (or the delta throughput)."""
        wo_in = np.atleast_2d(np.asarray(wo, dtype=float))
        n = wo_in.shape[0]
        _, wo, below = self._orient(wo_in, wo_in)
        u_sel = rng.random(n)
        u = rng.random((n, 2))
        probs = self.selection_probabilities(wo)
        wi = np.zeros((n, 3))
        weight = np.zeros((n, 3))
        pdf = np.zeros(n)
        delta = np.zeros(n, dtype=bool)
        failed = np.zeros(n, dtype=bool)
        if len(self.entries) == 0:
            return LobeSample(wi, pdf, weight, delta)
        cdf = np.cumsum(probs, axis=0)
        choice = np.minimum((u_sel[None, :] >= cdf).sum(axis=0), len(self.entries) - 1)
        for k, e in enumerate(self.entries):
            idx = np.nonzero(choice == k)[0]
            if idx.size == 0:
                continue
            lo = wo[idx] @ e.frame.T
            s = e.lobe.sample(lo, u[idx])
            wi_w = s.wi @ e.frame
            wi[idx] = wi_w
            # a rejected sample (e.g. TIR in a BTDF) carries a meaningless direction
            failed[idx] = ~s.delta & ~(s.pdf > 0)
            if e.lobe.delta:
                w = e.weight(s.wi, lo) * s.weight / probs[k, idx][:, None]
                weight[idx] = w
                pdf[idx] = np.inf
                delta[idx] = True
        nd = ~delta & ~failed
        if np.any(nd):
            f = self.eval(wi[nd], wo[nd], projected=True)
            p = self.pdf(wi[nd], wo[nd], probs[:, nd])
            with np.errstate(divide="ignore", invalid="ignore"):
                w = f / p[:, None]
            weight[nd] = np.where((p > 0)[:, None] & np.isfinite(w), w, 0.0)
            pdf[nd] = p
        ok = self._valid(wo)
        weight = np.where(ok[:, None], weight, 0.0)
        if below is not None and np.any(below):
            n_ = self.base_frame[2]
            refl = np.eye(3) - 2.0 * np.outer(n_, n_)
            wi = np.where(below[:, None], wi @ refl, wi)
        return LobeSample(wi, pdf, weight, delta)

    def emission_radiance(self, wo=None):
        return self.emission


# ----------------------------------------------------------------- fresnel builders

def _channel_lams(g: ShadingGeometry):
    return np.asarray(LAMBDA_RGB, dtype=float)


def dielectric_fresnel(eta, xi, color=None, film=None):
    """cos -> (N, 3) dielectric reflectance with the specular_weight modulation,
    optional thin-film blend and optional color tint."""

    def F(c):
        c = np.asarray(c, dtype=float)
        base = specular_reflectance(c, eta, xi).F[..., None] * np.ones(3)
        if film is not None:
            w, fn = film
            base = (1.0 - w) * base + w * fn(c)
        if color is not None:
            base = base * color
        return base
    return F


def _film_fn(n1, n2, n3, d_nm, lams):
    n3 = np.asarray(n3)

    def fn(c):
        c = np.asarray(c, dtype=float)[..., None]
        return airy_reflectance(n1, n2, n3, d_nm, lams, c)
    return fn


def conductor_fresnel(F0, tint, xi, film=None):
    def F(c):
        base = f82_fresnel(np.asarray(c, dtype=float), F0, tint, xi)
        if film is not None:
            w, fn = film
            base = (1.0 - w) * base + w * fn(c)
        return base
    return F


def _dielectric_F_avg(eta, xi):
    eta_m = float(modulated_eta(eta, xi))
    if eta_m >= 1e29:
        return 1.0
    return min(fresnel_albedo_numeric(eta_m), 1.0)


def _dispersed_ior(m, lam):
    if lam is None or m.transmission_dispersion_scale <= 0.0:
        return m.specular_ior
    V = abbe_number(m.transmission_dispersion_scale, m.transmission_dispersion_abbe_number)
    return float(ior_at_wavelength(cauchy_fit(m.specular_ior, V), lam))


# ----------------------------------------------------------------- assemble

def _roughen_specular(m, n_a):
    """Coat then fuzz roughening of the base specular roughness, and fuzz
    roughening of the coat roughness."""
    C = m.coat_weight
    r = m.specular_roughness
    r_c = m.coat_roughness
    if C > 0.0:
        r = coatm.coat_roughen(r, r_c, m.coat_ior / n_a, C)
    F = m.fuzz_weight
    if F > 0.0:
        E = float(fuzz_albedo(1.0, m.fuzz_roughness))
        r = coatm.lerp(r, fuzz_roughen(r, m.fuzz_color, E), F)
        r_c = coatm.lerp(r_c, fuzz_roughen(r_c, m.fuzz_color, E), F)
    return r, r_c


def _reflection_entries(kind, alphas, fresnel, F_avg, haze, spread, r, aniso, weight, frame, tables, key,
                        retro=0.0):
    """One or two (core and haze) reflection lobes sharing a Fresnel factor;
    optionally split again into plain and retro-reflective copies."""
    parts = [(1.0 - haze, alphas)]
    if haze > 0.0:
        parts.append((haze, roughness_to_alphas(hazy_roughness(r, spread), aniso)))
    entries = []
    E_parts = []
    for h, al in parts:
        if h <= 0.0:
            continue
        lobe = MicrofacetReflection(al, fresnel, F_avg)
        tab = AlbedoTable(lobe)
        E_parts.append((h, tab))
        for rw, lb in ((1.0 - retro, lobe), (retro, Retroreflective(lobe) if retro > 0 else None)):
            if rw <= 0.0:
                continue
            entries.append(LobeEntry(kind, lb, _mul(weight, _const(h * rw)), frame, _table_albedo(tab)))

    def E(mu):
        return sum(h * t(mu) for h, t in E_parts)
    tables[key] = E
    return entries, E


def assemble(m: MaterialParams | ValidatedMaterial, g: ShadingGeometry | None = None) -> LobeMixture:
    if not isinstance(m, ValidatedMaterial):
        m = validate(m)
    if g is None:
        g = ShadingGeometry.from_material(m)
    if m.geometry_thin_walled:
        return assemble_thin_walled(m, g)
    return _assemble(m, g, thin=False)


def _assemble(m, g: ShadingGeometry, thin: bool) -> LobeMixture:
    n_a = g.n_a
    alpha = m.geometry_opacity
    F = m.fuzz_weight
    C = m.coat_weight
    M = m.base_metalness
    T = m.transmission_weight
    S = m.subsurface_weight
    interior = (not g.entering) and not thin
    bframe = g.base_frame()
    if interior:
        bframe = bframe * np.array([[1.0], [-1.0], [-1.0]])  # flip n (and b) so wo is "up"
    cframe = g.coat_frame()
    fframe = g.fuzz_frame(C)
    tables: dict = {}
    entries: list[LobeEntry] = []

    r_spec, r_coat = _roughen_specular(m, n_a)
    aniso = m.specular_roughness_anisotropy
    al_spec = roughness_to_alphas(r_spec, aniso)
    xi = m.specular_weight
    n_s = _dispersed_ior(m, g.lam)
    eta_s = coatm.surrounding_eta(n_s, m.coat_ior, n_a, C)
    lams = _channel_lams(g)

    # ---------------- top layers (fuzz, coat) and their downstream weights
    if alpha < 1.0:
        entries.append(LobeEntry("transparent", Transparent(), _const(1.0 - alpha), bframe,
                                 lambda mu: np.ones((np.size(mu), 3)), scale=1.0 - alpha))
    surf = _const(alpha)

    if F > 0.0 and not interior:
        fl = FuzzLobe(m.fuzz_color, m.fuzz_roughness)
        entries.append(LobeEntry("fuzz", fl, _mul(surf, _const(F)), fframe, fl.albedo, scale=alpha * F))

        def fuzz_through(wi, wo, a=m.fuzz_roughness, F=F):
            # 1 - F E_fuzz_white; the lobe-local cosine stands in for the fuzz-frame one
            e = fuzz_albedo(np.clip(wo[:, 2], 0.0, 1.0), a)
            return (1.0 - F * e)[:, None] * np.ones(3)
        tables["E_fuzz_white"] = lambda mu, a=m.fuzz_roughness: fuzz_albedo(np.clip(mu, 0, 1), a)
        under_fuzz = _mul(surf, fuzz_through)
    else:
        under_fuzz = surf

    base_w = under_fuzz
    if C > 0.0 and not interior:
        eta_c = m.coat_ior / n_a
        al_c = roughness_to_alphas(r_coat, m.coat_roughness_anisotropy)
        coat_lobe = MicrofacetReflection(al_c, dielectric_fresnel(eta_c, 1.0), _dielectric_F_avg(eta_c, 1.0))
        coat_tab = AlbedoTable(coat_lobe)
        tables["E_coat"] = coat_tab
        entries.append(LobeEntry("coat", coat_lobe, _mul(under_fuzz, _const(C)), cframe,
                                 _table_albedo(coat_tab), scale=alpha * C))
        T_coat = np.sqrt(np.asarray(m.coat_color, dtype=float))
        E_b = _base_albedo_normal(m, al_spec, eta_s, xi, lams)
        tables["E_b"] = E_b
        ctx = coatm.CoatContext(eta_c, eta_s, T_coat, C, m.coat_darkening, coatm.base_roughness_estimate(m, n_a, eta_s))
        r_b = ctx.r_b

        def coated(wi, wo, eta_c=eta_c, T=T_coat, C=C, ctx=ctx, E_b=E_b):
            mu_o = np.clip(np.abs(wo[:, 2]), 0.0, 1.0)
            e_coat = coat_tab(mu_o)
            if eta_c == 1.0:
                Dm = np.ones((wo.shape[0], 3))
            else:
                K = coatm.lerp(coatm.K_smooth(mu_o, eta_c), coatm.K_rough(eta_c), r_b)
                Dm = coatm.lerp(1.0, coatm.darkening_delta(K[:, None], E_b, T ** 2), ctx.delta)
            mu_i = mu_o if wi is None else np.abs(wi[:, 2])
            A = coatm.view_dependent_absorption(T, mu_i, mu_o, eta_c)
            return 1.0 - C + C * A * (1.0 - e_coat) * Dm
        base_w = _mul(under_fuzz, coated)

    # ---------------- base substrate
    if M > 0.0:
        F0 = m.base_weight * np.asarray(m.base_color, dtype=float)
        tint = np.asarray(m.specular_color, dtype=float)
        film = None
        if m.thin_film_weight > 0.0:
            n1 = coatm.lerp(n_a, m.coat_ior, C)
            film = (m.thin_film_weight, _film_fn(n1, m.thin_film_ior, effective_complex_ior(F0),
                                                 1000.0 * m.thin_film_thickness, lams))
        Fc = conductor_fresnel(F0, tint, xi, film)
        F_avg = np.clip(xi * f82_average_albedo(F0, tint), 0.0, 1.0)
        frame_m = bframe
        ents, _ = _reflection_entries("conductor", al_spec, Fc, F_avg, m.specular_haze, m.specular_haze_spread,
                                      r_spec, aniso, _mul(base_w, _const(M)), frame_m, tables, "E_conductor",
                                      retro=m.specular_retroreflectivity)
        for e in ents:
            e.scale = alpha * M
        entries += ents

    if M < 1.0:
        diel = _mul(base_w, _const(1.0 - M))
        if interior:
            entries += _interior_dielectric(m, diel, bframe, xi, eta_s, al_spec, tables, C, F)
        else:
            entries += _dielectric_entries(m, diel, bframe, xi, eta_s, n_s, al_spec, r_spec, aniso, tables, lams,
                                           n_a, C, thin)

    # scalar coefficients: drop entries the cascade zeroes out
    entries = [e for e in entries if e.scale > 0.0]
    T2 = np.asarray(m.coat_color, dtype=float)
    E = m.emission_weight * np.asarray(m.emission_color, dtype=float) * m.emission_luminance
    emission = coatm.lerp(1.0, T2, C) * E
    mix = LobeMixture(entries, np.asarray(emission, dtype=float), auto_orient=thin,
                      view_sign=1.0, base_frame=bframe, tables=tables)
    return mix


def _base_albedo_normal(m, al_spec, eta_s, xi, lams):
    """Normal-incidence albedo of the whole base under the coat (reflected plus
    transmitted energy), blended by the mix weights."""
    M, T, S = m.base_metalness, m.transmission_weight, m.subsurface_weight
    F0 = m.base_weight * np.asarray(m.base_color, dtype=float)
    tint = np.asarray(m.specular_color, dtype=float)
    E_m = MicrofacetReflection(al_spec, conductor_fresnel(F0, tint, xi),
                               np.clip(xi * f82_average_albedo(F0, tint), 0, 1))
    E_m = AlbedoTable(E_m)(np.array([1.0]))[0] if M > 0 else np.zeros(3)
    if M < 1.0:
        spec = MicrofacetReflection(al_spec, dielectric_fresnel(eta_s, xi), _dielectric_F_avg(eta_s, xi))
        E_r = AlbedoTable(spec)(np.array([1.0]))[0]
        E_d = DiffuseLobe(EonParams(np.asarray(m.base_color, dtype=float), m.base_diffuse_roughness, m.base_weight)).albedo(np.array([1.0]))[0]
        E_s = np.asarray(m.subsurface_color, dtype=float)
        E_t = np.asarray(m.transmission_color, dtype=float) if m.transmission_depth == 0.0 else np.ones(3)
        sub = coatm.lerp(coatm.lerp(E_d, E_s, S), E_t, T)
        E_d_base = np.asarray(m.specular_color, dtype=float) * E_r + (1.0 - E_r) * sub
    else:
        E_d_base = np.zeros(3)
    return np.clip(coatm.lerp(E_d_base, E_m, M), 0.0, 1.0)


def _dielectric_entries(m, diel, frame, xi, eta_s, n_s, al_spec, r_spec, aniso, tables, lams, n_a, C, thin):
    T = m.transmission_weight
    S = m.subsurface_weight
    alpha = m.geometry_opacity
    film = None
    if m.thin_film_weight > 0.0:
        n1 = coatm.lerp(n_a, m.coat_ior, C)
        film = (m.thin_film_weight, _film_fn(n1, m.thin_film_ior, n_s, 1000.0 * m.thin_film_thickness, lams))
    F_avg = _dielectric_F_avg(eta_s, xi)
    scale0 = alpha * (1.0 - m.base_metalness)
    out = []
    spec_color = np.asarray(m.specular_color, dtype=float)

    if thin and T > 0.0:
        # the translucent branch becomes a thin sheet: its own reflection and
        # straight-through transmission lobes replace spec_R / spec_T there
        out += _thin_sheet_entries(m, _mul(diel, _const(T)), frame, eta_s, xi, al_spec, r_spec, aniso, tables,
                                   scale0 * T, spec_color)
        opaque = _mul(diel, _const(1.0 - T))
        op_scale = scale0 * (1.0 - T)
    else:
        opaque = diel
        op_scale = scale0
    if op_scale <= 0.0:
        return out

    # primary specular reflection, tinted by specular_color (the substrate
    # weight uses the untinted albedo so the tint stays on the highlight)
    Fd = dielectric_fresnel(eta_s, xi, None, film)
    ents, E_R = _reflection_entries("specular_R", al_spec, Fd, F_avg, m.specular_haze, m.specular_haze_spread,
                                    r_spec, aniso, _mul(opaque, _const(spec_color)), frame, tables, "E_specR")
    for e in ents:
        e.scale = op_scale
    out += ents

    def below(wi, wo, E_R=E_R):
        return 1.0 - E_R(np.clip(wo[:, 2], 0.0, 1.0))
    sub = _mul(opaque, below)
    T_eff = 0.0 if thin else T  # in thin mode the sheet was split off above
    w_diff = (1.0 - T_eff) * (1.0 - S)
    w_sss = (1.0 - T_eff) * S
    rho = np.asarray(m.base_color, dtype=float)
    if w_diff > 0.0:
        dl = DiffuseLobe(EonParams(rho, m.base_diffuse_roughness, m.base_weight))
        out.append(LobeEntry("diffuse", dl, _mul(sub, _const(w_diff)), frame, dl.albedo, scale=op_scale * w_diff))
    if w_sss > 0.0:
        if thin:
            out += _thin_sss_entries(m, _mul(sub, _const(w_sss)), frame, op_scale * w_sss)
        else:
            sl = DiffuseLobe(EonParams(np.asarray(m.subsurface_color, dtype=float), 0.0, 1.0))
            out.append(LobeEntry("sss_proxy", sl, _mul(sub, _const(w_sss)), frame, sl.albedo, scale=op_scale * w_sss))
    if T_eff > 0.0:
        tint = np.asarray(m.transmission_color, dtype=float) if m.transmission_depth == 0.0 else None
        tl = MicrofacetTransmission(al_spec, eta_s, tint=tint)
        if tl.normalized:
            alb = (lambda mu, t=tint: np.ones((np.size(mu), 3)) * (1.0 if t is None else t))
        else:
            alb = _table_albedo(AlbedoTable(tl))
        out.append(LobeEntry("specular_T", tl, _mul(sub, _const(T_eff)), frame, alb, scale=op_scale * T_eff))
    return out


def _interior_dielectric(m, diel, frame, xi, eta_s, al_spec, tables, C, Fz):
    """Rays exiting from inside the base. The translucent part sees the
    interface from below (ratio 1/eta); opaque parts are mirrored (a thin
    opaque skin reflecting back into the interior)."""
    T = m.transmission_weight
    alpha = m.geometry_opacity
    scale0 = alpha * (1.0 - m.base_metalness)
    out = []
    eta_in = 1.0 / eta_s
    if T > 0.0:
        lobe = MicrofacetReflection(al_spec, dielectric_fresnel(eta_in, xi), None)
        tab = AlbedoTable(lobe)
        tables["E_specR_inside"] = tab
        wT = _mul(diel, _const(T))
        out.append(LobeEntry("specular_R", lobe, wT, frame, _table_albedo(tab), scale=scale0 * T))
        # transmission out through coat/fuzz, dimmed at normal incidence
        dim = np.ones(3)
        if C > 0.0:
            eta_c = m.coat_ior / 1.0
            cl = MicrofacetReflection(roughness_to_alphas(m.coat_roughness, m.coat_roughness_anisotropy),
                                      dielectric_fresnel(eta_c, 1.0), _dielectric_F_avg(eta_c, 1.0))
            dim = dim * coatm.lerp(1.0, np.asarray(m.coat_color) * (1.0 - AlbedoTable(cl)(np.array([1.0]))[0]), C)
        if Fz > 0.0:
            dim = dim * (1.0 - Fz * float(fuzz_albedo(1.0, m.fuzz_roughness)))
        # physical single-scatter split here: normalizing the BTDF breaks down
        # where most microfacets are in TIR
        tl = MicrofacetTransmission(al_spec, eta_in, normalize=False,
                                    fresnel_T=lambda c: 1.0 - specular_reflectance(c, eta_in, xi).F)
        out.append(LobeEntry("specular_T", tl, _mul(wT, _const(dim)), frame,
                             lambda mu: np.ones((np.size(mu), 3)), scale=scale0 * T))
    if T < 1.0:
        # mirrored exterior opaque lobes
        ext = _assemble(validate(m.params.replace(transmission_weight=0.0, coat_weight=0.0, fuzz_weight=0.0,
                                                  geometry_opacity=1.0, base_metalness=0.0)),
                        ShadingGeometry(), thin=False)
        for e in ext.entries:
            out.append(LobeEntry(e.kind, e.lobe, _mul(diel, _const(1.0 - T), e.weight), frame, e.albedo,
                                 scale=scale0 * (1.0 - T)))
    return out


# ----------------------------------------------------------------- thin-walled

def thin_sheet_RT(mu, eta, xi, A):
    """Reflectance and transmittance of a smooth absorbing sheet summed over
    the internal bounce series. A is the normal-incidence single-pass
    transmittance; oblique passes use A^(1/mu_t)."""
    mu = np.asarray(mu, dtype=float)
    A = np.asarray(A, dtype=float)
    fr = specular_reflectance(mu, eta, xi)
    Fv = fr.F[..., None]
    mu_t = np.maximum(fr.mu_t, 1e-6)[..., None]
    with np.errstate(under="ignore", divide="ignore"):
        a = np.where(A > 0, np.power(np.maximum(A, 1e-300), 1.0 / mu_t), 0.0)
    den = 1.0 - Fv * Fv * a * a
    R = Fv + (1.0 - Fv) ** 2 * a * a * Fv / den
    Tt = (1.0 - Fv) ** 2 * a / den
    return R, Tt


def thin_wall_roughness(r, eta):
    """Straight-through lobe roughness for a rough sheet: two passes through
    the interface, each deflecting in proportion to 1 - 1/eta."""
    x = 1.0 - min(eta, 1.0 / eta)
    return min(1.0, 2.0 * x * r ** 4) ** 0.25


def _thin_sheet_entries(m, w, frame, eta, xi, al_spec, r_spec, aniso, tables, scale, spec_color):
    A = np.asarray(m.transmission_color, dtype=float)

    def F_sheet(c):
        return thin_sheet_RT(c, eta, xi, A)[0]
    x, wq = np.polynomial.legendre.leggauss(64)
    mu = 0.5 * (x + 1.0)
    F_avg = np.clip(np.sum((0.5 * wq)[:, None] * 2.0 * mu[:, None] * F_sheet(mu), axis=0), 0.0, 1.0)
    R_lobe = MicrofacetReflection(al_spec, F_sheet, F_avg)
    R_tab = AlbedoTable(R_lobe)
    tables["E_sheetR"] = R_tab
    out = [LobeEntry("specular_R", R_lobe, _mul(w, _const(spec_color)), frame, _table_albedo(R_tab), scale=scale)]
    r_t = thin_wall_roughness(r_spec, eta)
    t_lobe = Flipped(MicrofacetReflection(roughness_to_alphas(r_t, aniso), lambda c: np.ones((np.shape(c)[0], 3)), 1.0))

    def trans(wi, wo):
        mu_o = np.clip(wo[:, 2], 0.0, 1.0)
        R, Tt = thin_sheet_RT(mu_o, eta, xi, A)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(1.0 - R > 1e-12, Tt / np.maximum(1.0 - R, 1e-12), 0.0)
        return (1.0 - R_tab(mu_o)) * np.clip(ratio, 0.0, 1.0)
    tables["thin_sheet"] = lambda mu: thin_sheet_RT(mu, eta, xi, A)
    out.append(LobeEntry("specular_T", t_lobe, _mul(w, trans), frame, lambda mu: np.ones((np.size(mu), 3)),
                         scale=scale))
    return out


def thin_wall_subsurface_split(S, g):
    """(reflection albedo, transmission albedo) of the thin scattering sheet."""
    S = np.asarray(S, dtype=float)
    return 0.5 * S * (1.0 - g), 0.5 * S * (1.0 + g)


def _thin_sss_entries(m, w, frame, scale):
    E_R, E_T = thin_wall_subsurface_split(m.subsurface_color, m.subsurface_anisotropy)
    p = EonParams(np.ones(3), m.base_diffuse_roughness, 1.0)
    out = []
    for kind, E, flip in (("sss_proxy", E_R, False), ("sss_proxy", E_T, True)):
        if np.all(E == 0.0):
            continue
        dl = DiffuseLobe(p, flip=flip)
        out.append(LobeEntry(kind, dl, _mul(w, _const(E)), frame, dl.albedo, scale=scale))
    return out


def assemble_thin_walled(m, g: ShadingGeometry | None = None) -> LobeMixture:
    if not isinstance(m, ValidatedMaterial):
        m = validate(m)
    if g is None:
        g = ShadingGeometry.from_material(m)
    mix = _assemble(m, g, thin=True)
    return mix


# ----------------------------------------------------------------- emission, shadows

def emission(m, wo=None):
    """Isotropic emitted radiance, tinted by the coat absorption."""
    C = m.coat_weight
    E = m.emission_weight * np.asarray(m.emission_color, dtype=float) * m.emission_luminance
    return coatm.lerp(1.0, np.asarray(m.coat_color, dtype=float), C) * E


def dielectric_transmittance_estimate(m, mu=1.0):
    """Fresnel in and out plus Beer attenuation along a straight ray."""
    Fv = float(specular_reflectance(mu, m.specular_ior, m.specular_weight).F)
    Tc = np.asarray(m.transmission_color, dtype=float)
    return m.transmission_weight * (1.0 - Fv) ** 2 * Tc


def shadow_transmittance(m, T_dielectric=None):
    if T_dielectric is None:
        T_dielectric = dielectric_transmittance_estimate(m)
    T_dielectric = np.asarray(T_dielectric, dtype=float)
    a = m.geometry_opacity
    M = m.base_metalness
    return 1.0 - a * (1.0 - (1.0 - M) * T_dielectric)
