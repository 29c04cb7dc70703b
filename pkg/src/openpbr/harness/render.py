"""Minimal unidirectional path tracer: one unit sphere under an environment.

The camera is orthographic, looking down -z at the sphere, with +y up.
Surfaces only: interior media are not simulated, a ray that refracts into
the sphere travels straight to the far side and meets the interior mixture.
"""

from __future__ import annotations

import numpy as np

from ..material import ShadingGeometry, assemble
from ..params import ValidatedMaterial, load_material, validate
from ..translucent import orthonormal_basis

PRESETS = ("furnace", "sphere-sky", "sphere-light")
MAX_DEPTH = 16
RR_DEPTH = 4
EPS = 1e-6
ROWS_PER_BATCH = 8

LIGHT_DIR = np.array([-0.5, 0.7, 0.5]) / np.linalg.norm([-0.5, 0.7, 0.5])
LIGHT_COS = np.cos(np.radians(15.0))
LIGHT_RADIANCE = 8.0


class InvalidPreset(ValueError):
    pass


def environment(preset: str, d):
    if preset == "furnace":
        return np.ones((d.shape[0], 3))
    if preset == "sphere-sky":
        up = np.clip(d[:, 1], 0.0, 1.0)
        sky = np.array([0.55, 0.7, 1.0])
        L = 0.1 + (0.5 + 0.5 * up)[:, None] * sky
        return np.where((d[:, 1] < 0.0)[:, None], 0.1, L)
    if preset == "sphere-light":
        hit = d @ LIGHT_DIR > LIGHT_COS
        return np.where(hit[:, None], LIGHT_RADIANCE, 0.0) * np.ones((1, 3))
    raise InvalidPreset(f"unknown preset {preset!r}; expected one of {', '.join(PRESETS)}")


def _hit_sphere(o, d, inside):
    b = np.sum(o * d, axis=-1)
    c = np.sum(o * o, axis=-1) - 1.0
    disc = b * b - c
    ok = disc > 0.0
    sq = np.sqrt(np.maximum(disc, 0.0))
    t = np.where(inside, -b + sq, -b - sq)
    ok &= t > EPS
    return ok, t


def _to_local(v, t, b, n):
    return np.stack([np.sum(v * t, -1), np.sum(v * b, -1), np.sum(v * n, -1)], axis=-1)


def _to_world(v, t, b, n):
    return v[:, 0:1] * t + v[:, 1:2] * b + v[:, 2:3] * n


class _Shader:
    """Exterior and interior mixtures assembled once in a z-up local frame."""

    def __init__(self, m: ValidatedMaterial):
        self.m = m
        self.thin = m.geometry_thin_walled
        self.outside = assemble(m, ShadingGeometry.from_material(m, entering=True))
        self.inside = None if self.thin else assemble(m, ShadingGeometry.from_material(m, entering=False))
        self.Le = np.asarray(self.outside.emission, dtype=float)

    def mixture(self, interior: bool):
        return self.inside if (interior and self.inside is not None) else self.outside


def trace(shader: _Shader, preset: str, o, d, rng: np.random.Generator):
    n_rays = o.shape[0]
    L = np.zeros((n_rays, 3))
    beta = np.ones((n_rays, 3))
    inside = np.zeros(n_rays, dtype=bool)
    alive = np.ones(n_rays, dtype=bool)
    for depth in range(MAX_DEPTH):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        hit, t = _hit_sphere(o[idx], d[idx], inside[idx])
        miss = idx[~hit]
        L[miss] += beta[miss] * environment(preset, d[miss])
        alive[miss] = False
        h = idx[hit]
        if h.size == 0:
            break
        p = o[h] + t[hit][:, None] * d[h]
        nrm = p / np.linalg.norm(p, axis=-1, keepdims=True)
        tan, bit = orthonormal_basis(nrm)
        wo = _to_local(-d[h], tan, bit, nrm)
        outside = ~inside[h]
        L[h[outside]] += beta[h[outside]] * shader.Le
        wi = np.zeros_like(wo)
        w = np.zeros_like(wo)
        for interior in (False, True):
            sel = inside[h] == interior
            if not np.any(sel):
                continue
            s = shader.mixture(interior).sample(wo[sel], rng)
            wi[sel] = s.wi
            w[sel] = s.weight
        dw = _to_world(wi, tan, bit, nrm)
        beta[h] *= w
        # side after the bounce: below the outward normal means inside
        below = wi[:, 2] < 0.0
        inside[h] = below
        o[h] = p + np.where(below, -EPS, EPS)[:, None] * nrm
        d[h] = dw / np.maximum(np.linalg.norm(dw, axis=-1, keepdims=True), 1e-300)
        dead = ~np.any(w > 0.0, axis=-1)
        alive[h[dead]] = False
        if depth + 1 >= RR_DEPTH:
            k = h[~dead]
            q = np.minimum(1.0, beta[k].max(axis=-1))
            die = rng.random(k.size) >= q
            alive[k[die]] = False
            beta[k[~die]] /= q[~die][:, None]
    return L


def render(material, preset: str = "furnace", spp: int = 16, size: int = 32, seed: int = 0) -> np.ndarray:
    """Linear radiance image (size, size, 3), rows top to bottom."""
    environment(preset, np.zeros((1, 3)))  # validates the preset name
    if not isinstance(material, ValidatedMaterial):
        material = validate(material)
    shader = _Shader(material)
    img = np.zeros((size, size, 3))
    for b0 in range(0, size, ROWS_PER_BATCH):
        rows = np.arange(b0, min(b0 + ROWS_PER_BATCH, size))
        rng = np.random.default_rng(np.random.SeedSequence([seed, b0 // ROWS_PER_BATCH]))
        J, I = np.meshgrid(np.arange(size), rows)
        I = np.repeat(I.ravel(), spp)
        J = np.repeat(J.ravel(), spp)
        jit = rng.random((I.size, 2))
        x = (J + jit[:, 0]) / size * 2.0 - 1.0
        y = 1.0 - (I + jit[:, 1]) / size * 2.0
        o = np.stack([x, y, np.full_like(x, 3.0)], axis=-1)
        d = np.tile(np.array([0.0, 0.0, -1.0]), (x.size, 1))
        L = trace(shader, preset, o, d, rng)
        img[rows] = L.reshape(rows.size, size, spp, 3).mean(axis=2)
    return img


def to_ppm_bytes(img: np.ndarray) -> bytes:
    v = np.clip(img, 0.0, 1.0) ** (1.0 / 2.2)
    px = np.floor(v * 255.0 + 0.5).astype(np.uint8)
    h, w = px.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + px.tobytes()


def render_sphere(material_file, preset: str, spp: int, out_path, seed: int = 0, size: int = 32) -> np.ndarray:
    m = load_material(material_file) if not hasattr(material_file, "base_color") else material_file
    img = render(m, preset, spp, size, seed)
    with open(out_path, "wb") as fh:
        fh.write(to_ppm_bytes(img))
    return img
