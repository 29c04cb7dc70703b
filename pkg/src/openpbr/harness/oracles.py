"""Brute-force random-walk oracles.

These deliberately avoid the shipping code paths: the coat walk has its own
scalar Fresnel formula, and the half-space walk does its own distance and
phase sampling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .furnace import WalkConfig


@dataclass(frozen=True)
class OracleResult:
    albedo: float
    stderr: float
    samples: int
    truncated: float = 0.0   # weight still in flight when the bounce cap was hit

    def agrees(self, ref: float, rel: float = 0.0, abs_: float = 0.0) -> bool:
        return abs(self.albedo - ref) < rel * abs(ref) + abs_ + 3.0 * self.stderr


def _fresnel(c, eta):
    # unpolarized dielectric reflectance, c = |cos| on the incident side
    s2 = (1.0 - c * c) / (eta * eta)
    tir = s2 >= 1.0
    ct = np.sqrt(np.maximum(1.0 - s2, 0.0))
    rs = (c - eta * ct) / (c + eta * ct)
    rp = (eta * c - ct) / (eta * c + ct)
    return np.where(tir, 1.0, 0.5 * (rs * rs + rp * rp)), ct


def _finish(score, n, pending=0.0):
    m = float(score.mean())
    se = float(score.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return OracleResult(m, se, n, float(pending) / n)


def coat_walk_oracle(eta: float, T: float, rho: float, base: str = "lambert", mu_o: float = 1.0,
                     cfg: WalkConfig = WalkConfig()) -> OracleResult:
    """Total albedo of a smooth absorbing coat (single-pass normal transmittance
    T) over a Lambertian or mirror base of reflectance rho, lit from mu_o."""
    if base not in ("lambert", "mirror"):
        raise ValueError(f"unknown base kind {base!r}")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.samples
    F0, mu_c = _fresnel(np.full(n, float(mu_o)), eta)
    score = np.zeros(n)
    refl = rng.random(n) < F0
    score[refl] = 1.0
    alive = ~refl
    w = np.ones(n)
    mu = mu_c.copy()
    for bounce in range(cfg.max_bounces):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        # down through the coat, bounce off the base, back up
        w[idx] *= T ** (1.0 / np.maximum(mu[idx], 1e-12))
        w[idx] *= rho
        if base == "lambert":
            mu[idx] = np.sqrt(rng.random(idx.size))
        w[idx] *= T ** (1.0 / np.maximum(mu[idx], 1e-12))
        Fi, _ = _fresnel(mu[idx], 1.0 / eta)
        out = rng.random(idx.size) >= Fi
        score[idx[out]] += w[idx[out]]
        alive[idx[out]] = False
        if bounce + 1 >= cfg.rr_start:
            k = np.nonzero(alive)[0]
            p = np.minimum(1.0, w[k])
            die = rng.random(k.size) >= p
            alive[k[die]] = False
            w[k[~die]] /= p[~die]
    return _finish(score, n)


def _hg_cos(g, u):
    if abs(g) < 1e-6:
        return 1.0 - 2.0 * u
    t = (1.0 - g * g) / (1.0 - g + 2.0 * g * u)
    return (1.0 + g * g - t * t) / (2.0 * g)


def _rotate(d, cos_t, phi):
    # rotate unit vectors d by polar angle acos(cos_t) and azimuth phi
    sin_t = np.sqrt(np.maximum(1.0 - cos_t * cos_t, 0.0))
    sign = np.where(d[:, 2] >= 0.0, 1.0, -1.0)
    a = -1.0 / (sign + d[:, 2])
    b = d[:, 0] * d[:, 1] * a
    t = np.stack([1.0 + sign * d[:, 0] ** 2 * a, sign * b, -sign * d[:, 0]], axis=-1)
    s = np.stack([b, sign + d[:, 1] ** 2 * a, -d[:, 1]], axis=-1)
    return ((sin_t * np.cos(phi))[:, None] * t + (sin_t * np.sin(phi))[:, None] * s + cos_t[:, None] * d)


def halfspace_walk_oracle(albedo: float, g: float = 0.0, eta: float = 1.0, cfg: WalkConfig = WalkConfig(),
                          mu_s: float | None = None, mu_a: float | None = None) -> OracleResult:
    """Escaped fraction for a semi-infinite medium under diffuse illumination.

    The medium is given either by its single-scattering albedo (unit
    extinction) or by explicit mu_s and mu_a. With eta != 1 the boundary
    refracts and reflects; the external specular reflection is not counted.
    """
    if mu_s is not None:
        mu_t = float(mu_s) + float(mu_a or 0.0)
        albedo = float(mu_s) / mu_t
    else:
        mu_t = 1.0
    rng = np.random.default_rng(cfg.seed)
    n = cfg.samples
    # diffuse (cosine-weighted) incidence from outside
    mu0 = np.sqrt(rng.random(n))
    w = np.ones(n)
    if eta != 1.0:
        F, mu_in = _fresnel(mu0, eta)
        w *= 1.0 - F
        sin_in = np.sqrt(np.maximum(1.0 - mu_in * mu_in, 0.0))
    else:
        mu_in = mu0
        sin_in = np.sqrt(np.maximum(1.0 - mu0 * mu0, 0.0))
    phi = 2.0 * np.pi * rng.random(n)
    d = np.stack([sin_in * np.cos(phi), sin_in * np.sin(phi), -mu_in], axis=-1)
    z = np.zeros(n)  # height; the medium is z < 0
    score = np.zeros(n)
    alive = w > 0.0
    for bounce in range(cfg.max_bounces):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        t = -np.log(1.0 - rng.random(idx.size)) / mu_t
        z_new = z[idx] + t * d[idx, 2]
        esc = z_new >= 0.0
        if np.any(esc):
            e = idx[esc]
            if eta == 1.0:
                score[e] += w[e]
                alive[e] = False
            else:
                Fi, _ = _fresnel(np.abs(d[e, 2]), 1.0 / eta)
                out = rng.random(e.size) >= Fi
                score[e[out]] += w[e[out]]
                alive[e[out]] = False
                back = e[~out]
                # internal reflection at the boundary, then keep walking from z = 0
                z[back] = 0.0
                d[back, 2] = -d[back, 2]
        inside = idx[~esc]
        z[inside] = z_new[~esc]
        w[inside] *= albedo
        cos_t = _hg_cos(g, rng.random(inside.size))
        d[inside] = _rotate(d[inside], cos_t, 2.0 * np.pi * rng.random(inside.size))
        if bounce + 1 >= cfg.rr_start:
            k = inside[alive[inside]]
            p = np.minimum(1.0, w[k])
            die = rng.random(k.size) >= p
            alive[k[die]] = False
            w[k[~die]] /= p[~die]
    return _finish(score, n, w[alive].sum())
