"""Directional albedo (white furnace) estimators for lobes and mixtures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..material import LobeEntry, LobeMixture
from ..microfacet import Lobe

DEFAULT_MUS = tuple(np.round(np.linspace(0.1, 1.0, 8), 6))


@dataclass(frozen=True)
class WalkConfig:
    samples: int = 100_000
    seed: int = 0
    max_bounces: int = 4096
    rr_start: int = 32


@dataclass(frozen=True)
class FurnaceReport:
    mu: float
    albedo: np.ndarray       # sampler-driven MC estimate, per channel
    stderr: np.ndarray
    samples: int
    quadrature: np.ndarray   # stratified eval estimate (delta lobes added exactly)
    target: float | None
    tol: float

    @property
    def passed(self) -> bool:
        if self.target is None:
            # energy conservation only
            return bool(np.all(self.albedo <= 1.0 + self.tol + 3.0 * self.stderr))
        return bool(np.all(np.abs(self.albedo - self.target) < self.tol + 3.0 * self.stderr))

    def line(self) -> str:
        a = " ".join(f"{x:.6f}" for x in self.albedo)
        s = " ".join(f"{x:.2e}" for x in self.stderr)
        q = " ".join(f"{x:.6f}" for x in self.quadrature)
        flag = "PASS" if self.passed else "FAIL"
        return f"mu={self.mu:.4f} albedo=[{a}] stderr=[{s}] quad=[{q}] {flag}"


def as_mixture(target) -> LobeMixture:
    if isinstance(target, LobeMixture):
        return target
    if isinstance(target, Lobe):
        one = lambda wi, wo: np.ones((wo.shape[0], 3))  # noqa: E731
        e = LobeEntry("lobe", target, one, np.eye(3), lambda mu: np.ones((np.size(mu), 3)))
        return LobeMixture([e], np.zeros(3))
    raise TypeError(f"cannot run a furnace on {type(target).__name__}")


def _wo(mu, n):
    s = np.sqrt(max(1.0 - mu * mu, 0.0))
    return np.tile(np.array([s, 0.0, mu]), (n, 1))


def mc_albedo(mix: LobeMixture, mu: float, n: int, rng: np.random.Generator, batch: int = 50_000):
    """Mean and standard error of the sampler throughput at cosine mu."""
    s1 = np.zeros(3)
    s2 = np.zeros(3)
    done = 0
    while done < n:
        k = min(batch, n - done)
        w = mix.sample(_wo(mu, k), rng).weight
        s1 += w.sum(axis=0)
        s2 += (w * w).sum(axis=0)
        done += k
    mean = s1 / n
    var = np.maximum(s2 / n - mean * mean, 0.0)
    return mean, np.sqrt(var / max(n - 1, 1))


def quadrature_albedo(mix: LobeMixture, mu: float, n: int = 256):
    """Stratified midpoint rule over the full sphere plus exact delta terms."""
    k = (np.arange(n) + 0.5) / n
    z = 1.0 - 2.0 * k
    phi = 2.0 * np.pi * k
    Z, P = np.meshgrid(z, phi, indexing="ij")
    r = np.sqrt(np.maximum(1.0 - Z * Z, 0.0))
    wi = np.stack([r * np.cos(P), r * np.sin(P), Z], axis=-1).reshape(-1, 3)
    wo = _wo(mu, wi.shape[0])
    f = mix.eval(wi, wo, projected=True)
    total = 4.0 * np.pi * f.mean(axis=0)
    wo1 = _wo(mu, 1)
    for e in mix.entries:
        if e.lobe.delta:
            lo = wo1 @ e.frame.T
            s = e.lobe.sample(lo, np.full((1, 2), 0.5))
            total = total + (e.weight(s.wi, lo) * s.weight)[0]
    return total


def furnace_test(target, mus=DEFAULT_MUS, cfg: WalkConfig = WalkConfig(), target_value=None, tol=0.02,
                 quad_n: int = 128):
    mix = as_mixture(target)
    rng = np.random.default_rng(cfg.seed)
    out = []
    for mu in mus:
        a, se = mc_albedo(mix, float(mu), cfg.samples, rng)
        q = quadrature_albedo(mix, float(mu), quad_n) if quad_n else np.full(3, np.nan)
        out.append(FurnaceReport(float(mu), a, se, cfg.samples, q, target_value, tol))
    return out
