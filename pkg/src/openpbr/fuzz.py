"""Fuzz (sheen) lobe, its layering rule and the substrate roughening heuristic.

E_fuzz is read from a 32x32 table produced offline by the microflake slab
simulator in ``openpbr.harness.fuzzsim`` (see ``openpbr fuzz-table``). The
angular shape is a plain cosine lobe, so the lobe albedo is exactly
F_color * E_fuzz, which is all the layering needs.
"""

from __future__ import annotations

import csv
import functools
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .microfacet import LobeSample, Lobe, bilinear
from .spectra import LUM709
from .diffuse import sample_cosine

FUZZ_N = 32
FUZZ_MU = (np.arange(FUZZ_N) + 0.5) / FUZZ_N
FUZZ_ALPHA = (np.arange(FUZZ_N) + 0.5) / FUZZ_N
TABLE_FILE = "fuzz_table.csv"


@dataclass(frozen=True)
class FuzzParams:
    F_weight: float
    F_color: np.ndarray
    alpha: float


def read_table(path=None) -> np.ndarray:
    if path is None:
        fh = resources.files("openpbr").joinpath("data", TABLE_FILE).open("r", encoding="utf-8")
    else:
        fh = open(path, "r", encoding="utf-8")
    with fh:
        rows = list(csv.DictReader(fh))
    t = np.zeros((FUZZ_N, FUZZ_N))
    for r in rows:
        t[int(r["i_mu"]), int(r["j_alpha"])] = float(r["E"])
    return t


def write_table(table, out):
    """CSV with one row per cell; 9 significant digits."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["i_mu", "j_alpha", "mu", "alpha", "E"])
    for i in range(FUZZ_N):
        for j in range(FUZZ_N):
            w.writerow([i, j, f"{FUZZ_MU[i]:.9g}", f"{FUZZ_ALPHA[j]:.9g}", f"{table[i, j]:.9g}"])


@functools.lru_cache(maxsize=1)
def fuzz_table() -> np.ndarray:
    t = read_table()
    t.setflags(write=False)
    return t


def fuzz_albedo(mu_o, alpha):
    return np.clip(bilinear(fuzz_table(), FUZZ_MU, FUZZ_ALPHA, mu_o, alpha), 0.0, 1.0)


class FuzzLobe(Lobe):
    """Cosine lobe scaled to albedo F_color * E_fuzz(mu_o)."""

    def __init__(self, color, alpha):
        self.color = np.asarray(color, dtype=float)
        self.alpha = float(alpha)
        self.delta = False
        self.transmissive = False

    def albedo(self, mu_o):
        mu_o = np.asarray(mu_o, dtype=float)
        return self.color * np.asarray(fuzz_albedo(np.abs(mu_o), self.alpha))[..., None]

    def eval(self, wi, wo):
        ok = (wi[..., 2] > 0) & (wo[..., 2] > 0)
        f = self.albedo(np.clip(wo[..., 2], 0.0, 1.0)) / np.pi
        return np.where(ok[..., None], f, 0.0)

    def pdf(self, wi, wo):
        ok = (wi[..., 2] > 0) & (wo[..., 2] > 0)
        return np.where(ok, np.maximum(wi[..., 2], 0.0) / np.pi, 0.0)

    def sample(self, wo, u):
        wi = sample_cosine(u)
        pdf = wi[..., 2] / np.pi
        ok = wo[..., 2] > 0
        weight = np.where(ok[..., None], self.albedo(np.clip(wo[..., 2], 0.0, 1.0)), 0.0)
        return LobeSample(wi, np.where(ok, pdf, 0.0), weight, np.zeros(wi.shape[0], dtype=bool))


def fuzz_eval(wi, wo, p: FuzzParams):
    return FuzzLobe(p.F_color, p.alpha).eval(wi, wo)


def fuzz_layer(f_fuzz, E_fuzz_white, f_base, F_weight):
    # lerp(1, 1 - E, F) == 1 - F E; transmitted light is not tinted
    return F_weight * np.asarray(f_fuzz) + (1.0 - F_weight * np.asarray(E_fuzz_white)) * np.asarray(f_base)


def fuzz_roughen(r_B, F_color, E_fuzz):
    R_F = float(np.dot(LUM709, np.asarray(F_color, dtype=float) * np.asarray(E_fuzz, dtype=float)))
    if R_F <= 0.0:
        return r_B
    return min(1.0, r_B ** 4 + 2.0 * R_F ** 4) ** 0.25
