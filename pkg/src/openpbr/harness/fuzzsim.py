"""Brute-force microflake slab simulator used to build the fuzz albedo table.

The slab has unit optical thickness along the normal, a fiber-like SGGX flake
distribution S = diag(1, 1, alpha^2) (fibers standing along +z), a specular
microflake phase function and no absorption. Light enters from the top; the
fraction escaping back through the top is E_fuzz(mu, alpha).
"""

from __future__ import annotations

import numpy as np

from ..translucent import orthonormal_basis

MAX_BOUNCES = 4096


def sggx_sigma(d, alpha):
    """Projected flake area sqrt(d^T S d)."""
    return np.sqrt(d[..., 0] ** 2 + d[..., 1] ** 2 + (alpha * d[..., 2]) ** 2)


def sggx_sample_visible_normal(wi, alpha, u1, u2):
    """Visible flake normal for direction wi (pointing away from the flake)."""
    diag = np.array([1.0, 1.0, alpha * alpha])
    wk, wj = orthonormal_basis(wi)

    def quad(a, b):
        return np.sum(a * diag * b, axis=-1)

    S_kk, S_jj, S_ii = quad(wk, wk), quad(wj, wj), quad(wi, wi)
    S_kj, S_ki, S_ji = quad(wk, wj), quad(wk, wi), quad(wj, wi)
    det = alpha * alpha  # det S, invariant under rotation
    sqrt_det = np.sqrt(det)
    inv_sqrt_ii = 1.0 / np.sqrt(S_ii)
    tmp = np.sqrt(np.maximum(S_jj * S_ii - S_ji * S_ji, 1e-300))
    Mk = np.stack([sqrt_det / tmp, np.zeros_like(tmp), np.zeros_like(tmp)], axis=-1)
    Mj = np.stack([-inv_sqrt_ii * (S_ki * S_ji - S_kj * S_ii) / tmp, inv_sqrt_ii * tmp, np.zeros_like(tmp)], axis=-1)
    Mi = np.stack([inv_sqrt_ii * S_ki, inv_sqrt_ii * S_ji, inv_sqrt_ii * S_ii], axis=-1)
    r = np.sqrt(u1)
    phi = 2.0 * np.pi * u2
    x = r * np.cos(phi)
    y = r * np.sin(phi)
    z = np.sqrt(np.maximum(1.0 - x * x - y * y, 0.0))
    m_kji = x[..., None] * Mk + y[..., None] * Mj + z[..., None] * Mi
    m = m_kji[..., 0:1] * wk + m_kji[..., 1:2] * wj + m_kji[..., 2:3] * wi
    return m / np.linalg.norm(m, axis=-1, keepdims=True)


def simulate_cell(mu: float, alpha: float, n: int, rng: np.random.Generator) -> tuple[float, float]:
    """Reflected fraction (and its standard error) for light incident at cosine mu."""
    s = np.sqrt(max(1.0 - mu * mu, 0.0))
    d = np.tile(np.array([-s, 0.0, -mu]), (n, 1))  # propagation direction, heading down
    depth = np.zeros(n)
    rho = 1.0 / alpha  # unit optical depth along the normal: rho * sigma(z) = 1
    alive = np.ones(n, dtype=bool)
    escaped_top = np.zeros(n, dtype=bool)
    for _ in range(MAX_BOUNCES):
        idx = np.nonzero(alive)[0]
        if idx.size == 0:
            break
        dd = d[idx]
        ell = rng.exponential(size=idx.size) / (rho * sggx_sigma(dd, alpha))
        z = depth[idx] - dd[:, 2] * ell
        top = z < 0.0
        bottom = z > 1.0
        escaped_top[idx[top]] = True
        alive[idx[top | bottom]] = False
        keep = ~(top | bottom)
        k = idx[keep]
        depth[k] = z[keep]
        wi = -dd[keep]
        m = sggx_sample_visible_normal(wi, alpha, rng.random(k.size), rng.random(k.size))
        wo = 2.0 * np.sum(wi * m, axis=-1, keepdims=True) * m - wi
        d[k] = wo / np.linalg.norm(wo, axis=-1, keepdims=True)
    E = float(np.mean(escaped_top))
    return E, float(np.sqrt(max(E * (1.0 - E), 1e-300) / n))


def cell_rng(seed: int, i: int, j: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, i, j]))


def simulate_table(mus, alphas, n: int, seed: int = 0, progress=None) -> np.ndarray:
    out = np.zeros((len(mus), len(alphas)))
    for i, mu in enumerate(mus):
        for j, a in enumerate(alphas):
            out[i, j], _ = simulate_cell(float(mu), float(a), n, cell_rng(seed, i, j))
        if progress is not None:
            progress(i + 1, len(mus))
    return out


def monotone_smooth(table: np.ndarray) -> np.ndarray:
    """Light smoothing in mu followed by enforcing a nonincreasing trend in mu.

    The reflected fraction grows toward grazing; Monte Carlo noise can break
    that ordering between neighbouring cells, so each alpha column is passed
    through a pool-adjacent-violators fit.
    """
    t = np.array(table, dtype=float)
    k = np.array([0.25, 0.5, 0.25])
    pad = np.pad(t, ((1, 1), (0, 0)), mode="edge")
    t = k[0] * pad[:-2] + k[1] * pad[1:-1] + k[2] * pad[2:]
    for j in range(t.shape[1]):
        t[:, j] = _pava_decreasing(t[:, j])
    return np.clip(t, 0.0, 1.0)


def _pava_decreasing(y):
    # isotonic regression (nonincreasing) by pool adjacent violators
    vals = []
    for v in -np.asarray(y, dtype=float):
        vals.append([v, 1])
        while len(vals) > 1 and vals[-2][0] > vals[-1][0]:
            v2, n2 = vals.pop()
            v1, n1 = vals.pop()
            vals.append([(v1 * n1 + v2 * n2) / (n1 + n2), n1 + n2])
    out = []
    for v, cnt in vals:
        out.extend([-v] * cnt)
    return np.array(out)


DEFAULT_PHOTONS = 40000


def generate_table(n: int = DEFAULT_PHOTONS, seed: int = 0, progress=None) -> np.ndarray:
    """Smoothed 32x32 E_fuzz table on the cell-centre grid used by the fuzz lobe."""
    from ..fuzz import FUZZ_ALPHA, FUZZ_MU

    return monotone_smooth(simulate_table(FUZZ_MU, FUZZ_ALPHA, n, seed, progress))
