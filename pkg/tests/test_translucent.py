import numpy as np
import pytest
from scipy import integrate

from openpbr.params import MaterialParams, validate
from openpbr.translucent import (
    EXTINCTION_CAP, TintOnly, hg_phase_eval, hg_sample, hg_sample_cos, orthonormal_basis,
    scatter_direction, transmission_medium,
)


def med(**kw):
    return transmission_medium(validate(MaterialParams(transmission_weight=1.0, **kw)))


def test_zero_depth_is_tint_only():
    t = med(transmission_color=(0.2, 0.4, 0.6))
    assert isinstance(t, TintOnly)
    assert t.color == (0.2, 0.4, 0.6)


def test_vacuum_interior():
    m = med(transmission_color=(1, 1, 1), transmission_depth=1.0)
    assert np.array_equal(m.mu_t, [0.0, 0.0, 0.0])


def test_beer_depth():
    m = med(transmission_color=(0.5, 0.5, 0.5), transmission_depth=2.0)
    assert np.allclose(m.mu_t, np.log(2) / 2, rtol=0, atol=1e-15)
    assert np.array_equal(m.mu_a, m.mu_t)
    assert np.allclose(np.exp(-m.mu_t * 2.0), 0.5, atol=1e-12)


def test_gray_shift():
    m = med(transmission_color=(1, 1, 1), transmission_scatter=(1, 0, 0), transmission_depth=1.0)
    assert np.allclose(m.mu_a, [0.0, 1.0, 1.0])
    assert np.allclose(m.mu_t, [1.0, 1.0, 1.0])
    assert m.mu_a.min() == 0.0


def test_zero_channel_capped():
    m = med(transmission_color=(0.0, 0.5, 1.0), transmission_depth=1.0)
    assert m.mu_t[0] == EXTINCTION_CAP
    assert np.all(np.isfinite(m.mu_t))


def test_no_shift_beer_identity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        T = rng.uniform(0.05, 1, 3)
        d = rng.uniform(0.1, 5)
        m = med(transmission_color=tuple(T), transmission_depth=d)
        assert np.max(np.abs(np.exp(-m.mu_t * d) - T)) < 1e-12


@pytest.mark.parametrize("g", [-0.8, -0.3, 0.0, 0.5, 0.9])
def test_hg_normalized(g):
    v, _ = integrate.quad(lambda c: 2 * np.pi * hg_phase_eval(g, c), -1, 1, epsabs=1e-12, limit=200)
    assert abs(v - 1.0) < 1e-6


def test_hg_isotropic_and_symmetry():
    c = np.linspace(-1, 1, 11)
    assert np.allclose(hg_phase_eval(0.0, c), 1 / (4 * np.pi), atol=1e-15)
    assert np.allclose(hg_phase_eval(0.6, c), hg_phase_eval(-0.6, -c), atol=1e-15)


@pytest.mark.parametrize("g", [-0.5, 0.0, 0.5, 0.9])
def test_hg_sample_mean(g):
    c = hg_sample(g, np.random.default_rng(1), 100_000)
    assert np.all((c >= -1) & (c <= 1))
    assert abs(c.mean() - g) < 0.01


def test_hg_sample_is_inverse_cdf():
    g = 0.5
    u = np.linspace(0.01, 0.99, 9)
    c = hg_sample_cos(g, u)
    cdf = [integrate.quad(lambda x: 2 * np.pi * hg_phase_eval(g, x), -1, ci)[0] for ci in c]
    # sampler maps u -> cos with P(cos' > cos) = u or P(cos' < cos) = u
    assert np.allclose(cdf, u, atol=1e-9) or np.allclose(cdf, 1 - u, atol=1e-9)


def test_basis_orthonormal():
    rng = np.random.default_rng(2)
    n = rng.normal(size=(500, 3))
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    n[0] = [0, 0, -1.0]
    n[1] = [0, 0, 1.0]
    t, s = orthonormal_basis(n)
    for a, b in ((t, s), (t, n), (s, n)):
        assert np.max(np.abs(np.sum(a * b, -1))) < 1e-12
    assert np.allclose(np.linalg.norm(t, axis=-1), 1) and np.allclose(np.linalg.norm(s, axis=-1), 1)


def test_scatter_direction_keeps_cosine():
    rng = np.random.default_rng(3)
    d = rng.normal(size=(200, 3))
    d /= np.linalg.norm(d, axis=-1, keepdims=True)
    c = rng.uniform(-1, 1, 200)
    w = scatter_direction(d, c, rng.random(200))
    assert np.allclose(np.sum(w * d, -1), c, atol=1e-12)
    assert np.allclose(np.linalg.norm(w, axis=-1), 1, atol=1e-12)
