import numpy as np
import pytest

import oracles
from openpbr.fresnel import fresnel_dielectric
from openpbr.thinfilm import (
    ConductorSubstrate, FilmStack, airy_polarized, airy_reflectance, airy_transmittance, bare_reflectance,
    effective_complex_ior, fresnel_amplitudes, interface_power, reverse_amplitudes, snell_cos,
    stack_reflectance,
)

# [DERIVED] characteristic-matrix evaluation (tests/oracles.py)
FILM_METAL_400_500 = 0.6921286317483656
FILM_DIEL_400_500_C06 = 0.08997074575292983


def random_stacks(n, seed=0):
    rng = np.random.default_rng(seed)
    n1 = np.ones(n)
    n2 = rng.uniform(1.0, 2.5, n)
    k = np.where(rng.random(n) < 0.5, 0.0, rng.uniform(0.0, 8.0, n))
    n3 = rng.uniform(1.0, 3.0, n) + 1j * k
    cos1 = rng.uniform(1e-3, 1.0, n)
    return n1, n2, n3, cos1


def test_snell_examples():
    assert snell_cos(1.0, 1.5, 1.0) == 1.0
    assert snell_cos(1.3, 1.3, 0.4) == pytest.approx(0.4, abs=1e-15)
    c = snell_cos(1.5, 1.0, 0.2)
    assert c.imag > 0 and c.real == 0.0


def test_branch_rule():
    _, n2, n3, cos1 = random_stacks(2000, 1)
    c2 = snell_cos(1.0, n2, cos1)
    c3 = snell_cos(n2, n3, c2)
    assert np.all((n3 * c3).imag >= -1e-15)


def test_amplitude_examples():
    a = fresnel_amplitudes(1.4, 1.4, 0.6, 0.6)
    assert a.rs == 0 and a.rp == 0 and a.ts == 1 and a.tp == 1
    a = fresnel_amplitudes(1.0, 1.5, 1.0, 1.0)
    assert abs(abs(a.rs) ** 2 - 0.04) < 1e-15 and abs(abs(a.rp) ** 2 - 0.04) < 1e-15
    c = snell_cos(1.5, 1.0, 0.2)
    Rs, Rp, Ts, Tp = interface_power(1.5, 1.0, 0.2, c)
    assert abs(Rs - 1) < 1e-12 and abs(Rp - 1) < 1e-12 and Ts == 0 and Tp == 0


def test_interface_energy_every_boundary():
    n1, n2, n3, cos1 = random_stacks(10_000, 2)
    c2 = snell_cos(n1, n2, cos1)
    c3 = snell_cos(n2, n3, c2)
    for ni, nj, ci, cj in ((n1, n2, cos1, c2), (n2, n1, c2, cos1), (n2, n3, c2, c3)):
        Rs, Rp, Ts, Tp = interface_power(ni, nj, ci, cj)
        for R, T in ((Rs, Ts), (Rp, Tp)):
            assert np.all((R >= -1e-15) & (R <= 1 + 1e-12) & (T >= -1e-15) & (T <= 1 + 1e-12))
            assert np.max(np.abs(R + T - 1)) < 1e-12


def test_reverse_amplitudes():
    c2 = snell_cos(1.0, 1.7, 0.6)
    fwd = fresnel_amplitudes(1.0, 1.7, 0.6, c2)
    (r21s, r21p), (t21s, t21p) = reverse_amplitudes(1.0, 1.7, 0.6, c2, fwd)
    back = fresnel_amplitudes(1.7, 1.0, c2, 0.6)
    assert abs(r21s - back.rs) < 1e-12 and abs(r21p - back.rp) < 1e-12
    assert abs(t21s - back.ts) < 1e-12
    idx = fresnel_amplitudes(1.2, 1.2, 0.5, 0.5)
    (_, _), (ts, tp) = reverse_amplitudes(1.2, 1.2, 0.5, 0.5, idx)
    assert ts == 1 and tp == 1


def test_zero_thickness_is_bare_interface():
    n1, n2, n3, cos1 = random_stacks(2000, 3)
    R = airy_reflectance(n1, n2, n3, 0.0, 550.0, cos1)
    assert np.max(np.abs(R - bare_reflectance(n1, n3, cos1))) < 1e-9
    # bare dielectric agrees with the scalar path
    assert abs(bare_reflectance(1.0, 1.5, 0.3) - fresnel_dielectric(0.3, 1.5)) < 1e-12


@pytest.mark.parametrize("d", [0.0, 37.0, 400.0, 1234.5, 10_000.0])
def test_mirror_substrate_furnace(d):
    cos1 = np.linspace(0.01, 1.0, 50)
    for lam in (400.0, 550.0, 700.0):
        R = airy_reflectance(1.0, 1.4, 1.8 + 1e6j, d, lam, cos1)
        assert np.max(np.abs(R - 1.0)) < 1e-6


def test_against_transfer_matrix():
    assert abs(stack_reflectance(FilmStack(1.0, 1.4, 1.8 + 5j, 400.0, 500.0, 1.0)) - FILM_METAL_400_500) < 1e-12
    assert abs(stack_reflectance(FilmStack(1.0, 1.4, 1.8, 400.0, 500.0, 0.6)) - FILM_DIEL_400_500_C06) < 1e-12
    rng = np.random.default_rng(4)
    for _ in range(200):
        n2, n3 = rng.uniform(1, 2.5), complex(rng.uniform(1, 3), rng.uniform(0, 6) * (rng.random() < 0.5))
        d, lam, c = rng.uniform(0, 2000), rng.uniform(380, 780), rng.uniform(0.05, 1)
        assert abs(float(airy_reflectance(1.0, n2, n3, d, lam, c)) - oracles.film_R(1.0, n2, n3, d, lam, c)) < 1e-10


def test_thick_film_gray_convergence():
    lam = np.arange(400.0, 700.0 + 1e-9, 0.05)
    thin = airy_reflectance(1.0, 1.4, 1.8 + 5j, 400.0, lam, 1.0).mean()
    thick = airy_reflectance(1.0, 1.4, 1.8 + 5j, 10_000.0, lam, 1.0).mean()
    assert abs(thick - thin) < 0.05 * thin


def test_reflectance_oscillates_with_wavelength():
    lam = np.arange(400.0, 701.0, 1.0)
    R = airy_reflectance(1.0, 1.4, 1.8 + 5j, 400.0, lam, 1.0)
    assert R.max() - R.min() > 0.05
    assert np.all((R >= 0) & (R <= 1))


def test_transmittance():
    assert airy_transmittance(1.0, 1.0, 1.0, 300.0, 500.0, 0.7) == pytest.approx(1.0, abs=1e-15)
    assert airy_transmittance(1.0, 1.4, 1.5, 0.0, 500.0, 1.0) == pytest.approx(0.96, abs=1e-12)
    n1, n2, n3, cos1 = random_stacks(1000, 5)
    n3 = n3.real
    R = airy_reflectance(n1, n2, n3, 250.0, 550.0, cos1)
    assert np.max(np.abs(R + airy_transmittance(n1, n2, n3, 250.0, 550.0, cos1) - 1)) < 1e-9
    with pytest.raises(ConductorSubstrate):
        airy_transmittance(1.0, 1.4, 1.8 + 1j, 100.0, 500.0, 1.0)


def test_polarized_bounds():
    n1, n2, n3, cos1 = random_stacks(5000, 6)
    Rs, Rp = airy_polarized(n1, n2, n3, 321.0, 480.0, cos1)
    assert np.all((Rs >= 0) & (Rs <= 1) & (Rp >= 0) & (Rp <= 1))


def test_continuity_in_thickness():
    d = np.linspace(0.0, 2000.0, 400)
    for c in (1.0, 0.5, 0.1):
        R0 = airy_reflectance(1.0, 1.4, 1.8, d, 550.0, c)
        R1 = airy_reflectance(1.0, 1.4, 1.8, d + 1e-3, 550.0, c)
        assert np.max(np.abs(R1 - R0)) < 1e-4


def test_effective_ior():
    assert abs(effective_complex_ior(0.04) - 1.5) < 1e-12
    assert effective_complex_ior(0.0) == 1.0
    F0 = np.linspace(0, 0.99, 100)
    n = effective_complex_ior(F0)
    k = n.imag
    n = n.real
    assert np.max(np.abs(((n - 1) ** 2 + k ** 2) / ((n + 1) ** 2 + k ** 2) - F0)) < 1e-9
