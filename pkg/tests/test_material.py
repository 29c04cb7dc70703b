import numpy as np
import pytest

from openpbr import coat as coatm
from openpbr.harness.furnace import WalkConfig, as_mixture, furnace_test, mc_albedo, quadrature_albedo
from openpbr.material import (
    LobeEntry, LobeMixture, SELECT_FLOOR, ShadingGeometry, assemble, emission, shadow_transmittance,
    thin_sheet_RT, thin_wall_subsurface_split,
)
from openpbr.microfacet import Lobe, MicrofacetReflection, roughness_to_alphas
from openpbr.params import MaterialParams, validate

WEIGHTS = ("base_weight", "base_metalness", "base_diffuse_roughness", "specular_roughness",
           "specular_roughness_anisotropy", "transmission_weight", "subsurface_weight", "coat_weight",
           "coat_roughness", "coat_darkening", "fuzz_weight", "fuzz_roughness", "thin_film_weight",
           "subsurface_anisotropy", "geometry_opacity", "specular_weight")
COLORS = ("base_color", "transmission_color", "subsurface_color", "coat_color", "fuzz_color")


def random_material(rng, thin_fraction=0.2):
    kw = {k: float(rng.random()) for k in WEIGHTS}
    kw.update({k: tuple(float(x) for x in rng.random(3)) for k in COLORS})
    kw["specular_ior"] = float(rng.uniform(1, 3))
    kw["coat_ior"] = float(rng.uniform(1, 3))
    kw["thin_film_ior"] = float(rng.uniform(1, 3))
    kw["thin_film_thickness"] = float(rng.uniform(0, 1))
    kw["geometry_thin_walled"] = bool(rng.random() < thin_fraction)
    return validate(MaterialParams(**kw))


def wo_at(mu, n=1):
    return np.tile([np.sqrt(1 - mu * mu), 0.0, mu], (n, 1))


def test_defaults_lobes():
    mix = assemble(MaterialParams())
    assert mix.kinds == ["specular_R", "diffuse"]
    assert np.all(mix.emission == 0.0)


def test_metal_drops_dielectric():
    mix = assemble(MaterialParams(base_metalness=1.0))
    assert mix.kinds == ["conductor"]


def test_all_branches_present():
    mix = assemble(MaterialParams(geometry_opacity=0.5, fuzz_weight=0.5, coat_weight=0.5, base_metalness=0.5,
                                  transmission_weight=0.3, subsurface_weight=0.5))
    assert mix.kinds == ["transparent", "fuzz", "coat", "conductor", "specular_R", "diffuse", "sss_proxy",
                         "specular_T"]


def test_cascade_weights_match_symbolic():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = random_material(rng, thin_fraction=0.0)
        mix = assemble(m)
        mu = float(rng.uniform(0.05, 1.0))
        wo = wo_at(mu)
        a, F, C, M, T, S = (m.geometry_opacity, m.fuzz_weight, m.coat_weight, m.base_metalness,
                            m.transmission_weight, m.subsurface_weight)
        tb = mix.tables
        ef = float(tb["E_fuzz_white"](np.array([mu]))[0]) if F > 0 else 0.0
        under = a * (1 - F * ef)
        if C > 0:
            eta_c = m.coat_ior
            eta_s = coatm.surrounding_eta(m.specular_ior, m.coat_ior, 1.0, C)
            r_b = coatm.base_roughness_estimate(m, 1.0, eta_s)
            Tc = np.sqrt(np.asarray(m.coat_color))
            K = coatm.lerp(coatm.K_smooth(mu, eta_c), coatm.K_rough(eta_c), r_b)
            D = coatm.lerp(1.0, coatm.darkening_delta(K, tb["E_b"], Tc ** 2), m.coat_darkening)
            A = coatm.view_dependent_absorption(Tc, mu, mu, eta_c)
            coated = 1 - C + C * A * (1 - tb["E_coat"](np.array([mu]))[0]) * D
        else:
            coated = np.ones(3)
        base = under * coated
        want = {"transparent": np.full(3, 1 - a), "fuzz": np.full(3, a * F),
                "coat": np.full(3, under * C), "conductor": base * M}
        if M < 1:
            ER = tb["E_specR"](np.array([mu]))[0]
            sub = base * (1 - M) * (1 - ER)
            want.update({"specular_R": base * (1 - M) * np.asarray(m.specular_color),
                         "diffuse": sub * (1 - T) * (1 - S), "sss_proxy": sub * (1 - T) * S,
                         "specular_T": sub * T})
        W = mix.weights(wo)
        for k, e in enumerate(mix.entries):
            assert np.max(np.abs(W[k, 0] - want[e.kind])) < 1e-12, e.kind


class Exploding(Lobe):
    def eval(self, wi, wo):
        return np.zeros((wi.shape[0], 3))

    def pdf(self, wi, wo):
        return np.zeros(wi.shape[0])

    def sample(self, wo, u):
        raise AssertionError("zero-weight lobe sampled")


def test_zero_weight_never_sampled():
    lobe = MicrofacetReflection(roughness_to_alphas(0.4), lambda c: np.ones((np.shape(c)[0], 3)))
    one = lambda wi, wo: np.ones((wo.shape[0], 3))  # noqa: E731
    zero = lambda wi, wo: np.zeros((wo.shape[0], 3))  # noqa: E731
    alb = lambda mu: np.ones((np.size(mu), 3))  # noqa: E731
    mix = LobeMixture([LobeEntry("specular_R", lobe, one, np.eye(3), alb),
                       LobeEntry("diffuse", Exploding(), zero, np.eye(3), alb)], np.zeros(3))
    p = mix.selection_probabilities(wo_at(0.5))
    assert p[1, 0] == 0.0
    rng = np.random.default_rng(1)
    for _ in range(10):
        mix.sample(wo_at(0.5, 100_000), rng)


def test_selection_floor():
    mix = assemble(MaterialParams(base_color=(0.0, 0.0, 0.0), base_weight=1.0))
    p = mix.selection_probabilities(wo_at(0.9))
    assert np.all(p >= SELECT_FLOOR / (1 + len(mix.entries) * SELECT_FLOOR) - 1e-15)
    assert np.allclose(p.sum(axis=0), 1.0)


def test_single_lobe_delegates():
    lobe = MicrofacetReflection(roughness_to_alphas(0.5), lambda c: np.full((np.shape(c)[0], 3), 0.7))
    mix = as_mixture(lobe)
    n = 1000
    wo = wo_at(0.6, n)
    rng = np.random.default_rng(2)
    s = mix.sample(wo, rng)
    rng = np.random.default_rng(2)
    rng.random(n)
    d = lobe.sample(wo, rng.random((n, 2)))
    ok = d.pdf > 0
    assert np.allclose(s.wi[ok], d.wi[ok], atol=1e-14)
    assert np.allclose(s.weight[ok], d.weight[ok], rtol=1e-10)
    assert np.allclose(s.pdf[ok], d.pdf[ok], rtol=1e-10)


def test_default_sampler_matches_quadrature():
    mix = assemble(MaterialParams())
    for mu in (0.3, 0.8):
        a, se = mc_albedo(mix, mu, 100_000, np.random.default_rng(3))
        q = quadrature_albedo(mix, mu, 256)
        assert np.all(np.abs(a - q) < 3 * se + 2e-3)


def test_white_coat_over_white_diffuse_furnace():
    m = MaterialParams(base_color=(1, 1, 1), specular_weight=0.0, coat_weight=1.0, coat_darkening=1.0,
                       coat_color=(1, 1, 1), coat_ior=1.6)
    reps = furnace_test(assemble(m), mus=(0.2, 0.5, 0.9), cfg=WalkConfig(samples=50_000), target_value=1.0,
                        tol=0.02, quad_n=0)
    for r in reps:
        assert r.passed, r.line()


def test_emission():
    assert np.all(emission(validate(MaterialParams())) == 0.0)
    e = emission(validate(MaterialParams(emission_weight=1.0, emission_color=(1, 1, 1))))
    assert np.allclose(e, 1000.0)
    e = emission(validate(MaterialParams(emission_weight=1.0, emission_color=(1, 1, 1), coat_weight=1.0,
                                         coat_color=(0.25, 1, 1))))
    assert np.allclose(e, [250.0, 1000.0, 1000.0])
    mix = assemble(MaterialParams(emission_weight=1.0, emission_color=(1, 1, 1), coat_weight=1.0,
                                  coat_color=(0.25, 1, 1)))
    assert np.allclose(mix.emission, [250.0, 1000.0, 1000.0])


def test_shadow_transmittance():
    assert np.all(shadow_transmittance(validate(MaterialParams(geometry_opacity=0.0))) == 1.0)
    assert np.all(shadow_transmittance(validate(MaterialParams(base_metalness=1.0))) == 0.0)
    assert np.allclose(shadow_transmittance(validate(MaterialParams()), 0.9), 0.9)


def test_thin_wall_split():
    rng = np.random.default_rng(4)
    for _ in range(100):
        S = rng.random(3)
        g = rng.uniform(-1, 1)
        R, T = thin_wall_subsurface_split(S, g)
        assert np.max(np.abs(R + T - S)) < 1e-12
    R, T = thin_wall_subsurface_split(np.full(3, 0.8), 0.0)
    assert np.allclose(R, 0.4) and np.allclose(T, 0.4)
    R, T = thin_wall_subsurface_split(np.full(3, 0.8), 1.0)
    assert np.all(R == 0) and np.allclose(T, 0.8)


def test_thin_sheet_series():
    R, T = thin_sheet_RT(np.array([1.0]), 1.5, 1.0, np.ones(3))
    # lossless sheet: R + T == 1, R = 2F/(1+F)
    assert np.allclose(R + T, 1.0, atol=1e-12)
    assert np.allclose(R, 2 * 0.04 / 1.04, atol=1e-12)
    R, T = thin_sheet_RT(np.linspace(0.05, 1, 10), 1.5, 1.0, np.full(3, 0.5))
    assert np.all(R + T <= 1.0 + 1e-12)


def test_thin_walled_lobes_and_orientation():
    m = MaterialParams(geometry_thin_walled=True, subsurface_weight=1.0, subsurface_color=(0.8, 0.8, 0.8))
    mix = assemble(m)
    assert mix.auto_orient
    a = mix.eval(np.array([[0.0, 0.3, np.sqrt(0.91)]]), np.array([[0.6, 0.0, 0.8]]))
    b = mix.eval(np.array([[0.0, 0.3, -np.sqrt(0.91)]]), np.array([[0.6, 0.0, -0.8]]))
    assert np.allclose(a, b)


def test_interior_mixture_exits_glass():
    m = MaterialParams(transmission_weight=1.0, specular_roughness=0.3)
    mix = assemble(m, ShadingGeometry(entering=False))
    assert "specular_T" in mix.kinds
    wo = np.tile([0.0, 0.0, -1.0], (50_000, 1))
    s = mix.sample(wo, np.random.default_rng(5))
    assert np.all(np.isfinite(s.weight))


def test_random_sweep_energy_bound():
    rng = np.random.default_rng(0)
    for i in range(200):
        m = random_material(rng)
        mu = float(rng.uniform(0.05, 1.0))
        a, se = mc_albedo(assemble(m), mu, 100_000, np.random.default_rng(i))
        assert np.all(a <= 1.01 + 3 * se), (i, mu, a)
