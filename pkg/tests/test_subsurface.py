import numpy as np
import pytest

import oracles
from openpbr.harness.furnace import WalkConfig
from openpbr.harness.oracles import halfspace_walk_oracle
from openpbr.params import MaterialParams, validate
from openpbr.subsurface import (
    DENSE, anisotropic_albedo, clamp_g, hyperion_invert, similarity_remap, subsurface_medium,
    vdh_albedo, vdh_invert, vdh_multiscatter,
)

# [DERIVED] mpmath evaluation of the van de Hulst rational form at s = 0.5.
# The published example value (0.27148) does not follow from the formula.
VDH_C_05 = 0.2935331230283912
# [DERIVED] mpmath, Hyperion fit at C = 1
HYPERION_1 = 0.9999527472639557


def mat(**kw):
    return validate(MaterialParams(**kw))


def test_medium_reciprocal_radius():
    med = subsurface_medium(mat(subsurface_radius=1.0))
    assert np.array_equal(med.mu_t, [1.0, 1.0, 1.0])


def test_medium_rayleigh_like_scale():
    med = subsurface_medium(mat(subsurface_radius=2.0, subsurface_radius_scale=(1.0, 0.5, 0.25)))
    assert np.allclose(med.mu_t, np.array([1.0, 2.0, 4.0]) / 2.0, rtol=0, atol=1e-15)


def test_medium_invariants():
    med = subsurface_medium(mat(subsurface_radius=0.3, subsurface_color=(0.9, 0.5, 0.1), subsurface_anisotropy=0.4))
    assert np.allclose(med.mu_a + med.mu_s, med.mu_t, rtol=1e-14)
    assert np.all(med.mu_a >= 0) and np.all(med.mu_s >= 0)
    assert med.ior == 1.5


def test_medium_dense_sentinel():
    med = subsurface_medium(mat(subsurface_radius=0.0))
    assert np.all(med.dense)
    assert np.all(med.mu_t == DENSE)


def test_g_clamped():
    assert clamp_g(1.0) == 0.99 and clamp_g(-1.0) == -0.99
    assert subsurface_medium(mat(subsurface_anisotropy=1.0)).g == 0.99


def test_vdh_endpoints():
    assert vdh_multiscatter(0.0) == 1.0
    assert vdh_multiscatter(1.0) == 0.0
    assert abs(vdh_multiscatter(0.5) - VDH_C_05) < 1e-12
    assert abs(vdh_multiscatter(0.5) - oracles.vdh_C(0.5)) < 1e-15


def test_vdh_invert_endpoints():
    assert vdh_invert(1.0) < 1e-3 and vdh_albedo(1.0) > 0.999
    assert vdh_invert(0.0) > 0.999 and vdh_albedo(0.0) < 2e-3


def test_vdh_roundtrip():
    C = np.linspace(0, 1, 101)
    assert np.max(np.abs(vdh_multiscatter(vdh_invert(C)) - C)) < 0.01


def test_hyperion():
    assert hyperion_invert(0.0) == 0.0
    assert abs(hyperion_invert(1.0) - HYPERION_1) < 1e-12
    assert abs(hyperion_invert(1.0) - oracles.hyperion(1.0)) < 1e-14
    assert np.all(np.diff(hyperion_invert(np.linspace(0, 1, 1001))) > 0)


def test_inversions_bounded():
    C = np.linspace(0, 1, 501)
    for f in (vdh_albedo, hyperion_invert):
        a = f(C)
        assert np.all((a >= 0) & (a <= 1))


def test_anisotropic_albedo():
    assert anisotropic_albedo(0.8, 0.0) == 0.8
    assert anisotropic_albedo(0.8, 0.5) == pytest.approx(0.8 / 0.9, abs=1e-15)
    assert anisotropic_albedo(0.3, 0.999) > 0.995
    assert anisotropic_albedo(0.5, -0.5) < 0.5
    a = np.linspace(0, 1, 50)
    assert np.array_equal(anisotropic_albedo(a, 0.0), a)


def test_similarity_remap():
    assert similarity_remap(3.0, 0.4, 0.4) == 3.0
    assert similarity_remap(10.0, 0.9, 0.0) == pytest.approx(1.0, abs=1e-14)
    rng = np.random.default_rng(0)
    for _ in range(100):
        ms, g, gt = rng.uniform(0.1, 10), rng.uniform(-0.9, 0.9), rng.uniform(-0.9, 0.9)
        assert abs(ms * (1 - g) - similarity_remap(ms, g, gt) * (1 - gt)) < 1e-12


@pytest.mark.parametrize("C", [0.2, 0.5, 0.8])
def test_index_matched_walk_reproduces_C(C):
    r = halfspace_walk_oracle(float(vdh_albedo(C)), g=0.0, cfg=WalkConfig(samples=20_000, seed=1))
    assert abs(r.albedo - C) < 0.03


def test_similarity_walks_agree():
    cfg = WalkConfig(samples=20_000, seed=2)
    a = halfspace_walk_oracle(0.0, g=0.7, mu_s=0.95, mu_a=0.05, cfg=cfg)
    b = halfspace_walk_oracle(0.0, g=0.0, mu_s=float(similarity_remap(0.95, 0.7, 0.0)), mu_a=0.05, cfg=cfg)
    assert abs(a.albedo - b.albedo) < 0.03
