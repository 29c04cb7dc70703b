import math

import numpy as np
import pytest

from openpbr.params import (
    PARAMS, MaterialParams, NonFiniteInput, ParseError, UnknownKey, read_material,
    relevant_parameters, validate, write_material,
)


def test_defaults_match_table():
    m = MaterialParams()
    assert m.specular_ior == 1.5
    assert m.coat_ior == 1.6
    assert m.emission_luminance == 1000.0
    assert m.subsurface_radius_scale == (1.0, 1.0, 1.0)
    assert m.thin_film_thickness == 0.5
    assert m.base_color == (0.8, 0.8, 0.8)
    assert m.geometry_thin_walled is False


def test_validate_defaults_no_warnings():
    v = validate(MaterialParams())
    assert v.params == MaterialParams()
    assert v.warnings == ()


def test_specular_weight_above_one_not_clamped():
    v = validate(MaterialParams(specular_weight=2.5))
    assert v.specular_weight == 2.5
    # outside the soft range only
    assert [w.name for w in v.warnings] == ["specular_weight"]


def test_coat_ior_below_one_clamps_with_warning():
    v = validate(MaterialParams(coat_ior=0.5))
    assert v.coat_ior == 1.0
    assert v.warnings[0].name == "coat_ior"


def test_color_clamped_componentwise():
    v = validate(MaterialParams(base_color=(1.5, -0.2, 0.5)))
    assert v.base_color == (1.0, 0.0, 0.5)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(NonFiniteInput):
        validate(MaterialParams(specular_roughness=bad))


def test_soft_range_warning_for_depth():
    v = validate(MaterialParams(transmission_depth=3.0))
    assert v.transmission_depth == 3.0
    assert v.warnings[0].name == "transmission_depth"


def test_validate_idempotent():
    raw = MaterialParams(coat_ior=0.2, base_color=(2, 0.5, -1), specular_weight=4.0)
    once = validate(raw)
    assert validate(once).params == once.params


def test_vectors_normalized():
    v = validate(MaterialParams(geometry_normal=(0.0, 0.0, 2.0)))
    assert v.geometry_normal == (0.0, 0.0, 1.0)


def test_relevance_coat_zero():
    assert "coat_color" not in relevant_parameters(validate(MaterialParams(coat_weight=0.0)))


def test_relevance_defaults_exclude_emission_color():
    rel = relevant_parameters(validate(MaterialParams()))
    assert "emission_color" not in rel
    assert "emission_luminance" not in rel


def test_relevance_metal_coat():
    rel = relevant_parameters(validate(MaterialParams(base_metalness=1.0, coat_weight=1.0)))
    assert "transmission_color" not in rel
    assert "coat_color" in rel
    assert "specular_ior" not in rel


def test_relevance_monotone_in_weights():
    weights = ["coat_weight", "fuzz_weight", "thin_film_weight", "emission_weight",
               "transmission_weight", "subsurface_weight", "specular_haze"]
    base = MaterialParams(**{w: 0.0 for w in weights})
    r0 = relevant_parameters(base)
    for w in weights:
        assert r0 <= relevant_parameters(base.replace(**{w: 0.5}))


def test_empty_file_defaults():
    assert read_material("") == MaterialParams()
    assert read_material("# only a comment\n\n") == MaterialParams()


def test_single_override():
    m = read_material("specular_ior: 1.33\n")
    assert m == MaterialParams(specular_ior=1.33)


def test_parse_colors_bools_comments():
    m = read_material("base_color: 0.1 0.2 0.3  # reddish\ngeometry_thin_walled: true\n")
    assert m.base_color == (0.1, 0.2, 0.3)
    assert m.geometry_thin_walled is True


def test_unknown_key():
    with pytest.raises(UnknownKey):
        read_material("base_colour: 1 1 1\n")


@pytest.mark.parametrize("text,line", [
    ("base_weight 1\n", 1),
    ("\nbase_color: 1 1\n", 2),
    ("geometry_thin_walled: yes\n", 1),
    ("base_weight: abc\n", 1),
    ("base_weight: 1\nbase_weight: 0.5\n", 2),
    ("base_weight:\n", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as e:
        read_material(text)
    assert e.value.line == line


def test_roundtrip_generated_files():
    rng = np.random.default_rng(7)
    names = [n for n, s in PARAMS.items() if s.kind in ("float", "color")]
    for _ in range(20):
        keys = rng.choice(names, 10, replace=False)
        lines = []
        for k in keys:
            s = PARAMS[k]
            hi = s.hard[1] if math.isfinite(s.hard[1]) else 5.0
            if s.kind == "float":
                lines.append(f"{k}: {float(rng.uniform(s.hard[0], hi))!r}")
            else:
                lines.append(f"{k}: " + " ".join(repr(float(x)) for x in rng.uniform(s.hard[0], hi, 3)))
        m = validate(read_material("\n".join(lines)))
        assert read_material(write_material(m)) == m.params
