"""Material parameter record, validation, relevance logic and the text file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

INF = math.inf

Color = tuple[float, float, float]


class ParamError(ValueError):
    pass


class NonFiniteInput(ParamError):
    def __init__(self, name: str):
        super().__init__(f"non-finite value for {name}")
        self.field = name


class ParseError(ParamError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class UnknownKey(ParamError):
    def __init__(self, name: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"unknown key {name!r}{where}")
        self.name = name
        self.line = line


class Spec(NamedTuple):
    kind: str  # float, color, bool, vector
    default: Any
    hard: tuple[float, float] | None
    soft: tuple[float, float] | None


def _f(default, hard=(0.0, 1.0), soft=None):
    return Spec("float", float(default), hard, soft)


def _c(default, hard=(0.0, 1.0), soft=None):
    return Spec("color", tuple(float(x) for x in default), hard, soft)


# name -> Spec. Order is the canonical file order.
PARAMS: dict[str, Spec] = {
    "base_weight": _f(1.0),
    "base_color": _c((0.8, 0.8, 0.8)),
    "base_metalness": _f(0.0),
    "base_diffuse_roughness": _f(0.0),
    "specular_weight": _f(1.0, (0.0, INF), (0.0, 1.0)),
    "specular_color": _c((1.0, 1.0, 1.0)),
    "specular_roughness": _f(0.3),
    "specular_roughness_anisotropy": _f(0.0),
    "specular_ior": _f(1.5, (1.0, 3.0)),
    "specular_haze": _f(0.0),
    "specular_haze_spread": _f(0.0),
    "specular_retroreflectivity": _f(0.0),
    "transmission_weight": _f(0.0),
    "transmission_color": _c((1.0, 1.0, 1.0)),
    "transmission_depth": _f(0.0, (0.0, INF), (0.0, 1.0)),
    "transmission_scatter": _c((0.0, 0.0, 0.0)),
    "transmission_scatter_anisotropy": _f(0.0, (-1.0, 1.0)),
    "transmission_dispersion_scale": _f(0.0),
    "transmission_dispersion_abbe_number": _f(20.0, (0.0, INF), (9.0, 91.0)),
    "subsurface_weight": _f(0.0),
    "subsurface_color": _c((0.8, 0.8, 0.8)),
    "subsurface_radius": _f(1.0, (0.0, INF), (0.0, 1.0)),
    "subsurface_radius_scale": _c((1.0, 1.0, 1.0)),
    "subsurface_anisotropy": _f(0.0, (-1.0, 1.0)),
    "coat_weight": _f(0.0),
    "coat_color": _c((1.0, 1.0, 1.0)),
    "coat_roughness": _f(0.0),
    "coat_roughness_anisotropy": _f(0.0),
    "coat_ior": _f(1.6, (1.0, 3.0)),
    "coat_darkening": _f(1.0),
    "fuzz_weight": _f(0.0),
    "fuzz_color": _c((1.0, 1.0, 1.0)),
    "fuzz_roughness": _f(0.5),
    "emission_weight": _f(0.0),
    "emission_color": _c((1.0, 1.0, 1.0), (0.0, INF), (0.0, 1.0)),
    "emission_luminance": _f(1000.0, (0.0, INF)),
    "thin_film_weight": _f(0.0),
    "thin_film_thickness": _f(0.5),
    "thin_film_ior": _f(1.4, (1.0, 3.0)),
    "geometry_opacity": _f(1.0),
    "geometry_thin_walled": Spec("bool", False, None, None),
    "geometry_normal": Spec("vector", None, None, None),
    "geometry_tangent": Spec("vector", None, None, None),
    "geometry_coat_normal": Spec("vector", None, None, None),
    "geometry_coat_tangent": Spec("vector", None, None, None),
}


@dataclass(frozen=True)
class MaterialParams:
    base_weight: float = 1.0
    base_color: Color = (0.8, 0.8, 0.8)
    base_metalness: float = 0.0
    base_diffuse_roughness: float = 0.0
    specular_weight: float = 1.0
    specular_color: Color = (1.0, 1.0, 1.0)
    specular_roughness: float = 0.3
    specular_roughness_anisotropy: float = 0.0
    specular_ior: float = 1.5
    specular_haze: float = 0.0
    specular_haze_spread: float = 0.0
    specular_retroreflectivity: float = 0.0
    transmission_weight: float = 0.0
    transmission_color: Color = (1.0, 1.0, 1.0)
    transmission_depth: float = 0.0
    transmission_scatter: Color = (0.0, 0.0, 0.0)
    transmission_scatter_anisotropy: float = 0.0
    transmission_dispersion_scale: float = 0.0
    transmission_dispersion_abbe_number: float = 20.0
    subsurface_weight: float = 0.0
    subsurface_color: Color = (0.8, 0.8, 0.8)
    subsurface_radius: float = 1.0
    subsurface_radius_scale: Color = (1.0, 1.0, 1.0)
    subsurface_anisotropy: float = 0.0
    coat_weight: float = 0.0
    coat_color: Color = (1.0, 1.0, 1.0)
    coat_roughness: float = 0.0
    coat_roughness_anisotropy: float = 0.0
    coat_ior: float = 1.6
    coat_darkening: float = 1.0
    fuzz_weight: float = 0.0
    fuzz_color: Color = (1.0, 1.0, 1.0)
    fuzz_roughness: float = 0.5
    emission_weight: float = 0.0
    emission_color: Color = (1.0, 1.0, 1.0)
    emission_luminance: float = 1000.0
    thin_film_weight: float = 0.0
    thin_film_thickness: float = 0.5
    thin_film_ior: float = 1.4
    geometry_opacity: float = 1.0
    geometry_thin_walled: bool = False
    geometry_normal: tuple[float, float, float] | None = None
    geometry_tangent: tuple[float, float, float] | None = None
    geometry_coat_normal: tuple[float, float, float] | None = None
    geometry_coat_tangent: tuple[float, float, float] | None = None

    def replace(self, **kw) -> "MaterialParams":
        return dataclasses.replace(self, **kw)


class Warning_(NamedTuple):
    name: str
    value: Any
    soft: tuple[float, float]


@dataclass(frozen=True)
class ValidatedMaterial:
    params: MaterialParams
    warnings: tuple[Warning_, ...] = field(default=())

    def __getattr__(self, name):
        # forward parameter access so a ValidatedMaterial reads like the record
        return getattr(object.__getattribute__(self, "params"), name)


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def _normalize(v, name):
    if v is None:
        return None
    v = tuple(float(x) for x in v)
    if len(v) != 3:
        raise ParamError(f"{name} needs 3 components")
    for x in v:
        if not math.isfinite(x):
            raise NonFiniteInput(name)
    n = math.sqrt(sum(x * x for x in v))
    if n == 0.0:
        raise ParamError(f"{name} is a zero vector")
    return tuple(x / n for x in v)


def validate(raw: MaterialParams | ValidatedMaterial) -> ValidatedMaterial:
    """Clamp hard ranges, flag soft-range excursions, reject NaN/Inf."""
    if isinstance(raw, ValidatedMaterial):
        raw = raw.params
    out = {}
    warnings = []
    for name, spec in PARAMS.items():
        v = getattr(raw, name)
        if spec.kind == "bool":
            out[name] = bool(v)
            continue
        if spec.kind == "vector":
            out[name] = _normalize(v, name)
            continue
        vals = (v,) if spec.kind == "float" else tuple(v)
        if len(vals) != (1 if spec.kind == "float" else 3):
            raise ParamError(f"{name} has wrong arity")
        vals = tuple(float(x) for x in vals)
        if not all(math.isfinite(x) for x in vals):
            raise NonFiniteInput(name)
        lo, hi = spec.hard
        clamped = tuple(_clamp(x, lo, hi) for x in vals)
        if clamped != vals:
            warnings.append(Warning_(name, v, spec.hard))
        elif spec.soft is not None and any(not spec.soft[0] <= x <= spec.soft[1] for x in vals):
            warnings.append(Warning_(name, v, spec.soft))
        out[name] = clamped[0] if spec.kind == "float" else clamped
    return ValidatedMaterial(MaterialParams(**out), tuple(warnings))


_GROUPS = {
    "coat_weight": ["coat_color", "coat_roughness", "coat_roughness_anisotropy", "coat_ior",
                    "coat_darkening", "geometry_coat_normal", "geometry_coat_tangent"],
    "fuzz_weight": ["fuzz_color", "fuzz_roughness"],
    "thin_film_weight": ["thin_film_thickness", "thin_film_ior"],
    "emission_weight": ["emission_color", "emission_luminance"],
    "specular_haze": ["specular_haze_spread"],
}
_TRANSMISSION = [k for k in PARAMS if k.startswith("transmission_") and k != "transmission_weight"]
_SUBSURFACE = [k for k in PARAMS if k.startswith("subsurface_") and k != "subsurface_weight"]


def relevant_parameters(m: ValidatedMaterial | MaterialParams) -> set[str]:
    """Names of parameters that can affect the result under the current weights."""
    p = m.params if isinstance(m, ValidatedMaterial) else m
    names = set(PARAMS)
    for weight, deps in _GROUPS.items():
        if getattr(p, weight) == 0.0:
            names -= set(deps)
    if p.transmission_weight == 0.0:
        names -= set(_TRANSMISSION)
    if p.subsurface_weight == 0.0:
        names -= set(_SUBSURFACE)
    if p.base_metalness == 1.0:
        names -= set(_TRANSMISSION) | set(_SUBSURFACE)
        names -= {"base_diffuse_roughness", "specular_ior"}
    return names


# ----------------------------------------------------------------- file format

def _fmt_float(x: float) -> str:
    return repr(float(x))


def format_value(name: str, v) -> str:
    kind = PARAMS[name].kind
    if kind == "bool":
        return "true" if v else "false"
    if kind == "float":
        return _fmt_float(v)
    return " ".join(_fmt_float(x) for x in v)


def _parse_value(name: str, text: str, line: int):
    kind = PARAMS[name].kind
    if kind == "bool":
        if text not in ("true", "false"):
            raise ParseError(line, f"{name} expects true or false, got {text!r}")
        return text == "true"
    parts = text.split()
    want = 1 if kind == "float" else 3
    if len(parts) != want:
        raise ParseError(line, f"{name} expects {want} number(s), got {len(parts)}")
    try:
        vals = tuple(float(s) for s in parts)
    except ValueError:
        raise ParseError(line, f"{name}: not a number: {text!r}") from None
    return vals[0] if kind == "float" else vals


def read_material(text: str) -> MaterialParams:
    seen: dict[str, int] = {}
    kw = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if ":" not in body:
            raise ParseError(i, "expected 'key: value'")
        key, _, value = body.partition(":")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ParseError(i, "empty key")
        if key not in PARAMS:
            raise UnknownKey(key, i)
        if key in seen:
            raise ParseError(i, f"duplicate key {key} (first on line {seen[key]})")
        if not value:
            raise ParseError(i, f"missing value for {key}")
        seen[key] = i
        kw[key] = _parse_value(key, value, i)
    return MaterialParams(**kw)


def write_material(m: MaterialParams | ValidatedMaterial, only_changed: bool = False) -> str:
    p = m.params if isinstance(m, ValidatedMaterial) else m
    lines = []
    for name, spec in PARAMS.items():
        v = getattr(p, name)
        if v is None:
            continue
        if only_changed and v == spec.default:
            continue
        lines.append(f"{name}: {format_value(name, v)}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_material(path) -> MaterialParams:
    with open(path, encoding="utf-8") as fh:
        return read_material(fh.read())
