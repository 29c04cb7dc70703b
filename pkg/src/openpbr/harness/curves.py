"""Deterministic CSV emitters for reference curves.

Columns per kind:
  thinfilm_angle     cos_theta, theta_deg, R_s, R_p, R        (at lam_nm, default 500)
  thinfilm_spectrum  lambda_nm, R_s, R_p, R                   (normal incidence)
  coat_darkening     E_b, delta_eta_<eta> ...                 (rough-base K, clear coat)
  sss_inversion      C, alpha_vdh, alpha_hyperion
  fresnel_E          eta, E_numeric, E_fit                    (fit column empty outside [1, 3])
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .. import coat as coatm
from ..fresnel import fresnel_albedo_fit, fresnel_albedo_numeric
from ..subsurface import hyperion_invert, vdh_albedo
from ..thinfilm import airy_polarized

KINDS = ("thinfilm_angle", "thinfilm_spectrum", "coat_darkening", "sss_inversion", "fresnel_E")

THINFILM_DEFAULTS = dict(n1=1.0, n2=1.4, n3=1.8, k3=0.0, d_nm=400.0, lam_nm=500.0)
COAT_ETAS = (1.0, 1.25, 1.5, 2.0)


class InvalidKind(ValueError):
    pass


def fmt(x) -> str:
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return f"{float(x):.9g}"


def _thinfilm(p):
    q = dict(THINFILM_DEFAULTS)
    q.update({k: float(v) for k, v in (p or {}).items()})
    return q, complex(q["n3"], q["k3"])


def thinfilm_angle(params=None):
    q, n3 = _thinfilm(params)
    cos1 = np.linspace(1.0, 0.0, 91)[:-1]  # grazing endpoint dropped
    Rs, Rp = airy_polarized(q["n1"], q["n2"], n3, q["d_nm"], q["lam_nm"], cos1)
    th = np.degrees(np.arccos(cos1))
    header = ["cos_theta", "theta_deg", "R_s", "R_p", "R"]
    return header, [(c, t, s, pp, 0.5 * (s + pp)) for c, t, s, pp in zip(cos1, th, Rs, Rp)]


def thinfilm_spectrum(params=None):
    q, n3 = _thinfilm(params)
    lam = np.arange(380.0, 781.0, 5.0)
    Rs, Rp = airy_polarized(q["n1"], q["n2"], n3, q["d_nm"], lam, np.ones_like(lam))
    return ["lambda_nm", "R_s", "R_p", "R"], [(l_, s, pp, 0.5 * (s + pp)) for l_, s, pp in zip(lam, Rs, Rp)]


def coat_darkening(params=None):
    etas = tuple(float(e) for e in (params or {}).get("etas", COAT_ETAS))
    E_b = np.linspace(0.0, 1.0, 21)
    cols = []
    for eta in etas:
        if eta == 1.0:
            cols.append(np.ones_like(E_b))
        else:
            cols.append(coatm.darkening_delta(coatm.K_rough(eta), E_b, 1.0))
    header = ["E_b"] + [f"delta_eta_{e:g}" for e in etas]
    return header, [tuple([e] + [c[i] for c in cols]) for i, e in enumerate(E_b)]


def sss_inversion(params=None):
    C = np.linspace(0.0, 1.0, 51)
    return ["C", "alpha_vdh", "alpha_hyperion"], list(zip(C, vdh_albedo(C), hyperion_invert(C)))


def fresnel_E(params=None):
    etas = np.round(np.arange(0.5, 3.0001, 0.05), 10)
    rows = []
    for eta in etas:
        fit = fresnel_albedo_fit(eta) if 1.0 <= eta <= 3.0 else None
        rows.append((eta, fresnel_albedo_numeric(eta), fit))
    return ["eta", "E_numeric", "E_fit"], rows


_EMIT = {
    "thinfilm_angle": thinfilm_angle,
    "thinfilm_spectrum": thinfilm_spectrum,
    "coat_darkening": coat_darkening,
    "sss_inversion": sss_inversion,
    "fresnel_E": fresnel_E,
}


def curve_rows(kind: str, params=None):
    if kind not in _EMIT:
        raise InvalidKind(f"unknown curve kind {kind!r}; expected one of {', '.join(KINDS)}")
    return _EMIT[kind](params)


def curve_csv(kind: str, params=None) -> str:
    header, rows = curve_rows(kind, params)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def emit_curves(kind: str, params=None, out_path=None) -> str:
    text = curve_csv(kind, params)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
