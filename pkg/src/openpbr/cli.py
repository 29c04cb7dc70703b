"""Command line entry point. Exit status is 0 iff every requested check passes."""

from __future__ import annotations

import argparse
import sys

from .params import ParamError, load_material, relevant_parameters, validate, write_material

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _load(path):
    try:
        return validate(load_material(path))
    except OSError as e:
        raise SystemExit(_err(f"cannot read {path}: {e}", EXIT_USAGE))
    except ParamError as e:
        raise SystemExit(_err(f"{path}: {type(e).__name__}: {e}", EXIT_CHECK_FAILED))


def _err(msg, code):
    print(f"error: {msg}", file=sys.stderr)
    return code


def _kv(tokens):
    out = {}
    for t in tokens:
        if "=" not in t:
            raise SystemExit(_err(f"expected key=value, got {t!r}", EXIT_USAGE))
        k, v = t.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def cmd_validate(a):
    m = _load(a.file)
    for w in m.warnings:
        print(f"warning: {w.name}={w.value} outside [{w.soft[0]:g}, {w.soft[1]:g}]")
    rel = relevant_parameters(m)
    print(write_material(m, only_changed=True), end="")
    print(f"# {len(rel)} relevant parameters")
    if a.strict and m.warnings:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_furnace(a):
    from .harness.furnace import DEFAULT_MUS, WalkConfig, furnace_test
    from .material import ShadingGeometry, assemble

    m = _load(a.file)
    mix = assemble(m, ShadingGeometry.from_material(m, entering=not a.inside))
    mus = DEFAULT_MUS
    reports = furnace_test(mix, mus, WalkConfig(samples=a.spp, seed=a.seed), a.target, a.tol,
                           quad_n=a.quad)
    for r in reports:
        print(r.line())
    ok = all(r.passed for r in reports)
    print("furnace:", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_render(a):
    import numpy as np

    from .harness.render import InvalidPreset, render_sphere

    m = _load(a.file)
    try:
        img = render_sphere(m, a.preset, a.spp, a.out, seed=a.seed, size=a.size)
    except InvalidPreset as e:
        return _err(str(e), EXIT_USAGE)
    except OSError as e:
        return _err(f"cannot write {a.out}: {e}", EXIT_USAGE)
    print(f"wrote {a.out} ({a.size}x{a.size}, {a.spp} spp, mean {float(np.mean(img)):.6f})")
    return EXIT_OK


def cmd_curves(a):
    from .harness.curves import InvalidKind, emit_curves

    params = _kv(a.param)
    if "etas" in params:
        params["etas"] = [float(x) for x in params["etas"].split(",")]
    try:
        emit_curves(a.kind, params, a.out)
    except InvalidKind as e:
        return _err(str(e), EXIT_USAGE)
    except (OSError, ValueError) as e:
        return _err(str(e), EXIT_USAGE)
    print(f"wrote {a.out}")
    return EXIT_OK


def cmd_oracle(a):
    from .harness.furnace import WalkConfig
    from .harness.oracles import coat_walk_oracle, halfspace_walk_oracle

    p = _kv(a.params)
    cfg = WalkConfig(samples=int(p.pop("n", 100_000)), seed=int(p.pop("seed", 0)))
    tol = float(p.pop("tol", 0.01 if a.kind == "coat" else 0.03))
    ok = True
    try:
        if a.kind == "coat":
            from .coat import interfaced_lambertian_albedo

            eta = float(p.pop("eta", 1.5))
            T = float(p.pop("T", 1.0))
            rho = float(p.pop("rho", 0.5))
            base = p.pop("base", "lambert")
            mu = float(p.pop("mu", 1.0))
            _leftover(p)
            r = coat_walk_oracle(eta, T, rho, base, mu, cfg)
            print(f"coat eta={eta:g} T={T:g} rho={rho:g} base={base} mu={mu:g}: "
                  f"albedo={r.albedo:.6f} stderr={r.stderr:.2e}")
            if base == "lambert" and T == 1.0:
                ref = float(interfaced_lambertian_albedo(mu, rho, eta))
                ok = r.agrees(ref, rel=tol)
                print(f"closed form {ref:.6f} -> {'PASS' if ok else 'FAIL'}")
        else:
            from .subsurface import vdh_albedo

            g = float(p.pop("g", 0.0))
            eta = float(p.pop("eta", 1.0))
            C = p.pop("C", None)
            mu_s = p.pop("mu_s", None)
            mu_a = p.pop("mu_a", None)
            alpha = p.pop("alpha", None)
            _leftover(p)
            if alpha is None:
                alpha = float(vdh_albedo(float(C))) if C is not None else 1.0
            r = halfspace_walk_oracle(float(alpha), g, eta, cfg,
                                      None if mu_s is None else float(mu_s),
                                      None if mu_a is None else float(mu_a))
            print(f"halfspace alpha={float(alpha):.6g} g={g:g} eta={eta:g}: "
                  f"albedo={r.albedo:.6f} stderr={r.stderr:.2e}")
            if C is not None:
                ok = r.agrees(float(C), abs_=tol)
                print(f"target C={float(C):g} -> {'PASS' if ok else 'FAIL'}")
    except ValueError as e:
        return _err(str(e), EXIT_USAGE)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _leftover(p):
    if p:
        raise ValueError(f"unknown oracle parameter(s): {', '.join(sorted(p))}")


def cmd_fuzz_table(a):
    from .fuzz import write_table
    from .harness.fuzzsim import generate_table

    def progress(i, n):
        if a.verbose:
            print(f"row {i}/{n}", file=sys.stderr)

    table = generate_table(a.photons, a.seed, progress)
    with open(a.out, "w", encoding="utf-8", newline="") as fh:
        write_table(table, fh)
    print(f"wrote {a.out}")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="openpbr", description="OpenPBR lobe mixture and verification harness")
    sub = ap.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("validate", help="parse and validate a material file")
    s.add_argument("file")
    s.add_argument("--strict", action="store_true", help="fail on range warnings")
    s.set_defaults(fn=cmd_validate)

    s = sub.add_parser("furnace", help="white furnace test of a material")
    s.add_argument("file")
    s.add_argument("--spp", type=int, default=20_000, help="samples per direction")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--target", type=float, default=None,
                   help="expected albedo; without it only energy conservation is checked")
    s.add_argument("--tol", type=float, default=0.02)
    s.add_argument("--quad", type=int, default=64, help="quadrature resolution (0 disables)")
    s.add_argument("--inside", action="store_true", help="view from inside the material")
    s.set_defaults(fn=cmd_furnace)

    s = sub.add_parser("render", help="path trace a sphere to a binary PPM")
    s.add_argument("file")
    s.add_argument("--preset", choices=("furnace", "sphere-sky", "sphere-light"), default="furnace")
    s.add_argument("--spp", type=int, default=16)
    s.add_argument("--size", type=int, default=32)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_render)

    s = sub.add_parser("curves", help="emit reference curves as CSV")
    s.add_argument("--kind", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("param", nargs="*", help="key=value overrides (e.g. d_nm=300 k3=5)")
    s.set_defaults(fn=cmd_curves)

    s = sub.add_parser("oracle", help="run a random-walk oracle")
    s.add_argument("kind", choices=("coat", "halfspace"))
    s.add_argument("params", nargs="*", help="key=value, e.g. eta=1.5 rho=0.8 or C=0.5 g=0")
    s.set_defaults(fn=cmd_oracle)

    s = sub.add_parser("fuzz-table", help="regenerate the fuzz albedo table")
    s.add_argument("--out", required=True)
    s.add_argument("--photons", type=int, default=40_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-v", "--verbose", action="store_true")
    s.set_defaults(fn=cmd_fuzz_table)
    return ap


def main(argv=None) -> int:
    a = build_parser().parse_args(argv)
    try:
        return a.fn(a)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
