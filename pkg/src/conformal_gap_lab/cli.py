"""Command-line front end.

Subcommands: ``catalogue``, ``analyze``, ``kerw``, ``dims``, ``verify``,
``rescale``.  Reports are deterministic for a fixed seed: keys are sorted and
floats are printed with 12 significant digits.  Exit codes: 0 when every
check passes, 1 when a check fails, 2 on usage or domain errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import JSON_SCHEMA, __version__, analysis, curvature, expr, geometry, tractor
from .curvature import ConventionError, frobenius

USAGE_ERRORS = (
    geometry.CatalogueError,
    geometry.DomainError,
    geometry.SingularMetricError,
    expr.ParseError,
    expr.EvalError,
    ValueError,
)

CHECK_ERRORS = (ConventionError, analysis.AnalysisError, tractor.TransportError)


def _default_seed() -> int:
    try:
        return int(os.environ.get("CGL_SEED", "0"))
    except ValueError:
        return 0


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(f"{float(obj):.12g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _emit(report: dict, ns) -> None:
    report = dict(report)
    report["schema"] = JSON_SCHEMA
    report["version"] = __version__
    text = (
        json.dumps(_round_floats(report), sort_keys=True, indent=2) + "\n"
        if getattr(ns, "json", False)
        else _render_text(report)
    )
    out_path = getattr(ns, "out", None)
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)


def _render_text(report: dict) -> str:
    lines = [f"# {report.get('command', 'report')} ({report['schema']})"]

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k in sorted(obj):
                walk(f"{prefix}{k}.", obj[k])
        elif isinstance(obj, (list, tuple)):
            if all(not isinstance(v, (dict, list, tuple)) for v in obj):
                lines.append(f"{prefix[:-1]} = {list(_round_floats(obj))}")
            else:
                for i, v in enumerate(obj):
                    walk(f"{prefix}{i}.", v)
        elif isinstance(obj, float):
            lines.append(f"{prefix[:-1]} = {obj:.12g}")
        else:
            lines.append(f"{prefix[:-1]} = {obj}")

    for key in sorted(report):
        if key in ("schema", "version", "command", "pass"):
            continue
        walk(f"{key}.", report[key])
    lines.append("PASS" if report.get("pass", True) else "FAIL")
    return "\n".join(lines) + "\n"


def _parse_point(text: str, n: int):
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != n:
        raise geometry.DomainError(
            f"point needs {n} comma-separated coordinates, got {len(parts)}"
        )
    return tuple(float(p) for p in parts)


def _parse_params(items):
    out = {}
    for item in items or []:
        name, _, value = item.partition("=")
        if not _:
            raise geometry.CatalogueError(f"--param expects NAME=VALUE, got {item!r}")
        name = name.strip()
        try:
            out[name] = float(value)
        except ValueError:
            out[name] = value.strip()
    return out


def _resolve_metric(name: str, params: dict) -> geometry.MetricSpec:
    path = Path(name)
    if path.suffix in (".metric", ".txt") or path.exists():
        return geometry.load_metric(path.read_text(), label=path.stem)
    return geometry.catalogue_metric(name, params)


# --- subcommands ----------------------------------------------------------------

def _cmd_catalogue(ns) -> tuple[dict, bool]:
    return {
        "command": "catalogue",
        "metrics": geometry.catalogue_names(),
    }, True


def _cmd_analyze(ns) -> tuple[dict, bool]:
    params = _parse_params(ns.param)
    spec = _resolve_metric(ns.metric, params)
    seed = ns.seed if ns.seed is not None else _default_seed()
    if ns.point:
        points = [_parse_point(ns.point, spec.n)]
    else:
        points = geometry.sample_points(spec, ns.samples, seed=seed)

    rows = []
    for pt in points:
        pack = curvature.curvature_pack(spec, pt, order=3)
        row = {
            "point": list(pt),
            "scalar_curvature": pack.scalar,
            "ricci_norm": pack.ricci.norm(),
            "weyl_norm": pack.weyl.norm(),
            "cotton_norm": pack.cotton.norm(),
        }
        if spec.n >= 4:
            row["kerw_dim"] = analysis.kernel_of_weyl(spec, pt).dim
        rows.append(row)

    scale_checks = []
    ok = True
    for name, sigma in spec.known_scales:
        worst = max(analysis.ae_residual(spec, sigma, pt) for pt in points)
        passed = worst < 1e-8
        ok &= passed
        scale_checks.append({
            "scale": name,
            "source": expr.to_source(sigma, spec.names),
            "max_residual": worst,
            "tolerance": 1e-8,
            "passed": passed,
        })

    report = {
        "command": f"analyze {ns.metric}",
        "metric": spec.label,
        "signature": list(spec.signature),
        "dimension": spec.n,
        "coordinates": list(spec.names),
        "params": dict(spec.params),
        "seed": seed,
        "points": rows,
        "scale_checks": scale_checks,
        "notes": list(spec.notes),
        "pass": ok,
    }
    return report, ok


def _cmd_kerw(ns) -> tuple[dict, bool]:
    spec = _resolve_metric(ns.metric, _parse_params(ns.param))
    pt = (_parse_point(ns.point, spec.n) if ns.point
          else geometry.default_point(spec))
    ksp = analysis.kernel_of_weyl(spec, pt)
    bound = analysis.weyl_kernel_bound(spec.signature, spec.n)
    report = {
        "command": f"kerw {ns.metric}",
        "metric": spec.label,
        "point": list(pt),
        "dim": ksp.dim,
        "bound": bound,
        "marginal": ksp.marginal,
        "basis": [list(map(float, row)) for row in ksp.basis],
        "pass": True,
    }
    return report, True


def _cmd_dims(ns) -> tuple[dict, bool]:
    spec = _resolve_metric(ns.metric, _parse_params(ns.param))
    seed = ns.seed if ns.seed is not None else _default_seed()
    basepoint = (_parse_point(ns.base_point, spec.n) if ns.base_point else None)
    rep = analysis.estimate_parallel_dims(
        spec, basepoint, num_points=ns.samples, num_loops=ns.loops, seed=seed,
        upper=not ns.lower_only,
    )
    report = {"command": f"dims {ns.metric}", "dims": rep.as_dict(), "pass": True}
    return report, True


def _cmd_verify(ns) -> tuple[dict, bool]:
    seed = ns.seed if ns.seed is not None else _default_seed()
    kwargs = {"seed": seed}
    if ns.theorem in ("warpedSol", "t_riem", "t_lorentz", "t_gen"):
        kwargs["n"] = ns.n
    if ns.theorem == "t_riem":
        kwargs["case"] = ns.case
    if ns.theorem == "t_gen":
        kwargs["p"] = ns.p
    if ns.theorem == "warpedSol":
        kwargs["sc"] = ns.sc
    if ns.theorem in ("rflat", "bounds"):
        kwargs["metric"] = ns.metric
    report = analysis.verify_theorem(ns.theorem, **kwargs)
    report["command"] = f"verify {ns.theorem}"
    report["pass"] = report.pop("passed")
    return report, report["pass"]


def _cmd_rescale(ns) -> tuple[dict, bool]:
    spec = _resolve_metric(ns.metric, _parse_params(ns.param))
    pt = (_parse_point(ns.point, spec.n) if ns.point
          else geometry.default_point(spec))
    omega = expr.parse(ns.omega, spec.n, params=set(spec.params_dict),
                       var_names=spec.names)
    hatted = curvature.rescale_metric(spec, omega)
    pack = curvature.curvature_pack(spec, pt, order=3)
    hat_pack = curvature.curvature_pack(hatted, pt, order=3)

    checks = []

    def add(name, value, tol):
        checks.append({"name": name, "value": value, "tolerance": tol,
                       "passed": bool(abs(value) <= tol)})

    p_expected = curvature.schouten_transform_reference(pack, omega)
    add("schouten_transform",
        frobenius(hat_pack.schouten.components - p_expected),
        1e-8 * max(1.0, frobenius(p_expected)))
    j_expected = curvature.j_transform_reference(pack, omega)
    add("j_transform", hat_pack.j - j_expected, 1e-8 * max(1.0, abs(j_expected)))
    w = expr.evaluate_at(omega, pt, spec.params_dict)
    add("weyl_covariance",
        frobenius(hat_pack.weyl.components - w ** 2 * pack.weyl.components),
        1e-8 * max(1.0, pack.weyl.norm()))
    sigma = expr.add(expr.ONE, expr.var(0))
    base_res = analysis.ae_residual_matrix(spec, sigma, pt)
    hat_res = analysis.ae_residual_matrix(hatted, expr.mul(omega, sigma), pt)
    add("ae_operator_invariance",
        frobenius(hat_res - w * base_res),
        1e-8 * max(1.0, frobenius(base_res)))

    ok = all(c["passed"] for c in checks)
    report = {
        "command": f"rescale {ns.metric}",
        "metric": spec.label,
        "omega": ns.omega,
        "point": list(pt),
        "checks": checks,
        "pass": ok,
    }
    return report, ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cgl",
        description="conformal curvature and Einstein-scale dimension workbench",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("catalogue", help="list built-in metrics")

    def common(p, with_point=True):
        if with_point:
            p.add_argument("--point", help="comma-separated coordinates")
        p.add_argument("--param", action="append", metavar="NAME=VALUE")
        p.add_argument("--json", action="store_true")
        p.add_argument("--out", help="write the report to this path")
        p.add_argument("--seed", type=int, default=None,
                       help="sampling seed (default: CGL_SEED or 0)")

    p = sub.add_parser("analyze", help="curvature invariants and scale checks")
    p.add_argument("metric", help="catalogue name or conformal-metric v1 file")
    p.add_argument("--samples", type=int, default=10)
    common(p)

    p = sub.add_parser("kerw", help="pointwise Weyl kernel")
    p.add_argument("metric")
    common(p)

    p = sub.add_parser("dims", help="bounds for d_aE and d_ncK")
    p.add_argument("metric")
    p.add_argument("--base-point", dest="base_point")
    p.add_argument("--samples", type=int, default=8,
                   help="transported curvature constraints")
    p.add_argument("--loops", type=int, default=12, help="holonomy loops")
    p.add_argument("--lower-only", action="store_true",
                   help="skip the upper-bound constraint machinery")
    common(p, with_point=False)

    p = sub.add_parser("verify", help="run a family verifier")
    p.add_argument("theorem", choices=["warpedSol", "t_riem", "t_lorentz",
                                       "t_gen", "rflat", "bounds"])
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--case", choices=["a", "b", "c"], default="a")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--sc", type=int, choices=[48, -48, 0], default=48)
    p.add_argument("--metric", default="pp_wave")
    common(p, with_point=False)

    p = sub.add_parser("rescale", help="conformal transformation-law checks")
    p.add_argument("metric")
    p.add_argument("--omega", required=True, help="positive rescale factor")
    common(p)

    return parser


COMMANDS = {
    "catalogue": _cmd_catalogue,
    "analyze": _cmd_analyze,
    "kerw": _cmd_kerw,
    "dims": _cmd_dims,
    "verify": _cmd_verify,
    "rescale": _cmd_rescale,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 2

    try:
        report, ok = COMMANDS[ns.command](ns)
    except CHECK_ERRORS as err:
        print(f"check failed: {err}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    _emit(report, ns)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
