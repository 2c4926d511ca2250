"""Command-line driver: reproduce, search, certify, sample, render.

File conventions: human-edited inputs are ``key = value`` text (rationals
as ``p/q`` strings, ``#`` comments); machine outputs are JSON with every
rational serialized exactly as ``p/q`` and matrices row-major. Identical
inputs produce byte-identical outputs; the optional timestamp honors
SOURCE_DATE_EPOCH and is null otherwise.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, _golden, implicit, lpfeas, occert, polysupport, tconfig, varjet
from .errors import ConfigError, T5CertError
from .ratlin import RatMatrix, rat, rat_str
from .tconfig import ParameterVector
from .varjet import HessianSet


def _fmt_matrix(m: RatMatrix) -> list:
    return [[rat_str(x) for x in row] for row in m.tolist()]


def _float_matrix(rows) -> list:
    return [[float(Fraction(x)) for x in row] for row in rows]


def parse_keyvalue_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; keys are unique."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{source}:{lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def load_grid_file(path: Path) -> dict:
    """Grid spec: one line per fixed scalar, value or 'start : stop : step'."""
    raw = parse_keyvalue_text(path.read_text(), str(path))
    ranges = {}
    for key, value in raw.items():
        try:
            if ":" in value:
                parts = [p.strip() for p in value.split(":")]
                if len(parts) != 3:
                    raise ValueError("ranges take exactly 'start : stop : step'")
                ranges[key] = tuple(rat(p) for p in parts)
            else:
                ranges[key] = rat(value)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"{path}: bad value for {key!r}: {exc}") from exc
    return ranges


def load_hessians_file(path: Path) -> HessianSet:
    """Five tensors H1..H5, 16 entries each ('; ' optionally between rows)."""
    raw = parse_keyvalue_text(path.read_text(), str(path))
    expected = [f"H{k}" for k in range(1, 6)]
    missing = [k for k in expected if k not in raw]
    if missing:
        raise ConfigError(f"{path}: missing entries: {', '.join(missing)}")
    extra = [k for k in raw if k not in expected]
    if extra:
        raise ConfigError(f"{path}: unknown entries: {', '.join(sorted(extra))}")
    mats = []
    for key in expected:
        tokens = raw[key].replace(";", " ").split()
        if len(tokens) != 16:
            raise ConfigError(f"{path}: {key} needs 16 entries, got {len(tokens)}")
        try:
            mats.append([rat(t) for t in tokens])
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ConfigError(f"{path}: bad rational in {key}: {exc}") from exc
    try:
        return HessianSet.from_entries(mats)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def write_hessians_file(path: Path, hessians: HessianSet) -> None:
    lines = []
    for k, m in enumerate(hessians.matrices, start=1):
        rows = " ; ".join(" ".join(rat_str(x) for x in row) for row in m.tolist())
        lines.append(f"H{k} = {rows}")
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def config_digest(payload) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def _timestamps() -> dict:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return {"generated": None}
    stamp = datetime.datetime.fromtimestamp(int(epoch), datetime.timezone.utc)
    return {"generated": stamp.isoformat()}


# -- reproduce ----------------------------------------------------------------

def _reproduce_report(golden: dict) -> dict:
    params = ParameterVector.baseline()
    checks = []

    def check(name, passed, detail=""):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    cmats = tconfig.build_rank_one(params)
    points = tconfig.assemble_X(1, params)
    verts = tconfig.vertices(1, params)
    uppers = [x.submatrix(0, 2, 0, 2) for x in points]
    lowers = [x.submatrix(2, 4, 0, 2) for x in points]

    for j in range(5):
        check(f"rank_one_{j + 1}",
              _fmt_matrix(cmats[j]) == golden["rank_one"][j],
              "increment matrix matches reference")
        check(f"upper_block_{j + 1}",
              _fmt_matrix(uppers[j]) == golden["upper_blocks"][j],
              "outer point upper block matches reference")
        check(f"lower_block_{j + 1}",
              _fmt_matrix(lowers[j]) == golden["lower_blocks"][j],
              "outer point lower block matches reference")

    c_ref = [rat_str(v) for v in _golden.C_CONSTANTS]
    d_ref = [rat_str(v) for v in _golden.D_CONSTANTS]
    check("support_constants_c", c_ref == list(golden["c_constants"]),
          "built-in c constants match reference")
    check("support_constants_d", d_ref == list(golden["d_constants"]),
          "built-in d constants match reference")

    config = tconfig.configuration(params)
    table = polysupport.check_ineq3(config, _golden.C_CONSTANTS,
                                    _golden.D_CONSTANTS)
    check("slack_table_negative", table.all_negative,
          "all 20 pairwise slacks strictly negative")
    check("slack_1_2", rat_str(table.get(1, 2)) == golden["slack_12"],
          f"slack(1,2) = {rat_str(table.get(1, 2))}")

    system = lpfeas.build_system(lpfeas.FixedParameters.baseline())
    witness_vals = system.evaluate(lpfeas.baseline_witness())
    check("reference_witness_feasible", all(v < 0 for v in witness_vals),
          "reference solution satisfies all 20 strict rows")
    lp_rows_match = tuple(witness_vals) == table.values()
    check("lp_rows_match_slacks", lp_rows_match,
          "system rows at the witness equal the slack table")

    probes = []
    for (nu, (s, t)), ref in zip(_golden.TEST_POINTS, golden["jacobian_values"]):
        value = varjet.probe_jacobian(nu, s, t)
        probes.append({"nu": nu, "s": rat_str(rat(s)), "t": rat_str(rat(t)),
                       "value": rat_str(value)})
        check(f"jacobian_probe_{nu}",
              value != 0 and rat_str(value) == ref,
              f"probe determinant nonzero and matches reference")

    report = {
        "mode": "reproduce",
        "toolkit_version": __version__,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "configuration": {
            "parameters": params.to_strings(),
            "rank_one": [_fmt_matrix(m) for m in cmats],
            "points": [_fmt_matrix(x) for x in points],
            "vertices": [_fmt_matrix(p) for p in verts],
            "upper_blocks": [_fmt_matrix(a) for a in uppers],
            "lower_blocks": [_fmt_matrix(b) for b in lowers],
        },
        "constants": {"c": c_ref, "d": d_ref},
        "slacks": [{"pair": list(pair), "value": rat_str(s)}
                   for pair, s in table.entries],
        "jacobian_probes": probes,
    }
    return report


def cmd_reproduce(args) -> int:
    if args.golden:
        golden = json.loads(Path(args.golden).read_text())
    else:
        golden = _golden.as_dict()
    report = _reproduce_report(golden)
    out = _out_path(args, args.out or "reproduce_report.json")
    write_json(out, report)
    for c in report["checks"]:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}")
    if not report["passed"]:
        first = next(c for c in report["checks"] if not c["passed"])
        print(f"reproduction mismatch: {first['name']}", file=sys.stderr)
        return 1
    print(f"report written to {out}")
    return 0


# -- search -------------------------------------------------------------------

def cmd_search(args) -> int:
    ranges = load_grid_file(Path(args.grid))
    try:
        hits = lpfeas.grid_search(ranges, allow_kappa_le_1=args.allow_kappa_le_1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    payload = {
        "mode": "search",
        "toolkit_version": __version__,
        "grid": {k: (rat_str(v) if isinstance(v, Fraction)
                     else [rat_str(x) for x in v])
                 for k, v in ranges.items()},
        "hits": [
            {
                "params": {name: rat_str(value)
                           for name, value in zip(lpfeas.PARAM_NAMES,
                                                  hit.params.scalars())},
                "x": [rat_str(v) for v in hit.solution.x],
                "columns": list(lpfeas.COLUMN_LABELS),
                "margin": rat_str(hit.solution.margin),
            }
            for hit in hits
        ],
    }
    out = _out_path(args, args.out or "search_hits.json")
    write_json(out, payload)
    print(f"{len(hits)} feasible grid point(s); hits written to {out}")
    return 0


# -- certify ------------------------------------------------------------------

def _baseline_support(epsilon=None) -> polysupport.SupportData:
    config = tconfig.configuration(ParameterVector.baseline())
    c, d = _golden.C_CONSTANTS, _golden.D_CONSTANTS
    if epsilon is None:
        bound = polysupport.max_epsilon(config, c, d)
        epsilon = bound / 2
    return polysupport.support_jet(config, c, d, epsilon)


def cmd_certify(args) -> int:
    hessians = load_hessians_file(Path(args.hessians))
    epsilon = rat(args.epsilon) if args.epsilon else None
    support = _baseline_support(epsilon)
    params = ParameterVector.baseline()
    cert = occert.certify(params, hessians, support,
                          allow_kappa_le_1=args.allow_kappa_le_1)
    digest_payload = {
        "mode": "certify",
        "parameters": params.to_strings(),
        "hessians": [_fmt_matrix(h) for h in hessians.matrices],
        "epsilon": rat_str(support.epsilon),
    }
    payload = {
        "toolkit_version": __version__,
        "input_digest": config_digest(digest_payload),
        "timestamps": _timestamps(),
        "certificate": cert.to_dict(),
    }
    out = _out_path(args, args.out or "certificate.json")
    write_json(out, payload)
    print(f"certificate {'PASS' if cert.passed else 'FAIL'}; written to {out}")
    return 0 if cert.passed else 1


# -- sample -------------------------------------------------------------------

def _parse_lambda(value: str):
    if value in ("full", "full-segment"):
        return "full-segment"
    try:
        return float(value)
    except ValueError as exc:
        raise ConfigError(f"bad --lambda value {value!r}") from exc


def cmd_sample(args) -> int:
    if args.hessians:
        hessians = load_hessians_file(Path(args.hessians))
    else:
        hessians = occert.default_certified_hessians()
    model = implicit.LocalModel.from_hessians(hessians)
    lam = _parse_lambda(getattr(args, "lambda"))
    center = np.array(tconfig.vertices(1, ParameterVector.baseline())[0].to_floats())
    qs = implicit.sample_ball(center, args.ball_radius, args.count,
                              seed=args.seed)
    samples = implicit.sample_sigma(lam, qs, model,
                                    with_preimages=args.preimage)
    if args.format == "csv":
        out = _out_path(args, args.out or "samples.csv")
        lines = ["sample,branch,lambda," + ",".join(f"x{k}" for k in range(1, 9))]
        for p in samples.points:
            coords = ",".join(repr(c) for c in p.coords)
            lines.append(f"{p.sample},{p.branch},{p.lam!r},{coords}")
        out.write_text("\n".join(lines) + "\n")
    else:
        out = _out_path(args, args.out or "samples.json")
        records = []
        for idx, p in enumerate(samples.points):
            rec = {"sample": p.sample, "branch": p.branch, "lambda": p.lam,
                   "coords": list(p.coords)}
            if args.preimage:
                a, b = samples.preimages[idx]
                rec["preimage"] = {"A": a, "B": b}
            records.append(rec)
        payload = {
            "mode": "sample",
            "toolkit_version": __version__,
            "ball_radius": args.ball_radius,
            "count": args.count,
            "seed": args.seed,
            "lambdas": list(samples.lambdas),
            "margin": samples.margin,
            "det_checks": [
                {"sample": s, "branch": b, "lambda": lv, "det": det}
                for s, b, lv, det in samples.det_checks
            ],
            "points": records,
        }
        write_json(out, payload)
    print(f"{len(samples.points)} point(s) written to {out}"
          + (f"; det margin {samples.margin!r}" if samples.margin is not None else ""))
    if samples.det_checks and samples.margin == 0.0:
        print("determinant check hit exact zero", file=sys.stderr)
        return 1
    return 0


# -- render -------------------------------------------------------------------

def _project_to_plane(rows):
    """Least-squares principal plane with deterministic axis signs.

    Falls back to the first coordinate pair when the cloud spans fewer
    than two directions.
    """
    arr = np.array(rows, dtype=float)
    if arr.shape[0] >= 2:
        centered = arr - arr.mean(axis=0)
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        if len(svals) >= 2 and svals[1] > 1e-12 * max(svals[0], 1.0):
            axes = vt[:2].copy()
            for k in range(2):
                pivot = int(np.argmax(np.abs(axes[k])))
                if axes[k][pivot] < 0:
                    axes[k] = -axes[k]
            return centered @ axes.T
    return arr[:, :2]


def _svg_scale(xy, width, height, pad):
    xs, ys = xy[:, 0], xy[:, 1]
    span_x = max(float(xs.max() - xs.min()), 1e-9)
    span_y = max(float(ys.max() - ys.min()), 1e-9)
    scale = min((width - 2 * pad) / span_x, (height - 2 * pad) / span_y)

    def to_px(p):
        x = pad + (float(p[0]) - float(xs.min())) * scale
        y = height - pad - (float(p[1]) - float(ys.min())) * scale
        return x, y

    return to_px


def _render_svg(groups, width=640, height=480) -> str:
    """groups: dict with 'points' [(label, xy8)] and 'segments' [(i, j)]."""
    labeled = groups["points"]
    rows = [coords for _, coords in labeled]
    xy = _project_to_plane(rows)
    to_px = _svg_scale(xy, width, height, pad=40.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for i, j in groups.get("segments", ()):
        x1, y1 = to_px(xy[i])
        x2, y2 = to_px(xy[j])
        parts.append(f'<line x1="{x1:.4f}" y1="{y1:.4f}" x2="{x2:.4f}" '
                     f'y2="{y2:.4f}" stroke="#555555" stroke-width="1.2"/>')
    for k, (label, _) in enumerate(labeled):
        x, y = to_px(xy[k])
        fill = "#1f4e8c" if label.startswith("X") else "#b03a2e"
        parts.append(f'<circle cx="{x:.4f}" cy="{y:.4f}" r="4.0" fill="{fill}"/>')
        if label:
            parts.append(f'<text x="{x + 6:.4f}" y="{y - 6:.4f}" '
                         f'font-family="monospace" font-size="12">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_render(args) -> int:
    payload = json.loads(Path(args.input).read_text())
    if "configuration" in payload:
        conf = payload["configuration"]
        labeled = []
        for j, mat in enumerate(conf["points"], start=1):
            flat = _float_matrix(mat)
            coords = [flat[r][c] for c in range(2) for r in range(4)]
            labeled.append((f"X{j}", coords))
        for j, mat in enumerate(conf["vertices"], start=1):
            flat = _float_matrix(mat)
            coords = [flat[r][c] for c in range(2) for r in range(4)]
            labeled.append((f"P{j}", coords))
        # Vertex pentagon plus the ray segments vertex -> outer point.
        segments = [(5 + j, 5 + (j + 1) % 5) for j in range(5)]
        segments += [(5 + j, j) for j in range(5)]
        groups = {"points": labeled, "segments": segments}
    elif "points" in payload:
        labeled = [("", rec["coords"]) for rec in payload["points"]]
        if not labeled:
            raise ConfigError("point cloud is empty; nothing to render")
        groups = {"points": labeled, "segments": []}
    else:
        raise ConfigError("input JSON has neither 'configuration' nor 'points'")
    svg = _render_svg(groups)
    out = _out_path(args, args.out)
    out.write_text(svg)
    print(f"figure written to {out}")
    return 0


# -- entry point ----------------------------------------------------------------

def _out_path(args, name) -> Path:
    path = Path(name)
    if not path.is_absolute():
        path = Path(args.out_dir) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="t5cert",
        description="Exact construction, search and certification of special "
                    "T5-configurations on polyconvex gradient graphs.")
    parser.add_argument("--out-dir", default=".", help="directory for outputs")
    parser.add_argument("--allow-kappa-le-1", action="store_true",
                        help="permit ray weights <= 1 in search/validation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reproduce", help="rebuild and verify the base instance")
    p.add_argument("--golden", help="override the packaged reference data (JSON)")
    p.add_argument("--out", help="report filename")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("search", help="grid search for strict LP feasibility")
    p.add_argument("--grid", required=True, help="grid spec (key = value text)")
    p.add_argument("--out", help="hit list filename")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("certify", help="run the openness-condition checks")
    p.add_argument("--hessians", required=True,
                   help="tensor file (H1..H5, 16 rationals each)")
    p.add_argument("--epsilon", help="quadratic margin p/q (default: half the bound)")
    p.add_argument("--out", help="certificate filename")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("sample", help="sample the segment family numerically")
    p.add_argument("--ball-radius", type=float, default=1e-3)
    p.add_argument("--lambda", default="0.9",
                   help="segment parameter in (0,1], or 'full'")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hessians", help="tensor file (default: certified set)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--preimage", action="store_true",
                   help="include gradient-pair preimages in JSON output")
    p.add_argument("--out", help="point cloud filename")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("render", help="draw a configuration or point cloud")
    p.add_argument("--input", required=True, help="reproduce report or point cloud JSON")
    p.add_argument("--out", required=True, help="output SVG filename")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except T5CertError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
