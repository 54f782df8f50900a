"""Command line front end.

Exit codes: 0 when every check passes, 1 for a mathematical failure, 2 for
unusable input.  Reports are JSON with floats printed to 17 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bonnet import BonnetData, compatibility_check, extract_data, match_isometry, reconstruct
from .calculus import DEFAULT_TOLERANCES, identity_suite
from .codim import reduction_test, thm44_check
from .errors import (DimensionError, IncompatibleDataError, IsoprodError,
                     PreconditionError, SceneError)
from .gallery import detect
from .jets import DEFAULT_STEP, sample_grid
from .scene import (DEFAULT_COUNTS, RECONSTRUCT_COUNTS, Scene, load_json, parse_grid_flag,
                    parse_overrides)

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
INPUT_ERRORS = (SceneError, PreconditionError, DimensionError)


# ---------------------------------------------------------------- JSON output


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with 17-significant-digit floats and sorted keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write(path, obj):
    text = dumps(obj) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------- commands


def _load_input(args):
    """Scene, or raw reconstruction data with tolerances for ``reconstruct --data``."""
    if args.data is not None:
        if args.command != "reconstruct":
            raise SceneError("--data is only accepted by reconstruct")
        if args.scene is not None:
            raise SceneError("give either --scene or --data, not both")
        data = BonnetData.from_dict(load_json(args.data))
        try:
            tol = DEFAULT_TOLERANCES.override(**parse_overrides(args.tol_override))
        except KeyError as exc:
            raise SceneError(str(exc)) from exc
        return data, tol
    if args.scene is None:
        raise SceneError("this command needs --scene")
    counts = parse_grid_flag(args.grid) if args.grid else None
    defaults = RECONSTRUCT_COUNTS if args.command == "reconstruct" else DEFAULT_COUNTS
    return Scene.load(args.scene, counts, parse_overrides(args.tol_override), defaults)


def _echo(args, scene: Scene | None) -> dict:
    out = {"command": args.command}
    if scene is not None:
        out["scene"] = scene.spec.to_dict()
        out["grid"] = scene.grid.to_dict()
    return out


def run_verify(args, scene):
    h = float(scene.options.get("h", DEFAULT_STEP))
    rep = identity_suite(scene.spec, scene.grid.points, h, scene.tolerances)
    out = _echo(args, scene)
    out.update({"points": scene.grid.size, "report": rep.to_dict(), "pass": rep.passed,
                "failures": rep.failures()})
    return out, EXIT_PASS if rep.passed else EXIT_FAIL


def run_detect(args, scene):
    tol = float(scene.options.get("detect_tol", 1e-6))
    samples = sample_grid(scene.spec, scene.grid.points)
    verdict = detect(scene.spec.space, samples, tol)
    out = _echo(args, scene)
    out["detection"] = verdict.to_dict()
    return out, EXIT_PASS


def run_reduce(args, scene):
    factor = args.factor if args.factor is not None else scene.options.get("factor")
    if factor is None:
        raise SceneError("reduce needs --factor or options.factor")
    factor = int(factor)
    if not 1 <= factor <= scene.spec.space.ell:
        raise SceneError(f"factor {factor} out of range")
    h = float(scene.options.get("h", DEFAULT_STEP))
    res = reduction_test(scene.spec, factor, scene.grid, h, scene.tolerances.moving)
    t44 = thm44_check(scene.spec, factor, scene.grid)
    out = _echo(args, scene)
    out.update({"factor": factor, "reducible": res.reducible, "nbar": res.nbar,
                "certificate": res.certificate.to_dict(),
                "theorem_check": {"conditions_hold": t44.conditions_hold,
                                  "conclusion_holds": t44.conclusion_holds,
                                  "consistent": t44.consistent, "report": t44.report.to_dict()}})
    return out, EXIT_PASS


def run_reconstruct(args, scene):
    if isinstance(scene, tuple):
        data, tol = scene
        out = _echo(args, None)
        out["grid"] = data.grid.to_dict()
        out["space"] = data.space.to_dict()
        return _reconstruct_stage(args, data, tol, out, original=None)
    data = extract_data(scene.spec, scene.grid)
    if args.emit_data:
        _write(args.emit_data, data.to_dict())
    return _reconstruct_stage(args, data, scene.tolerances, _echo(args, scene), original=data)


def _reconstruct_stage(args, data, tol, out, original):
    compat = compatibility_check(data, tol)
    out["compatibility"] = compat.to_dict()
    if not compat.passed:
        out["pass"] = False
        out["failures"] = compat.failures()
        return out, EXIT_FAIL
    res = reconstruct(data, tol=tol)
    out["reconstruction"] = {"holonomy": res.holonomy, "zeta": res.zeta, "report": res.report.to_dict()}
    ok = res.report.passed
    failures = res.report.failures()
    if args.emit_points:
        _write(args.emit_points, {"points": res.points.reshape(-1, data.space.N),
                                  "grid": data.grid.to_dict()})
    if original is not None:
        match = match_isometry(original.points, original.frames, res.points, res.frames, data.space, tol)
        limit = float(args.max_error if args.max_error is not None else (1e-5 if data.m == 1 else 1e-4))
        out["match"] = {"error": match.error, "limit": limit, "B": match.B, "C": match.C,
                        "report": match.report.to_dict()}
        ok = ok and match.report.passed and match.error <= limit
        failures += match.report.failures()
        if match.error > limit:
            failures.append("round_trip_error")
    out["pass"] = ok
    out["failures"] = failures
    return out, EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {"verify": run_verify, "detect": run_detect, "reduce": run_reduce,
            "reconstruct": run_reconstruct}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isoprod",
                                 description="Checks and reconstructions for immersions into products of space forms.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--scene", help="scene JSON file")
    ap.add_argument("--data", help="reconstruction data JSON file (reconstruct only)")
    ap.add_argument("--grid", help="grid counts, N or NxM")
    ap.add_argument("--tol-override", action="append", metavar="KEY=VAL",
                    help="override a tolerance tier; repeatable")
    ap.add_argument("--factor", type=int, help="1-based factor index (reduce)")
    ap.add_argument("--report", help="write the report here instead of stdout")
    ap.add_argument("--emit-points", help="write reconstructed points here (reconstruct)")
    ap.add_argument("--emit-data", help="write the extracted reconstruction data here (reconstruct)")
    ap.add_argument("--max-error", type=float, help="round-trip error limit (reconstruct)")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    try:
        loaded = _load_input(args)
    except (IsoprodError, ValueError, TypeError, KeyError) as exc:
        return _finish(args, _error(args, exc, "input"), EXIT_INPUT)
    try:
        out, code = COMMANDS[args.command](args, loaded)
    except INPUT_ERRORS as exc:
        out, code = _error(args, exc, "run"), EXIT_INPUT
    except IncompatibleDataError as exc:
        out = _error(args, exc, "run")
        if exc.report is not None:
            out["failures"] = exc.report.failures()
            out["report"] = exc.report.to_dict()
        code = EXIT_FAIL
    except (IsoprodError, np.linalg.LinAlgError) as exc:
        out, code = _error(args, exc, "run"), EXIT_FAIL
    return _finish(args, out, code)


def _error(args, exc, stage) -> dict:
    return {"command": args.command, "error": str(exc), "error_type": type(exc).__name__,
            "stage": stage, "pass": False}


def _finish(args, out, code) -> int:
    try:
        _write(args.report, out)
    except OSError as exc:
        sys.stderr.write(f"cannot write report: {exc}\n")
        return EXIT_INPUT
    if code == EXIT_INPUT:
        sys.stderr.write(f"input error: {out.get('error')}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
