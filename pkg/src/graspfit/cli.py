"""Command-line entry points wiring the pipeline together.

Exit codes: 0 success (including gate rejections), 1 IO/config errors,
2 geometry contract violations. Set GRASPFIT_LOG to control log level.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import (build_catalog, load_catalog, load_exemplars,
                      predict_code, select_object)
from .codes import ObjectCode, compute_object_code
from .errors import (ContractViolation, DegenerateGeometryError,
                     GraspFitError, NonWatertightError)
from .fitting import FitConfig, fit
from .fixtures import write_fixtures
from .hand import (canonicalize, grasp_gate, load_hand, principal_bone_length,
                   GATE_THRESHOLD)
from .losses import PoseParams
from .mesh import load_obj, save_obj, Mesh
from .metrics import SimConfig, evaluate
from .fitting import FitReport

log = logging.getLogger("graspfit")

EXIT_OK = 0
EXIT_IO = 1
EXIT_GEOMETRY = 2


def _dump_json(payload, path):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _fit_config_from_args(args) -> FitConfig:
    cfg = FitConfig()
    for name in vars(cfg):
        if hasattr(args, name) and getattr(args, name) is not None:
            setattr(cfg, name, getattr(args, name))
    cfg.validate()
    return cfg


# -- subcommands ---------------------------------------------------------------

def cmd_fixtures(args):
    manifest = write_fixtures(args.out, seed=args.seed)
    _dump_json(manifest, Path(args.out) / "fixtures_manifest.json")
    print(f"fixtures written to {args.out}")
    return EXIT_OK


def cmd_catalog_build(args):
    path = build_catalog(args.dir)
    print(f"catalog index written to {path}")
    return EXIT_OK


def cmd_code(args):
    mesh = load_obj(args.object)
    code = compute_object_code(mesh, args.bone)
    payload = {"code": [float(v) for v in code.x], "bone_cm": args.bone}
    if args.out:
        _dump_json(payload, args.out)
    print(json.dumps(payload["code"]))
    return EXIT_OK


def cmd_gate(args):
    hand = canonicalize(load_hand(args.hand_obj, args.hand_json))
    report = grasp_gate(hand, threshold=args.threshold)
    payload = {
        "accepted": report.accepted,
        "inscribed_radius_cm": report.inscribed_radius,
        "inscribed_radius_normalized": report.inscribed_radius_normalized,
        "hull_scale_cm": report.hull_scale,
        "threshold": args.threshold,
    }
    if args.out:
        _dump_json(payload, args.out)
    print(json.dumps(payload, sort_keys=True))
    return EXIT_OK


def cmd_select(args):
    hand = load_hand(args.hand_obj, args.hand_json)
    exemplars = load_exemplars(args.exemplars)
    catalog = load_catalog(args.catalog)
    code, category = predict_code(hand, exemplars, k=args.k, seed=args.seed)
    b = principal_bone_length(hand)
    mesh = select_object(code, category, catalog, b, seed=args.seed)
    save_obj(mesh, args.out)
    print(json.dumps({"code": [float(v) for v in code.x],
                      "category": category, "out": str(args.out)},
                     sort_keys=True))
    return EXIT_OK


def cmd_fit(args):
    hand = load_hand(args.hand_obj, args.hand_json)
    obj = load_obj(args.object)
    cfg = FitConfig.from_json(args.config) if args.config else \
        _fit_config_from_args(args)
    if args.seed is not None:
        cfg.seed = args.seed
    report = fit(hand, obj, cfg)
    _dump_json(report.to_dict(cfg.k), args.out)
    if args.out_mesh:
        posed = Mesh(report.pose.apply(obj.vertices, cfg.k), obj.faces)
        save_obj(posed, args.out_mesh)
    print(json.dumps({"iters": len(report.trace),
                      "final_total": report.trace[-1]["total"],
                      "iters_to_half_loss": report.iters_to_half_loss},
                     sort_keys=True))
    return EXIT_OK


def cmd_eval(args):
    hand = load_hand(args.hand_obj, args.hand_json)
    obj = load_obj(args.object)
    if args.pose:
        with open(args.pose) as fh:
            rep = json.load(fh)
        p = rep["pose"]
        pose = PoseParams(np.asarray(p["translation"]),
                          np.asarray(p["rotation"]), p["scale_logit"])
        obj = Mesh(pose.apply(obj.vertices, args.k), obj.faces)
    report = evaluate(hand, obj)
    _dump_json(report.to_dict(), args.out)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def _run_sample(sample_idx, hand, exemplars, catalog, b, cfg0, out_dir):
    seed = cfg0.seed + sample_idx
    code, category = predict_code(hand, exemplars, k=3, seed=seed)
    obj = select_object(code, category, catalog, b, seed=seed)
    cfg = FitConfig(**{**vars(cfg0), "seed": seed})
    report = fit(hand, obj, cfg)
    posed = Mesh(report.pose.apply(obj.vertices, cfg.k), obj.faces)
    metrics = evaluate(hand, posed)
    tag = f"sample_{sample_idx:02d}"
    save_obj(posed, out_dir / f"{tag}_object.obj")
    _dump_json(report.to_dict(cfg.k), out_dir / f"{tag}_fit.json")
    _dump_json(metrics.to_dict(), out_dir / f"{tag}_metrics.json")
    return {"sample": sample_idx, "seed": seed, "category": category,
            "code": [float(v) for v in code.x],
            "wall_time_s": report.wall_time,
            "success": metrics.success}


def cmd_pipeline(args):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.time()
    hand = canonicalize(load_hand(args.hand_obj, args.hand_json))
    gate = grasp_gate(hand, threshold=args.gate_threshold)
    inputs = {p: _sha256(p) for p in
              (args.hand_obj, args.hand_json, args.catalog, args.exemplars)}
    cfg = _fit_config_from_args(args)
    if gate.accepted:
        exemplars = load_exemplars(args.exemplars)
        catalog = load_catalog(args.catalog)
        b = principal_bone_length(hand)
        run = lambda i: _run_sample(i, hand, exemplars, catalog, b, cfg,
                                    out_dir)
        if args.jobs > 1:
            with ThreadPoolExecutor(max_workers=args.jobs) as pool:
                samples = list(pool.map(run, range(args.samples)))
        else:
            samples = [run(i) for i in range(args.samples)]
    else:
        samples = []
        _dump_json({
            "rejected": True,
            "inscribed_radius_normalized": gate.inscribed_radius_normalized,
            "threshold": args.gate_threshold,
        }, out_dir / "rejection.json")
    manifest = {
        "tool_version": __version__,
        "inputs_sha256": inputs,
        "config": {k: v for k, v in vars(cfg).items()},
        "gate": {"accepted": gate.accepted,
                 "inscribed_radius_normalized":
                     gate.inscribed_radius_normalized},
        "samples": samples,
        "wall_time_s": time.time() - t0,  # timing lives here, not in reports
    }
    _dump_json(manifest, out_dir / "run_manifest.json")
    print(f"pipeline done: {len(samples)} samples, "
          f"gate accepted={gate.accepted}")
    return EXIT_OK


# -- argument plumbing -----------------------------------------------------------

def _add_hand_args(p):
    p.add_argument("--hand-obj", dest="hand_obj", required=True)
    p.add_argument("--hand-json", dest="hand_json", required=True)


def _add_fit_args(p):
    cfg = FitConfig()
    for name, val in vars(cfg).items():
        if name == "seed":
            continue
        p.add_argument(f"--{name.replace('_', '-')}",
                       type=type(val), default=None,
                       help=f"default {val}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graspfit",
        description="Synthesize and evaluate a held object for a fixed 3D hand")
    parser.add_argument("--config", default=None,
                        help="JSON file whose values override flags")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fixtures", help="generate synthetic test assets")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fixtures)

    p = sub.add_parser("catalog-build", help="index a directory of OBJ files")
    p.add_argument("dir")
    p.set_defaults(func=cmd_catalog_build)

    p = sub.add_parser("code", help="compute an object code")
    p.add_argument("--object", required=True)
    p.add_argument("--bone", type=float, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_code)

    p = sub.add_parser("gate", help="accept/reject a hand pose for grasping")
    _add_hand_args(p)
    p.add_argument("--threshold", type=float, default=GATE_THRESHOLD)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("select", help="retrieve and rescale a catalog object")
    _add_hand_args(p)
    p.add_argument("--exemplars", required=True)
    p.add_argument("--catalog", required=True, help="catalog index JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("fit", help="optimize object pose against the hand")
    _add_hand_args(p)
    p.add_argument("--object", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--out-mesh", dest="out_mesh", default=None)
    p.add_argument("--seed", type=int, default=None)
    _add_fit_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", help="grasp-quality metrics for a posed object")
    _add_hand_args(p)
    p.add_argument("--object", required=True)
    p.add_argument("--pose", default=None, help="fit report JSON to apply")
    p.add_argument("--k", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="gate -> select -> fit -> eval")
    _add_hand_args(p)
    p.add_argument("--exemplars", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--gate-threshold", dest="gate_threshold", type=float,
                   default=GATE_THRESHOLD)
    _add_fit_args(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("GRASPFIT_LOG", "WARNING"))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code not in (0, None) else EXIT_OK
    if args.config:
        try:
            with open(args.config) as fh:
                overrides = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: bad config: {exc}", file=sys.stderr)
            return EXIT_IO
        for key, value in overrides.items():
            setattr(args, key, value)
    if hasattr(args, "seed") and args.seed is not None:
        pass  # seeds always recorded in outputs by the commands themselves
    try:
        return args.func(args)
    except (DegenerateGeometryError, NonWatertightError,
            ContractViolation) as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except (GraspFitError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
