"""Command-line entry point: ``binpick {plan,eval,gen,render}``.

Exit codes: 0 success, 1 error, 2 (plan only) no valid grasp found.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, maskio, metrics, planner, scenegen
from .camgeom import CameraError, CameraModel
from .maskio import LabelMapError

log = logging.getLogger("binpick")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NO_GRASP = 2


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _read_json(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def _write_manifest(path: Path, command: str, args: argparse.Namespace, configs: dict, started: float) -> None:
    _write_json(
        path,
        {
            "command": command,
            "argv": sys.argv[1:] if args.argv is None else args.argv,
            "configs": {k: str(v) for k, v in configs.items() if v is not None},
            "seed": args.seed,
            "version": __version__,
            "wall_time_s": round(time.perf_counter() - started, 6),
        },
    )


def _scores_path_for(labels: Path) -> Path:
    name = labels.name
    if name.endswith(maskio.LABELS_SUFFIX):
        return labels.with_name(name[: -len(maskio.LABELS_SUFFIX)] + maskio.SCORES_SUFFIX)
    return labels.with_suffix(".scores.json")


def _default_camera(lm: maskio.InstanceLabelMap) -> CameraModel:
    return CameraModel(fx=600.0, fy=600.0, cx=(lm.width - 1) / 2, cy=(lm.height - 1) / 2)


def _load_depth(arg: str | None):
    if arg is None:
        return None
    try:
        return float(arg)
    except ValueError:
        pass
    path = Path(arg)
    if path.suffix == ".npy":
        return np.load(path)
    # 16-bit raster in millimeters
    return maskio.read_labels_png(path).astype(float) / 1000.0


def cmd_plan(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    labels_path = Path(args.labels)
    scores_path = Path(args.scores) if args.scores else _scores_path_for(labels_path)
    lm = maskio.load_label_map(labels_path, scores_path)
    cam = CameraModel.load(args.camera) if args.camera else _default_camera(lm)
    gripper, rect = planner.load_gripper_config(args.gripper) if args.gripper else (planner.GripperSpec(), planner.GraspRectSpec())
    gripper = planner.GripperSpec(
        args.max_opening if args.max_opening is not None else gripper.max_opening,
        args.finger_width if args.finger_width is not None else gripper.finger_width,
    )
    rect = planner.GraspRectSpec(
        args.gw if args.gw is not None else rect.gw,
        args.gb if args.gb is not None else rect.gb,
        args.D if args.D is not None else rect.D,
    )
    depth = _load_depth(args.depth)

    result = planner.plan(lm, rect, gripper, cam, depth)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if result.best is not None:
        best_doc = result.best.to_dict(rect)
    else:
        best_doc = {"valid": False, "reason": "no valid pose", "n_candidates": len(result.candidates)}
    _write_json(out / "pose.json", best_doc)
    _write_json(out / "candidates.json", {"candidates": [p.to_dict(rect) for p in result.candidates]})
    _write_candidates_csv(out / "candidates.csv", result.candidates)
    if args.figure:
        from .render import render_overlay

        render_overlay(lm.labels, out / "overlay.png", best_doc if result.best else None, (rect.gw, rect.gb))
    _write_manifest(
        out / "manifest.json",
        "plan",
        args,
        {"labels": labels_path, "scores": scores_path, "camera": args.camera, "gripper": args.gripper, "depth": args.depth},
        started,
    )
    if result.best is None:
        log.info("no valid pose among %d candidates", len(result.candidates))
        return EXIT_NO_GRASP
    b = result.best
    log.info(
        "best pose: instance %d  center (%.2f, %.2f)  angle %.1f deg  width %.2f px  Q %.2f",
        b.instance, b.center[0], b.center[1], np.degrees(b.angle), b.width, b.quality,
    )
    return EXIT_OK


def _write_candidates_csv(path: Path, poses) -> None:
    fields = [
        "instance", "angle_index", "angle_rad", "valid", "reason", "quality", "oss", "cts", "ss",
        "center_u", "center_v", "width_px", "object_width_px", "free_left_px", "free_right_px",
    ]
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(fields)
        for p in poses:
            b, wd = p.breakdown, p.widths
            w.writerow([
                p.instance, p.angle_index, repr(p.angle), int(p.valid), p.reason, repr(p.quality),
                repr(b.oss) if b else "", repr(b.cts) if b else "", repr(b.ss) if b else "",
                repr(p.center[0]), repr(p.center[1]), repr(p.width),
                wd.object_width if wd else "", wd.fsl_width if wd else "", wd.fsr_width if wd else "",
            ])


def _load_eval_config(path: str | None, max_det: int | None) -> metrics.EvalConfig:
    cfg = metrics.EvalConfig()
    if path:
        doc = _read_json(path)
        cfg = metrics.EvalConfig(
            tuple(doc.get("iou_thresholds", cfg.iou_thresholds)),
            int(doc.get("max_detections", cfg.max_detections)),
        )
    if max_det is not None:
        cfg = replace(cfg, max_detections=max_det)
    return cfg


def cmd_eval(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise FileNotFoundError(f"not a directory: {d}")
    cfg = _load_eval_config(args.config, args.max_detections)
    gt_stems = maskio.list_stems(gt_dir)
    pred_stems = maskio.list_stems(pred_dir)

    gts = [scene_from_map(maskio.load_scene(gt_dir, s)) for s in gt_stems]
    if not pred_stems:
        # an empty prediction set means "detected nothing" on every image
        preds = [maskio.InstanceLabelMap(np.zeros_like(g.labelmap.labels)) for g in gts]
    else:
        missing = sorted(set(gt_stems) ^ set(pred_stems))
        if missing:
            print("unmatched scene stems: " + ", ".join(missing), file=sys.stderr)
            return EXIT_ERROR
        preds = [maskio.load_scene(pred_dir, s) for s in gt_stems]

    report = metrics.evaluate(preds, gts, cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report.to_dict())
    with open(out / "per_threshold.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["iou", "ap", "recall"])
        for t in report.per_threshold:
            w.writerow([repr(t.iou), repr(t.ap), repr(t.recall)])
    if args.figure:
        from .render import plot_pr_summary

        plot_pr_summary(report, out / "pr_curves.png")
    _write_manifest(out / "manifest.json", "eval", args, {"pred": pred_dir, "gt": gt_dir, "config": args.config}, started)
    if not args.quiet:
        print(f"AP={report.ap:.4f} AR={report.ar:.4f} images={len(gts)}")
    return EXIT_OK


def scene_from_map(lm: maskio.InstanceLabelMap) -> maskio.GroundTruthScene:
    return maskio.GroundTruthScene(lm.with_scores({i: 1.0 for i in lm.ids}), tuple(maskio.instance_records(lm)))


def cmd_gen(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    cfg = scenegen.SceneConfig.load(args.config) if args.config else scenegen.SceneConfig()
    seed = args.seed if args.seed is not None else cfg.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pred_dir = out / "pred" if args.perturb is not None else None
    if pred_dir:
        pred_dir.mkdir(exist_ok=True)

    scenes = []
    for k, (s, scene) in enumerate(scenegen.generate_many(cfg, args.count, seed)):
        stem = f"scene_{k:04d}"
        maskio.save_scene(scene.labelmap, out, stem)
        if pred_dir:
            maskio.save_scene(scenegen.perturb_scores(scene, args.perturb, s), pred_dir, stem)
        scenes.append(
            {
                "stem": stem,
                "seed": s,
                "instances": [{"id": r.id, "centroid_px": list(r.centroid), "area_px": r.area} for r in scene.instances],
            }
        )
    _write_json(out / "meta.json", {"config": cfg.to_dict(), "seed": seed, "count": args.count, "perturb": args.perturb, "scenes": scenes})
    _write_manifest(out / "manifest.json", "gen", args, {"config": args.config}, started)
    if not args.quiet:
        print(f"wrote {args.count} scenes to {out}")
    return EXIT_OK


def cmd_render(args: argparse.Namespace) -> int:
    from .render import render_overlay

    started = time.perf_counter()
    labels = maskio.read_labels_png(args.labels)
    pose = None
    if args.pose:
        pose = _read_json(args.pose)
        if not isinstance(pose, dict) or "valid" not in pose:
            raise ValueError(f"{args.pose}: not a pose document")
        if pose.get("valid"):
            for key in ("center_px", "angle_rad"):
                if key not in pose:
                    raise ValueError(f"{args.pose}: missing {key}")
        else:
            pose = None
    background = None
    if args.image:
        from PIL import Image

        with Image.open(args.image) as im:
            background = np.array(im.convert("RGB"))
    rect = (args.gw, args.gb) if args.gw and args.gb else None
    out = Path(args.out)
    if out.suffix.lower() != ".png":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "overlay.png"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    title = f"Q={pose['quality']:.1f}" if pose and "quality" in pose else None
    render_overlay(labels, out, pose, rect, background, title)
    _write_manifest(out.with_name(out.stem + ".manifest.json"), "render", args, {"labels": args.labels, "pose": args.pose}, started)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for "no valid grasp"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master random seed")
    common.add_argument("--out", required=True, help="output directory (render: image path or directory)")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(prog="binpick", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("plan", parents=[common], help="plan the best grasp for a segmented scene")
    p.add_argument("--labels", required=True, help="<stem>.labels.png")
    p.add_argument("--scores", help="<stem>.scores.json (default: next to labels)")
    p.add_argument("--camera", help="camera config JSON")
    p.add_argument("--gripper", help="gripper/rectangle config JSON")
    p.add_argument("--depth", help="depth override: meters, .npy map (m) or 16-bit PNG (mm)")
    p.add_argument("--gw", type=int, help="override rectangle width (px)")
    p.add_argument("--gb", type=int, help="override rectangle breadth (px)")
    p.add_argument("--D", type=int, help="override number of sampled angles")
    p.add_argument("--max-opening", type=float, help="override gripper max opening (m)")
    p.add_argument("--finger-width", type=float, help="override finger width (m)")
    p.add_argument("--figure", action="store_true", help="also write overlay.png")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("eval", parents=[common], help="AP/AR of predicted label maps against ground truth")
    p.add_argument("--pred", required=True, help="directory of predicted scenes")
    p.add_argument("--gt", required=True, help="directory of ground-truth scenes")
    p.add_argument("--config", help="eval config JSON (iou_thresholds, max_detections)")
    p.add_argument("--max-detections", type=int)
    p.add_argument("--no-figure", dest="figure", action="store_false", help="skip pr_curves.png")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen", parents=[common], help="generate synthetic bin scenes")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--config", help="scene config JSON")
    p.add_argument("--perturb", type=float, help="also write noisy predictions to OUT/pred with this noise level")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("render", parents=[common], help="draw instance overlay and grasp")
    p.add_argument("--labels", required=True)
    p.add_argument("--pose", help="pose document from plan")
    p.add_argument("--image", help="RGB image to draw over")
    p.add_argument("--gw", type=int)
    p.add_argument("--gb", type=int)
    p.set_defaults(func=cmd_render)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        return args.func(args)
    except (LabelMapError, CameraError, planner.PlanningError, ValueError, OSError) as exc:
        print(f"binpick {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
