"""Command-line interface.

Subcommands
    depth   left right        -> disparity.pfm, depth.pfm, disparity.png
    range   depth.pfm mask    -> range estimate JSON on standard output
    synth                     -> ground-truth scene directories + manifest
    eval    scenes_dir        -> evaluation report JSON + histogram CSV

Global flags ``--config <json>`` and ``--seed <int>`` come before the
subcommand.  Exit codes: 0 success, 2 input or parse error, 3 empty
mask, 4 no valid depth samples, 5 every scene failed during eval.

All file outputs are written atomically (temp file + rename), so a
failing command never leaves partial files behind.  Report JSON is
deterministic for a fixed config, seed, and input set; wall-clock
timings go to a separate ``timings.json`` sidecar so the report itself
can be compared byte for byte across runs.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import fileio, synth
from .config import RunConfig, load_config
from .core import depth_map_from_disparity
from .errors import BranchRangeError, EmptyMask, NoValidDepths, ParseError
from .maskio import SegMask, load_mask
from .ranger import estimate_distance
from .refine import wls_refine
from .stereo import sgbm

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_EMPTY_MASK = 3
EXIT_NO_VALID_DEPTHS = 4
EXIT_ALL_SCENES_FAILED = 5


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode("utf-8")


def disparity_visualization(disp: np.ndarray) -> np.ndarray:
    """8-bit rendering: valid min..max maps to 0..255, invalid to 0.

    A constant valid map (no range to stretch) renders as 0.
    """
    vis = np.zeros(disp.shape, dtype=np.uint8)
    valid = disp >= 0
    if valid.any():
        lo = float(disp[valid].min())
        hi = float(disp[valid].max())
        if hi > lo:
            scaled = (disp[valid] - lo) * (255.0 / (hi - lo))
            vis[valid] = np.clip(np.rint(scaled), 0, 255).astype(np.uint8)
    return vis


def compute_depth_maps(config: RunConfig, left: np.ndarray, right: np.ndarray):
    """sgbm -> wls_refine -> depth conversion, with per-stage timings.

    Returns (disparity, depth, timings_ms).
    """
    timings = {}
    t0 = time.perf_counter()
    disp = sgbm(left, right, config.match, subpixel=config.subpixel)
    t1 = time.perf_counter()
    refined = wls_refine(disp, left, config.wls)
    t2 = time.perf_counter()
    depth = depth_map_from_disparity(refined, config.rig)
    t3 = time.perf_counter()
    timings["match_ms"] = (t1 - t0) * 1e3
    timings["refine_ms"] = (t2 - t1) * 1e3
    timings["depth_ms"] = (t3 - t2) * 1e3
    return refined, depth, timings


def cmd_depth(config: RunConfig, left_path: str, right_path: str, out_dir: str) -> int:
    left = fileio.read_gray(left_path)
    right = fileio.read_gray(right_path)
    if left.shape != right.shape:
        raise ParseError(
            f"image sizes differ: {left_path} is {left.shape}, "
            f"{right_path} is {right.shape}"
        )
    if left.shape != config.rig.shape:
        raise ParseError(
            f"images are {left.shape} but the configured rig is "
            f"{config.rig.shape}; set the rig section of the config"
        )
    disp, depth, _ = compute_depth_maps(config, left, right)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_pfm(out / "disparity.pfm", disp)
    fileio.write_pfm(out / "depth.pfm", depth)
    fileio.write_gray(out / "disparity.png", disparity_visualization(disp))
    return EXIT_OK


def cmd_range(config: RunConfig, depth_path: str, mask_path: str) -> int:
    depth = fileio.read_pfm(depth_path)
    mask = load_mask(mask_path)
    estimate = estimate_distance(mask, depth, config.ranger)
    sys.stdout.write(_json_bytes(estimate.to_dict()).decode("utf-8"))
    return EXIT_OK


def _scene_spec_from_dict(data: dict, config: RunConfig) -> synth.SceneSpec:
    """Strictly parse a custom scene description file."""
    if not isinstance(data, dict):
        raise ParseError("scene file root must be an object")
    allowed = {"background_depth_m", "noise_sigma", "texture_seed", "cylinders"}
    unknown = set(data) - allowed
    if unknown:
        raise ParseError(f"unknown scene file keys: {sorted(unknown)}")
    cylinders = []
    for i, raw in enumerate(data.get("cylinders", [])):
        if not isinstance(raw, dict):
            raise ParseError(f"cylinder {i} must be an object")
        cyl_allowed = {"center_px", "radius_px", "depth_m", "orientation", "angle_deg"}
        cyl_unknown = set(raw) - cyl_allowed
        if cyl_unknown:
            raise ParseError(f"unknown keys in cylinder {i}: {sorted(cyl_unknown)}")
        try:
            center = raw["center_px"]
            cylinders.append(
                synth.Cylinder(
                    center_px=(float(center[0]), float(center[1])),
                    radius_px=float(raw["radius_px"]),
                    depth_m=float(raw["depth_m"]),
                    orientation=raw.get("orientation", synth.ORIENT_HORIZONTAL),
                    angle_deg=float(raw.get("angle_deg", 0.0)),
                )
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise ParseError(f"invalid cylinder {i}: {exc}") from exc
    try:
        return synth.SceneSpec(
            rig=config.rig,
            background_depth_m=float(
                data.get("background_depth_m", config.synth.background_depth_m)
            ),
            cylinders=cylinders,
            texture_seed=int(data.get("texture_seed", config.synth.seed)),
            noise_sigma=float(data.get("noise_sigma", config.synth.noise_sigma)),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid scene file: {exc}") from exc


def _scene_metadata(scene_id: str, spec: synth.SceneSpec) -> dict:
    target = spec.cylinders[0].depth_m if len(spec.cylinders) == 1 else None
    return {
        "scene_id": scene_id,
        "target_depth_m": target,
        "background_depth_m": spec.background_depth_m,
        "noise_sigma": spec.noise_sigma,
        "texture_seed": spec.texture_seed,
        "rig": dataclasses.asdict(spec.rig),
        "cylinders": [
            {
                "center_px": list(cyl.center_px),
                "radius_px": cyl.radius_px,
                "depth_m": cyl.depth_m,
                "orientation": cyl.orientation,
                "angle_deg": cyl.angle_deg,
            }
            for cyl in spec.cylinders
        ],
    }


def write_scene(scene_dir: Path, scene_id: str, bundle: synth.SceneBundle) -> list:
    """Persist one bundle; returns the written file paths."""
    scene_dir.mkdir(parents=True, exist_ok=True)
    files = {
        "left.png": lambda p: fileio.write_gray(p, bundle.left),
        "right.png": lambda p: fileio.write_gray(p, bundle.right),
        "gt_disparity.pfm": lambda p: fileio.write_pfm(p, bundle.gt_disparity),
        "gt_depth.pfm": lambda p: fileio.write_pfm(p, bundle.gt_depth),
        "mask.png": lambda p: fileio.write_gray(
            p, bundle.mask.bitmap.astype(np.uint8) * 255
        ),
        "scene.json": lambda p: fileio.write_bytes_atomic(
            p, _json_bytes(_scene_metadata(scene_id, bundle.spec))
        ),
    }
    written = []
    for name, writer in files.items():
        path = scene_dir / name
        writer(path)
        written.append(path)
    return written


def cmd_synth(
    config: RunConfig, out_dir: str, spec_path: str | None = None
) -> int:
    out = Path(out_dir)
    if spec_path is not None:
        try:
            with open(spec_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except OSError as exc:
            raise ParseError(f"cannot read scene file {spec_path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"scene file {spec_path}: {exc}") from exc
        specs = [_scene_spec_from_dict(data, config)]
        bundles = [synth.generate_scene(s, d_max=config.match.d_max) for s in specs]
    else:
        bundles = synth.benchmark_scenes(
            config.rig,
            seed=config.synth.seed,
            background_depth_m=config.synth.background_depth_m,
            noise_sigma=config.synth.noise_sigma,
        )
    out.mkdir(parents=True, exist_ok=True)
    all_files = []
    for i, bundle in enumerate(bundles):
        scene_id = f"scene_{i:03d}"
        all_files += write_scene(out / scene_id, scene_id, bundle)
    manifest = {
        "scene_count": len(bundles),
        "files": {
            str(p.relative_to(out)): fileio.sha256_of_file(p) for p in all_files
        },
    }
    fileio.write_bytes_atomic(out / "manifest.json", _json_bytes(manifest))
    return EXIT_OK


def _depth_histogram(values, bin_width: float, depth_range_m: float) -> dict:
    """Dense histogram of depth values on [0, depth_range_m].

    Bin i covers [i*w, (i+1)*w); values beyond the range land in the last
    bin so that counts always sum to len(values).
    """
    n_bins = max(1, int(np.ceil(depth_range_m / bin_width)))
    counts = [0] * n_bins
    for v in values:
        idx = int(np.floor(v / bin_width))
        idx = min(max(idx, 0), n_bins - 1)
        counts[idx] += 1
    return {
        "bin_width_m": bin_width,
        "bins": [
            {"lo": i * bin_width, "hi": (i + 1) * bin_width, "count": counts[i]}
            for i in range(n_bins)
        ],
    }


def _load_scene_dir(scene_dir: Path) -> dict:
    try:
        with open(scene_dir / "scene.json", "r", encoding="utf-8") as f:
            meta = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{scene_dir}: cannot read scene.json: {exc}") from exc
    if not isinstance(meta, dict) or "rig" not in meta:
        raise ParseError(f"{scene_dir}: scene.json lacks a rig section")
    return meta


def evaluate_scene(
    config: RunConfig, scene_dir: Path, use_gt_depth: bool
) -> tuple[dict, dict]:
    """Run the pipeline on one persisted scene.

    Returns (scene_report, stage_timings_ms).
    """
    from .config import rig_from_dict

    meta = _load_scene_dir(scene_dir)
    rig = rig_from_dict(meta["rig"], f"{scene_dir}/rig")
    true_depth = meta.get("target_depth_m")
    if true_depth is None:
        raise ParseError(f"{scene_dir}: scene has no single target depth")
    scene_cfg = dataclasses.replace(config, rig=rig)

    timings = {}
    if use_gt_depth:
        depth = fileio.read_pfm(scene_dir / "gt_depth.pfm")
        timings["match_ms"] = 0.0
        timings["refine_ms"] = 0.0
        timings["depth_ms"] = 0.0
    else:
        left = fileio.read_gray(scene_dir / "left.png")
        right = fileio.read_gray(scene_dir / "right.png")
        _, depth, timings = compute_depth_maps(scene_cfg, left, right)
    mask = SegMask(bitmap=fileio.read_gray(scene_dir / "mask.png") > 0)

    t0 = time.perf_counter()
    estimate = estimate_distance(mask, depth, config.ranger)
    timings["range_ms"] = (time.perf_counter() - t0) * 1e3

    abs_error = abs(estimate.distance_m - true_depth)
    background = float(meta.get("background_depth_m") or 0.0)
    depth_range = background if background > 0 else max(estimate.retained_values)
    report = {
        "scene_id": meta["scene_id"],
        "status": "ok",
        "true_depth_m": true_depth,
        "estimated_m": estimate.distance_m,
        "abs_error_m": abs_error,
        "rel_error": abs_error / true_depth,
        "n_retained": estimate.n_retained,
        "n_rejected": len(estimate.rejected_values),
        "retained_values": estimate.retained_values,
        "histogram": _depth_histogram(
            estimate.retained_values, config.eval.bin_width_m, depth_range
        ),
    }
    return report, timings


def cmd_eval(
    config: RunConfig, scenes_dir: str, out_path: str, use_gt_depth: bool = False
) -> int:
    scenes_root = Path(scenes_dir)
    if not scenes_root.is_dir():
        raise ParseError(f"scene directory {scenes_dir} does not exist")
    scene_dirs = sorted(
        p for p in scenes_root.iterdir() if p.is_dir() and (p / "scene.json").exists()
    )
    if not scene_dirs:
        raise ParseError(f"no scenes found under {scenes_dir}")

    scene_reports = []
    all_timings = {}
    all_retained = []
    max_background = 0.0
    for scene_dir in scene_dirs:
        try:
            report, timings = evaluate_scene(config, scene_dir, use_gt_depth)
        except (BranchRangeError, OSError, ValueError) as exc:
            scene_reports.append(
                {
                    "scene_id": scene_dir.name,
                    "status": "failed",
                    "error": f"{type(exc).__name__}: {exc}",
                }
            )
            continue
        scene_reports.append(report)
        all_timings[report["scene_id"]] = timings
        all_retained += report["retained_values"]
        max_background = max(max_background, report["histogram"]["bins"][-1]["hi"])

    ok = [r for r in scene_reports if r["status"] == "ok"]
    aggregate = {
        "n_scenes": len(scene_reports),
        "n_failed": len(scene_reports) - len(ok),
        "mean_rel_error": (
            float(np.mean([r["rel_error"] for r in ok])) if ok else None
        ),
        "max_rel_error": (
            float(np.max([r["rel_error"] for r in ok])) if ok else None
        ),
    }
    depth_range = max_background if max_background > 0 else 1.0
    histogram = _depth_histogram(all_retained, config.eval.bin_width_m, depth_range)
    report = {
        "scenes": scene_reports,
        "aggregate": aggregate,
        "histogram": histogram,
        "use_gt_depth": use_gt_depth,
    }

    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fileio.write_bytes_atomic(out, _json_bytes(report))
    csv_lines = ["lo,hi,count"]
    for b in histogram["bins"]:
        csv_lines.append(f"{b['lo']!r},{b['hi']!r},{b['count']}")
    fileio.write_bytes_atomic(
        out.with_suffix(".csv"), ("\n".join(csv_lines) + "\n").encode("utf-8")
    )
    fileio.write_bytes_atomic(
        out.parent / "timings.json", _json_bytes({"scenes": all_timings})
    )
    return EXIT_ALL_SCENES_FAILED if not ok else EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="branchrange",
        description="Stereo depth and branch ranging toolkit",
    )
    parser.add_argument("--config", help="JSON config file (defaults used if absent)")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p_depth = sub.add_parser("depth", help="compute disparity and depth maps")
    p_depth.add_argument("left", help="left image (grayscale PNG)")
    p_depth.add_argument("right", help="right image (grayscale PNG)")
    p_depth.add_argument("--out-dir", default=None, help="output directory")

    p_range = sub.add_parser("range", help="estimate distance to a masked branch")
    p_range.add_argument("depth", help="depth map (PFM)")
    p_range.add_argument("mask", help="segmentation mask (PNG or polygon JSON)")

    p_synth = sub.add_parser("synth", help="generate ground-truth scenes")
    p_synth.add_argument("--out-dir", default=None, help="output directory")
    p_synth.add_argument("--spec", default=None, help="custom scene JSON file")

    p_eval = sub.add_parser("eval", help="batch-evaluate the pipeline on scenes")
    p_eval.add_argument("scenes", help="directory produced by the synth command")
    p_eval.add_argument("--out", default=None, help="report JSON path")
    p_eval.add_argument(
        "--use-gt-depth",
        action="store_true",
        help="range against stored ground-truth depth instead of matching",
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            config.synth.seed = args.seed
        out_dir = Path(config.io.out_dir)
        if args.command == "depth":
            return cmd_depth(
                config, args.left, args.right, args.out_dir or str(out_dir)
            )
        if args.command == "range":
            return cmd_range(config, args.depth, args.mask)
        if args.command == "synth":
            return cmd_synth(config, args.out_dir or str(out_dir), args.spec)
        if args.command == "eval":
            out = args.out or str(out_dir / "report.json")
            return cmd_eval(config, args.scenes, out, args.use_gt_depth)
        raise AssertionError(f"unhandled command {args.command}")
    except EmptyMask as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_MASK
    except NoValidDepths as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_VALID_DEPTHS
    except (BranchRangeError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
