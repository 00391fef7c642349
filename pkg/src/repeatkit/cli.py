"""Command-line front end.

Subcommands: detect (single image -> keypoint CSV), eval-pair (two frames ->
JSON), eval-sequence (manifest -> report files), synth (scene config -> on-disk
dataset), adapt-apollo (ApolloScape tree -> manifest). Exit codes: 0 success,
1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .dataset_io import apollo_adapter, load_frame, load_image, load_manifest, write_manifest
from .errors import ConfigError, RepeatkitError
from .geometry import CameraIntrinsics, Homography
from .matching import evaluate_pair
from .detectors import detect
from .protocol import ProtocolConfig, emit_reports, run_sequence
from .synthetic import write_scene_dataset

USAGE_EXIT = 1
DATA_EXIT = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the CLI contract wants 1.
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="repeatkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="detect keypoints on one image")
    p.add_argument("--image", required=True)
    p.add_argument("--detector", required=True, help="fast | harris | dog")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--max-points", type=int, default=None)
    p.add_argument("--out", help="keypoint CSV path (default stdout)")

    p = sub.add_parser("eval-pair", help="evaluate one frame pair")
    p.add_argument("--manifest", required=True)
    p.add_argument("--frame1", required=True, help="frame id of the first frame")
    p.add_argument("--frame2", required=True, help="frame id of the second frame")
    p.add_argument("--detector", default="fast")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--mode", choices=["depth", "homography"], default=None)
    p.add_argument("--homography", help="file with 9 numbers for homography mode")
    p.add_argument("--out", help="JSON output path (default stdout)")

    p = sub.add_parser("eval-sequence", help="run the sequence protocol")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("--window", type=int, default=None)
    p.add_argument("--bucket", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--mode", choices=["depth", "homography"], default=None)
    p.add_argument("--detector", action="append", default=None, help="repeatable")

    p = sub.add_parser("synth", help="render a synthetic dataset to disk")
    p.add_argument("--spec", required=True, help="scene config file")
    p.add_argument("--out", required=True, help="dataset output directory")

    p = sub.add_parser("adapt-apollo", help="build a manifest from an ApolloScape tree")
    p.add_argument("--root", required=True)
    p.add_argument("--out", required=True, help="manifest output path")
    p.add_argument("--depth-scale", type=float, required=True)
    p.add_argument("--fx", type=float, required=True)
    p.add_argument("--fy", type=float, required=True)
    p.add_argument("--cx", type=float, required=True)
    p.add_argument("--cy", type=float, required=True)
    p.add_argument(
        "--convention",
        choices=["camera-to-world", "world-to-camera"],
        default="camera-to-world",
    )
    p.add_argument("--camera", default=None, help="restrict to one camera folder")
    return parser


def _load_cfg(path: str | None) -> dict[str, str]:
    return cfgmod.load_config(path) if path else {}


def _keypoint_csv(kps) -> str:
    lines = ["x,y,response,scale"]
    for kp in kps:
        scale = format(kp.scale, ".6g") if kp.scale is not None else ""
        lines.append(f"{format(kp.x, '.6g')},{format(kp.y, '.6g')},{format(kp.response, '.6g')},{scale}")
    return "\n".join(lines) + "\n"


def _write_or_print(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _cmd_detect(args) -> int:
    cfg = _load_cfg(args.config)
    if args.max_points is not None:
        cfg["detector.max_points"] = str(args.max_points)
    det = cfgmod.detector_from_config(args.detector, cfg)
    img = load_image(args.image)
    kps = detect(img, det)
    _write_or_print(_keypoint_csv(kps), args.out)
    return 0


def _read_homography(path) -> Homography:
    try:
        vals = [float(t) for t in Path(path).read_text().split()]
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read homography file {path}: {e}")
    if len(vals) != 9:
        raise ConfigError(f"homography file must hold 9 numbers, got {len(vals)}")
    return Homography(np.array(vals).reshape(3, 3))


def _cmd_eval_pair(args) -> int:
    cfg = _load_cfg(args.config)
    if args.theta is not None:
        cfg["eval.theta"] = str(args.theta)
    if args.mode is not None:
        cfg["eval.mode"] = args.mode
    params = cfgmod.eval_params_from_config(cfg)
    det = cfgmod.detector_from_config(args.detector, cfg)
    manifest = load_manifest(args.manifest)
    b1 = load_frame(manifest, manifest.index_of(args.frame1))
    b2 = load_frame(manifest, manifest.index_of(args.frame2))
    hom = _read_homography(args.homography) if args.homography else None
    result = evaluate_pair(b1, b2, det, params, homography=hom)
    payload = {
        "frame1": args.frame1,
        "frame2": args.frame2,
        "detector": args.detector,
        "theta": params.theta,
        "mode": params.correspondence_mode,
        "n_d1": result.n_d1,
        "n_d2": result.n_d2,
        "n_matches": len(result.matches),
        "repeatability": result.repeatability,
        "camera_distance": result.camera_distance,
        "matches": [[i, j, d] for i, j, d in result.matches],
    }
    _write_or_print(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_eval_sequence(args) -> int:
    cfg = _load_cfg(args.config)
    for key, value in (
        ("protocol.base_stride", args.stride),
        ("protocol.window", args.window),
        ("protocol.distance_bucket", args.bucket),
        ("protocol.workers", args.workers),
        ("eval.theta", args.theta),
        ("eval.mode", args.mode),
    ):
        if value is not None:
            cfg[key] = str(value)
    if args.detector:
        cfg["detectors"] = ",".join(args.detector)
    try:
        protocol = ProtocolConfig(
            detectors=cfgmod.detectors_from_config(cfg),
            eval_params=cfgmod.eval_params_from_config(cfg),
            base_stride=cfgmod.get_int(cfg, "protocol.base_stride", 20),
            window=cfgmod.get_int(cfg, "protocol.window", 19),
            distance_bucket=cfgmod.get_float(cfg, "protocol.distance_bucket", 1.0),
            workers=cfgmod.get_int(cfg, "protocol.workers", 1),
        )
    except ValueError as e:
        raise ConfigError(str(e))
    manifest = load_manifest(args.manifest)
    report = run_sequence(manifest, protocol, source=args.manifest)
    emit_reports(report, args.out)
    for name, mean_r, count in report.summary_rows():
        shown = format(mean_r, ".6g") if mean_r is not None else "undefined"
        print(f"{name}: mean repeatability {shown} over {count} pairs")
    return 0


def _cmd_synth(args) -> int:
    spec = cfgmod.scene_from_config(cfgmod.load_config(args.spec))
    manifest_path = write_scene_dataset(spec, args.out)
    print(f"wrote {len(spec.trajectory)} frames, manifest at {manifest_path}")
    return 0


def _cmd_adapt_apollo(args) -> int:
    intrinsics = CameraIntrinsics(fx=args.fx, fy=args.fy, cx=args.cx, cy=args.cy)
    manifest = apollo_adapter(
        args.root,
        intrinsics,
        depth_scale=args.depth_scale,
        pose_convention=args.convention.replace("-", "_"),
        camera=args.camera,
    )
    write_manifest(manifest, args.out)
    print(f"wrote manifest with {len(manifest)} frames to {args.out}")
    return 0


_COMMANDS = {
    "detect": _cmd_detect,
    "eval-pair": _cmd_eval_pair,
    "eval-sequence": _cmd_eval_sequence,
    "synth": _cmd_synth,
    "adapt-apollo": _cmd_adapt_apollo,
}


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return USAGE_EXIT
    try:
        return _COMMANDS[args.command](args)
    except (RepeatkitError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return DATA_EXIT


def console_main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    console_main()
