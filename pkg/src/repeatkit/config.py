"""Plain `key = value` run configuration with dotted keys.

Example:

    detectors = fast, harris
    eval.theta = 2.5
    protocol.base_stride = 20
    fast.t = 0.08

CLI flags override file values; resolvers below turn the flat mapping into
typed configuration objects and raise ConfigError on bad values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .detectors import KINDS, DetectorConfig
from .errors import ConfigError
from .geometry import CameraIntrinsics
from .matching import EvalParams
from .synthetic import SceneSpec, make_trajectory


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        out[key] = value
    return out


def load_config(path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    return parse_config_text(path.read_text(), str(path))


def _get(cfg: Mapping[str, str], key: str, default, convert):
    if key not in cfg:
        return default
    raw = cfg[key]
    try:
        return convert(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {raw!r}")


def get_float(cfg, key, default=None) -> float:
    return _get(cfg, key, default, float)


def get_int(cfg, key, default=None) -> int:
    return _get(cfg, key, default, int)


def get_str(cfg, key, default=None) -> str:
    return _get(cfg, key, default, str)


def detector_from_config(kind: str, cfg: Mapping[str, str]) -> DetectorConfig:
    """One detector's parameters from the flat mapping."""
    if kind not in KINDS:
        raise ConfigError(f"unknown detector kind {kind!r}, expected one of {KINDS}")
    try:
        return DetectorConfig(
            kind=kind,
            max_points=get_int(cfg, "detector.max_points", 10000),
            fast_t=get_float(cfg, "fast.t", 0.08),
            fast_arc=get_int(cfg, "fast.arc", 9),
            harris_sigma_d=get_float(cfg, "harris.sigma_d", 1.0),
            harris_sigma_i=get_float(cfg, "harris.sigma_i", 2.0),
            harris_k=get_float(cfg, "harris.k", 0.04),
            harris_thresh=get_float(cfg, "harris.thresh", 1e-6),
            dog_octaves=get_int(cfg, "dog.octaves", 3),
            dog_scales_per_octave=get_int(cfg, "dog.scales_per_octave", 3),
            dog_contrast_thresh=get_float(cfg, "dog.contrast_thresh", 0.03),
            dog_edge_ratio=get_float(cfg, "dog.edge_ratio", 10.0),
        )
    except ValueError as e:
        raise ConfigError(str(e))


def detectors_from_config(cfg: Mapping[str, str]) -> tuple[DetectorConfig, ...]:
    kinds = [k.strip() for k in get_str(cfg, "detectors", "fast,harris,dog").split(",") if k.strip()]
    if not kinds:
        raise ConfigError("no detectors configured")
    return tuple(detector_from_config(k, cfg) for k in kinds)


def eval_params_from_config(cfg: Mapping[str, str]) -> EvalParams:
    try:
        return EvalParams(
            theta=get_float(cfg, "eval.theta", 2.5),
            occlusion_tolerance=get_float(cfg, "eval.occlusion_tolerance", 0.05),
            correspondence_mode=get_str(cfg, "eval.mode", "depth"),
        )
    except ValueError as e:
        raise ConfigError(str(e))


def scene_from_config(cfg: Mapping[str, str]) -> SceneSpec:
    """A synthetic scene plus trajectory from `scene.*` and `traj.*` keys."""
    kind = get_str(cfg, "scene.kind", "corridor")
    width = get_int(cfg, "scene.width", 128)
    height = get_int(cfg, "scene.height", 96)
    intrinsics = CameraIntrinsics(
        fx=get_float(cfg, "scene.fx", 0.8 * width),
        fy=get_float(cfg, "scene.fy", 0.8 * width),
        cx=get_float(cfg, "scene.cx", (width - 1) / 2.0),
        cy=get_float(cfg, "scene.cy", (height - 1) / 2.0),
    )
    trajectory = make_trajectory(
        kind=get_str(cfg, "traj.kind", "forward"),
        n_frames=get_int(cfg, "traj.frames", 10),
        spacing=get_float(cfg, "traj.spacing", 1.0),
        yaw_step_deg=get_float(cfg, "traj.yaw_step_deg", 0.0),
        dx=get_float(cfg, "traj.dx", 0.0),
        dz=get_float(cfg, "traj.dz", 0.0),
    )
    try:
        return SceneSpec(
            kind=kind,
            trajectory=trajectory,
            intrinsics=intrinsics,
            width=width,
            height=height,
            texture=get_str(cfg, "scene.texture", "value_noise"),
            noise_seed=get_int(cfg, "scene.noise_seed", 0),
            noise_octaves=get_int(cfg, "scene.noise_octaves", 4),
            noise_scale=get_float(cfg, "scene.noise_scale", 1.0),
            checker_cell=get_float(cfg, "scene.checker_cell", 0.5),
            plane_depth=get_float(cfg, "scene.plane_depth", 5.0),
            corridor_halfwidth=get_float(cfg, "scene.corridor_halfwidth", 2.0),
            camera_height=get_float(cfg, "scene.camera_height", 1.2),
            wall_height=get_float(cfg, "scene.wall_height", 2.5),
            back_depth=get_float(cfg, "scene.back_depth", 10.0),
        )
    except ValueError as e:
        raise ConfigError(str(e))
