"""Synthetic scenes with exact depth, pose, labels, and homography ground truth.

Scenes are analytic (an infinite textured plane, a corridor of floor plus two
walls, or axis-aligned boxes in front of a back wall) and rendered by per-pixel
ray casting, so depth maps are exact and visibility can be re-derived by
casting rays. The camera looks along +z; image y grows downward and aligns
with world y, so the corridor floor sits at positive y below the camera.

Textures are deterministic functions of surface coordinates: a checkerboard
(cell size in surface units) or multi-octave value noise from a seeded integer
lattice hash with bilinear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import FrameBundle, LabelMap
from .geometry import (
    CameraIntrinsics,
    DepthMap,
    Homography,
    Pose,
    plane_induced_homography,
    relative_pose,
)
from .image import ImageGray

SKY, FLOOR, WALL, BOX = 0, 1, 2, 3
CLASS_NAMES = {SKY: "sky", FLOOR: "floor", WALL: "wall", BOX: "box"}

SKY_INTENSITY = 0.75
_EPS = 1e-9


def _splitmix(h: np.ndarray) -> np.ndarray:
    h = h.copy()
    h ^= h >> np.uint64(30)
    h *= np.uint64(0xBF58476D1CE4E5B9)
    h ^= h >> np.uint64(27)
    h *= np.uint64(0x94D049BB133111EB)
    h ^= h >> np.uint64(31)
    return h


def _lattice_hash(ix: np.ndarray, iy: np.ndarray, salt: int) -> np.ndarray:
    """Deterministic float in [0, 1) per integer lattice point."""
    x = np.ascontiguousarray(ix, dtype=np.int64).view(np.uint64)
    y = np.ascontiguousarray(iy, dtype=np.int64).view(np.uint64)
    h = x * np.uint64(0x9E3779B97F4A7C15)
    h ^= y * np.uint64(0xC2B2AE3D27D4EB4F)
    h ^= np.uint64(salt & 0xFFFFFFFFFFFFFFFF)
    h = _splitmix(h)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def value_noise(u: np.ndarray, v: np.ndarray, seed: int, octaves: int, scale: float = 1.0) -> np.ndarray:
    """Multi-octave value noise in [0, 1], smooth enough for blob detectors."""
    if octaves < 1:
        raise ValueError(f"octaves must be >= 1, got {octaves}")
    u = np.asarray(u, dtype=np.float64) / scale
    v = np.asarray(v, dtype=np.float64) / scale
    acc = np.zeros_like(u)
    total = 0.0
    for o in range(octaves):
        freq = float(2**o)
        amp = 0.5**o
        uu = u * freq
        vv = v * freq
        iu = np.floor(uu)
        iv = np.floor(vv)
        fu = uu - iu
        fv = vv - iv
        # Perlin fade keeps first and second derivatives continuous.
        fu = fu * fu * fu * (fu * (fu * 6.0 - 15.0) + 10.0)
        fv = fv * fv * fv * (fv * (fv * 6.0 - 15.0) + 10.0)
        iu = iu.astype(np.int64)
        iv = iv.astype(np.int64)
        salt = (seed * 0x100 + o) or 1
        c00 = _lattice_hash(iu, iv, salt)
        c10 = _lattice_hash(iu + 1, iv, salt)
        c01 = _lattice_hash(iu, iv + 1, salt)
        c11 = _lattice_hash(iu + 1, iv + 1, salt)
        top = c00 + (c10 - c00) * fu
        bot = c01 + (c11 - c01) * fu
        acc += amp * (top + (bot - top) * fv)
        total += amp
    return acc / total


def checkerboard(u: np.ndarray, v: np.ndarray, cell: float) -> np.ndarray:
    """Two-tone checker pattern over surface coordinates."""
    if cell <= 0:
        raise ValueError(f"cell size must be positive, got {cell}")
    parity = (np.floor(np.asarray(u) / cell) + np.floor(np.asarray(v) / cell)) % 2
    return np.where(parity > 0.5, 0.9, 0.1)


@dataclass(frozen=True)
class _PlaneSurface:
    """Axis-aligned plane {X[axis] = value}, optionally bounded on other axes."""

    axis: int
    value: float
    label: int
    u_axis: int
    v_axis: int
    bound_axis: int | None = None
    bound_lo: float = -np.inf
    bound_hi: float = np.inf

    def intersect(self, origin: np.ndarray, dirs: np.ndarray):
        shape = dirs.shape[1:]
        d = dirs[self.axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (self.value - origin[self.axis]) / d
        hit = np.isfinite(s) & (s > _EPS)
        s_safe = np.where(hit, s, 0.0)
        point = origin.reshape((3,) + (1,) * len(shape)) + s_safe[None] * dirs
        if self.bound_axis is not None:
            b = point[self.bound_axis]
            hit &= (b >= self.bound_lo) & (b <= self.bound_hi)
        s = np.where(hit, s, np.inf)
        return s, point[self.u_axis], point[self.v_axis]


@dataclass(frozen=True)
class _BoxSurface:
    """Axis-aligned box; texture coordinates come from the entry face."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    label: int = BOX

    def intersect(self, origin: np.ndarray, dirs: np.ndarray):
        lo = np.asarray(self.lo, dtype=np.float64)
        hi = np.asarray(self.hi, dtype=np.float64)
        shape = dirs.shape[1:]
        t_near = np.full((3,) + shape, -np.inf)
        t_far = np.full((3,) + shape, np.inf)
        for ax in range(3):
            d = dirs[ax]
            o = origin[ax]
            with np.errstate(divide="ignore", invalid="ignore"):
                t1 = (lo[ax] - o) / d
                t2 = (hi[ax] - o) / d
            parallel = np.abs(d) < 1e-300
            inside_slab = (o >= lo[ax]) & (o <= hi[ax])
            near = np.where(parallel, np.where(inside_slab, -np.inf, np.inf), np.minimum(t1, t2))
            far = np.where(parallel, np.where(inside_slab, np.inf, -np.inf), np.maximum(t1, t2))
            t_near[ax] = near
            t_far[ax] = far
        enter = t_near.max(axis=0)
        exit_ = t_far.min(axis=0)
        face = t_near.argmax(axis=0)
        hit = (enter <= exit_) & (enter > _EPS) & np.isfinite(enter)
        s = np.where(hit, enter, np.inf)
        s_safe = np.where(hit, enter, 0.0)
        point = origin.reshape((3,) + (1,) * len(shape)) + s_safe[None] * dirs
        u = np.empty(shape)
        v = np.empty(shape)
        for ax, (ua, va) in enumerate(((2, 1), (0, 2), (0, 1))):
            sel = face == ax
            u[sel] = point[ua][sel]
            v[sel] = point[va][sel]
        return s, u, v


@dataclass(frozen=True)
class SceneSpec:
    """Analytic scene plus camera trajectory for rendering ground truth."""

    kind: str
    trajectory: tuple[Pose, ...]
    intrinsics: CameraIntrinsics
    width: int = 128
    height: int = 96
    texture: str = "value_noise"
    noise_seed: int = 0
    noise_octaves: int = 4
    noise_scale: float = 1.0
    checker_cell: float = 0.5
    plane_depth: float = 5.0
    corridor_halfwidth: float = 2.0
    camera_height: float = 1.2
    wall_height: float = 2.5
    back_depth: float = 10.0
    boxes: tuple[tuple[tuple[float, float, float], tuple[float, float, float]], ...] = (
        ((-1.6, -0.6, 4.0), (-0.4, 1.0, 5.2)),
        ((0.4, -0.3, 6.5), (1.8, 1.1, 7.8)),
    )

    def __post_init__(self):
        if self.kind not in ("plane", "corridor", "boxes"):
            raise ValueError(f"unknown scene kind {self.kind!r}")
        if self.texture not in ("value_noise", "checkerboard"):
            raise ValueError(f"unknown texture {self.texture!r}")
        if not self.trajectory:
            raise ValueError("trajectory must be non-empty")
        if self.width < 64 or self.height < 64:
            raise ValueError("image size must be at least 64x64")
        object.__setattr__(self, "trajectory", tuple(self.trajectory))

    def surfaces(self) -> list:
        if self.kind == "plane":
            return [_PlaneSurface(axis=2, value=self.plane_depth, label=WALL, u_axis=0, v_axis=1)]
        if self.kind == "corridor":
            wall_top = self.camera_height - self.wall_height
            return [
                _PlaneSurface(
                    axis=1, value=self.camera_height, label=FLOOR, u_axis=0, v_axis=2,
                    bound_axis=0, bound_lo=-self.corridor_halfwidth, bound_hi=self.corridor_halfwidth,
                ),
                _PlaneSurface(
                    axis=0, value=-self.corridor_halfwidth, label=WALL, u_axis=2, v_axis=1,
                    bound_axis=1, bound_lo=wall_top, bound_hi=self.camera_height,
                ),
                _PlaneSurface(
                    axis=0, value=self.corridor_halfwidth, label=WALL, u_axis=2, v_axis=1,
                    bound_axis=1, bound_lo=wall_top, bound_hi=self.camera_height,
                ),
            ]
        surfaces = [_PlaneSurface(axis=2, value=self.back_depth, label=WALL, u_axis=0, v_axis=1)]
        surfaces.extend(_BoxSurface(lo, hi) for lo, hi in self.boxes)
        return surfaces

    def texture_value(self, u: np.ndarray, v: np.ndarray, surface_index: int) -> np.ndarray:
        if self.texture == "checkerboard":
            return checkerboard(u, v, self.checker_cell)
        # Different salt per surface so opposite walls are not mirror copies.
        return value_noise(u, v, self.noise_seed + 7919 * surface_index, self.noise_octaves, self.noise_scale)


def cast_rays(spec: SceneSpec, origin: np.ndarray, dirs: np.ndarray):
    """First-hit distances and labels for world rays.

    dirs has shape (3, ...); returns (s, labels) of the trailing shape with
    s = inf and label = SKY where nothing is hit. s is the ray parameter for
    the given (not necessarily unit) directions.
    """
    origin = np.asarray(origin, dtype=np.float64).reshape(3)
    dirs = np.asarray(dirs, dtype=np.float64)
    shape = dirs.shape[1:]
    best_s = np.full(shape, np.inf)
    labels = np.full(shape, SKY, dtype=np.int32)
    winner = np.full(shape, -1, dtype=np.int32)
    hits = []
    for si, surf in enumerate(spec.surfaces()):
        s, u, v = surf.intersect(origin, dirs)
        closer = s < best_s
        best_s = np.where(closer, s, best_s)
        labels = np.where(closer, surf.label, labels)
        winner = np.where(closer, si, winner)
        hits.append((s, u, v))
    return best_s, labels, winner, hits


def render(spec: SceneSpec, frame_index: int) -> FrameBundle:
    """Ray-cast one frame: image, exact depth, pose, and semantic labels."""
    if not (0 <= frame_index < len(spec.trajectory)):
        raise ValueError(
            f"frame index {frame_index} outside trajectory of {len(spec.trajectory)}"
        )
    pose = spec.trajectory[frame_index]
    k = spec.intrinsics
    xs = (np.arange(spec.width, dtype=np.float64) - k.cx) / k.fx
    ys = (np.arange(spec.height, dtype=np.float64) - k.cy) / k.fy
    xn, yn = np.meshgrid(xs, ys)
    dirs_cam = np.stack([xn, yn, np.ones_like(xn)])
    dirs_world = np.einsum("ij,jhw->ihw", pose.rotation, dirs_cam)

    best_s, labels, winner, hits = cast_rays(spec, pose.translation, dirs_world)

    image = np.full((spec.height, spec.width), SKY_INTENSITY)
    for si, (s, u, v) in enumerate(hits):
        sel = winner == si
        if np.any(sel):
            image[sel] = spec.texture_value(u[sel], v[sel], si)

    # The camera ray direction has unit z in the camera frame, so the ray
    # parameter equals z-depth along the optical axis.
    depth = np.where(np.isfinite(best_s), best_s, np.nan)
    return FrameBundle(
        frame_id=f"{frame_index:06d}",
        image=ImageGray(np.clip(image, 0.0, 1.0).astype(np.float32)),
        depth=DepthMap(depth),
        pose=pose,
        intrinsics=k,
        labels=LabelMap(labels, CLASS_NAMES),
    )


def plane_in_camera_frame(spec: SceneSpec, frame_index: int) -> tuple[np.ndarray, float]:
    """The scene plane as (unit normal n, distance d) in the camera frame.

    Plane points X satisfy n . X + d = 0 with d > 0, the convention
    plane_induced_homography expects.
    """
    if spec.kind != "plane":
        raise ValueError("only plane scenes have a single ground-truth plane")
    pose = spec.trajectory[frame_index]
    n = -(pose.rotation.T @ np.array([0.0, 0.0, 1.0]))
    d = spec.plane_depth - pose.translation[2]
    if d <= 0:
        raise ValueError(f"camera at z={pose.translation[2]} is not in front of the plane")
    return n, float(d)


def ground_truth_homography(spec: SceneSpec, i: int, j: int) -> Homography:
    """Exact plane-induced homography mapping frame i pixels to frame j."""
    n, d = plane_in_camera_frame(spec, i)
    t_ij = relative_pose(spec.trajectory[i], spec.trajectory[j])
    return plane_induced_homography(t_ij, (n, d), spec.intrinsics, spec.intrinsics)


def write_scene_dataset(spec: SceneSpec, out_dir) -> "Path":
    """Render every trajectory frame and write it in the on-disk format.

    Images and labels are 8-bit PGM, depth is the raw float grid (exact), and
    manifest.txt ties them together; synthetic and real data then flow through
    the same loading path.
    """
    from pathlib import Path

    from .dataset_io import (
        DatasetManifest,
        FrameRecord,
        save_depth_raw,
        save_image_pgm,
        save_labels_pgm,
        write_manifest,
    )

    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "depth").mkdir(parents=True, exist_ok=True)
    (out / "labels").mkdir(parents=True, exist_ok=True)
    records = []
    for i in range(len(spec.trajectory)):
        bundle = render(spec, i)
        image_rel = f"images/{bundle.frame_id}.pgm"
        depth_rel = f"depth/{bundle.frame_id}.dpth"
        label_rel = f"labels/{bundle.frame_id}.pgm"
        save_image_pgm(bundle.image, out / image_rel)
        save_depth_raw(bundle.depth, out / depth_rel)
        save_labels_pgm(bundle.labels, out / label_rel)
        records.append(
            FrameRecord(
                frame_id=bundle.frame_id,
                image_path=image_rel,
                depth_path=depth_rel,
                pose=bundle.pose,
                label_path=label_rel,
            )
        )
    manifest = DatasetManifest(out, spec.intrinsics, 1.0, tuple(records), dict(CLASS_NAMES))
    manifest_path = out / "manifest.txt"
    write_manifest(manifest, manifest_path)
    return manifest_path


def rotation_y(angle_deg: float) -> np.ndarray:
    a = math.radians(angle_deg)
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def make_trajectory(
    kind: str,
    n_frames: int,
    spacing: float = 1.0,
    yaw_step_deg: float = 0.0,
    dx: float = 0.0,
    dz: float = 0.0,
) -> tuple[Pose, ...]:
    """Camera-to-world poses along a simple path.

    forward: +z steps of `spacing`; strafe: +x steps of `spacing`;
    arc: per-frame yaw of `yaw_step_deg` with per-frame translation (dx, 0, dz).
    """
    if n_frames < 1:
        raise ValueError("n_frames must be >= 1")
    poses = []
    for i in range(n_frames):
        if kind == "forward":
            poses.append(Pose(np.eye(3), np.array([0.0, 0.0, i * spacing])))
        elif kind == "strafe":
            poses.append(Pose(np.eye(3), np.array([i * spacing, 0.0, 0.0])))
        elif kind == "arc":
            poses.append(Pose(rotation_y(i * yaw_step_deg), np.array([i * dx, 0.0, i * dz])))
        else:
            raise ValueError(f"unknown trajectory kind {kind!r}")
    return tuple(poses)
