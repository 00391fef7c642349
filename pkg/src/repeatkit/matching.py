"""Keypoint correspondence under ground-truth geometry and the repeatability rate.

Correspondence is purely geometric: a keypoint of image 1 is mapped into
image 2 either through its depth and the relative pose or through a known
homography; a pair corresponds when the mapped point lands within theta
pixels of a detection. Matching is greedy one-to-one in ascending distance,
so the repeatability rate |C| / min(|d1|, |d2|) stays within [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .detectors import DetectorConfig, detect
from .errors import ConfigError, DegenerateMappingError
from .frames import FrameBundle
from .geometry import Homography, apply_homography, camera_distance, relative_pose, reproject_keypoint
from .keypoints import KeypointSet

MODES = ("depth", "homography")


@dataclass(frozen=True)
class EvalParams:
    """Correspondence threshold and visibility settings."""

    theta: float = 2.5
    occlusion_tolerance: float = 0.05
    correspondence_mode: str = "depth"

    def __post_init__(self):
        if not (self.theta > 0):
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not (0.0 < self.occlusion_tolerance < 1.0):
            raise ValueError(
                f"occlusion_tolerance must be in (0, 1), got {self.occlusion_tolerance}"
            )
        if self.correspondence_mode not in MODES:
            raise ValueError(
                f"correspondence_mode must be one of {MODES}, got {self.correspondence_mode!r}"
            )


@dataclass(frozen=True)
class PairResult:
    """Correspondences and common-region counts for one image pair."""

    matches: tuple[tuple[int, int, float], ...]
    n_d1: int
    n_d2: int
    repeatability: float | None
    camera_distance: float
    d1_indices: tuple[int, ...] = ()
    d2_indices: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.matches) > min(self.n_d1, self.n_d2):
            raise ValueError("more matches than common-region points")
        if len({m[0] for m in self.matches}) != len(self.matches):
            raise ValueError("match index1 values must be unique")
        if len({m[1] for m in self.matches}) != len(self.matches):
            raise ValueError("match index2 values must be unique")


def _inside(p: tuple[float, float], width: int, height: int) -> bool:
    return 0.0 <= p[0] <= width - 1 and 0.0 <= p[1] <= height - 1


def _depth_mode_map(kps: KeypointSet, src: FrameBundle, dst: FrameBundle):
    """Landing pixels and visibility for every keypoint, via depth reprojection.

    A keypoint is visible in the other view when its reprojection lands
    inside the image, the destination depth there is valid, and the
    reprojected depth agrees with it within the occlusion tolerance.
    """
    t = relative_pose(src.pose, dst.pose)
    size2 = (dst.width, dst.height)
    mapped: list[tuple[float, float] | None] = []
    z2s: list[float] = []
    for kp in kps:
        res = reproject_keypoint((kp.x, kp.y), src.depth, t, src.intrinsics, dst.intrinsics, size2)
        if res is None:
            mapped.append(None)
            z2s.append(math.nan)
        else:
            mapped.append(res[0])
            z2s.append(res[1])
    return mapped, z2s


def visibility_sets(
    kps1: KeypointSet,
    kps2: KeypointSet,
    bundle1: FrameBundle,
    bundle2: FrameBundle,
    params: EvalParams,
    homography: Homography | None = None,
) -> tuple[list[int], list[int]]:
    """Indices of keypoints potentially detectable in both views (d1, d2)."""
    d1, _ = _visible_with_mapping(kps1, bundle1, bundle2, params, homography, forward=True)
    d2, _ = _visible_with_mapping(kps2, bundle2, bundle1, params, homography, forward=False)
    return d1, d2


def _visible_with_mapping(
    kps: KeypointSet,
    src: FrameBundle,
    dst: FrameBundle,
    params: EvalParams,
    homography: Homography | None,
    forward: bool,
) -> tuple[list[int], dict[int, tuple[float, float]]]:
    """Visible indices plus each one's landing pixel in the other image."""
    visible: list[int] = []
    landing: dict[int, tuple[float, float]] = {}
    if params.correspondence_mode == "homography":
        if homography is None:
            raise ConfigError("homography mode requires an explicit homography")
        h = homography if forward else homography.inverse()
        for i, kp in enumerate(kps):
            try:
                q = apply_homography(h, (kp.x, kp.y))
            except DegenerateMappingError:
                continue
            if _inside(q, dst.width, dst.height):
                visible.append(i)
                landing[i] = q
        return visible, landing

    if src.depth is None or dst.depth is None:
        raise ConfigError("depth mode requires depth maps in both bundles")
    mapped, z2s = _depth_mode_map(kps, src, dst)
    tol = params.occlusion_tolerance
    for i, q in enumerate(mapped):
        if q is None:
            continue
        d_dst = dst.depth.sample(q[0], q[1])
        if d_dst is None:
            continue
        if abs(z2s[i] - d_dst) <= tol * d_dst:
            visible.append(i)
            landing[i] = q
    return visible, landing


def find_correspondences(
    kps1: KeypointSet,
    kps2: KeypointSet,
    d1: Sequence[int],
    d2: Sequence[int],
    map_1to2: Callable[[tuple[float, float]], tuple[float, float] | None],
    theta: float,
) -> tuple[tuple[int, int, float], ...]:
    """Greedy one-to-one matches (i, j, distance), ascending distance.

    Candidates are pairs (i in d1, j in d2) whose mapped distance is strictly
    below theta; ties in distance break by (i, j). Each index is used once.
    """
    if theta <= 0:
        raise ValueError(f"theta must be positive, got {theta}")
    # Bucket d2 detections on a theta-sized grid; candidates can only live in
    # the 3x3 cell neighborhood of a mapped point.
    grid: dict[tuple[int, int], list[int]] = {}
    for j in d2:
        kp = kps2[j]
        cell = (int(math.floor(kp.x / theta)), int(math.floor(kp.y / theta)))
        grid.setdefault(cell, []).append(j)

    candidates: list[tuple[float, int, int]] = []
    for i in d1:
        kp = kps1[i]
        q = map_1to2((kp.x, kp.y))
        if q is None:
            continue
        cx = int(math.floor(q[0] / theta))
        cy = int(math.floor(q[1] / theta))
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for j in grid.get((gx, gy), ()):
                    kq = kps2[j]
                    dist = math.hypot(q[0] - kq.x, q[1] - kq.y)
                    if dist < theta:
                        candidates.append((dist, i, j))

    candidates.sort()
    used1: set[int] = set()
    used2: set[int] = set()
    matches: list[tuple[int, int, float]] = []
    for dist, i, j in candidates:
        if i in used1 or j in used2:
            continue
        used1.add(i)
        used2.add(j)
        matches.append((i, j, dist))
    return tuple(matches)


def repeatability(n_matches: int, n_d1: int, n_d2: int) -> float | None:
    """Repeatability rate n_matches / min(n_d1, n_d2); None when undefined."""
    if min(n_d1, n_d2) < 0 or n_matches < 0:
        raise ValueError("counts must be non-negative")
    denom = min(n_d1, n_d2)
    if denom == 0:
        return None
    return n_matches / denom


def evaluate_pair(
    bundle1: FrameBundle,
    bundle2: FrameBundle,
    cfg: DetectorConfig,
    params: EvalParams,
    homography: Homography | None = None,
    kps1: KeypointSet | None = None,
    kps2: KeypointSet | None = None,
) -> PairResult:
    """Detect on both frames, establish correspondence, compute repeatability.

    Precomputed keypoint sets may be passed to avoid re-detection when one
    frame participates in many pairs.
    """
    if kps1 is None:
        kps1 = detect(bundle1.image, cfg)
    if kps2 is None:
        kps2 = detect(bundle2.image, cfg)
    d1, landing1 = _visible_with_mapping(kps1, bundle1, bundle2, params, homography, forward=True)
    d2, _ = _visible_with_mapping(kps2, bundle2, bundle1, params, homography, forward=False)
    # The geometric map depends only on position, so cached landings can be
    # looked up by position without recomputing the reprojection.
    landing_by_pos = {(kps1[i].x, kps1[i].y): q for i, q in landing1.items()}
    matches = find_correspondences(kps1, kps2, d1, d2, landing_by_pos.get, params.theta)
    r = repeatability(len(matches), len(d1), len(d2))
    return PairResult(
        matches=matches,
        n_d1=len(d1),
        n_d2=len(d2),
        repeatability=r,
        camera_distance=camera_distance(bundle1.pose, bundle2.pose),
        d1_indices=tuple(d1),
        d2_indices=tuple(d2),
    )
