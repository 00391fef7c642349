"""Uniform detector interface over FAST, Harris, and DoG.

Every detector is a pure function of (image, config); `detect` dispatches to
the configured kernel and keeps only the `max_points` strongest keypoints
(protocol default 10,000).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..image import ImageGray, select_top_n
from ..keypoints import Keypoint, KeypointSet
from .dog import build_gaussian_pyramid, detect_dog, dog_stack, find_extrema
from .fast import detect_fast
from .harris import detect_harris, harris_response

KINDS = ("fast", "harris", "dog")


@dataclass(frozen=True)
class DetectorConfig:
    """Detector choice plus its parameters; unused fields are ignored."""

    kind: str
    max_points: int = 10000
    fast_t: float = 0.08
    fast_arc: int = 9
    harris_sigma_d: float = 1.0
    harris_sigma_i: float = 2.0
    harris_k: float = 0.04
    harris_thresh: float = 1e-6
    dog_octaves: int = 3
    dog_scales_per_octave: int = 3
    dog_contrast_thresh: float = 0.03
    dog_edge_ratio: float = 10.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown detector kind {self.kind!r}, expected one of {KINDS}")
        if self.max_points < 1:
            raise ValueError(f"max_points must be >= 1, got {self.max_points}")
        if not (0.0 < self.fast_t < 1.0):
            raise ValueError(f"fast_t must be in (0, 1), got {self.fast_t}")
        if not (9 <= self.fast_arc <= 16):
            raise ValueError(f"fast_arc must be in [9, 16], got {self.fast_arc}")
        if self.harris_sigma_d <= 0 or self.harris_sigma_i <= 0:
            raise ValueError("harris sigmas must be positive")
        if not (0.0 < self.harris_k < 0.25):
            raise ValueError(f"harris_k must be in (0, 0.25), got {self.harris_k}")
        if self.dog_octaves < 1 or self.dog_scales_per_octave < 1:
            raise ValueError("dog octave and scale counts must be >= 1")
        if self.dog_contrast_thresh < 0:
            raise ValueError("dog_contrast_thresh must be >= 0")
        if self.dog_edge_ratio <= 0:
            raise ValueError("dog_edge_ratio must be positive")


def detect(img: ImageGray, cfg: DetectorConfig) -> KeypointSet:
    """Run the configured detector and keep the max_points strongest points."""
    if cfg.kind == "fast":
        kps = detect_fast(img, t=cfg.fast_t, arc=cfg.fast_arc)
    elif cfg.kind == "harris":
        kps = detect_harris(
            img,
            sigma_d=cfg.harris_sigma_d,
            sigma_i=cfg.harris_sigma_i,
            k=cfg.harris_k,
            thresh=cfg.harris_thresh,
        )
    else:
        kps = detect_dog(
            img,
            octaves=cfg.dog_octaves,
            scales_per_octave=cfg.dog_scales_per_octave,
            contrast_thresh=cfg.dog_contrast_thresh,
            edge_ratio=cfg.dog_edge_ratio,
        )
    return select_top_n(kps, cfg.max_points)


__all__ = [
    "DetectorConfig",
    "KINDS",
    "Keypoint",
    "KeypointSet",
    "build_gaussian_pyramid",
    "detect",
    "detect_dog",
    "detect_fast",
    "detect_harris",
    "dog_stack",
    "find_extrema",
    "harris_response",
]
