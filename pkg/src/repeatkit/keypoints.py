"""Detected interest points and ordered collections of them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Keypoint:
    """Sub-pixel image location with a detector response; scale only for DoG."""

    x: float
    y: float
    response: float
    scale: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"keypoint position must be finite, got ({self.x}, {self.y})")
        if not math.isfinite(self.response):
            raise ValueError(f"keypoint response must be finite, got {self.response}")
        if self.scale is not None and not (self.scale > 0):
            raise ValueError(f"keypoint scale must be positive, got {self.scale}")


@dataclass(frozen=True)
class KeypointSet:
    """Ordered keypoints plus the dimensions of the image they came from."""

    keypoints: tuple[Keypoint, ...]
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        object.__setattr__(self, "keypoints", tuple(self.keypoints))
        for kp in self.keypoints:
            if not (0.0 <= kp.x <= self.width - 1 and 0.0 <= kp.y <= self.height - 1):
                raise ValueError(
                    f"keypoint ({kp.x}, {kp.y}) outside {self.width}x{self.height} image"
                )

    def __len__(self) -> int:
        return len(self.keypoints)

    def __getitem__(self, i: int) -> Keypoint:
        return self.keypoints[i]

    def __iter__(self):
        return iter(self.keypoints)

    def positions(self) -> np.ndarray:
        """(N, 2) array of (x, y) positions."""
        if not self.keypoints:
            return np.zeros((0, 2), dtype=np.float64)
        return np.array([(kp.x, kp.y) for kp in self.keypoints], dtype=np.float64)

    def responses(self) -> np.ndarray:
        return np.array([kp.response for kp in self.keypoints], dtype=np.float64)
