"""Per-frame ground truth: image, depth, pose, intrinsics, optional labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .geometry import CameraIntrinsics, DepthMap, Pose
from .image import ImageGray

UNLABELLED = "unlabelled"


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel semantic class ids with an id -> name table."""

    values: np.ndarray
    class_names: Mapping[int, str]

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ValueError(f"label map must be 2D, got shape {v.shape}")
        if not np.issubdtype(v.dtype, np.integer):
            v = v.astype(np.int32)
        v.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "class_names", dict(self.class_names))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def name_of(self, class_id: int) -> str:
        return self.class_names.get(int(class_id), UNLABELLED)


@dataclass(frozen=True)
class FrameBundle:
    """One frame's image plus its ground truth, all rasters same shape."""

    frame_id: str
    image: ImageGray
    depth: DepthMap | None
    pose: Pose
    intrinsics: CameraIntrinsics
    labels: LabelMap | None = None

    def __post_init__(self):
        shape = self.image.data.shape
        if self.depth is not None and self.depth.values.shape != shape:
            raise ValueError(
                f"depth shape {self.depth.values.shape} does not match image {shape}"
            )
        if self.labels is not None and self.labels.values.shape != shape:
            raise ValueError(
                f"label shape {self.labels.values.shape} does not match image {shape}"
            )

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height
