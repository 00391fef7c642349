"""Grayscale image container and low-level raster operations.

Images are row-major float32 arrays with intensities in [0, 1]; response maps
are plain 2D float arrays of the same shape as their source image. Everything
here is a pure function of its inputs and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import convolve1d, maximum_filter

from .keypoints import KeypointSet


@dataclass(frozen=True)
class ImageGray:
    """Row-major grayscale raster, intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.data, dtype=np.float32)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("image intensities must be finite")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("image intensities must lie in [0, 1]")
        a.flags.writeable = False
        object.__setattr__(self, "data", a)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @classmethod
    def from_array(cls, array) -> "ImageGray":
        """Build an image from raw data; 8-bit inputs are divided by 255."""
        a = np.asarray(array)
        if a.dtype == np.uint8:
            a = a.astype(np.float32) / 255.0
        elif a.dtype == np.uint16:
            a = a.astype(np.float32) / 65535.0
        return cls(a.astype(np.float32))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian kernel with radius ceil(3*sigma)."""
    if not (sigma > 0) or not math.isfinite(sigma):
        raise ValueError(f"sigma must be positive and finite, got {sigma}")
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(arr: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian filter of a 2D array, borders edge-clamped."""
    k = gaussian_kernel(sigma)
    a = np.asarray(arr, dtype=np.float64)
    a = convolve1d(a, k, axis=0, mode="nearest")
    a = convolve1d(a, k, axis=1, mode="nearest")
    return a


def gaussian_blur(img: ImageGray, sigma: float) -> ImageGray:
    """Blur an image; output clipped to [0, 1] to absorb float rounding."""
    out = gaussian_smooth(img.data, sigma)
    return ImageGray(np.clip(out, 0.0, 1.0).astype(np.float32))


def gradients(img: ImageGray | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(gx, gy) by central differences, one-sided at the borders.

    gx differentiates along columns (x), gy along rows (y).
    """
    a = img.data if isinstance(img, ImageGray) else np.asarray(img)
    if a.shape[0] < 3 or a.shape[1] < 3:
        raise ValueError(f"image must be at least 3x3 for gradients, got {a.shape}")
    a = a.astype(np.float64)
    gy, gx = np.gradient(a)
    return gx, gy


def nms_2d(resp: np.ndarray, radius: int, threshold: float) -> list[tuple[int, int, float]]:
    """Local maxima of a response map.

    A pixel survives iff its response is strictly greater than every neighbor
    within Chebyshev distance <= radius and >= threshold. Pixels within
    `radius` of the border are excluded. Returned in (y, x) scan order.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    r = np.asarray(resp, dtype=np.float64)
    if r.ndim != 2:
        raise ValueError("response map must be 2D")
    size = 2 * radius + 1
    footprint = np.ones((size, size), dtype=bool)
    footprint[radius, radius] = False
    neighbor_max = maximum_filter(r, footprint=footprint, mode="constant", cval=-np.inf)
    mask = (r > neighbor_max) & (r >= threshold)
    mask[:radius, :] = False
    mask[-radius:, :] = False
    mask[:, :radius] = False
    mask[:, -radius:] = False
    ys, xs = np.nonzero(mask)
    return [(int(x), int(y), float(r[y, x])) for y, x in zip(ys, xs)]


def select_top_n(kps: KeypointSet, n: int) -> KeypointSet:
    """The n keypoints with largest response.

    Ties broken by (y, x) ascending; output ordered by descending response
    then (y, x). Deterministic for a fixed input.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    ordered = sorted(kps.keypoints, key=lambda kp: (-kp.response, kp.y, kp.x))
    return KeypointSet(tuple(ordered[:n]), kps.width, kps.height)
