"""Harris corner detector with sub-pixel refinement.

Structure tensor of the derivative-scale-blurred image, smoothed at the
integration scale; R = det(M) - k * trace(M)^2. Corners are NMS radius-2
maxima of R refined by a clamped 2D quadratic fit.
"""

from __future__ import annotations

import math

import numpy as np

from ..image import ImageGray, gaussian_smooth, gradients, nms_2d
from ..keypoints import Keypoint, KeypointSet


def harris_response(img: ImageGray, sigma_d: float, sigma_i: float, k: float) -> np.ndarray:
    """Dense Harris response map (float64, same shape as the image)."""
    smoothed = gaussian_smooth(img.data.astype(np.float64), sigma_d)
    gx, gy = gradients(smoothed)
    sxx = gaussian_smooth(gx * gx, sigma_i)
    syy = gaussian_smooth(gy * gy, sigma_i)
    sxy = gaussian_smooth(gx * gy, sigma_i)
    det = sxx * syy - sxy * sxy
    tr = sxx + syy
    return det - k * (tr * tr)


def quadratic_offset_2d(patch: np.ndarray) -> tuple[float, float]:
    """(dx, dy) of the quadratic fit over a 3x3 neighborhood, clamped to +-0.5."""
    gx = 0.5 * (patch[1, 2] - patch[1, 0])
    gy = 0.5 * (patch[2, 1] - patch[0, 1])
    hxx = patch[1, 2] - 2.0 * patch[1, 1] + patch[1, 0]
    hyy = patch[2, 1] - 2.0 * patch[1, 1] + patch[0, 1]
    hxy = 0.25 * (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0])
    det = hxx * hyy - hxy * hxy
    if abs(det) < 1e-18:
        return 0.0, 0.0
    dx = -(hyy * gx - hxy * gy) / det
    dy = -(hxx * gy - hxy * gx) / det
    return (
        min(0.5, max(-0.5, dx)),
        min(0.5, max(-0.5, dy)),
    )


def detect_harris(
    img: ImageGray,
    sigma_d: float = 1.0,
    sigma_i: float = 2.0,
    k: float = 0.04,
    thresh: float = 1e-6,
) -> KeypointSet:
    """Detect Harris corners with sub-pixel positions."""
    if not (sigma_d > 0 and sigma_i > 0):
        raise ValueError("sigmas must be positive")
    if not (0.0 < k < 0.25):
        raise ValueError(f"k must be in (0, 0.25), got {k}")
    if not math.isfinite(thresh):
        raise ValueError(f"threshold must be finite, got {thresh}")

    resp = harris_response(img, sigma_d, sigma_i, k)
    margin = int(math.ceil(3.0 * sigma_i)) + 1
    kps = []
    for x, y, r in nms_2d(resp, radius=2, threshold=thresh):
        if not (margin <= x <= img.width - 1 - margin and margin <= y <= img.height - 1 - margin):
            continue
        dx, dy = quadratic_offset_2d(resp[y - 1 : y + 2, x - 1 : x + 2])
        kps.append(Keypoint(x + dx, y + dy, r))
    return KeypointSet(tuple(kps), img.width, img.height)
