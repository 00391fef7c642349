"""Difference-of-Gaussians blob detector over a scale-space pyramid.

Base sigma 1.6, scale step 2^(1/s), s+3 Gaussian levels per octave so that
s DoG levels have full 26-pixel neighborhoods. Extrema are strict maxima or
minima over (x, y, scale), filtered by contrast and an edge-ratio test on
the 2x2 spatial Hessian, then refined by one clamped quadratic-fit step.
"""

from __future__ import annotations

import math

import numpy as np

from ..image import ImageGray, gaussian_smooth
from ..keypoints import Keypoint, KeypointSet

BASE_SIGMA = 1.6
MIN_TOP_OCTAVE_DIM = 16


def max_octaves(width: int, height: int) -> int:
    """Largest octave count keeping min dimension >= 16 at the top octave."""
    n = 0
    d = min(width, height)
    while d >= MIN_TOP_OCTAVE_DIM:
        n += 1
        d //= 2
    return n


def build_gaussian_pyramid(
    img: ImageGray, octaves: int, scales_per_octave: int
) -> list[list[np.ndarray]]:
    """Gaussian pyramid: `octaves` lists of s+3 float64 levels each.

    Level i of an octave has blur sigma = 1.6 * 2^(i/s) relative to that
    octave's grid; the next octave starts from level s downsampled by 2.
    """
    s = scales_per_octave
    if s < 1:
        raise ValueError(f"scales_per_octave must be >= 1, got {s}")
    if octaves < 1:
        raise ValueError(f"octaves must be >= 1, got {octaves}")
    if min(img.width, img.height) // (2 ** (octaves - 1)) < MIN_TOP_OCTAVE_DIM:
        raise ValueError(
            f"{img.width}x{img.height} image too small for {octaves} octaves "
            f"(min dimension must stay >= {MIN_TOP_OCTAVE_DIM})"
        )
    k = 2.0 ** (1.0 / s)
    base = gaussian_smooth(img.data.astype(np.float64), BASE_SIGMA)
    pyramid = []
    for _ in range(octaves):
        levels = [base]
        for i in range(s + 2):
            sigma_prev = BASE_SIGMA * k**i
            sigma_inc = sigma_prev * math.sqrt(k * k - 1.0)
            levels.append(gaussian_smooth(levels[-1], sigma_inc))
        pyramid.append(levels)
        base = levels[s][::2, ::2]
    return pyramid


def dog_stack(pyramid: list[list[np.ndarray]]) -> list[np.ndarray]:
    """Per-octave (s+2, h, w) stacks of adjacent Gaussian level differences."""
    return [np.stack([lv[i + 1] - lv[i] for i in range(len(lv) - 1)]) for lv in pyramid]


def find_extrema(dog: np.ndarray, contrast_thresh: float) -> list[tuple[int, int, int]]:
    """(x, y, level) of strict 26-neighborhood extrema with |DoG| >= threshold.

    Searched over levels 1..n-2 and with a 1-pixel spatial border excluded.
    """
    n_levels = dog.shape[0]
    center = dog[1 : n_levels - 1, 1:-1, 1:-1]
    is_max = np.ones(center.shape, dtype=bool)
    is_min = np.ones(center.shape, dtype=bool)
    for dl in (-1, 0, 1):
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if dl == 0 and dy == 0 and dx == 0:
                    continue
                nb = dog[
                    1 + dl : n_levels - 1 + dl,
                    1 + dy : dog.shape[1] - 1 + dy,
                    1 + dx : dog.shape[2] - 1 + dx,
                ]
                is_max &= center > nb
                is_min &= center < nb
    mask = (is_max | is_min) & (np.abs(center) >= contrast_thresh)
    ls, ys, xs = np.nonzero(mask)
    return [(int(x) + 1, int(y) + 1, int(l) + 1) for l, y, x in zip(ls, ys, xs)]


def is_edge_like(dog_level: np.ndarray, x: int, y: int, edge_ratio: float) -> bool:
    """Edge test: trace^2/det of the 2x2 spatial Hessian vs (r+1)^2/r."""
    d = dog_level
    hxx = d[y, x + 1] - 2.0 * d[y, x] + d[y, x - 1]
    hyy = d[y + 1, x] - 2.0 * d[y, x] + d[y - 1, x]
    hxy = 0.25 * (d[y + 1, x + 1] - d[y + 1, x - 1] - d[y - 1, x + 1] + d[y - 1, x - 1])
    det = hxx * hyy - hxy * hxy
    if det <= 0:
        return True
    tr = hxx + hyy
    return tr * tr * edge_ratio > det * (edge_ratio + 1.0) ** 2


def refine_offset_3d(dog: np.ndarray, x: int, y: int, level: int) -> tuple[float, float, float]:
    """One quadratic-fit step in (x, y, scale), each offset clamped to +-0.5."""
    d = dog
    g = np.array(
        [
            0.5 * (d[level, y, x + 1] - d[level, y, x - 1]),
            0.5 * (d[level, y + 1, x] - d[level, y - 1, x]),
            0.5 * (d[level + 1, y, x] - d[level - 1, y, x]),
        ]
    )
    hxx = d[level, y, x + 1] - 2.0 * d[level, y, x] + d[level, y, x - 1]
    hyy = d[level, y + 1, x] - 2.0 * d[level, y, x] + d[level, y - 1, x]
    hss = d[level + 1, y, x] - 2.0 * d[level, y, x] + d[level - 1, y, x]
    hxy = 0.25 * (
        d[level, y + 1, x + 1] - d[level, y + 1, x - 1] - d[level, y - 1, x + 1] + d[level, y - 1, x - 1]
    )
    hxs = 0.25 * (
        d[level + 1, y, x + 1] - d[level + 1, y, x - 1] - d[level - 1, y, x + 1] + d[level - 1, y, x - 1]
    )
    hys = 0.25 * (
        d[level + 1, y + 1, x] - d[level + 1, y - 1, x] - d[level - 1, y + 1, x] + d[level - 1, y - 1, x]
    )
    hess = np.array([[hxx, hxy, hxs], [hxy, hyy, hys], [hxs, hys, hss]])
    try:
        offset = -np.linalg.solve(hess, g)
    except np.linalg.LinAlgError:
        return 0.0, 0.0, 0.0
    offset = np.clip(offset, -0.5, 0.5)
    return float(offset[0]), float(offset[1]), float(offset[2])


def detect_dog(
    img: ImageGray,
    octaves: int = 3,
    scales_per_octave: int = 3,
    contrast_thresh: float = 0.03,
    edge_ratio: float = 10.0,
) -> KeypointSet:
    """Detect DoG keypoints; coordinates and scale reported in base pixels."""
    if contrast_thresh < 0:
        raise ValueError(f"contrast threshold must be >= 0, got {contrast_thresh}")
    if edge_ratio <= 0:
        raise ValueError(f"edge ratio must be positive, got {edge_ratio}")
    s = scales_per_octave
    pyramid = build_gaussian_pyramid(img, octaves, s)
    stacks = dog_stack(pyramid)
    kps = []
    for octave, dog in enumerate(stacks):
        grid = float(2**octave)
        for x, y, level in find_extrema(dog, contrast_thresh):
            if is_edge_like(dog[level], x, y, edge_ratio):
                continue
            ox, oy, os_ = refine_offset_3d(dog, x, y, level)
            bx = (x + ox) * grid
            by = (y + oy) * grid
            if not (0.0 <= bx <= img.width - 1 and 0.0 <= by <= img.height - 1):
                continue
            sigma = BASE_SIGMA * 2.0 ** (octave + (level + os_) / s)
            kps.append(Keypoint(bx, by, float(abs(dog[level, y, x])), scale=sigma))
    kps.sort(key=lambda kp: (-kp.response, kp.y, kp.x))
    return KeypointSet(tuple(kps), img.width, img.height)
