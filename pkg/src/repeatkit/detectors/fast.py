"""FAST segment-test corner detector on the 16-pixel Bresenham circle.

A pixel is a corner iff the radius-3 circle around it contains a contiguous
arc of at least `arc` pixels all brighter than center+t or all darker than
center-t. With arc >= 9 at most one such run can exist on 16 pixels, so the
qualifying arc is unique. Comparisons and the response are computed in
float64 so results are bit-reproducible.
"""

from __future__ import annotations

import numpy as np

from ..image import ImageGray, nms_2d
from ..keypoints import Keypoint, KeypointSet

# Bresenham circle of radius 3, clockwise from 12 o'clock; (dx, dy) offsets.
CIRCLE = (
    (0, -3), (1, -3), (2, -2), (3, -1),
    (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1),
    (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)

BORDER = 3


def arc_members(mask: list[bool] | np.ndarray, arc: int) -> list[int] | None:
    """Circle indices of the maximal contiguous run if its length >= arc.

    For arc >= 9 this run is unique when it exists: two disjoint runs of
    length >= 9 would need more than 16 pixels.
    """
    n = len(mask)
    if all(mask):
        return list(range(n))
    # Rotate so the scan starts just after a gap; runs then never wrap.
    start = next(i for i in range(n) if not mask[i])
    best_len = 0
    best_start = 0
    run_len = 0
    for j in range(1, n + 1):
        i = (start + j) % n
        if mask[i]:
            run_len += 1
            if run_len > best_len:
                best_len = run_len
                best_start = i - run_len + 1
        else:
            run_len = 0
    if best_len < arc:
        return None
    return sorted((best_start + j) % n for j in range(best_len))


def segment_response(circle_vals, center: float, t: float, arc: int) -> float | None:
    """Response of one pixel, or None when the segment test fails.

    Sum of |I(circle_i) - I(p)| - t over the qualifying arc's pixels, taken
    in ascending circle-index order.
    """
    bright = [v > center + t for v in circle_vals]
    members = arc_members(bright, arc)
    if members is None:
        dark = [v < center - t for v in circle_vals]
        members = arc_members(dark, arc)
    if members is None:
        return None
    resp = 0.0
    for i in members:
        resp += abs(circle_vals[i] - center) - t
    return resp


def detect_fast(img: ImageGray, t: float = 0.08, arc: int = 9) -> KeypointSet:
    """Detect FAST corners at integer coordinates.

    Candidates come from a vectorized window test over all 16 arc rotations;
    the response is the arc-sum of excess contrast over the maximal run.
    Non-maximum suppression with radius 1; 3 px border excluded.
    """
    h, w = img.height, img.width
    if h < 7 or w < 7:
        raise ValueError(f"image must be at least 7x7 for FAST, got {w}x{h}")
    if not (0.0 < t < 1.0):
        raise ValueError(f"threshold t must be in (0, 1), got {t}")
    if not (9 <= arc <= 16):
        raise ValueError(f"arc must be in [9, 16], got {arc}")

    a = img.data.astype(np.float64)
    ih, iw = h - 2 * BORDER, w - 2 * BORDER
    center = a[BORDER : h - BORDER, BORDER : w - BORDER]
    ring = np.empty((16, ih, iw), dtype=np.float64)
    for i, (dx, dy) in enumerate(CIRCLE):
        ring[i] = a[BORDER + dy : BORDER + dy + ih, BORDER + dx : BORDER + dx + iw]

    brighter = ring > center + t
    darker = ring < center - t
    is_corner = np.zeros((ih, iw), dtype=bool)
    for mask in (brighter, darker):
        doubled = np.concatenate([mask, mask[: arc - 1]], axis=0)
        for k in range(16):
            is_corner |= doubled[k : k + arc].all(axis=0)

    resp_map = np.zeros((h, w), dtype=np.float64)
    for yy, xx in zip(*np.nonzero(is_corner)):
        vals = ring[:, yy, xx]
        r = segment_response(vals, center[yy, xx], t, arc)
        if r is not None:
            resp_map[yy + BORDER, xx + BORDER] = r

    kps = [
        Keypoint(float(x), float(y), resp)
        for x, y, resp in nms_2d(resp_map, radius=1, threshold=0.0)
        if resp > 0.0
    ]
    return KeypointSet(tuple(kps), w, h)
