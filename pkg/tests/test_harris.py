import math

import numpy as np
import pytest

from repeatkit.detectors.harris import detect_harris, harris_response, quadratic_offset_2d
from repeatkit.image import ImageGray

from oracles import harris_dense_maxima


def checkerboard_image(size: int, cell: int) -> ImageGray:
    # An ideal checkerboard puts junctions between pixels, so the 4 adjacent
    # response values are exactly equal and strict NMS would suppress them
    # all; a tiny seeded jitter (0.25% of the contrast) breaks the ties
    # without perturbing where the maxima are.
    idx = np.arange(size)
    parity = (idx[:, None] // cell + idx[None, :] // cell) % 2
    board = np.where(parity > 0, 0.9, 0.1)
    jitter = np.random.RandomState(99).uniform(-0.002, 0.002, board.shape)
    return ImageGray((board + jitter).astype(np.float32))


def test_constant_image_empty():
    img = ImageGray(np.full((48, 48), 0.4, dtype=np.float32))
    assert len(detect_harris(img)) == 0


def test_parameter_validation():
    img = ImageGray(np.zeros((32, 32), dtype=np.float32))
    with pytest.raises(ValueError):
        detect_harris(img, sigma_d=0.0)
    with pytest.raises(ValueError):
        detect_harris(img, sigma_i=-1.0)
    with pytest.raises(ValueError):
        detect_harris(img, k=0.3)
    with pytest.raises(ValueError):
        detect_harris(img, k=0.0)


def test_checkerboard_junctions():
    cell = 8
    img = checkerboard_image(96, cell)
    kps = detect_harris(img, sigma_d=1.0, sigma_i=2.0, k=0.04, thresh=1e-6)
    margin = int(math.ceil(3 * 2.0)) + 1
    # Cell junctions sit between pixels, at odd multiples of the cell size
    # minus a half pixel.
    junctions = [
        (c * cell - 0.5, r * cell - 0.5)
        for c in range(1, 96 // cell)
        for r in range(1, 96 // cell)
        if margin <= c * cell - 0.5 <= 95 - margin and margin <= r * cell - 0.5 <= 95 - margin
    ]
    # Every interior junction is hit within 1 px...
    for jx, jy in junctions:
        dmin = min(math.hypot(kp.x - jx, kp.y - jy) for kp in kps)
        assert dmin <= 1.0
    # ...and every keypoint lies within 1 px of some junction.
    for kp in kps:
        dmin = min(math.hypot(kp.x - jx, kp.y - jy) for jx, jy in junctions)
        assert dmin <= 1.0


def test_checkerboard_matches_dense_oracle():
    img = checkerboard_image(64, 8)
    kps = detect_harris(img, sigma_d=1.0, sigma_i=2.0, k=0.04, thresh=1e-6)
    assert len(kps) > 0
    oracle = harris_dense_maxima(
        img.data.astype(np.float64), sigma_d=1.0, sigma_i=2.0, k=0.04, thresh=1e-6, radius=2
    )
    for kp in kps:
        dmin = min(math.hypot(kp.x - x, kp.y - y) for x, y in oracle)
        assert dmin <= 1.0


def test_step_edge_yields_nothing():
    a = np.full((64, 64), 0.1, dtype=np.float32)
    a[:, 32:] = 0.9
    assert len(detect_harris(ImageGray(a))) == 0


def test_response_invariant_to_intensity_shift(rng):
    a = (rng.rand(48, 48) * 0.5).astype(np.float32)
    r1 = harris_response(ImageGray(a), 1.0, 2.0, 0.04)
    r2 = harris_response(ImageGray(a + 0.3), 1.0, 2.0, 0.04)
    assert np.abs(r1 - r2).max() < 1e-6


def test_threshold_monotonicity(rng):
    for _ in range(20):
        img = ImageGray(rng.rand(48, 48).astype(np.float32))
        counts = [len(detect_harris(img, thresh=t)) for t in (1e-7, 1e-6, 1e-5, 1e-4)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_border_margin(rng):
    sigma_i = 2.0
    margin = int(math.ceil(3 * sigma_i)) + 1
    for _ in range(5):
        img = ImageGray(rng.rand(48, 48).astype(np.float32))
        for kp in detect_harris(img, sigma_i=sigma_i):
            assert margin - 0.5 <= kp.x <= 47 - margin + 0.5
            assert margin - 0.5 <= kp.y <= 47 - margin + 0.5


def test_subpixel_offsets_clamped(rng):
    for _ in range(50):
        patch = rng.rand(3, 3)
        dx, dy = quadratic_offset_2d(patch)
        assert -0.5 <= dx <= 0.5
        assert -0.5 <= dy <= 0.5


def test_quadratic_offset_recovers_parabola_peak():
    xs = np.arange(-1.0, 2.0)
    true_dx, true_dy = 0.2, -0.3
    patch = -((xs[None, :] - true_dx) ** 2) - (xs[:, None] - true_dy) ** 2
    dx, dy = quadratic_offset_2d(patch)
    assert dx == pytest.approx(true_dx, abs=1e-12)
    assert dy == pytest.approx(true_dy, abs=1e-12)


def test_deterministic(rng):
    img = ImageGray(rng.rand(48, 48).astype(np.float32))
    assert detect_harris(img) == detect_harris(img)
