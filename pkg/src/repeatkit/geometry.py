"""Pinhole camera model, rigid transforms, and depth-based reprojection.

The correspondence construction lifts a pixel with known z-depth d to the
camera-frame point (d*xn, d*yn, d), where (xn, yn) are normalized coordinates,
transforms it by the ground-truth relative pose, and projects it into the
second view. Everything is a pure function over immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCameraError, DegenerateMappingError, InvalidDepthError

_ORTHO_TOL = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole calibration: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class Pose:
    """Rigid transform X_out = R @ X_in + t.

    Dataset poses use the camera-to-world convention (X_world = R X_cam + t),
    so `translation` is the camera center in world coordinates.
    """

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {r.shape}")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(t))):
            raise ValueError("pose entries must be finite")
        err = np.abs(r.T @ r - np.eye(3)).max()
        if err > _ORTHO_TOL:
            raise ValueError(f"rotation not orthonormal (max deviation {err:.3e})")
        det = np.linalg.det(r)
        if abs(det - 1.0) > _ORTHO_TOL:
            raise ValueError(f"rotation must have determinant +1, got {det}")
        r.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform a (3,) point or (N, 3) array of points."""
        p = np.asarray(points, dtype=np.float64)
        if p.ndim == 1:
            return self.rotation @ p + self.translation
        return p @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -rt @ self.translation)


def orthonormalize_rotation(r: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix in the Frobenius sense (via SVD)."""
    u, _, vt = np.linalg.svd(np.asarray(r, dtype=np.float64))
    out = u @ vt
    if np.linalg.det(out) < 0:
        u = u.copy()
        u[:, -1] = -u[:, -1]
        out = u @ vt
    return out


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel z-depth in meters; 0 or NaN marks missing depth."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise ValueError(f"depth map must be 2D, got shape {v.shape}")
        finite = np.isfinite(v)
        if np.any(finite & (v < 0)):
            raise ValueError("depth values must be positive, zero, or NaN")
        if np.any(np.isinf(v)):
            raise ValueError("depth values must not be infinite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def valid_mask(self) -> np.ndarray:
        v = self.values
        return np.isfinite(v) & (v > 0)

    def sample(self, x: float, y: float) -> float | None:
        """Bilinear depth at a sub-pixel location, or None when missing.

        Only the valid pixels of the 4-neighbor stencil contribute (weights
        renormalized); fewer than 2 valid neighbors means missing. Stencil
        positions outside the raster count as invalid.
        """
        x0 = int(math.floor(x))
        y0 = int(math.floor(y))
        fx = x - x0
        fy = y - y0
        v = self.values
        h, w = v.shape
        total_w = 0.0
        total_v = 0.0
        n_valid = 0
        for (xi, yi, wt) in (
            (x0, y0, (1 - fx) * (1 - fy)),
            (x0 + 1, y0, fx * (1 - fy)),
            (x0, y0 + 1, (1 - fx) * fy),
            (x0 + 1, y0 + 1, fx * fy),
        ):
            if 0 <= xi < w and 0 <= yi < h:
                d = v[yi, xi]
                if math.isfinite(d) and d > 0:
                    n_valid += 1
                    total_w += wt
                    total_v += wt * d
        if n_valid < 2 or total_w <= 0.0:
            return None
        return total_v / total_w


@dataclass(frozen=True)
class Homography:
    """3x3 nonsingular plane-to-plane mapping, normalized so h33 = 1."""

    matrix: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.matrix, dtype=np.float64)
        if h.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("homography entries must be finite")
        if abs(h[2, 2]) > 1e-300:
            h = h / h[2, 2]
        if abs(np.linalg.det(h)) <= 1e-12:
            raise DegenerateMappingError("homography is singular")
        h.flags.writeable = False
        object.__setattr__(self, "matrix", h)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


def backproject(p: tuple[float, float], depth: float, k: CameraIntrinsics) -> np.ndarray:
    """Lift pixel p with z-depth d to the camera-frame point (d*xn, d*yn, d)."""
    if not (math.isfinite(depth) and depth > 0):
        raise InvalidDepthError(f"depth must be positive and finite, got {depth}")
    xn = (p[0] - k.cx) / k.fx
    yn = (p[1] - k.cy) / k.fy
    return np.array([depth * xn, depth * yn, depth], dtype=np.float64)


def project(point: np.ndarray, k: CameraIntrinsics) -> tuple[float, float]:
    """Project a camera-frame 3D point to sub-pixel image coordinates."""
    x, y, z = float(point[0]), float(point[1]), float(point[2])
    if not z > 0:
        raise BehindCameraError(f"point has non-positive depth z={z}")
    return (k.fx * x / z + k.cx, k.fy * y / z + k.cy)


def relative_pose(pose1: Pose, pose2: Pose) -> Pose:
    """Transform T with X_cam2 = T(X_cam1), from camera-to-world poses."""
    r2t = pose2.rotation.T
    return Pose(r2t @ pose1.rotation, r2t @ (pose1.translation - pose2.translation))


def camera_distance(pose1: Pose, pose2: Pose) -> float:
    """Euclidean distance between camera centers, in meters."""
    return float(np.linalg.norm(pose1.translation - pose2.translation))


def reproject_keypoint(
    p1: tuple[float, float],
    depth1: DepthMap,
    t_1to2: Pose,
    k1: CameraIntrinsics,
    k2: CameraIntrinsics,
    size2: tuple[int, int],
) -> tuple[tuple[float, float], float] | None:
    """Map a pixel of image 1 into image 2 via its depth and the relative pose.

    Returns (p_star, z2) with the landing pixel and its depth in the camera-2
    frame, or None when the depth is missing, the point lands behind camera 2,
    or p_star falls outside the closed pixel grid [0, w2-1] x [0, h2-1].
    Raises ValueError if p1 itself is out of image-1 bounds.
    """
    w1, h1 = depth1.width, depth1.height
    if not (0.0 <= p1[0] <= w1 - 1 and 0.0 <= p1[1] <= h1 - 1):
        raise ValueError(f"pixel {p1} outside {w1}x{h1} image bounds")
    d = depth1.sample(p1[0], p1[1])
    if d is None:
        return None
    p_cam2 = t_1to2.apply(backproject(p1, d, k1))
    z2 = float(p_cam2[2])
    if z2 <= 0:
        return None
    p_star = project(p_cam2, k2)
    w2, h2 = size2
    if not (0.0 <= p_star[0] <= w2 - 1 and 0.0 <= p_star[1] <= h2 - 1):
        return None
    return p_star, z2


def apply_homography(h: Homography, p: tuple[float, float]) -> tuple[float, float]:
    """Map a pixel through a homography with perspective division."""
    m = h.matrix
    w = m[2, 0] * p[0] + m[2, 1] * p[1] + m[2, 2]
    if abs(w) < 1e-12:
        raise DegenerateMappingError(f"pixel {p} maps to the plane at infinity")
    x = (m[0, 0] * p[0] + m[0, 1] * p[1] + m[0, 2]) / w
    y = (m[1, 0] * p[0] + m[1, 1] * p[1] + m[1, 2]) / w
    return (x, y)


def plane_induced_homography(
    t_1to2: Pose,
    plane: tuple[np.ndarray, float],
    k1: CameraIntrinsics,
    k2: CameraIntrinsics,
) -> Homography:
    """Exact two-view mapping for a common plane: H = K2 (R - t n^T / d) K1^-1.

    The plane is given in the camera-1 frame as (unit normal n, distance d>0)
    with plane points X satisfying n . X + d = 0, i.e. n faces the camera.
    """
    n, d = np.asarray(plane[0], dtype=np.float64).reshape(3), float(plane[1])
    if not d > 0:
        raise ValueError(f"plane distance must be positive, got {d}")
    if abs(np.linalg.norm(n) - 1.0) > 1e-9:
        raise ValueError("plane normal must be a unit vector")
    r, t = t_1to2.rotation, t_1to2.translation
    core = r - np.outer(t, n) / d
    m = k2.matrix() @ core @ np.linalg.inv(k1.matrix())
    return Homography(m)
