"""repeatkit: interest-point detector repeatability under ground-truth geometry.

From-scratch FAST, Harris, and DoG detectors; keypoint correspondence via
depth-map reprojection or homographies; per-class repeatability; a synthetic
scene generator with exact ground truth; and a sequence evaluation protocol
with CSV/JSON reports.
"""

from .detectors import DetectorConfig, detect, detect_dog, detect_fast, detect_harris
from .frames import FrameBundle, LabelMap
from .geometry import (
    CameraIntrinsics,
    DepthMap,
    Homography,
    Pose,
    apply_homography,
    backproject,
    plane_induced_homography,
    project,
    relative_pose,
    reproject_keypoint,
)
from .image import ImageGray, gaussian_blur, gradients, nms_2d, select_top_n
from .keypoints import Keypoint, KeypointSet
from .matching import (
    EvalParams,
    PairResult,
    evaluate_pair,
    find_correspondences,
    repeatability,
    visibility_sets,
)
from .protocol import ProtocolConfig, SequenceReport, emit_reports, run_sequence
from .semantics import ClassReport, class_of, per_class_repeatability
from .synthetic import SceneSpec, ground_truth_homography, make_trajectory, render

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "ClassReport",
    "DepthMap",
    "DetectorConfig",
    "EvalParams",
    "FrameBundle",
    "Homography",
    "ImageGray",
    "Keypoint",
    "KeypointSet",
    "LabelMap",
    "PairResult",
    "Pose",
    "ProtocolConfig",
    "SceneSpec",
    "SequenceReport",
    "apply_homography",
    "backproject",
    "class_of",
    "detect",
    "detect_dog",
    "detect_fast",
    "detect_harris",
    "emit_reports",
    "evaluate_pair",
    "find_correspondences",
    "gaussian_blur",
    "gradients",
    "ground_truth_homography",
    "make_trajectory",
    "nms_2d",
    "per_class_repeatability",
    "plane_induced_homography",
    "project",
    "relative_pose",
    "render",
    "repeatability",
    "reproject_keypoint",
    "run_sequence",
    "select_top_n",
    "visibility_sets",
]
