"""Shared fixtures: canonical synthetic scenes used across the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from repeatkit.geometry import CameraIntrinsics
from repeatkit.synthetic import SceneSpec, make_trajectory, write_scene_dataset


def default_intrinsics(width: int, height: int, fov_scale: float = 0.8) -> CameraIntrinsics:
    return CameraIntrinsics(
        fx=fov_scale * width,
        fy=fov_scale * width,
        cx=(width - 1) / 2.0,
        cy=(height - 1) / 2.0,
    )


def corridor_scene(n_frames: int, width: int = 160, height: int = 120, seed: int = 11) -> SceneSpec:
    return SceneSpec(
        kind="corridor",
        trajectory=make_trajectory("forward", n_frames, spacing=1.0),
        intrinsics=default_intrinsics(width, height),
        width=width,
        height=height,
        noise_seed=seed,
        noise_scale=0.7,
    )


def plane_scene(n_frames: int, width: int = 128, height: int = 96, seed: int = 5) -> SceneSpec:
    """Plane facing the cameras, mixed rotation + translation trajectory."""
    return SceneSpec(
        kind="plane",
        trajectory=make_trajectory("arc", n_frames, yaw_step_deg=0.6, dx=0.08, dz=0.05),
        intrinsics=default_intrinsics(width, height),
        width=width,
        height=height,
        noise_seed=seed,
        noise_scale=0.4,
        plane_depth=6.0,
    )


def boxes_scene(n_frames: int, width: int = 160, height: int = 120, seed: int = 23) -> SceneSpec:
    return SceneSpec(
        kind="boxes",
        trajectory=make_trajectory("strafe", n_frames, spacing=0.5),
        intrinsics=default_intrinsics(width, height),
        width=width,
        height=height,
        noise_seed=seed,
        noise_scale=0.5,
    )


@pytest.fixture(scope="session")
def corridor_dataset_41(tmp_path_factory):
    """On-disk 41-frame corridor fixture for protocol-shape tests."""
    out = tmp_path_factory.mktemp("corridor41")
    spec = corridor_scene(41, width=96, height=72)
    manifest_path = write_scene_dataset(spec, out)
    return manifest_path


@pytest.fixture(scope="session")
def corridor_dataset_small(tmp_path_factory):
    """12-frame corridor fixture for CLI and determinism tests."""
    out = tmp_path_factory.mktemp("corridor12")
    spec = corridor_scene(12, width=96, height=72, seed=4)
    manifest_path = write_scene_dataset(spec, out)
    return manifest_path


@pytest.fixture
def rng():
    return np.random.RandomState(1234)
