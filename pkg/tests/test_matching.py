import math

import pytest

from repeatkit.detectors import DetectorConfig
from repeatkit.errors import ConfigError
from repeatkit.frames import FrameBundle
from repeatkit.geometry import backproject, project, relative_pose
from repeatkit.keypoints import Keypoint, KeypointSet
from repeatkit.matching import (
    EvalParams,
    PairResult,
    evaluate_pair,
    find_correspondences,
    repeatability,
    visibility_sets,
)
from repeatkit.synthetic import cast_rays, ground_truth_homography, render

from conftest import boxes_scene, corridor_scene, plane_scene
from oracles import optimal_match_count


def kpset(points, dims=(100, 100)):
    kps = tuple(Keypoint(float(x), float(y), 1.0) for x, y in points)
    return KeypointSet(kps, dims[0], dims[1])


def identity_map(p):
    return p


def test_eval_params_validation():
    with pytest.raises(ValueError):
        EvalParams(theta=0.0)
    with pytest.raises(ValueError):
        EvalParams(occlusion_tolerance=0.0)
    with pytest.raises(ValueError):
        EvalParams(correspondence_mode="affine")


def test_pair_result_invariants():
    with pytest.raises(ValueError):
        PairResult(matches=((0, 0, 0.1), (0, 1, 0.2)), n_d1=5, n_d2=5,
                   repeatability=0.4, camera_distance=1.0)
    with pytest.raises(ValueError):
        PairResult(matches=((0, 0, 0.1),), n_d1=0, n_d2=5,
                   repeatability=None, camera_distance=1.0)


def test_hand_enumerated_correspondences():
    kps1 = kpset([(0, 0), (10, 10), (20, 20)])
    kps2 = kpset([(1, 1), (50, 50), (20, 20)])
    matches = find_correspondences(kps1, kps2, [0, 1, 2], [0, 1, 2], identity_map, theta=2.5)
    # Enumerating all 9 pairs: only (0 -> (1,1), sqrt 2) and (2 -> (20,20), 0)
    # fall below theta; greedy order is ascending distance.
    assert matches == ((2, 2, 0.0), (0, 0, pytest.approx(math.sqrt(2.0))))


def test_theta_below_all_distances_gives_nothing():
    kps1 = kpset([(0, 0), (10, 10)])
    kps2 = kpset([(3, 3), (14, 13)])
    assert find_correspondences(kps1, kps2, [0, 1], [0, 1], identity_map, theta=1.0) == ()


def test_one_to_one_nearer_wins():
    kps1 = kpset([(0, 0), (1.5, 0)])
    kps2 = kpset([(1, 0)])
    matches = find_correspondences(kps1, kps2, [0, 1], [0], identity_map, theta=2.5)
    assert len(matches) == 1
    assert matches[0][0] == 1  # distance 0.5 beats distance 1.0
    # Exact tie: lexicographic (i, j) order picks the smaller index.
    kps1 = kpset([(0, 0), (2, 0)])
    matches = find_correspondences(kps1, kps2, [0, 1], [0], identity_map, theta=2.5)
    assert len(matches) == 1
    assert matches[0][0] == 0


def test_theta_cutoff_is_strict():
    kps1 = kpset([(0, 0)])
    kps2 = kpset([(2.5, 0)])
    assert find_correspondences(kps1, kps2, [0], [0], identity_map, theta=2.5) == ()


def test_greedy_never_beats_optimal_assignment(rng):
    for _ in range(50):
        n1 = int(rng.randint(1, 11))
        n2 = int(rng.randint(1, 11))
        p1 = rng.uniform(0, 10, (n1, 2))
        p2 = rng.uniform(0, 10, (n2, 2))
        theta = 2.5
        kps1 = kpset(p1, dims=(20, 20))
        kps2 = kpset(p2, dims=(20, 20))
        matches = find_correspondences(
            kps1, kps2, range(n1), range(n2), identity_map, theta
        )
        cands = [
            (i, j)
            for i in range(n1)
            for j in range(n2)
            if math.hypot(p1[i, 0] - p2[j, 0], p1[i, 1] - p2[j, 1]) < theta
        ]
        optimal = optimal_match_count(cands, n1, n2)
        assert len(matches) <= optimal
        for i, j, dist in matches:
            assert dist < theta
        r = repeatability(len(matches), n1, n2)
        assert r is None or 0.0 <= r <= 1.0


def test_repeatability_arithmetic():
    assert repeatability(2, 3, 3) == pytest.approx(2.0 / 3.0)
    assert repeatability(0, 100, 50) == 0.0
    assert repeatability(5, 0, 7) is None
    assert repeatability(0, 0, 0) is None


def test_identity_pair_repeatability_is_exactly_one():
    spec = corridor_scene(2, width=96, height=72)
    bundle = render(spec, 0)
    for kind in ("fast", "harris", "dog"):
        cfg = DetectorConfig(kind=kind, max_points=500)
        result = evaluate_pair(bundle, bundle, cfg, EvalParams())
        assert result.n_d1 >= 1
        assert result.repeatability == 1.0
        assert result.camera_distance == 0.0


def test_visibility_identity_pair_keeps_valid_depth_points():
    spec = corridor_scene(2, width=96, height=72)
    bundle = render(spec, 0)
    cfg = DetectorConfig(kind="fast", max_points=300)
    from repeatkit.detectors import detect

    kps = detect(bundle.image, cfg)
    d1, d2 = visibility_sets(kps, kps, bundle, bundle, EvalParams())
    expected = [
        i for i, kp in enumerate(kps) if bundle.depth.sample(kp.x, kp.y) is not None
    ]
    assert d1 == expected
    assert d2 == expected


def test_keypoint_mapping_outside_other_image_is_excluded():
    spec = corridor_scene(6, width=96, height=72)
    b0, b5 = render(spec, 0), render(spec, 5)
    # Points near the image border in frame 0 leave the view after 5 m of
    # forward motion (the corridor expands outward).
    border_pts = kpset([(2.0, 36.0), (93.0, 36.0)], dims=(96, 72))
    d1, _ = visibility_sets(border_pts, border_pts, b0, b5, EvalParams())
    assert d1 == []


def test_occluded_point_excluded_by_depth_check():
    spec = boxes_scene(4)
    b0, b3 = render(spec, 0), render(spec, 3)
    t01 = relative_pose(b0.pose, b3.pose)

    wall_pts = []
    occluded_expect = []
    for y in range(10, 110, 7):
        for x in range(10, 150, 7):
            if b0.labels.values[y, x] != 2:  # wall only
                continue
            d = float(b0.depth.values[y, x])
            p_cam2 = t01.apply(backproject((float(x), float(y)), d, b0.intrinsics))
            if p_cam2[2] <= 0:
                continue
            px = project(p_cam2, b3.intrinsics)
            if not (3 <= px[0] <= 156 and 3 <= px[1] <= 116):
                continue
            # Ray-cast oracle: is the wall point the first hit from camera 3?
            world = b0.pose.apply(backproject((float(x), float(y)), d, b0.intrinsics))
            origin = b3.pose.translation
            direction = world - origin
            s, _, _, _ = cast_rays(spec, origin, direction.reshape(3, 1))
            visible = abs(float(s[0]) - 1.0) < 1e-6  # param 1.0 reaches the point
            wall_pts.append((float(x), float(y)))
            occluded_expect.append(not visible)

    assert any(occluded_expect), "fixture must contain occluded wall points"
    kps = kpset(wall_pts, dims=(160, 120))
    d1, _ = visibility_sets(kps, kps, b0, b3, EvalParams())
    visible_set = set(d1)
    agree = sum(
        1 for i, occ in enumerate(occluded_expect) if (i not in visible_set) == occ
    )
    assert agree / len(occluded_expect) >= 0.99


def test_depth_mode_requires_depth():
    spec = corridor_scene(2, width=96, height=72)
    b = render(spec, 0)
    stripped = FrameBundle(b.frame_id, b.image, None, b.pose, b.intrinsics, b.labels)
    pts = kpset([(40, 40)], dims=(96, 72))
    with pytest.raises(ConfigError):
        visibility_sets(pts, pts, stripped, stripped, EvalParams())


def test_homography_mode_requires_homography():
    spec = plane_scene(2)
    b0, b1 = render(spec, 0), render(spec, 1)
    pts = kpset([(40, 40)], dims=(128, 96))
    params = EvalParams(correspondence_mode="homography")
    with pytest.raises(ConfigError):
        visibility_sets(pts, pts, b0, b1, params)


def test_planar_scene_depth_equals_homography_mode():
    spec = plane_scene(4)
    b0, b2 = render(spec, 0), render(spec, 2)
    h = ground_truth_homography(spec, 0, 2)
    cfg = DetectorConfig(kind="fast", max_points=400)
    depth_res = evaluate_pair(b0, b2, cfg, EvalParams(correspondence_mode="depth"))
    hom_res = evaluate_pair(
        b0, b2, cfg, EvalParams(correspondence_mode="homography"), homography=h
    )
    assert depth_res.d1_indices == hom_res.d1_indices
    assert depth_res.d2_indices == hom_res.d2_indices
    assert {(i, j) for i, j, _ in depth_res.matches} == {(i, j) for i, j, _ in hom_res.matches}
    assert depth_res.repeatability == hom_res.repeatability


def test_disjoint_views_leave_repeatability_undefined():
    spec = boxes_scene(2)
    b0 = render(spec, 0)
    # Camera 2 turned 180 degrees: it sees only sky, and scene points fall
    # behind it.
    from repeatkit.geometry import Pose
    from repeatkit.synthetic import rotation_y

    flipped_pose = Pose(rotation_y(180.0), b0.pose.translation)
    spec2 = boxes_scene(2)
    b_flipped = render(
        type(spec2)(**{**spec2.__dict__, "trajectory": (flipped_pose, flipped_pose)}), 0
    )
    cfg = DetectorConfig(kind="fast", max_points=300)
    result = evaluate_pair(b0, b_flipped, cfg, EvalParams())
    assert result.n_d1 == 0
    assert result.n_d2 == 0
    assert result.repeatability is None


def test_matches_bounded_by_common_region(rng):
    spec = corridor_scene(3, width=96, height=72)
    b0, b1 = render(spec, 0), render(spec, 1)
    for kind in ("fast", "harris"):
        res = evaluate_pair(b0, b1, DetectorConfig(kind=kind, max_points=400), EvalParams())
        assert len(res.matches) <= min(res.n_d1, res.n_d2)
        assert res.repeatability is None or 0.0 <= res.repeatability <= 1.0
        for _i, _j, dist in res.matches:
            assert dist < 2.5
