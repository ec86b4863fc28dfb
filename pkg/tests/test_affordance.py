import math

import numpy as np
import pytest

from pushplan.affordance import (AffordanceMap, RepresentativePushSet,
                                 compute_affordances, goal_motion, score_field)
from pushplan.dynamics import ObjectState
from pushplan.geometry import Pose2, load_shape

SQUARE4 = load_shape("square", 0.004)
TRIANGLE = load_shape("triangle")


def centered_state(theta=0.0, l=0.05, mu=0.3, com=(0.0, 0.0)):
    return ObjectState(Pose2(np.zeros(2), theta), np.array(com), l, mu)


def face_center_index(contour, normal):
    match = np.flatnonzero(contour.normals @ np.asarray(normal) > 0.999)
    pts = contour.points[match]
    return int(match[np.argmin(np.linalg.norm(pts - pts.mean(axis=0), axis=1))])


NORMAL_5CM = 2 * 2 + 1  # angle index 2 (0 deg), length index 1 (5 cm)


def test_push_set_layout():
    ps = RepresentativePushSet()
    assert len(ps) == 10
    pushes = ps.pushes()
    assert len(pushes) == 10
    angles = sorted({a for a, _ in pushes})
    assert np.allclose(angles, np.radians([-60, -30, 0, 30, 60]))
    assert sorted({ln for _, ln in pushes}) == [0.01, 0.05]
    # angles symmetric about zero
    assert np.allclose(sorted(angles), -np.array(sorted(angles, reverse=True)))


def test_map_dimensions_and_snapshot():
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    assert amap.dpos.shape == (len(SQUARE4), 10, 2)
    assert amap.is_fresh(state)
    shifted = centered_state(com=(0.02, 0.0))
    assert not amap.is_fresh(shifted)


def test_face_centers_translate_under_normal_long_push():
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    for n in ([1, 0], [-1, 0], [0, 1], [0, -1]):
        i = face_center_index(SQUARE4, n)
        assert math.isclose(np.linalg.norm(amap.dpos[i, NORMAL_5CM]), 0.05,
                            rel_tol=1e-9)
        assert abs(amap.dtheta[i, NORMAL_5CM]) < 1e-9


def test_corner_contrast_one_step_vs_rollout():
    # near the triangle's sharp corners the one-step map promises large
    # translation while the substep rollout slides off and truncates
    state = centered_state()
    one = compute_affordances(TRIANGLE, state, "one-step")
    roll = compute_affordances(TRIANGLE, state, "rollout", substep=0.0005)
    divergent = roll.lost & ~one.lost
    assert divergent.any()
    i, j = np.argwhere(divergent)[0]
    assert np.linalg.norm(one.dpos[i, j]) > np.linalg.norm(roll.dpos[i, j])


def test_map_reacts_to_com_shift():
    state = centered_state()
    shifted = centered_state(com=(0.02, 0.0))
    m0 = compute_affordances(SQUARE4, state, "one-step")
    m1 = compute_affordances(SQUARE4, shifted, "one-step")
    off_axis = np.abs(m0.dtheta - m1.dtheta).max()
    assert off_axis > 1e-3


def test_one_step_equals_rollout_on_flat_sticking_cells():
    state = centered_state()
    one = compute_affordances(SQUARE4, state, "one-step")
    roll = compute_affordances(SQUARE4, state, "rollout", substep=0.0005)
    for n in ([1, 0], [-1, 0], [0, 1], [0, -1]):
        i = face_center_index(SQUARE4, n)
        for j in (NORMAL_5CM - 1, NORMAL_5CM):  # both lengths, normal push
            assert np.linalg.norm(one.dpos[i, j] - roll.dpos[i, j]) < 1e-6
            assert abs(one.dtheta[i, j] - roll.dtheta[i, j]) < 1e-6


def test_scores_nonnegative_and_min_at_least_motion():
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    scores = score_field(amap, (np.zeros(2), 0.0))
    assert (scores >= 0).all()
    motion = np.linalg.norm(amap.dpos, axis=2) * 1000 + 2 * np.degrees(np.abs(amap.dtheta))
    assert math.isclose(scores.min(), motion.min(axis=1).min(), rel_tol=1e-12)


def test_translation_goal_minimizes_at_opposite_face():
    # oracle: enumerate every point x push prediction
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    gm = goal_motion(state.pose, Pose2(np.array([0.20, 0.0]), 0.0))
    assert np.allclose(gm[0], [0.05, 0.0])  # capped at the max push length
    scores = score_field(amap, gm)
    i_best = int(np.argmin(scores))
    assert i_best == face_center_index(SQUARE4, [-1.0, 0.0])
    assert scores[i_best] < 1e-9


def test_lambda_scaling_leaves_exact_rotation_matches():
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    gm = (np.array([0.05, 0.0]), 0.0)
    s1 = score_field(amap, gm, lambda_rot=2.0)
    s2 = score_field(amap, gm, lambda_rot=4.0)
    best_push = np.argmin(
        np.linalg.norm(gm[0] - amap.dpos, axis=2) * 1000
        + 2.0 * np.degrees(np.abs(amap.dtheta - gm[1])), axis=1)
    exact_rot = np.abs(amap.dtheta[np.arange(len(SQUARE4)), best_push] - gm[1]) < 1e-12
    assert exact_rot.any()
    assert np.allclose(s1[exact_rot], s2[exact_rot])


def test_score_field_rigid_invariance():
    rng = np.random.default_rng(0)
    base = centered_state(com=(0.01, -0.005))
    amap0 = compute_affordances(SQUARE4, base, "one-step")
    v_d = np.array([0.03, 0.01])
    dth = 0.1
    s0 = score_field(amap0, (v_d, dth))
    for _ in range(5):
        shift = rng.normal(size=2)
        ang = rng.uniform(-math.pi, math.pi)
        pose = Pose2(shift, ang)
        moved = ObjectState(pose, base.com, base.limit_param, base.mu)
        amap1 = compute_affordances(SQUARE4, moved, "one-step")
        s1 = score_field(amap1, (pose.rotate(v_d), dth))
        assert np.allclose(s0, s1, atol=1e-9)


def test_goal_motion_caps():
    pose = Pose2(np.zeros(2), 0.0)
    v, dth = goal_motion(pose, Pose2(np.array([0.2, 0.0]), 1.0))
    assert np.allclose(v, [0.05, 0.0])
    assert math.isclose(dth, math.radians(15.0))
    v, dth = goal_motion(pose, Pose2(np.array([0.01, 0.0]), -0.1))
    assert np.allclose(v, [0.01, 0.0])
    assert math.isclose(dth, -0.1)


def test_prediction_accessor_and_csv(tmp_path):
    state = centered_state()
    amap = compute_affordances(SQUARE4, state, "one-step")
    pred = amap.prediction(3, 4)
    assert np.allclose(pred.delta_position, amap.dpos[3, 4])
    out = tmp_path / "map.csv"
    amap.dump_csv(out, SQUARE4)
    header = out.read_text().splitlines()[0]
    assert header == "index,x,y,push_id,dpx,dpy,dtheta,lost"
    assert len(out.read_text().splitlines()) == 1 + len(SQUARE4) * 10


def test_rejects_unknown_mode():
    with pytest.raises(ValueError):
        compute_affordances(SQUARE4, centered_state(), "magic")
