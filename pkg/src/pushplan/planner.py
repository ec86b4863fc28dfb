"""Greedy per-step push planner.

Each step splits the problem in two: propose candidate contact points
(affordance-guided softmax sampling, a geometric heuristic, or uniform
random), then optimize the push motion at each candidate and return the
action with the lowest pose-progress error.  Scores are errors throughout:
lower is better, and the softmax samples with probability proportional to
exp(-score / temperature).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .affordance import (DEFAULT_PUSH_SET, LAMBDA_ROTATION, AffordanceMap,
                         compute_affordances, goal_motion, score_field, score_push)
from .dynamics import ObjectState, PushAction, contact_at_sample, push_substep
from .geometry import Pose2, ShapeContour, wrap_angle, world_contour

BASE_ANGLES = tuple(math.radians(a) for a in (-60.0, -30.0, 0.0, 30.0, 60.0))
ANGLE_SPACING = math.radians(30.0)

SAMPLERS = ("ana", "geo", "rdn")
OPTIMIZERS = ("rollout", "direct")

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0

GEO_SMALL_ROTATION = math.radians(2.0)
GEO_BAND_WIDTH = 0.02  # m; corridor around the goal line for near-pure translation


@dataclass(frozen=True)
class PlannerConfig:
    k: int = 3
    sampler: str = "ana"
    optimizer: str = "rollout"
    temperature: float = 2.0   # score units (2 mm-equivalent)
    lambda_rot: float = LAMBDA_ROTATION
    max_len: float = 0.05
    min_len: float = 0.01
    substep: float = 0.005
    length_search: str = "prefix"   # or "golden"
    rng_seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")
        if not (0 < self.min_len < self.max_len):
            raise ValueError("need 0 < min_len < max_len")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"sampler must be one of {SAMPLERS}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"optimizer must be one of {OPTIMIZERS}")
        if self.length_search not in ("prefix", "golden"):
            raise ValueError("length_search must be 'prefix' or 'golden'")


@dataclass(frozen=True)
class GoalSpec:
    goal_pose: Pose2
    tol_pos: float
    tol_theta: float

    def __post_init__(self):
        if self.tol_pos <= 0 or self.tol_theta <= 0:
            raise ValueError("tolerances must be positive")


def sample_contacts_affordance(scores: np.ndarray, k: int, temperature: float,
                               rng: np.random.Generator) -> np.ndarray:
    """Sample k distinct indices with probability ∝ exp(-score / temperature).

    Uses the Gumbel top-k trick, which realizes exact softmax sampling
    without replacement and stays stable when scores spread widely.
    """
    n = len(scores)
    k = min(k, n)
    keys = -np.asarray(scores) / temperature + rng.gumbel(size=n)
    return np.argsort(-keys, kind="stable")[:k]


def sample_contacts_rdn(contour: ShapeContour, k: int,
                        rng: np.random.Generator) -> np.ndarray:
    """Uniform over all contour points, without replacement."""
    n = len(contour)
    return rng.choice(n, size=min(k, n), replace=False)


def sample_contacts_geo(contour_world: ShapeContour, pose: Pose2, goal: GoalSpec,
                        k: int, rng: np.random.Generator) -> np.ndarray:
    """Geometric heuristic: sample from the quadrant that affords the goal.

    With m the line from the current position p to the goal position d,
    candidates must lie (a) behind the normal of m through p (the side from
    which pushing moves the object toward d) and (b) right of m for CCW
    rotation error, left for CW.  For rotation errors below 2 degrees the
    side constraint is replaced by a 2 cm corridor around m.  Empty regions
    fall back to (a) alone, then to the whole contour.
    """
    n = len(contour_world.points)
    k = min(k, n)
    p = pose.position
    d = goal.goal_pose.position
    to_goal = d - p
    dist = float(np.linalg.norm(to_goal))
    rot_err = wrap_angle(goal.goal_pose.theta - pose.theta)

    tiers = []
    if dist >= 1e-9:
        m_hat = to_goal / dist
        rel = contour_world.points - p
        along = rel @ m_hat
        lateral = m_hat[0] * rel[:, 1] - m_hat[1] * rel[:, 0]  # cross(m, rel): >0 left
        behind = along <= 0.0
        if abs(rot_err) < GEO_SMALL_ROTATION:
            region = behind & (np.abs(lateral) <= GEO_BAND_WIDTH)
        elif rot_err > 0:   # CCW: push right of m
            region = behind & (lateral < 0.0)
        else:
            region = behind & (lateral > 0.0)
        tiers = [np.flatnonzero(region), np.flatnonzero(behind)]
    tiers.append(np.arange(n))

    chosen = np.empty(0, dtype=int)
    for tier in tiers:
        avail = np.setdiff1d(tier, chosen)
        take = min(k - len(chosen), len(avail))
        if take > 0:
            chosen = np.concatenate([chosen, rng.choice(avail, size=take,
                                                        replace=False)])
        if len(chosen) == k:
            break
    return chosen


def _prefix_predictions(state: ObjectState, contour: ShapeContour, index: int,
                        angle: float, max_len: float, substep: float):
    """Cumulative motion after each substep of a straight push.

    Returns (lengths, dpos, dtheta) arrays of size ceil(max_len/substep);
    after contact loss the motion freezes (the pusher keeps traveling).
    """
    n_steps = max(1, math.ceil(max_len / substep - 1e-12))
    h = max_len / n_steps
    contact = contact_at_sample(contour, index)
    a = state.pose.theta + angle
    c, s = math.cos(a), math.sin(a)
    nx, ny = contact.normal
    step_vec = np.array([-(c * nx - s * ny), -(s * nx + c * ny)]) * h
    p0 = state.pose.position
    lengths = (np.arange(n_steps) + 1) * h
    dpos = np.zeros((n_steps, 2))
    dtheta = np.zeros(n_steps)
    th_acc = 0.0
    for i in range(n_steps):
        if contact is not None:
            prev_theta = state.pose.theta
            state, contact, _ = push_substep(state, contour, contact, step_vec)
            th_acc += wrap_angle(state.pose.theta - prev_theta)
        dpos[i] = state.pose.position - p0
        dtheta[i] = th_acc
    return lengths, dpos, dtheta


def _best_prefix(lengths, scores, min_len):
    """Index of the best-scoring prefix no shorter than min_len."""
    valid = np.flatnonzero(lengths >= min_len - 1e-12)
    if len(valid) == 0:
        valid = np.array([len(lengths) - 1])
    return int(valid[np.argmin(scores[valid])])


def _interpolate_angle(angles, scores, best: int) -> float:
    """Quadratic-fit argmin over three (angle, score) points, clamped to the
    bracketing interval; boundary best uses the two inner neighbours."""
    if best == 0:
        idx = [0, 1, 2]
        lo, hi = angles[0], angles[1]
    elif best == len(angles) - 1:
        idx = [best - 2, best - 1, best]
        lo, hi = angles[best - 1], angles[best]
    else:
        idx = [best - 1, best, best + 1]
        lo, hi = angles[best - 1], angles[best + 1]
    s0, s1, s2 = (scores[i] for i in idx)
    x0, x1, x2 = (angles[i] for i in idx)
    curvature = s0 - 2.0 * s1 + s2
    if curvature <= 1e-12:
        vertex = angles[best]
    else:
        vertex = x1 + 0.5 * (x2 - x0) / 2.0 * (s0 - s2) / curvature
    return min(max(vertex, lo), hi)


def _golden_section(f, lo: float, hi: float, xtol: float) -> float:
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > xtol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimize_push(state: ObjectState, contour: ShapeContour, index: int,
                  goal_motion_: tuple, config: PlannerConfig):
    """Optimize push direction and length at one contact point.

    Rolls out five base directions in substeps, truncates each at its
    best-scoring prefix, interpolates the direction through the best base and
    its angular neighbours, then re-optimizes the length of the interpolated
    direction.  Returns (PushAction, score).
    """
    v_d, dth_d = goal_motion_
    base_scores = np.empty(len(BASE_ANGLES))
    base_lengths = np.empty(len(BASE_ANGLES))
    all_lost = True
    for j, angle in enumerate(BASE_ANGLES):
        lengths, dpos, dtheta = _prefix_predictions(
            state, contour, index, angle, config.max_len, config.substep)
        if np.any(np.abs(dpos) > 0) or np.any(np.abs(dtheta) > 0):
            all_lost = False
        scores = score_push(v_d, dth_d, dpos, dtheta, config.lambda_rot)
        b = _best_prefix(lengths, scores, config.min_len)
        base_scores[j] = scores[b]
        base_lengths[j] = lengths[b]
    if all_lost:
        # nothing makes contact: report the normal-direction minimum push
        zero_score = float(score_push(v_d, dth_d, np.zeros(2), 0.0, config.lambda_rot))
        return PushAction(index, 0.0, config.min_len), zero_score

    best = int(np.argmin(base_scores))
    angle = _interpolate_angle(BASE_ANGLES, base_scores, best)

    lengths, dpos, dtheta = _prefix_predictions(
        state, contour, index, angle, config.max_len, config.substep)
    scores = score_push(v_d, dth_d, dpos, dtheta, config.lambda_rot)
    if config.length_search == "prefix":
        b = _best_prefix(lengths, scores, config.min_len)
        length, s_star = float(lengths[b]), float(scores[b])
    else:
        def f(ln):
            _, dp, dt = _prefix_predictions(state, contour, index, angle, ln,
                                            config.substep)
            return float(score_push(v_d, dth_d, dp[-1], dt[-1], config.lambda_rot))
        length = _golden_section(f, config.min_len, config.max_len, 1e-3)
        s_star = f(length)
    if s_star > base_scores[best]:
        # the fitted direction may lose to the discrete best; never return it then
        angle, length, s_star = (BASE_ANGLES[best], float(base_lengths[best]),
                                 float(base_scores[best]))
    return PushAction(index, float(angle), length), float(s_star)


def optimize_push_direct(amap: AffordanceMap, index: int, goal_motion_: tuple,
                         config: PlannerConfig):
    """Pick direction and length from the one-step affordance row alone.

    Uses the long-push predictions for each direction and optimizes length by
    linearly rescaling push and prediction toward the desired translation.
    Returns (PushAction, score).
    """
    v_d, dth_d = goal_motion_
    angles = amap.push_set.angles
    lengths = amap.push_set.lengths
    long_j = int(np.argmax(lengths))
    ref_len = lengths[long_j]
    n_len = len(lengths)
    best = None
    for a_idx, angle in enumerate(angles):
        j = a_idx * n_len + long_j
        v_p = amap.dpos[index, j]
        th_p = amap.dtheta[index, j]
        norm2 = float(v_p @ v_p)
        if norm2 < 1e-16 and abs(th_p) < 1e-12:
            continue
        alpha = float(np.asarray(v_d) @ v_p) / norm2 if norm2 >= 1e-16 else 1.0
        length = min(max(alpha * ref_len, config.min_len), config.max_len)
        beta = length / ref_len
        s = float(score_push(v_d, dth_d, beta * v_p, beta * th_p, config.lambda_rot))
        if best is None or s < best[0]:
            best = (s, angle, length)
    if best is None:
        zero_score = float(score_push(v_d, dth_d, np.zeros(2), 0.0, config.lambda_rot))
        return PushAction(index, 0.0, config.min_len), zero_score
    s, angle, length = best
    return PushAction(index, float(angle), float(length)), s


def plan_step(state: ObjectState, contour: ShapeContour, goal: GoalSpec,
              config: PlannerConfig, rng: np.random.Generator,
              amap: AffordanceMap | None = None) -> PushAction:
    """One planning step: sample candidate contacts, optimize each, return the
    action with the lowest score."""
    gm = goal_motion(state.pose, goal.goal_pose)
    needs_map = config.sampler == "ana" or config.optimizer == "direct"
    if needs_map and amap is None:
        amap = compute_affordances(contour, state, "one-step")

    if config.sampler == "ana":
        scores = score_field(amap, gm, config.lambda_rot)
        indices = sample_contacts_affordance(scores, config.k, config.temperature, rng)
    elif config.sampler == "geo":
        indices = sample_contacts_geo(world_contour(contour, state.pose),
                                      state.pose, goal, config.k, rng)
    else:
        indices = sample_contacts_rdn(contour, config.k, rng)

    best_action, best_score = None, math.inf
    for idx in indices:
        if config.optimizer == "rollout":
            action, s = optimize_push(state, contour, int(idx), gm, config)
        else:
            action, s = optimize_push_direct(amap, int(idx), gm, config)
        if s < best_score:
            best_action, best_score = action, s
    return best_action
