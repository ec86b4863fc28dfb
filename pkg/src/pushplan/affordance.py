"""Dense push-affordance maps over a contour.

Every contour sample is annotated with the predicted object motion for a
fixed set of representative pushes (five directions relative to the inward
normal, two lengths).  The map depends on the estimated object properties, so
it is cheap enough to recompute every planning step.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import MotionPrediction, ObjectState, PushAction, predict_one_step, rollout
from .geometry import Pose2, ShapeContour, wrap_angle

DEFAULT_ANGLES = tuple(math.radians(a) for a in (-60.0, -30.0, 0.0, 30.0, 60.0))
DEFAULT_LENGTHS = (0.01, 0.05)

GOAL_CAP_POS = 0.05           # m; per-step desired translation cap
GOAL_CAP_THETA = math.radians(15.0)

LAMBDA_ROTATION = 2.0         # rotation-error weight (degrees vs translation units)
TRANS_ERR_SCALE = 1000.0      # score translation unit: millimeters


@dataclass(frozen=True)
class RepresentativePushSet:
    """The fixed push set evaluated at every contour point."""

    angles: tuple = DEFAULT_ANGLES
    lengths: tuple = DEFAULT_LENGTHS

    def pushes(self) -> list[tuple[float, float]]:
        """(angle, length) pairs, angle-major (lengths cycle fastest)."""
        return [(a, ln) for a in self.angles for ln in self.lengths]

    def __len__(self) -> int:
        return len(self.angles) * len(self.lengths)


DEFAULT_PUSH_SET = RepresentativePushSet()


@dataclass(frozen=True)
class AffordanceMap:
    """Per contour point x per representative push: predicted object motion.

    `snapshot` records the (cx, cy, l, mu) the map was computed under; a map
    is stale once the belief has moved away from that snapshot.
    """

    dpos: np.ndarray      # (n, m, 2) object translation per push
    dtheta: np.ndarray    # (n, m) rotation per push
    lost: np.ndarray      # (n, m) contact lost during the push
    slide: np.ndarray     # (n, m) pusher slip
    snapshot: np.ndarray  # (4,) cx, cy, l, mu
    push_set: RepresentativePushSet = DEFAULT_PUSH_SET
    mode: str = "one-step"

    def __post_init__(self):
        for name in ("dpos", "dtheta", "lost", "slide", "snapshot"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_points(self) -> int:
        return self.dpos.shape[0]

    def prediction(self, index: int, push: int) -> MotionPrediction:
        return MotionPrediction(self.dpos[index, push], float(self.dtheta[index, push]),
                                bool(self.lost[index, push]), float(self.slide[index, push]))

    def is_fresh(self, state: ObjectState, tol: float = 1e-9) -> bool:
        current = np.array([state.com[0], state.com[1], state.limit_param, state.mu])
        return bool(np.all(np.abs(current - self.snapshot) <= tol))

    def dump_csv(self, path, contour: ShapeContour) -> None:
        """Debug dump for plotting per-point motion-magnitude fields."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["index", "x", "y", "push_id", "dpx", "dpy", "dtheta", "lost"])
            for i in range(self.n_points):
                x, y = contour.points[i]
                for j in range(self.dpos.shape[1]):
                    w.writerow([i, x, y, j, self.dpos[i, j, 0], self.dpos[i, j, 1],
                                self.dtheta[i, j], int(self.lost[i, j])])


def compute_affordances(contour: ShapeContour, state: ObjectState,
                        mode: str = "one-step",
                        push_set: RepresentativePushSet = DEFAULT_PUSH_SET,
                        substep: float = 0.005) -> AffordanceMap:
    """Fill the full |contour| x |push set| prediction grid.

    mode "one-step" uses the single-shot predictor; "rollout" integrates with
    substeps and is the accuracy reference.  Contact-lost entries carry the
    truncated motion.
    """
    if mode not in ("one-step", "rollout"):
        raise ValueError(f"unknown affordance mode {mode!r}")
    pushes = push_set.pushes()
    n, m = len(contour), len(pushes)
    dpos = np.zeros((n, m, 2))
    dtheta = np.zeros((n, m))
    lost = np.zeros((n, m), dtype=bool)
    slide = np.zeros((n, m))
    for i in range(n):
        for j, (angle, length) in enumerate(pushes):
            action = PushAction(i, angle, length)
            if mode == "one-step":
                pred = predict_one_step(state, contour, action)
            else:
                pred = rollout(state, contour, action, substep)
            dpos[i, j] = pred.delta_position
            dtheta[i, j] = pred.delta_theta
            lost[i, j] = pred.contact_lost
            slide[i, j] = pred.slide_distance
    snapshot = np.array([state.com[0], state.com[1], state.limit_param, state.mu])
    return AffordanceMap(dpos, dtheta, lost, slide, snapshot, push_set, mode)


def score_push(v_d, dtheta_d: float, dpos, dtheta,
               lambda_rot: float = LAMBDA_ROTATION,
               trans_scale: float = TRANS_ERR_SCALE):
    """Pose-progress error of predicted motion(s): ||v_d - v_p|| in
    millimeters plus lambda times the rotation error in degrees.

    Millimeters keep the per-step trade-off aligned with both the task scale
    (a 50 mm push cap against a 30-unit rotation cap) and the goal region
    (7.5 mm against 10 units), which a coarser translation unit does not.
    """
    dpos = np.asarray(dpos, dtype=float)
    trans_err = np.linalg.norm(np.asarray(v_d) - dpos, axis=-1) * trans_scale
    rot_err = np.abs(dtheta_d - np.asarray(dtheta)) * (180.0 / math.pi)
    return trans_err + lambda_rot * rot_err


def score_field(amap: AffordanceMap, goal_motion: tuple,
                lambda_rot: float = LAMBDA_ROTATION) -> np.ndarray:
    """Per-point score: best (lowest) push error over the representative set."""
    v_d, dtheta_d = goal_motion
    per_push = score_push(v_d, dtheta_d, amap.dpos, amap.dtheta, lambda_rot)
    return per_push.min(axis=1)


def goal_motion(current_pose: Pose2, goal_pose: Pose2,
                cap_pos: float = GOAL_CAP_POS,
                cap_theta: float = GOAL_CAP_THETA) -> tuple:
    """Remaining goal motion, capped in norm to the per-step reachable scale
    while preserving direction."""
    v = goal_pose.position - current_pose.position
    norm = float(np.linalg.norm(v))
    if norm > cap_pos:
        v = v * (cap_pos / norm)
    dth = wrap_angle(goal_pose.theta - current_pose.theta)
    dth = max(-cap_theta, min(cap_theta, dth))
    return v, dth
