"""Ground-truth closed-loop world for planar pushing episodes.

Executes planned pushes with fine substeps on the true (latent) object state
and emits noisy pose observations in place of a perception stack.  Latent
properties (COM offset, limit-surface parameter, friction) are drawn once per
episode from a seeded generator, so every trajectory is exactly reproducible
from its configuration and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import ObjectState, PushAction, contact_at, rollout_from_contact
from .geometry import (Pose2, ShapeContour, contact_query, load_shape,
                       world_contour, wrap_angle)

TRUE_SUBSTEP = 0.0005  # m; ground-truth integration step
APPROACH_BACKOFF = 0.05  # m; pusher starts this far behind the intended contact

COM_MODES = ("centered", "uniform")


@dataclass(frozen=True)
class WorldConfig:
    """Episode configuration: object, latent-parameter ranges, observation noise."""

    object_name: str
    com_mode: str = "centered"
    l_range: tuple = (0.02, 0.06)
    mu_range: tuple = (0.2, 0.6)
    obs_noise_pos: float = 0.002
    obs_noise_theta: float = math.radians(1.0)
    rng_seed: int = 0
    arc_step: float = 0.005

    def __post_init__(self):
        if self.com_mode not in COM_MODES:
            raise ValueError(f"com_mode must be one of {COM_MODES}")
        for name, rng in (("l_range", self.l_range), ("mu_range", self.mu_range)):
            lo, hi = rng
            if not (0 < lo <= hi):
                raise ValueError(f"{name} must be positive and ordered")
        if self.obs_noise_pos < 0 or self.obs_noise_theta < 0:
            raise ValueError("noise std-devs must be >= 0")


@dataclass(frozen=True)
class Observation:
    pose: Pose2
    step_index: int


def _sample_com_inside(contour: ShapeContour, rng: np.random.Generator) -> np.ndarray:
    lo = contour.vertices.min(axis=0)
    hi = contour.vertices.max(axis=0)
    for _ in range(10000):
        p = lo + rng.random(2) * (hi - lo)
        if contour.contains(p):
            return p
    raise RuntimeError("COM rejection sampling failed")


class World:
    """One pushing episode: true state, seeded noise, push execution."""

    def __init__(self, contour: ShapeContour, state: ObjectState,
                 config: WorldConfig, rng: np.random.Generator):
        self.contour = contour
        self.state = state
        self.config = config
        self._rng = rng
        self._obs_count = 0

    def observe(self) -> Observation:
        """Noisy pose observation of the current true state."""
        cfg = self.config
        noise_p = self._rng.normal(0.0, 1.0, size=2) * cfg.obs_noise_pos
        noise_t = self._rng.normal(0.0, 1.0) * cfg.obs_noise_theta
        pose = Pose2(self.state.pose.position + noise_p,
                     self.state.pose.theta + noise_t)
        obs = Observation(pose, self._obs_count)
        self._obs_count += 1
        return obs

    def execute(self, action: PushAction, believed_pose: Pose2 | None = None) -> Observation:
        """Execute a planned push on the true state and return an observation.

        The action was planned against the contour posed at `believed_pose`;
        the pusher is placed in the world accordingly and its approach ray is
        re-anchored onto the true object surface.  A ray that misses (pose
        estimate too wrong) wastes the step: no motion, observation returned.
        """
        if believed_pose is None:
            believed_pose = self.state.pose
        contour = self.contour
        x_b = believed_pose.transform(contour.points[action.contact_index])
        n_b = believed_pose.rotate(contour.normals[action.contact_index])
        a = action.angle
        c, s = math.cos(a), math.sin(a)
        u_dir = np.array([-(c * n_b[0] - s * n_b[1]), -(s * n_b[0] + c * n_b[1])])
        origin = x_b - APPROACH_BACKOFF * u_dir
        hit = contact_query(world_contour(contour, self.state.pose), origin, u_dir)
        travel = APPROACH_BACKOFF + action.length
        if hit is not None and hit.distance < travel:
            contact = contact_at(contour, hit.arclen)
            push_len = travel - hit.distance
            _, self.state, _ = rollout_from_contact(
                self.state, contour, contact, u_dir, push_len, TRUE_SUBSTEP)
        return self.observe()


def spawn(config: WorldConfig, initial_theta: float = 0.0) -> World:
    """Create a world with the object at the workspace center.

    Latent c, l, mu are drawn from the seeded generator in a fixed order
    (COM, l, mu), so identical configurations reproduce identical episodes.
    """
    contour = load_shape(config.object_name, config.arc_step)
    rng = np.random.default_rng(np.random.SeedSequence(config.rng_seed))
    if config.com_mode == "centered":
        com = np.zeros(2)
    else:
        com = _sample_com_inside(contour, rng)
    l = rng.uniform(*config.l_range)
    mu = rng.uniform(*config.mu_range)
    state = ObjectState(Pose2(np.zeros(2), wrap_angle(initial_theta)), com, l, mu)
    return World(contour, state, config, rng)


def goal_reached(state_or_pose, goal: Pose2, tol_pos: float, tol_theta: float) -> bool:
    """True when both position and orientation are strictly within tolerance."""
    pose = getattr(state_or_pose, "pose", state_or_pose)
    pos_err = float(np.linalg.norm(pose.position - goal.position))
    theta_err = abs(wrap_angle(pose.theta - goal.theta))
    return pos_err < tol_pos and theta_err < tol_theta
