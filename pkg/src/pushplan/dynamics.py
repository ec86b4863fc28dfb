"""Quasi-static point-contact pushing under the ellipsoidal limit-surface model.

The object rests on a support plane; pushing forces are large enough to move
it but not to accelerate it, so contact forces map directly to object twists.
The limit surface is the standard ellipsoid parameterized by l, the ratio of
maximum frictional torque to maximum frictional force (meters).  For a force
f applied at contact offset r from the COM the resulting twist is

    v = f,    omega = (r x f) / l**2        (up to a common positive scale)

which inverts, for a sticking contact with pusher displacement u, to

    denom = l^2 + rx^2 + ry^2
    vx = ((l^2 + rx^2) ux + rx ry uy) / denom
    vy = (rx ry ux + (l^2 + ry^2) uy) / denom
    omega = (rx vy - ry vx) / l^2

All rollouts integrate this one substep at a time, tracking pusher slip along
the contour and contact loss; the one-step predictor applies the same contact
resolution once over the whole push and therefore cannot see either effect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import Pose2, ShapeContour, wrap_angle

PUSHER_SPEED = 0.02  # m/s, constant for all pushes

MIN_LIMIT_PARAM = 1e-4  # below this the omega = m/l^2 map degenerates
MAX_PUSH_ANGLE = math.radians(75.0)

_STICK, _SLIDE, _LOST = 0, 1, 2


@dataclass(frozen=True)
class ObjectState:
    """Full physical state of the pushed object.

    com is the offset c of the centre of mass from the object-frame origin;
    limit_param is l; mu the pusher-object friction coefficient.
    """

    pose: Pose2
    com: np.ndarray
    limit_param: float
    mu: float

    def __post_init__(self):
        com = np.asarray(self.com, dtype=float).copy()
        com.flags.writeable = False
        object.__setattr__(self, "com", com)
        if not (MIN_LIMIT_PARAM <= self.limit_param <= 0.5):
            raise ValueError(f"limit_param {self.limit_param} outside [{MIN_LIMIT_PARAM}, 0.5]")
        if not (0.0 < self.mu <= 2.0):
            raise ValueError(f"mu {self.mu} outside (0, 2]")

    def com_world(self) -> np.ndarray:
        return self.pose.transform(self.com)


@dataclass(frozen=True)
class PushAction:
    """Straight pusher motion at a contour sample.

    angle is the push direction relative to the inward surface normal
    (positive = CCW); length is the pusher travel in meters.
    """

    contact_index: int
    angle: float
    length: float
    speed: float = PUSHER_SPEED

    def __post_init__(self):
        if abs(self.angle) > MAX_PUSH_ANGLE + 1e-9:
            raise ValueError(f"push angle {self.angle} beyond ±75°")
        if self.length <= 0:
            raise ValueError("push length must be positive")


@dataclass(frozen=True)
class MotionPrediction:
    """Net object motion for one push; motion up to separation if contact was lost."""

    delta_position: np.ndarray
    delta_theta: float
    contact_lost: bool
    slide_distance: float

    def __post_init__(self):
        dp = np.asarray(self.delta_position, dtype=float).copy()
        dp.flags.writeable = False
        object.__setattr__(self, "delta_position", dp)


@dataclass(frozen=True)
class Contact:
    """Pusher contact tracked on the object-frame contour."""

    arclen: float
    point: np.ndarray
    normal: np.ndarray
    segment: int


def contact_at(contour: ShapeContour, arclen: float) -> Contact:
    """Contact record for an arc-length position on the contour."""
    s = arclen % contour.perimeter
    return Contact(s, contour.point_at(s), contour.normal_at(s), contour.edge_at(s))


def contact_at_sample(contour: ShapeContour, index: int) -> Contact:
    return contact_at(contour, contour.sample_arclen(index))


def stick_twist(r, u_step, l: float):
    """Sticking twist: COM displacement v and rotation omega moving the
    contact point (at offset r from the COM) exactly by u_step."""
    rx, ry = float(r[0]), float(r[1])
    ux, uy = float(u_step[0]), float(u_step[1])
    l2 = l * l
    denom = l2 + rx * rx + ry * ry
    vx = ((l2 + rx * rx) * ux + rx * ry * uy) / denom
    vy = (rx * ry * ux + (l2 + ry * ry) * uy) / denom
    omega = (rx * vy - ry * vx) / l2
    return np.array([vx, vy]), omega


def motion_cone(r, n_out, mu: float, l: float):
    """Unit contact-point velocity directions bounding the sticking regime.

    Each friction-cone edge force (inward normal tilted by ±atan(mu)) is
    mapped through the limit surface; the returned pair (w_left, w_right)
    are the contact-point velocities of those edge twists, normalized.
    w_left corresponds to the CCW-rotated edge.
    """
    rx, ry = float(r[0]), float(r[1])
    nx, ny = float(n_out[0]), float(n_out[1])
    l2 = l * l
    a = math.atan(mu)
    out = []
    for sign in (+1.0, -1.0):
        c, s = math.cos(sign * a), math.sin(sign * a)
        fx = -(c * nx - s * ny)
        fy = -(s * nx + c * ny)
        om = (rx * fy - ry * fx) / l2
        wx = fx - om * ry
        wy = fy + om * rx
        norm = math.hypot(wx, wy)
        out.append(np.array([wx / norm, wy / norm]))
    return out[0], out[1]


def _resolve_contact(rx, ry, nx, ny, ux, uy, mu, l):
    """One quasi-static contact resolution (scalar hot path).

    Returns (vx, vy, omega, slip, mode).  r is the contact offset from the
    COM, n the outward unit normal, u the pusher displacement, all in one
    frame.  slip is the tangential pusher motion along the surface (positive
    along rot90(n), the CCW-forward contour direction).
    """
    un = ux * nx + uy * ny
    if un >= 0.0:
        return 0.0, 0.0, 0.0, 0.0, _LOST
    l2 = l * l
    denom = l2 + rx * rx + ry * ry
    vx = ((l2 + rx * rx) * ux + rx * ry * uy) / denom
    vy = (rx * ry * ux + (l2 + ry * ry) * uy) / denom
    tx, ty = -ny, nx
    fn = -(vx * nx + vy * ny)
    ft = vx * tx + vy * ty
    if fn > 0.0 and abs(ft) <= mu * fn * (1.0 + 1e-12):
        omega = (rx * vy - ry * vx) / l2
        return vx, vy, omega, 0.0, _STICK
    # sliding: friction saturates on the cone edge nearer the required force
    ca = 1.0 / math.hypot(1.0, mu)
    sa = mu * ca
    if ft > 0.0:
        fx, fy = -ca * nx + sa * tx, -ca * ny + sa * ty
    else:
        fx, fy = -ca * nx - sa * tx, -ca * ny - sa * ty
    om_e = (rx * fy - ry * fx) / l2
    wx = fx - om_e * ry
    wy = fy + om_e * rx
    den = wx * nx + wy * ny
    if den >= -1e-12:
        # even the saturated edge cannot keep normal contact
        return 0.0, 0.0, 0.0, 0.0, _LOST
    k = un / den
    slip = (ux - k * wx) * tx + (uy - k * wy) * ty
    return k * fx, k * fy, k * om_e, slip, _SLIDE


def _advance_pose(pose: Pose2, com_world, vx, vy, omega) -> Pose2:
    """Rigid update: COM translates by v, object rotates by omega about the COM."""
    cx, cy = com_world
    px, py = pose.position
    dx, dy = px - cx, py - cy
    c, s = math.cos(omega), math.sin(omega)
    return Pose2(
        np.array([cx + vx + c * dx - s * dy, cy + vy + s * dx + c * dy]),
        pose.theta + omega,
    )


def push_substep(state: ObjectState, contour: ShapeContour, contact: Contact, u_step):
    """Advance one substep of a push.

    Returns (new_state, new_contact_or_None, slip).  Contact is lost when the
    pusher displacement is separating, when sliding cannot maintain normal
    contact, or when slip carries the contact across a vertex onto a segment
    the push no longer engages.
    """
    if np.linalg.norm(contour.point_at(contact.arclen) - contact.point) > 1e-9:
        raise ValueError("contact point does not lie on the contour")
    pose = state.pose
    xc = pose.transform(contact.point)
    nw = pose.rotate(contact.normal)
    com_w = pose.transform(state.com)
    vx, vy, omega, slip, mode = _resolve_contact(
        xc[0] - com_w[0], xc[1] - com_w[1], nw[0], nw[1],
        float(u_step[0]), float(u_step[1]), state.mu, state.limit_param,
    )
    if mode == _LOST:
        return state, None, 0.0
    new_pose = _advance_pose(pose, com_w, vx, vy, omega)
    new_state = replace(state, pose=new_pose)
    new_contact = contact_at(contour, contact.arclen + slip)
    if new_contact.segment != contact.segment:
        n2 = new_pose.rotate(new_contact.normal)
        if float(u_step[0]) * n2[0] + float(u_step[1]) * n2[1] >= 0.0:
            return new_state, None, slip
    return new_state, new_contact, slip


def _push_direction(state: ObjectState, contact: Contact, angle: float) -> np.ndarray:
    """World-frame unit pusher direction: inward normal rotated CCW by angle."""
    a = state.pose.theta + angle
    c, s = math.cos(a), math.sin(a)
    nx, ny = contact.normal
    return np.array([-(c * nx - s * ny), -(s * nx + c * ny)])


def rollout_from_contact(state: ObjectState, contour: ShapeContour, contact: Contact,
                         u_dir, length: float, substep: float):
    """Integrate a straight push from an arbitrary contour contact.

    The pusher direction is fixed in the world frame.  Returns
    (MotionPrediction, final_state, final_contact_or_None).
    """
    n_steps = max(1, math.ceil(length / substep - 1e-12))
    h = length / n_steps
    step_vec = np.asarray(u_dir, dtype=float) * h
    p0 = state.pose.position
    theta_acc = 0.0
    slip_acc = 0.0
    lost = False
    for _ in range(n_steps):
        prev_theta = state.pose.theta
        state, contact, slip = push_substep(state, contour, contact, step_vec)
        theta_acc += wrap_angle(state.pose.theta - prev_theta)
        slip_acc += slip
        if contact is None:
            lost = True
            break
    pred = MotionPrediction(state.pose.position - p0, theta_acc, lost, slip_acc)
    return pred, state, contact


def rollout(state: ObjectState, contour: ShapeContour, action: PushAction,
            substep: float = 0.005) -> MotionPrediction:
    """Substep rollout of a push starting at a contour sample."""
    if not 0 <= action.contact_index < len(contour):
        raise ValueError("contact_index outside the contour")
    contact = contact_at_sample(contour, action.contact_index)
    u_dir = _push_direction(state, contact, action.angle)
    pred, _, _ = rollout_from_contact(state, contour, contact, u_dir,
                                      action.length, substep)
    return pred


def predict_one_step(state: ObjectState, contour: ShapeContour,
                     action: PushAction) -> MotionPrediction:
    """Single-shot prediction over the whole push length.

    Contact mode and geometry are frozen at the initial contact: pusher slip
    never re-localizes the contact and loss within the push goes undetected,
    which is exactly where this predictor diverges from the substep rollout.
    """
    if not 0 <= action.contact_index < len(contour):
        raise ValueError("contact_index outside the contour")
    contact = contact_at_sample(contour, action.contact_index)
    u_dir = _push_direction(state, contact, action.angle)
    pose = state.pose
    xc = pose.transform(contact.point)
    nw = pose.rotate(contact.normal)
    com_w = pose.transform(state.com)
    u = u_dir * action.length
    vx, vy, omega, slip, mode = _resolve_contact(
        xc[0] - com_w[0], xc[1] - com_w[1], nw[0], nw[1],
        u[0], u[1], state.mu, state.limit_param,
    )
    if mode == _LOST:
        return MotionPrediction(np.zeros(2), 0.0, True, 0.0)
    new_pose = _advance_pose(pose, com_w, vx, vy, omega)
    return MotionPrediction(new_pose.position - pose.position, omega, False, slip)
