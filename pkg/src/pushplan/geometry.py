"""2D shape geometry: resampled polygon contours, outward normals, poses, ray casts.

Shapes live as simple closed polygons in the object frame.  A contour is the
polygon resampled at (roughly) uniform arc length; every sample carries the
outward unit normal of the polygon edge it lies on.  No normal averaging is
done at vertices: a corner sample inherits the normal of its own edge, which
keeps the friction cone of the pushing model well defined.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = (theta + math.pi) % TWO_PI - math.pi
    if w <= -math.pi:
        w = math.pi
    return w


def rot2d(theta: float) -> np.ndarray:
    """CCW rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotate_vec(v, theta: float) -> np.ndarray:
    """Rotate a single 2-vector CCW by theta."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c * v[0] - s * v[1], s * v[0] + c * v[1]])


def cross2(a, b) -> float:
    """Scalar 2D cross product a x b."""
    return a[0] * b[1] - a[1] * b[0]


@dataclass(frozen=True)
class Pose2:
    """Planar rigid transform: rotation by theta, then translation.

    theta is normalized to (-pi, pi] on construction and after composition.
    """

    position: np.ndarray
    theta: float

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).copy()
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @staticmethod
    def identity() -> "Pose2":
        return Pose2(np.zeros(2), 0.0)

    def rotation(self) -> np.ndarray:
        return rot2d(self.theta)

    def transform(self, points) -> np.ndarray:
        """Map object-frame point(s) into the world frame."""
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation().T + self.position

    def rotate(self, vectors) -> np.ndarray:
        """Rotate free vector(s) (normals, directions) into the world frame."""
        return np.asarray(vectors, dtype=float) @ self.rotation().T

    def compose(self, other: "Pose2") -> "Pose2":
        """self ∘ other: apply `other` first, then `self`."""
        return Pose2(self.transform(other.position), self.theta + other.theta)

    def inverse(self) -> "Pose2":
        return Pose2(-rot2d(-self.theta) @ self.position, -self.theta)

    def as_array(self) -> np.ndarray:
        return np.array([self.position[0], self.position[1], self.theta])


@dataclass(frozen=True)
class RayHit:
    """First intersection of a pusher approach ray with a contour."""

    point: np.ndarray
    normal: np.ndarray
    segment: int
    arclen: float
    distance: float


class ShapeContour:
    """Closed polygonal outline, resampled at fixed arc length, with normals.

    `points`/`normals` are the uniform samples the affordance map and planner
    index into.  The exact polygon (`vertices`) backs all arc-length queries
    and ray casts, so contact tracking never degrades to the sample density.
    Instances are immutable after construction and safe to share.
    """

    def __init__(self, points, normals, vertices, arc_step):
        self.points = np.asarray(points, dtype=float)
        self.normals = np.asarray(normals, dtype=float)
        self.vertices = np.asarray(vertices, dtype=float)
        self.arc_step = float(arc_step)
        self.is_closed = True

        edges = np.roll(self.vertices, -1, axis=0) - self.vertices
        lengths = np.linalg.norm(edges, axis=1)
        self.edge_lengths = lengths
        self.edge_tangents = edges / lengths[:, None]
        # CCW winding: outward normal is the right-hand perpendicular of the tangent
        self.edge_normals = np.stack(
            [self.edge_tangents[:, 1], -self.edge_tangents[:, 0]], axis=1
        )
        self.cum_arclen = np.concatenate([[0.0], np.cumsum(lengths)])
        self.perimeter = float(self.cum_arclen[-1])
        self.spacing = self.perimeter / len(self.points)
        for arr in (self.points, self.normals, self.vertices, self.edge_lengths,
                    self.edge_tangents, self.edge_normals, self.cum_arclen):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return len(self.points)

    def sample_arclen(self, index: int) -> float:
        """Arc-length coordinate of sample `index`."""
        return ((index % len(self.points)) + 0.5) * self.spacing

    def edge_at(self, s: float) -> int:
        """Index of the polygon edge containing arc length s (edge start inclusive)."""
        s = s % self.perimeter
        j = int(np.searchsorted(self.cum_arclen, s, side="right")) - 1
        return min(max(j, 0), len(self.vertices) - 1)

    def point_at(self, s: float) -> np.ndarray:
        s = s % self.perimeter
        j = self.edge_at(s)
        return self.vertices[j] + (s - self.cum_arclen[j]) * self.edge_tangents[j]

    def normal_at(self, s: float) -> np.ndarray:
        return self.edge_normals[self.edge_at(s)]

    def tangent_at(self, s: float) -> np.ndarray:
        return self.edge_tangents[self.edge_at(s)]

    def contains(self, point) -> bool:
        return point_in_polygon(self.vertices, point)


def point_in_polygon(vertices, point) -> bool:
    """Even-odd crossing test against a simple closed polygon."""
    v = np.asarray(vertices, dtype=float)
    x, y = float(point[0]), float(point[1])
    inside = False
    j = len(v) - 1
    for i in range(len(v)):
        xi, yi = v[i]
        xj, yj = v[j]
        if (yi > y) != (yj > y):
            x_cross = xi + (y - yi) * (xj - xi) / (yj - yi)
            if x < x_cross:
                inside = not inside
        j = i
    return inside


def _segments_properly_cross(p1, p2, q1, q2) -> bool:
    """True if open segments p1p2 and q1q2 intersect away from shared endpoints."""
    d1 = cross2(q2 - q1, p1 - q1)
    d2 = cross2(q2 - q1, p2 - q1)
    d3 = cross2(p2 - p1, q1 - p1)
    d4 = cross2(p2 - p1, q2 - p1)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)):
        return True
    # collinear overlap counts as a crossing
    eps = 1e-15
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2),
                       (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if abs(d) < eps:
            t = np.dot(c - a, b - a) / np.dot(b - a, b - a)
            if 1e-12 < t < 1 - 1e-12:
                return True
    return False


def _validate_simple_polygon(verts: np.ndarray) -> None:
    m = len(verts)
    if m < 3:
        raise ValueError("polygon needs at least 3 vertices")
    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    if np.any(lengths < 1e-12):
        raise ValueError("polygon has a zero-length edge")
    for i in range(m):
        for j in range(i + 1, m):
            adjacent = (j == i + 1) or (i == 0 and j == m - 1)
            if adjacent:
                continue
            if _segments_properly_cross(verts[i], verts[(i + 1) % m],
                                        verts[j], verts[(j + 1) % m]):
                raise ValueError("polygon is self-intersecting")


def make_polygon_contour(vertices, arc_step: float) -> ShapeContour:
    """Resample a simple closed polygon at `arc_step` along its perimeter.

    The vertex list may be given in either winding; it is normalized to CCW.
    Each sample carries the outward normal of the polygon edge it lies on.
    Rejects self-intersecting polygons and arc steps larger than the shortest
    edge (which would skip geometry).
    """
    verts = np.asarray(vertices, dtype=float)
    if verts.ndim != 2 or verts.shape[1] != 2:
        raise ValueError("vertices must be an (m, 2) array")
    if arc_step <= 0:
        raise ValueError("arc_step must be positive")
    _validate_simple_polygon(verts)
    # normalize winding to CCW (shoelace)
    area2 = float(np.sum(verts[:, 0] * np.roll(verts[:, 1], -1)
                         - np.roll(verts[:, 0], -1) * verts[:, 1]))
    if area2 < 0:
        verts = verts[::-1].copy()

    edges = np.roll(verts, -1, axis=0) - verts
    lengths = np.linalg.norm(edges, axis=1)
    if arc_step >= lengths.min():
        raise ValueError(
            f"arc_step {arc_step} is not smaller than the shortest edge {lengths.min():.4g}"
        )
    perimeter = float(lengths.sum())
    n = int(round(perimeter / arc_step))
    spacing = perimeter / n
    if abs(spacing / arc_step - 1.0) > 0.10:
        raise ValueError("arc_step too large relative to the perimeter")

    skeleton = ShapeContour(np.zeros((1, 2)), np.zeros((1, 2)), verts, arc_step)
    # half-spacing phase keeps samples off the vertices whenever edge lengths
    # are multiples of the spacing, so every sample has a two-sided normal
    s_vals = (np.arange(n) + 0.5) * spacing
    pts = np.array([skeleton.point_at(s) for s in s_vals])
    nrm = np.array([skeleton.normal_at(s) for s in s_vals])
    return ShapeContour(pts, nrm, verts, arc_step)


def world_contour(contour: ShapeContour, pose: Pose2) -> ShapeContour:
    """Rigidly transform a contour (points and normals) into the world frame."""
    return ShapeContour(
        pose.transform(contour.points),
        pose.rotate(contour.normals),
        pose.transform(contour.vertices),
        contour.arc_step,
    )


def contact_query(contour: ShapeContour, point, direction):
    """First intersection of the ray (point, direction) with the contour.

    Returns a RayHit or None on a miss.  A ray grazing a vertex is assigned
    to the segment whose interior it strikes; exact ties break toward the
    lower segment index.
    """
    o = np.asarray(point, dtype=float)
    d = np.asarray(direction, dtype=float)
    a = contour.vertices
    e = np.roll(a, -1, axis=0) - a
    diff = a - o
    denom = d[0] * e[:, 1] - d[1] * e[:, 0]
    ok = np.abs(denom) > 1e-15
    t = np.full(len(a), np.inf)
    sseg = np.zeros(len(a))
    t[ok] = (diff[ok, 0] * e[ok, 1] - diff[ok, 1] * e[ok, 0]) / denom[ok]
    sseg[ok] = (diff[ok, 0] * d[1] - diff[ok, 1] * d[0]) / denom[ok]
    hit = ok & (t >= -1e-12) & (sseg >= -1e-9) & (sseg <= 1 + 1e-9)
    if not hit.any():
        return None
    t_min = t[hit].min()
    scale = 1e-9 * (1.0 + abs(t_min))
    cand = np.flatnonzero(hit & (t <= t_min + scale))
    interior = [j for j in cand if 1e-9 < sseg[j] < 1 - 1e-9]
    j = int(interior[0] if interior else cand[0])
    s_on = min(max(float(sseg[j]), 0.0), 1.0)
    arclen = float(contour.cum_arclen[j] + s_on * contour.edge_lengths[j])
    return RayHit(
        point=a[j] + s_on * e[j],
        normal=contour.edge_normals[j].copy(),
        segment=j,
        arclen=arclen % contour.perimeter,
        distance=float(max(t[j], 0.0)),
    )


def load_shape(name: str, arc_step: float | None = None) -> ShapeContour:
    """Load a bundled or on-disk shape fixture.

    Fixtures are JSON documents {"name", "vertices": [[x, y], ...],
    "arc_step"} with coordinates in meters.  `name` is either the name of a
    bundled fixture (triangle, butter, hexagon, square) or a path to such a
    file.  `arc_step` overrides the fixture's resampling spacing.
    """
    if name.endswith(".json"):
        with open(name) as f:
            doc = json.load(f)
    else:
        pkg_file = resources.files("pushplan").joinpath(f"shapes/{name}.json")
        if not pkg_file.is_file():
            raise ValueError(f"unknown shape fixture: {name!r}")
        doc = json.loads(pkg_file.read_text())
    step = arc_step if arc_step is not None else doc["arc_step"]
    return make_polygon_contour(doc["vertices"], step)


def bundled_shape_names() -> list[str]:
    """Names of the shape fixtures shipped with the package."""
    shape_dir = resources.files("pushplan").joinpath("shapes")
    return sorted(p.name[:-5] for p in shape_dir.iterdir() if p.name.endswith(".json"))
