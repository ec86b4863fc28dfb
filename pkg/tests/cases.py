"""Randomized case generators shared by the dynamics property tests and the
acceptance suite."""

import math

import numpy as np

from pushplan.dynamics import stick_twist


def unit(v):
    return v / np.linalg.norm(v)


def cross2(a, b):
    return float(a[0] * b[1] - a[1] * b[0])


def rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def random_geometry(rng):
    """Contact offset, outward normal, friction and limit parameter in the
    physical ranges of tabletop objects."""
    r = rng.uniform(-0.1, 0.1, size=2)
    while np.linalg.norm(r) < 5e-3:
        r = rng.uniform(-0.1, 0.1, size=2)
    n = unit(rng.normal(size=2))
    mu = rng.uniform(0.05, 1.0)
    l = rng.uniform(0.02, 0.3)
    return r, n, mu, l


def limit_surface_velocity(r, f, l):
    """Twist and contact-point velocity generated by a contact force."""
    omega = (r[0] * f[1] - r[1] * f[0]) / (l * l)
    v = np.asarray(f, dtype=float)
    w = v + omega * np.array([-r[1], r[0]])
    return v, omega, w


def sticking_case(rng, speed=1e-3, max_tries=100):
    """(r, n, u, mu, l) with u strictly inside the motion cone, pushing in."""
    for _ in range(max_tries):
        r, n, mu, l = random_geometry(rng)
        phi = rng.uniform(-0.95, 0.95) * math.atan(mu)
        f = rot(phi) @ (-n)
        _, _, w = limit_surface_velocity(r, f, l)
        if w @ n >= -1e-9:
            continue
        u = unit(w) * speed
        return r, n, u, mu, l
    raise RuntimeError("failed to build a sticking case")


def sliding_case(rng, speed=1e-3, max_tries=100):
    """(r, n, u, mu, l) with u outside the motion cone but still pushing in."""
    for _ in range(max_tries):
        r, n, mu, l = random_geometry(rng)
        side = 1.0 if rng.random() < 0.5 else -1.0
        phi = side * rng.uniform(1.05, 1.4) * math.atan(mu)
        if abs(phi) >= math.pi / 2 - 0.05:
            continue
        f = rot(phi) @ (-n)
        _, _, w = limit_surface_velocity(r, f, l)
        if w @ n >= -1e-9:
            continue
        u = unit(w) * speed
        if u @ n >= -1e-12:
            continue
        # the saturated edge must be able to keep contact as well
        edge = rot(side * math.atan(mu)) @ (-n)
        _, _, w_edge = limit_surface_velocity(r, edge, l)
        if w_edge @ n >= -1e-9:
            continue
        return r, n, u, mu, l
    raise RuntimeError("failed to build a sliding case")


def reconstruct_contact_velocity(r, v, omega):
    return np.asarray(v) + omega * np.array([-r[1], r[0]])
