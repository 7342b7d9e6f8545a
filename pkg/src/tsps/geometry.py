"""Euclidean primitives in R^3: planes, lines, and the intersections the net builder needs.

Vectors are plain ``numpy`` arrays of shape ``(3,)`` and float64 dtype.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, OffSphere, ParallelPlanes, TangentDegenerate

__all__ = [
    "DEFAULT_TOL",
    "Vec3",
    "Plane",
    "Line",
    "vec3",
    "unit",
    "angle_between",
    "plane_through_points",
    "plane_intersection",
    "line_sphere_second_intersection",
    "dihedral_angle",
]

DEFAULT_TOL = 1e-10

Vec3 = np.ndarray


def vec3(p) -> Vec3:
    """Coerce *p* to a finite float64 3-vector."""
    v = np.asarray(p, dtype=float).reshape(-1)
    if v.shape != (3,):
        raise DegenerateInput(f"expected 3 components, got shape {np.shape(p)}")
    if not np.all(np.isfinite(v)):
        raise DegenerateInput(f"non-finite vector {v}")
    return v


def unit(v: Vec3, tol: float = DEFAULT_TOL) -> Vec3:
    n = float(np.linalg.norm(v))
    if n <= tol:
        raise DegenerateInput(f"cannot normalize vector of length {n:.3e}")
    return v / n


def angle_between(u: Vec3, v: Vec3) -> float:
    """Unsigned angle in [0, pi]; atan2 form stays accurate near 0 and pi."""
    return math.atan2(float(np.linalg.norm(np.cross(u, v))), float(np.dot(u, v)))


@dataclass(frozen=True, eq=False)
class Plane:
    point: Vec3
    unit_normal: Vec3

    def __post_init__(self):
        p = vec3(self.point)
        n = vec3(self.unit_normal)
        if abs(np.linalg.norm(n) - 1.0) > 1e-12:
            n = unit(n)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "unit_normal", n)

    @classmethod
    def from_normal(cls, point, normal) -> "Plane":
        return cls(vec3(point), unit(vec3(normal)))

    @property
    def offset(self) -> float:
        """Signed constant d in the equation n . x = d."""
        return float(np.dot(self.unit_normal, self.point))

    def signed_distance(self, p) -> float:
        return float(np.dot(self.unit_normal, np.asarray(p, dtype=float) - self.point))

    def contains(self, p, tol: float = DEFAULT_TOL) -> bool:
        return abs(self.signed_distance(p)) <= tol

    def flipped(self) -> "Plane":
        return Plane(self.point, -self.unit_normal)


@dataclass(frozen=True, eq=False)
class Line:
    point: Vec3
    unit_direction: Vec3

    def __post_init__(self):
        p = vec3(self.point)
        d = vec3(self.unit_direction)
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            d = unit(d)
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "unit_direction", d)

    def at(self, t: float) -> Vec3:
        return self.point + t * self.unit_direction

    def distance_to(self, p) -> float:
        w = np.asarray(p, dtype=float) - self.point
        return float(np.linalg.norm(w - np.dot(w, self.unit_direction) * self.unit_direction))


def plane_through_points(p0, p1, p2, tol: float = DEFAULT_TOL) -> Plane:
    """Plane through three points, normal oriented along (p1 - p0) x (p2 - p0).

    Raises DegenerateInput when the points are collinear, i.e. when the
    triangle's doubled area falls below *tol*.
    """
    p0, p1, p2 = vec3(p0), vec3(p1), vec3(p2)
    n = np.cross(p1 - p0, p2 - p0)
    area2 = float(np.linalg.norm(n))
    if area2 <= tol:
        raise DegenerateInput(f"points are collinear (doubled area {area2:.3e})")
    return Plane(p0, n / area2)


def plane_intersection(P1: Plane, P2: Plane, tol: float = DEFAULT_TOL) -> Line:
    n1, n2 = P1.unit_normal, P2.unit_normal
    d = np.cross(n1, n2)
    s = float(np.linalg.norm(d))
    if s <= tol:
        raise ParallelPlanes(f"planes are parallel (|n1 x n2| = {s:.3e})")
    d1, d2 = P1.offset, P2.offset
    c = float(np.dot(n1, n2))
    # point on both planes in span(n1, n2)
    p = ((d1 - d2 * c) * n1 + (d2 - d1 * c) * n2) / (s * s)
    return Line(p, d / s)


def line_sphere_second_intersection(L: Line, center, radius: float, known_root,
                                    tol: float = DEFAULT_TOL) -> Vec3:
    """Other intersection of *L* with a sphere, given one intersection already.

    With the line re-anchored at the known root q, the sphere equation becomes
    t^2 + 2 t d.(q - c) = 0, so the second root is t = -2 d.(q - c). No
    discriminant is formed, which keeps the result accurate to rounding.
    """
    c = vec3(center)
    q = vec3(known_root)
    if L.distance_to(q) > tol * max(1.0, radius):
        raise OffSphere("known root is not on the line")
    if abs(float(np.linalg.norm(q - c)) - radius) > tol * max(1.0, radius):
        raise OffSphere("known root is not on the sphere")
    t = -2.0 * float(np.dot(L.unit_direction, q - c))
    if abs(t) <= tol * max(1.0, radius):
        raise TangentDegenerate("line is tangent to the sphere; roots coincide")
    return q + t * L.unit_direction


def dihedral_angle(P1: Plane, P2: Plane) -> float:
    """Acute angle between two planes, in [0, pi/2]; independent of normal orientation."""
    c = abs(float(np.dot(P1.unit_normal, P2.unit_normal)))
    s = float(np.linalg.norm(np.cross(P1.unit_normal, P2.unit_normal)))
    return math.atan2(s, c)
