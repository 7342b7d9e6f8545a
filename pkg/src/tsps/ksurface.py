"""Discrete K-surfaces (discrete Chebyshev nets).

A net is a map (m, n) -> r(m, n) with all lattice edges of length ``a``
and a planar star at every vertex: r and its four neighbours lie in one
plane, the tangent plane pi(r).  Difference operators follow the lattice
convention ``D_j f = (T_j f - f) / a`` so that ``|D_j r| = 1``.

Construction
------------
The tangent-plane normals N of a K-net form a discrete Gauss map in which
every quad is closed by a half-turn: N12 is the reflection of -N through
the axis N1 + N2.  Edges then follow from the normals alone,

    r12 - r1  is parallel to  N1 x N12,    r12 - r2  is parallel to  N2 x N12,

each scaled to the edge length with the sign read off the seed strips.
Both routes to r12 are computed; their distance is the consistency residual
reported for every quad.  Because positions are never intersected with
spheres, errors do not compound from quad to quad.

:func:`extend_quad` realizes the same step the direct way (second
intersection of pi(r1) and pi(r2) with the sphere of radius a about r1).
It is exposed for single quads and cross-checks; iterated over a patch it
amplifies rounding geometrically, which is why the builder does not use it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import (BoundaryIndex, ConsistencyViolation, DegenerateInput, DegenerateTangents,
                     DegenerateTetrahedron, FormatError, InputError, InvalidCauchyData,
                     ParallelPlanes, TooSmall)
from .geometry import (DEFAULT_TOL, Line, Plane, angle_between, dihedral_angle,
                       line_sphere_second_intersection, plane_intersection, vec3)

__all__ = [
    "CauchyData",
    "SurfaceMesh",
    "QuadGeometry",
    "InvariantReport",
    "extend_quad",
    "build_from_cauchy",
    "discrete_normal",
    "normal_field",
    "coplanarity_residual",
    "discrete_gaussian_curvature",
    "kdisc_field",
    "tetrahedron_closed_forms",
    "quad_geometry",
    "invariant_report",
    "verify_chebyshev_net",
    "report_rows",
]

BUILD_TOL = 1e-9
EDGE_REL_TOL = 1e-12


def _unit_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _rotate(v, axis, angle):
    k = axis / np.linalg.norm(axis)
    c, s = math.cos(angle), math.sin(angle)
    return v * c + np.cross(k, v) * s + k * np.dot(k, v) * (1.0 - c)


def _signed_twist(n0, n1, edge) -> float:
    """Signed rotation angle from n0 to n1 about *edge* (both normals are perpendicular to it)."""
    e = edge / np.linalg.norm(edge)
    return math.atan2(float(np.dot(np.cross(n0, n1), e)), float(np.dot(n0, n1)))


# ---------------------------------------------------------------------------
# Cauchy data


@dataclass(frozen=True, eq=False)
class CauchyData:
    """Two polylines through a common vertex that seed a net.

    ``strip1`` becomes row 0 (index m) and ``strip2`` column 0 (index n).
    Edges of strip1 have length ``a``, edges of strip2 length ``b``
    (default ``a``; a different ``b`` gives the anisotropic nets used for
    semi-discrete surfaces).  ``normals1`` / ``normals2`` optionally give
    the tangent-plane normal at every strip vertex; without them the planes
    are read off consecutive strip triples, which needs curved strips.
    """

    a: float
    strip1: np.ndarray
    strip2: np.ndarray
    normals1: Optional[np.ndarray] = None
    normals2: Optional[np.ndarray] = None
    b: Optional[float] = None

    def __post_init__(self):
        a = float(self.a)
        if not (a > 0 and math.isfinite(a)):
            raise InvalidCauchyData(f"mesh size must be positive, got {self.a!r}")
        object.__setattr__(self, "a", a)
        b = a if self.b is None else float(self.b)
        if not (b > 0 and math.isfinite(b)):
            raise InvalidCauchyData(f"second edge length must be positive, got {self.b!r}")
        object.__setattr__(self, "b", b)
        for name in ("strip1", "strip2", "normals1", "normals2"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float)
            if arr.ndim != 2 or arr.shape[1] != 3 or not np.all(np.isfinite(arr)):
                raise InvalidCauchyData(f"{name} must be a finite (k, 3) array")
            object.__setattr__(self, name, arr)
        s1, s2 = self.strip1, self.strip2
        if len(s1) < 2 or len(s2) < 2:
            raise InvalidCauchyData("each strip needs at least two points")
        if not np.array_equal(s1[0], s2[0]):
            raise InvalidCauchyData("strips must start at the same vertex")
        for name, s, h in (("strip1", s1, a), ("strip2", s2, b)):
            lengths = np.linalg.norm(np.diff(s, axis=0), axis=1)
            bad = np.abs(lengths - h) > EDGE_REL_TOL * h
            if np.any(bad):
                k = int(np.argmax(bad))
                raise InvalidCauchyData(f"{name} edge {k} has length {lengths[k]!r}, expected {h!r}")
        if (self.normals1 is None) != (self.normals2 is None):
            raise InvalidCauchyData("give normals for both strips or for neither")
        if self.normals1 is not None:
            if len(self.normals1) != len(s1) or len(self.normals2) != len(s2):
                raise InvalidCauchyData("one normal per strip vertex is required")

    @property
    def shape(self) -> tuple:
        return (len(self.strip1), len(self.strip2))

    def to_json(self) -> dict:
        out = {"a": self.a, "strip1": self.strip1.tolist(), "strip2": self.strip2.tolist()}
        if self.b != self.a:
            out["b"] = self.b
        if self.normals1 is not None:
            out["normals1"] = self.normals1.tolist()
            out["normals2"] = self.normals2.tolist()
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "CauchyData":
        try:
            return cls(obj["a"], obj["strip1"], obj["strip2"], obj.get("normals1"),
                       obj.get("normals2"), obj.get("b"))
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad Cauchy data: {exc}") from exc

    def swapped(self) -> "CauchyData":
        return CauchyData(self.b, self.strip2, self.strip1, self.normals2, self.normals1, self.a)


def _strip_normals(strip: np.ndarray, n0: np.ndarray) -> np.ndarray:
    """Tangent-plane normals along a strip from consecutive triples.

    The first normal is given (the plane shared with the other strip).  The
    last vertex has only one edge, so its plane continues the previous twist.
    """
    k = len(strip)
    out = np.empty((k, 3))
    out[0] = n0
    for i in range(1, k - 1):
        c = np.cross(strip[i] - strip[i - 1], strip[i + 1] - strip[i])
        s = float(np.linalg.norm(c))
        if s <= DEFAULT_TOL * np.linalg.norm(strip[i] - strip[i - 1]) ** 2:
            raise InvalidCauchyData(f"strip points {i - 1}..{i + 1} are collinear; supply tangent-plane normals")
        c = c / s
        out[i] = c if np.dot(c, out[i - 1]) >= 0 else -c
    if k >= 2:
        twist = _signed_twist(out[k - 3], out[k - 2], strip[k - 2] - strip[k - 3]) if k >= 3 else 0.0
        out[k - 1] = _rotate(out[k - 2], strip[k - 1] - strip[k - 2], twist)
    return out


def _seed_normals(data: CauchyData):
    if data.normals1 is not None:
        n1 = _unit_rows(data.normals1)
        n2 = _unit_rows(data.normals2)
        if np.linalg.norm(n1[0] - n2[0]) > 1e-12 and np.linalg.norm(n1[0] + n2[0]) > 1e-12:
            raise InvalidCauchyData("the two strips disagree on the tangent plane at the shared vertex")
        n2 = n2 if np.dot(n1[0], n2[0]) > 0 else -n2
        n2 = n2.copy()
        n2[0] = n1[0]
        return n1, n2
    s1, s2 = data.strip1, data.strip2
    c = np.cross(s1[1] - s1[0], s2[1] - s2[0])
    s = float(np.linalg.norm(c))
    if s <= DEFAULT_TOL * data.a * data.b:
        raise InvalidCauchyData("the first edges of the strips are parallel")
    n0 = c / s
    return _strip_normals(s1, n0), _strip_normals(s2, n0)


def _strip_orientation(strip, normals, h, name, tol):
    """Sign s with edge = s*h*unit(N_k x N_{k+1}) on every edge, and sin(twist).

    Returns ``(sign, sin_theta)``; raises InvalidCauchyData when the strip
    is not a valid asymptotic line for the given planes.
    """
    edges = np.diff(strip, axis=0) / h
    perp = np.maximum(np.abs(np.einsum("ij,ij->i", normals[:-1], edges)),
                      np.abs(np.einsum("ij,ij->i", normals[1:], edges)))
    if np.any(perp > tol):
        k = int(np.argmax(perp))
        raise InvalidCauchyData(f"{name} edge {k} does not lie in the tangent planes at its ends")
    cr = np.cross(normals[:-1], normals[1:])
    sins = np.linalg.norm(cr, axis=1)
    if np.max(sins) - np.min(sins) > tol:
        raise InvalidCauchyData(f"{name}: angle between consecutive tangent planes is not constant "
                                f"(sin ranges over [{np.min(sins):.3e}, {np.max(sins):.3e}])")
    sin_t = float(np.mean(sins))
    if sin_t <= tol:
        return 1.0, 0.0
    proj = np.einsum("ij,ij->i", cr, edges) / sins
    sign = 1.0 if proj[0] > 0 else -1.0
    if np.any(np.abs(proj - sign) > 1e3 * tol):
        raise InvalidCauchyData(f"{name}: twist direction of the tangent planes changes along the strip")
    return sign, sin_t


# ---------------------------------------------------------------------------
# meshes


@dataclass(eq=False)
class SurfaceMesh:
    """Vertices of a net with their tangent planes.

    ``vertices`` and ``normals`` have shape (rows, cols, 3); the tangent
    plane at (m, n) passes through ``vertices[m, n]`` with normal
    ``normals[m, n]``.  ``a`` and ``b`` are the edge lengths in the two
    lattice directions.
    """

    a: float
    vertices: np.ndarray
    normals: np.ndarray
    b: Optional[float] = None
    valid: Optional[np.ndarray] = None
    consistency: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.a = float(self.a)
        self.b = self.a if self.b is None else float(self.b)
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        if self.vertices.ndim != 3 or self.vertices.shape[2] != 3:
            raise InputError(f"vertices must have shape (rows, cols, 3), got {self.vertices.shape}")
        if self.normals.shape != self.vertices.shape:
            raise InputError("normals must match vertices in shape")
        if self.valid is None:
            self.valid = np.ones(self.shape, dtype=bool)

    @property
    def shape(self) -> tuple:
        return self.vertices.shape[:2]

    @property
    def rows(self) -> int:
        return self.vertices.shape[0]

    @property
    def cols(self) -> int:
        return self.vertices.shape[1]

    @property
    def isotropic(self) -> bool:
        return self.a == self.b

    def plane(self, m: int, n: int) -> Plane:
        self._check(m, n)
        return Plane(self.vertices[m, n], self.normals[m, n])

    @property
    def tangent_planes(self):
        return [[self.plane(m, n) for n in range(self.cols)] for m in range(self.rows)]

    def _check(self, m, n, dm=0, dn=0):
        if not (0 <= m and m + dm < self.rows and 0 <= n and n + dn < self.cols):
            raise BoundaryIndex(f"({m}, {n}) needs vertices up to ({m + dm}, {n + dn}) "
                                f"in a {self.rows}x{self.cols} mesh")

    @classmethod
    def from_vertices(cls, a: float, vertices, b: Optional[float] = None) -> "SurfaceMesh":
        """Mesh from positions only; tangent planes are taken from edge cross products.

        At the last row/column the backward edge replaces the missing forward one.
        """
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 3 or v.shape[0] < 2 or v.shape[1] < 2:
            raise TooSmall("a mesh needs at least 2x2 vertices")
        e1 = np.empty_like(v)
        e2 = np.empty_like(v)
        e1[:-1] = v[1:] - v[:-1]
        e1[-1] = v[-1] - v[-2]
        e2[:, :-1] = v[:, 1:] - v[:, :-1]
        e2[:, -1] = v[:, -1] - v[:, -2]
        c = np.cross(e1, e2)
        s = np.linalg.norm(c, axis=-1, keepdims=True)
        if np.any(s <= DEFAULT_TOL * float(a) ** 2):
            raise DegenerateTangents("lattice edges are parallel at some vertex")
        return cls(a, v, c / s, b)

    def transposed(self) -> "SurfaceMesh":
        return SurfaceMesh(self.b, self.vertices.transpose(1, 0, 2).copy(),
                           self.normals.transpose(1, 0, 2).copy(), self.a)

    def to_json(self) -> dict:
        planes = np.concatenate([self.vertices, self.normals], axis=-1).reshape(-1, 6)
        out = {"a": self.a, "rows": self.rows, "cols": self.cols,
               "vertices": self.vertices.reshape(-1, 3).tolist(), "planes": planes.tolist()}
        if self.b != self.a:
            out["b"] = self.b
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "SurfaceMesh":
        try:
            a, rows, cols = float(obj["a"]), int(obj["rows"]), int(obj["cols"])
            verts = np.asarray(obj["vertices"], dtype=float).reshape(rows, cols, 3)
            b = obj.get("b")
            if obj.get("planes") is None:
                return cls.from_vertices(a, verts, b)
            planes = np.asarray(obj["planes"], dtype=float).reshape(rows, cols, 6)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad mesh: {exc}") from exc
        if not (np.all(np.isfinite(verts)) and np.all(np.isfinite(planes))):
            raise FormatError("mesh contains non-finite numbers")
        normals = planes[..., 3:]
        nrm = np.linalg.norm(normals, axis=-1, keepdims=True)
        if np.any(nrm == 0):
            raise FormatError("mesh contains a zero plane normal")
        # leave unit normals untouched so a write/read cycle is exact
        normals = np.where(np.abs(nrm - 1.0) > 1e-12, normals / nrm, normals)
        return cls(a, verts, normals, b)


# ---------------------------------------------------------------------------
# construction


def extend_quad(r, r1, r2, plane1: Plane, plane2: Plane, a: float, tol: float = BUILD_TOL):
    """Fourth vertex of a quad from three vertices and the planes at r1 and r2.

    r12 is the second intersection of the line pi(r1) & pi(r2) (which passes
    through r) with the sphere of radius *a* about r1.  When the two planes
    coincide the quad is flat and r12 = r1 + r2 - r.  Returns
    ``(r12, residual)`` with residual = ||r12 - r2| - a|.

    *tol* is relative to *a*.
    """
    r, r1, r2 = vec3(r), vec3(r1), vec3(r2)
    a = float(a)
    scale = tol * a
    n1, n2 = plane1.unit_normal, plane2.unit_normal
    parallel = np.linalg.norm(np.cross(n1, n2)) <= tol
    # distinct parallel planes are reported as such, not as r missing plane2
    if parallel and abs(plane2.signed_distance(plane1.point)) > scale:
        raise ParallelPlanes("tangent planes are parallel and distinct")
    for p, pl, name in ((r, plane1, "plane1"), (r, plane2, "plane2")):
        if abs(pl.signed_distance(p)) > scale:
            raise InputError(f"r does not lie on {name}")
    for p, name in ((r1, "r1"), (r2, "r2")):
        if abs(np.linalg.norm(p - r) - a) > scale:
            raise InputError(f"|{name} - r| differs from a")
    if parallel:
        r12 = r1 + r2 - r
    else:
        line = plane_intersection(plane1, plane2, tol)
        line = Line(r, line.unit_direction)
        r12 = line_sphere_second_intersection(line, r1, a, r, tol)
    residual = abs(float(np.linalg.norm(r12 - r2)) - a)
    if residual >= scale:
        raise ConsistencyViolation(f"new vertex misses the second edge length by {residual:.3e}",
                                   residual=residual)
    return r12, residual


def build_from_cauchy(data: CauchyData, tol: float = BUILD_TOL) -> SurfaceMesh:
    """Propagate a net from Cauchy data, quad by quad in lexicographic order.

    *tol* bounds the per-quad consistency residual and the seed checks, in
    units of the mesh size.  The residual of every quad is kept in
    ``mesh.consistency``.
    """
    a, b = data.a, data.b
    s1 = data.strip1 / a
    s2 = data.strip2 / a
    bn = b / a
    N1s, N2s = _seed_normals(data)
    sg1, sin1 = _strip_orientation(s1, N1s, 1.0, "strip1", tol)
    sg2, sin2 = _strip_orientation(s2, N2s, bn, "strip2", tol)
    # Lelieuvre scale must agree: sin(theta_1)/a == sin(theta_2)/b
    if abs(sin1 * bn - sin2) > tol * max(1.0, bn):
        raise InvalidCauchyData(f"tangent-plane twists do not match: sin(theta1)*b/a = {sin1 * bn:.12g}, "
                                f"sin(theta2) = {sin2:.12g}")
    flat = sin1 <= tol
    R, C = data.shape
    P = np.zeros((R, C, 3))
    Nm = np.zeros((R, C, 3))
    P[:, 0] = s1
    P[0, :] = s2
    Nm[:, 0] = N1s
    Nm[0, :] = N2s
    res = np.zeros((max(R - 1, 0), max(C - 1, 0)))
    for m in range(R - 1):
        for n in range(C - 1):
            N = Nm[m, n]
            Na = Nm[m + 1, n]
            Nb = Nm[m, n + 1]
            S = Na + Nb
            ss = float(S @ S)
            if ss <= tol:
                raise ConsistencyViolation(f"opposite tangent planes at quad {(m, n)}", index=(m, n))
            N12 = (2.0 * float(N @ S) / ss) * S - N
            if flat:
                ra = P[m + 1, n] + (P[m, n + 1] - P[m, n])
                rb = P[m, n + 1] + (P[m + 1, n] - P[m, n])
            else:
                ca = np.cross(Na, N12)
                cb = np.cross(Nb, N12)
                la = math.sqrt(float(ca @ ca))
                lb = math.sqrt(float(cb @ cb))
                if la <= tol or lb <= tol:
                    raise ConsistencyViolation(f"tangent planes stop turning at quad {(m, n)}", index=(m, n))
                ra = P[m + 1, n] + (sg2 * bn / la) * ca
                rb = P[m, n + 1] + (sg1 / lb) * cb
            d = ra - rb
            r = math.sqrt(float(d @ d))
            res[m, n] = r
            if not r < tol:
                raise ConsistencyViolation(f"quad {(m, n)} does not close (residual {r:.3e})",
                                           index=(m, n), residual=r)
            P[m + 1, n + 1] = 0.5 * (ra + rb)
            Nm[m + 1, n + 1] = N12
    mesh = SurfaceMesh(a, P * a, Nm, b)
    mesh.consistency = res
    return mesh


# ---------------------------------------------------------------------------
# analysis


def _forward(mesh: SurfaceMesh):
    """Unit-free differences D1 r, D2 r on the forward region (rows-1, cols-1)."""
    v = mesh.vertices
    d1 = (v[1:, :-1] - v[:-1, :-1]) / mesh.a
    d2 = (v[:-1, 1:] - v[:-1, :-1]) / mesh.b
    return d1, d2


def _normalize_tangent_cross(d1: np.ndarray, d2: np.ndarray) -> np.ndarray:
    """Unit normal along d1 x d2; shared with the time-scale module so both agree bitwise."""
    c = np.cross(d1, d2)
    s = np.linalg.norm(c, axis=-1, keepdims=True)
    scale = np.maximum(np.linalg.norm(d1, axis=-1, keepdims=True) * np.linalg.norm(d2, axis=-1, keepdims=True), 1e-300)
    if np.any(s <= DEFAULT_TOL * scale):
        idx = np.argwhere((s <= DEFAULT_TOL * scale)[..., 0])[0]
        raise DegenerateTangents(f"tangent differences are parallel at {tuple(int(i) for i in idx)}")
    return c / s


def normal_field(mesh: SurfaceMesh) -> np.ndarray:
    """Discrete normals unit(D1 r x D2 r) on the forward region, shape (rows-1, cols-1, 3)."""
    d1, d2 = _forward(mesh)
    return _normalize_tangent_cross(d1, d2)


def discrete_normal(mesh: SurfaceMesh, m: int, n: int) -> np.ndarray:
    if not (0 <= m < mesh.rows - 1 and 0 <= n < mesh.cols - 1):
        raise BoundaryIndex(f"({m}, {n}) has no forward neighbours in a {mesh.rows}x{mesh.cols} mesh")
    v = mesh.vertices
    d1 = (v[m + 1, n] - v[m, n]) / mesh.a
    d2 = (v[m, n + 1] - v[m, n]) / mesh.b
    return _normalize_tangent_cross(d1, d2)


def _star_products(mesh: SurfaceMesh):
    """D1n.D1r, D2n.D2r, D1n.D2r, D2n.D1r and D1r.D2r on the region (rows-2, cols-2)."""
    if mesh.rows < 3 or mesh.cols < 3:
        raise TooSmall("star quantities need at least 3x3 vertices")
    d1, d2 = _forward(mesh)
    return star_products(d1, d2, mesh.a, mesh.b)


def star_products(d1, d2, h1, h2):
    """Star dot products from forward tangent differences on a (k1, k2) region.

    *h1*, *h2* divide the normal differences; scalars or arrays broadcasting
    against shape (k1-1, k2-1, 1).  Returns arrays on the (k1-1, k2-1)
    region.  Both the lattice and the time-scale code call this, so the two
    agree bit for bit on lattices.
    """
    nf = _normalize_tangent_cross(d1, d2)
    n = nf[:-1, :-1]
    dn1 = (nf[1:, :-1] - n) / h1
    dn2 = (nf[:-1, 1:] - n) / h2
    r1 = d1[:-1, :-1]
    r2 = d2[:-1, :-1]
    dot = lambda x, y: np.einsum("ijk,ijk->ij", x, y)
    return dot(dn1, r1), dot(dn2, r2), dot(dn1, r2), dot(dn2, r1), dot(r1, r2)


def kdisc_from_products(p12, p21, c):
    den = 1.0 - c * c
    if np.any(den <= 1e-12):
        idx = np.argwhere(den <= 1e-12)[0]
        raise DegenerateTangents(f"tangent differences are parallel at {tuple(int(i) for i in idx)}")
    return -(p12 * p21) / den


def coplanarity_field(mesh: SurfaceMesh) -> np.ndarray:
    p11, p22, *_ = _star_products(mesh)
    return np.stack([np.abs(p11), np.abs(p22)], axis=-1)


def coplanarity_residual(mesh: SurfaceMesh, m: int, n: int) -> tuple:
    """``(|D1n . D1r|, |D2n . D2r|)`` at (m, n); zero exactly when the star is planar."""
    _check_star(mesh, m, n)
    sub = SurfaceMesh(mesh.a, mesh.vertices[m:m + 3, n:n + 3], mesh.normals[m:m + 3, n:n + 3], mesh.b)
    p11, p22, *_ = _star_products(sub)
    return float(abs(p11[0, 0])), float(abs(p22[0, 0]))


def _check_star(mesh, m, n):
    if not (0 <= m < mesh.rows - 2 and 0 <= n < mesh.cols - 2):
        raise BoundaryIndex(f"({m}, {n}) needs vertices up to ({m + 2}, {n + 2}) "
                            f"in a {mesh.rows}x{mesh.cols} mesh")


def kdisc_field(mesh: SurfaceMesh) -> np.ndarray:
    """K = -(D1n.D2r)(D2n.D1r) / (1 - (D1r.D2r)^2) on the region (rows-2, cols-2)."""
    _, _, p12, p21, c = _star_products(mesh)
    return kdisc_from_products(p12, p21, c)


def discrete_gaussian_curvature(mesh: SurfaceMesh, m: int, n: int) -> float:
    """Curvature attached to the quad's base vertex (m, n)."""
    _check_star(mesh, m, n)
    sub = SurfaceMesh(mesh.a, mesh.vertices[m:m + 3, n:n + 3], mesh.normals[m:m + 3, n:n + 3], mesh.b)
    return float(kdisc_field(sub)[0, 0])


def tetrahedron_closed_forms(a: float, phi: float, psi: float) -> dict:
    """Closed-form data of the quad tetrahedron with four edges a and angles phi, psi.

    Keys: diag_AC, diag_BD, area_ABC, det, height_H, volume, cos_theta, K.
    """
    s = math.cos(phi) + math.cos(psi)
    root = math.sqrt(max(s, 0.0) / 2.0)
    det = 4 * a ** 3 * math.sin(phi / 2) * math.sin(psi / 2) * root
    tt = math.tan(phi / 2) * math.tan(psi / 2)
    return {
        "diag_AC": 2 * a * math.sin(psi / 2),
        "diag_BD": 2 * a * math.sin(phi / 2),
        "area_ABC": 0.5 * a * a * math.sin(psi),
        "det": det,
        "height_H": det / (a * a * math.sin(psi)),
        "volume": det / 6.0,
        "cos_theta": tt,
        "K": (tt * tt - 1.0) / (a * a),
    }


@dataclass(frozen=True)
class QuadGeometry:
    """Tetrahedron ABCD of quad (m, n): A = r, B = T1 r, C = T1T2 r, D = T2 r.

    Lengths, area, height, det and volume come from coordinates; ``theta``
    is the dihedral angle between the planes ABD and ABC (the tangent planes
    at A and B), ``theta2`` that between ABD and ADC (tangent planes at A and
    D).  ``K`` is -H^2/(a^4 sin^2 phi).  ``closed`` holds the closed forms
    evaluated at the measured (a, phi, psi) and ``deviation`` the largest
    relative disagreement between the two.
    """

    a: float
    phi: float
    psi: float
    diag_AC: float
    diag_BD: float
    area_ABC: float
    det: float
    height_H: float
    volume: float
    theta: float
    theta2: float
    cos_theta_closed: float
    K: float
    orientation: int
    closed: dict
    deviation: float


def _rel(x, y):
    return abs(x - y) / max(abs(x), abs(y), 1e-300)


def quad_geometry(mesh: SurfaceMesh, m: int, n: int, tol: float = 1e-12) -> QuadGeometry:
    if not (0 <= m < mesh.rows - 1 and 0 <= n < mesh.cols - 1):
        raise BoundaryIndex(f"quad ({m}, {n}) is outside a {mesh.rows}x{mesh.cols} mesh")
    if not mesh.isotropic:
        raise InputError("tetrahedron identities need equal edge lengths in both directions")
    v = mesh.vertices
    A, B, C, D = v[m, n], v[m + 1, n], v[m + 1, n + 1], v[m, n + 1]
    a = mesh.a
    AB, AC, AD = B - A, C - A, D - A
    phi = angle_between(AB, AD)
    psi = angle_between(A - D, C - D)
    if math.cos(phi) + math.cos(psi) < -tol:
        raise DegenerateTetrahedron(f"cos(phi) + cos(psi) = {math.cos(phi) + math.cos(psi):.3e} < 0 at quad {(m, n)}")
    cabc = np.cross(AB, AC)
    area2 = float(np.linalg.norm(cabc))
    det_signed = float(np.dot(cabc, AD))
    det = abs(det_signed)
    H = det / area2 if area2 > 0 else 0.0
    plane_abd = np.cross(AB, AD)
    plane_adc = np.cross(AD, AC)
    theta = math.atan2(float(np.linalg.norm(np.cross(plane_abd, cabc))), abs(float(np.dot(plane_abd, cabc))))
    theta2 = math.atan2(float(np.linalg.norm(np.cross(plane_abd, plane_adc))), abs(float(np.dot(plane_abd, plane_adc))))
    K = -(H * H) / (a ** 4 * math.sin(phi) ** 2)
    closed = tetrahedron_closed_forms(a, phi, psi)
    coords = {"diag_AC": float(np.linalg.norm(AC)), "diag_BD": float(np.linalg.norm(D - B)),
              "area_ABC": 0.5 * area2, "det": det, "height_H": H}
    # when the closed det vanishes (flat quad) compare absolutely against the edge scale
    dev = 0.0
    for key, val in coords.items():
        ref = closed[key]
        scale = {"det": a ** 3, "height_H": a, "area_ABC": a * a}.get(key, a)
        dev = max(dev, abs(val - ref) / max(abs(ref), 1e-8 * scale))
    return QuadGeometry(
        a=a, phi=phi, psi=psi,
        diag_AC=coords["diag_AC"], diag_BD=coords["diag_BD"], area_ABC=coords["area_ABC"],
        det=det, height_H=H, volume=det / 6.0,
        theta=theta, theta2=theta2, cos_theta_closed=closed["cos_theta"], K=K,
        orientation=1 if det_signed >= 0 else -1,
        closed=closed, deviation=dev,
    )


def quad_field(mesh: SurfaceMesh):
    """Vectorized phi, psi, theta, theta2 and coordinate/closed-form deviation over all quads."""
    if not mesh.isotropic:
        raise InputError("tetrahedron identities need equal edge lengths in both directions")
    v = mesh.vertices
    a = mesh.a
    A, B, C, D = v[:-1, :-1], v[1:, :-1], v[1:, 1:], v[:-1, 1:]
    AB, AC, AD = B - A, C - A, D - A

    def ang(x, y):
        return np.arctan2(np.linalg.norm(np.cross(x, y), axis=-1), np.einsum("ijk,ijk->ij", x, y))

    def acute(x, y):
        return np.arctan2(np.linalg.norm(np.cross(x, y), axis=-1), np.abs(np.einsum("ijk,ijk->ij", x, y)))

    phi = ang(AB, AD)
    psi = ang(A - D, C - D)
    cabc = np.cross(AB, AC)
    pabd = np.cross(AB, AD)
    padc = np.cross(AD, AC)
    theta = acute(pabd, cabc)
    theta2 = acute(pabd, padc)
    area2 = np.linalg.norm(cabc, axis=-1)
    det = np.abs(np.einsum("ijk,ijk->ij", cabc, AD))
    H = np.where(area2 > 0, det / np.where(area2 > 0, area2, 1.0), 0.0)
    tt = np.tan(phi / 2) * np.tan(psi / 2)
    return {"phi": phi, "psi": psi, "theta": theta, "theta2": theta2, "cos_theta_closed": tt,
            "height_H": H, "det": det, "area2": area2, "K_quad": -(H * H) / (a ** 4 * np.sin(phi) ** 2),
            "diag_AC": np.linalg.norm(AC, axis=-1), "diag_BD": np.linalg.norm(D - B, axis=-1)}


@dataclass(frozen=True)
class InvariantReport:
    """Aggregate invariants of a net.  Entries that do not apply are None."""

    rows: int
    cols: int
    a: float
    b: float
    tol: float
    max_edge_residual: float
    worst_edge: tuple
    max_coplanarity_residual: float
    worst_coplanarity: tuple
    max_plane_residual: float
    theta_mean: float
    theta_max_dev: float
    theta_plane_mean: float
    theta_plane_max_dev: float
    K_mean: float
    K_max_dev: float
    K_relation_residual: Optional[float]
    cos_theta_residual: Optional[float]
    closed_form_residual: Optional[float]
    a_sin_theta_residual: Optional[float]
    pseudospherical: bool
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _edge_residuals(mesh: SurfaceMesh):
    v = mesh.vertices
    e1 = np.abs(np.linalg.norm(v[1:] - v[:-1], axis=-1) / mesh.a - 1.0)
    e2 = np.abs(np.linalg.norm(v[:, 1:] - v[:, :-1], axis=-1) / mesh.b - 1.0)
    return e1, e2


def _plane_residual(mesh: SurfaceMesh) -> np.ndarray:
    """Largest distance (over the star) of neighbours from the stored tangent plane, per vertex, in units of a."""
    v, n = mesh.vertices, mesh.normals
    out = np.zeros(mesh.shape)
    for dm, dn in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        src = v[max(dm, 0):mesh.rows + min(dm, 0), max(dn, 0):mesh.cols + min(dn, 0)]
        tgt = (slice(max(-dm, 0), mesh.rows + min(-dm, 0)), slice(max(-dn, 0), mesh.cols + min(-dn, 0)))
        d = np.abs(np.einsum("ijk,ijk->ij", src - v[tgt], n[tgt])) / mesh.a
        out[tgt] = np.maximum(out[tgt], d)
    return out


def invariant_report(mesh: SurfaceMesh, tol: float = 1e-8) -> InvariantReport:
    """Check the net conditions and the curvature identities over a whole mesh.

    ``passed`` depends only on the unit-edge and star-planarity residuals.
    """
    if mesh.rows < 3 or mesh.cols < 3:
        raise TooSmall(f"need at least 3x3 vertices, got {mesh.rows}x{mesh.cols}")
    e1, e2 = _edge_residuals(mesh)
    if e1.max() >= e2.max():
        i, j = np.unravel_index(int(np.argmax(e1)), e1.shape)
        worst_edge = (1, int(i), int(j))
    else:
        i, j = np.unravel_index(int(np.argmax(e2)), e2.shape)
        worst_edge = (2, int(i), int(j))
    max_edge = float(max(e1.max(), e2.max()))
    cop = coplanarity_field(mesh)
    cm = cop.max(axis=-1)
    wi = np.unravel_index(int(np.argmax(cm)), cm.shape)
    max_cop = float(cm[wi])
    K = kdisc_field(mesh)
    K_mean = float(K.mean())
    K_dev = float(np.max(np.abs(K - K_mean)))

    # dihedral angles between stored tangent planes of lattice neighbours
    nrm = mesh.normals
    d1 = np.arctan2(np.linalg.norm(np.cross(nrm[1:], nrm[:-1]), axis=-1), np.abs(np.einsum("ijk,ijk->ij", nrm[1:], nrm[:-1])))
    d2 = np.arctan2(np.linalg.norm(np.cross(nrm[:, 1:], nrm[:, :-1]), axis=-1), np.abs(np.einsum("ijk,ijk->ij", nrm[:, 1:], nrm[:, :-1])))
    tp = np.concatenate([d1.ravel(), d2.ravel()])
    tp_mean = float(tp.mean())
    tp_dev = float(np.max(np.abs(tp - tp_mean)))

    rel = cos_res = closed_res = asin_res = None
    if mesh.isotropic:
        q = quad_field(mesh)
        th = np.concatenate([q["theta"].ravel(), q["theta2"].ravel()])
        cos_res = float(np.max(np.abs(np.cos(q["theta"]) - q["cos_theta_closed"])))
        a = mesh.a
        s = np.cos(q["phi"]) + np.cos(q["psi"])
        det_c = 4 * a ** 3 * np.sin(q["phi"] / 2) * np.sin(q["psi"] / 2) * np.sqrt(np.maximum(s, 0) / 2)
        checks = [
            (q["diag_AC"], 2 * a * np.sin(q["psi"] / 2), a),
            (q["diag_BD"], 2 * a * np.sin(q["phi"] / 2), a),
            (0.5 * q["area2"], 0.5 * a * a * np.sin(q["psi"]), a * a),
            (q["det"], det_c, a ** 3),
            (q["height_H"], det_c / (a * a * np.sin(q["psi"])), a),
        ]
        closed_res = float(max(np.max(np.abs(x - y) / np.maximum(np.abs(y), 1e-8 * sc)) for x, y, sc in checks))
    else:
        th = tp
    theta_mean = float(th.mean())
    theta_dev = float(np.max(np.abs(th - theta_mean)))
    if mesh.isotropic:
        rel = abs(K_mean + math.sin(theta_mean) ** 2 / mesh.a ** 2)
        asin_res = abs(mesh.a - math.sin(theta_mean))
    passed = max_edge < tol and max_cop < tol
    return InvariantReport(
        rows=mesh.rows, cols=mesh.cols, a=mesh.a, b=mesh.b, tol=tol,
        max_edge_residual=max_edge, worst_edge=worst_edge,
        max_coplanarity_residual=max_cop, worst_coplanarity=(int(wi[0]), int(wi[1])),
        max_plane_residual=float(_plane_residual(mesh).max()),
        theta_mean=theta_mean, theta_max_dev=theta_dev,
        theta_plane_mean=tp_mean, theta_plane_max_dev=tp_dev,
        K_mean=K_mean, K_max_dev=K_dev,
        K_relation_residual=rel, cos_theta_residual=cos_res,
        closed_form_residual=closed_res, a_sin_theta_residual=asin_res,
        pseudospherical=bool(theta_mean > tol),
        passed=bool(passed),
    )


def verify_chebyshev_net(mesh: SurfaceMesh, tol: float = 1e-8) -> InvariantReport:
    return invariant_report(mesh, tol)


def report_rows(mesh: SurfaceMesh):
    """Per-vertex rows (m, n, phi, psi, theta, K, edge_residual, coplanarity_residual).

    One row per interior vertex 1 <= m <= rows-2, 1 <= n <= cols-2; the
    quad quantities are those of the quad based at (m, n).  K is None where
    its forward star leaves the mesh.
    """
    if mesh.rows < 3 or mesh.cols < 3:
        raise TooSmall("report needs at least 3x3 vertices")
    e1, e2 = _edge_residuals(mesh)
    q = quad_field(mesh) if mesh.isotropic else None
    K = kdisc_field(mesh)
    cop = coplanarity_field(mesh).max(axis=-1)
    nrm = mesh.normals
    for m in range(1, mesh.rows - 1):
        for n in range(1, mesh.cols - 1):
            edge = max(e1[m - 1, n], e1[m, n], e2[m, n - 1], e2[m, n])
            if q is not None:
                phi, psi, theta = q["phi"][m, n], q["psi"][m, n], q["theta"][m, n]
            else:
                phi = psi = float("nan")
                theta = dihedral_angle(Plane(mesh.vertices[m, n], nrm[m, n]), Plane(mesh.vertices[m + 1, n], nrm[m + 1, n]))
            inside = m < K.shape[0] and n < K.shape[1]
            yield (m, n, float(phi), float(psi), float(theta),
                   float(K[m, n]) if inside else None, float(edge),
                   float(cop[m, n]) if inside else None)
