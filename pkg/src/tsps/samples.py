"""Generators for test data: soliton form fields, classical surfaces, Cauchy data."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadAngle, InputError, OutOfValidityBand, SingularParametrization
from .forms import FormsField
from .ksurface import CauchyData, _rotate
from .timescale import GridDomain, GridFunction

__all__ = [
    "OmegaField",
    "sine_gordon_one_soliton",
    "soliton_omega_field",
    "chebyshev_forms_from_omega",
    "sphere_immersion",
    "cylinder_immersion",
    "tractroid_immersion",
    "pseudosphere_chebyshev_immersion",
    "default_twist",
    "amsler_cauchy_data",
    "perturbed_cauchy_data",
    "semidiscrete_amsler_surface",
]

VALIDITY_EPS = 0.05


def sine_gordon_one_soliton(u, v, shift: float = 0.0):
    """omega = 4 arctan(exp(u + v + shift)); solves omega_uv = sin(omega).

    omega passes through pi on the line u + v + shift = 0.
    """
    return 4.0 * np.arctan(np.exp(np.asarray(u, dtype=float) + np.asarray(v, dtype=float) + shift))


@dataclass(frozen=True, eq=False)
class OmegaField:
    domain: GridDomain
    omega: np.ndarray


def soliton_omega_field(window1, window2, h: float, shift: float = 0.0) -> OmegaField:
    dom = GridDomain.continuum(window1, window2, h)
    U, V = dom.mesh()
    return OmegaField(dom, sine_gordon_one_soliton(U, V, shift))


def chebyshev_forms_from_omega(field: OmegaField, eps: float = VALIDITY_EPS) -> FormsField:
    """Forms E = G = 1, F = cos(omega), L = N = 0, M = sin(omega)."""
    w = np.asarray(field.omega, dtype=float)
    lo, hi = float(w.min()), float(w.max())
    if lo < eps or hi > math.pi - eps:
        raise OutOfValidityBand(f"omega ranges over [{lo:.6g}, {hi:.6g}], outside [{eps}, pi - {eps}]")
    one = np.ones_like(w)
    zero = np.zeros_like(w)
    return FormsField(field.domain, one, np.cos(w), one, zero, np.sin(w), zero)


def _warp(dom: GridDomain, warp: float):
    U, V = dom.mesh()
    if warp == 0:
        return U, V
    jac = 1.0 - 4.0 * warp * warp * U * V
    if np.any(jac <= 1e-6):
        raise SingularParametrization("warp is not invertible on this window")
    return U + warp * V * V, V + warp * U * U


def sphere_immersion(R: float, domain: GridDomain, warp: float = 0.0) -> GridFunction:
    """Round sphere, u = longitude, v = colatitude (before warping).

    With this chart r_u x r_v points inward, so H = +1/R.  A nonzero *warp*
    reparametrizes by (u + w v^2, v + w u^2), which keeps the surface but
    makes the forms depend on both coordinates.
    """
    if R <= 0:
        raise InputError("radius must be positive")
    U, V = _warp(domain, warp)
    if np.any(np.abs(np.sin(V)) < 1e-3):
        raise SingularParametrization("window touches a pole of the spherical chart")
    sv = np.sin(V)
    vals = R * np.stack([sv * np.cos(U), sv * np.sin(U), np.cos(V)], axis=-1)
    return GridFunction(domain, vals)


def cylinder_immersion(R: float, domain: GridDomain, warp: float = 0.0) -> GridFunction:
    """Circular cylinder, u = angle, v = height (before warping)."""
    if R <= 0:
        raise InputError("radius must be positive")
    U, V = _warp(domain, warp)
    vals = np.stack([R * np.cos(U), R * np.sin(U), V], axis=-1)
    return GridFunction(domain, vals)


def _tractroid(s, phi):
    sech = 1.0 / np.cosh(s)
    return np.stack([sech * np.cos(phi), sech * np.sin(phi), s - np.tanh(s)], axis=-1)


def tractroid_immersion(domain: GridDomain) -> GridFunction:
    """Pseudosphere (K = -1) in coordinates (s, phi); singular on the rim s = 0."""
    U, V = domain.mesh()
    if np.any(U <= 1e-3):
        raise SingularParametrization("tractroid chart needs s > 0 (the rim s = 0 is a cusp)")
    return GridFunction(domain, _tractroid(U, V))


def pseudosphere_chebyshev_immersion(domain: GridDomain) -> GridFunction:
    """Pseudosphere in Chebyshev asymptotic coordinates: tractroid at s = u + v, phi = u - v.

    Its forms are E = G = 1, L = N = 0 and F = cos(omega) with omega the
    one-soliton 4 arctan(exp(u + v)).  The rim u + v = 0 is singular, so the
    window must lie strictly on one side of it.
    """
    U, V = domain.mesh()
    S = U + V
    if not (np.all(S > 1e-3) or np.all(S < -1e-3)):
        raise SingularParametrization("window crosses or touches the rim u + v = 0")
    return GridFunction(domain, _tractroid(S, U - V))


# ---------------------------------------------------------------------------
# Cauchy data


def default_twist(a: float, b: float, n1: int, n2: int, cap: float = 0.5) -> tuple:
    """Tangent-plane twists (theta1, theta2) for an n1 x n2 patch.

    The curvature radius rho = a/sin(theta1) = b/sin(theta2) is chosen so
    that the patch spans one unit in curvature-normalized coordinates,
    (n1-1)a * (n2-1)b = rho^2.  Larger patches run into the cuspidal edge
    of the Amsler surface, where the net folds.  Both sines are capped.
    """
    rho = math.sqrt(max(n1 - 1, 1) * max(n2 - 1, 1) * a * b)
    s1, s2 = a / rho, b / rho
    f = max(s1, s2) / cap
    if f > 1:
        s1, s2 = s1 / f, s2 / f
    return math.asin(s1), math.asin(s2)


def _twists(a, b, n1, n2, theta):
    if theta is None:
        return default_twist(a, b, n1, n2)
    theta = float(theta)
    if not (0 < theta <= math.pi / 2):
        raise BadAngle(f"twist angle must lie in (0, pi/2], got {theta!r}")
    s2 = b * math.sin(theta) / a
    if s2 > 1:
        raise BadAngle("no matching twist in the second direction (b sin(theta)/a > 1)")
    return theta, math.asin(s2)


def amsler_cauchy_data(gamma: float, a: float, n1: int, n2: int,
                       theta: Optional[float] = None, b: Optional[float] = None) -> CauchyData:
    """Straight strips along e1 = (1,0,0) and e2 = (cos gamma, sin gamma, 0).

    Straight strips do not determine their tangent planes, so the planes are
    supplied: along strip 1 they turn about e1 by +theta per edge, along
    strip 2 about e2 by -theta2, starting from z = 0 at the origin.  The net
    is then a piece of a discrete Amsler surface with K = -sin^2(theta)/a^2.
    """
    gamma = float(gamma)
    if not (0 < gamma < math.pi):
        raise BadAngle(f"angle between strips must lie in (0, pi), got {gamma!r}")
    if n1 < 2 or n2 < 2:
        raise InputError("strips need at least 2 points")
    if not a > 0:
        raise InputError("mesh size must be positive")
    b = a if b is None else float(b)
    th1, th2 = _twists(a, b, n1, n2, theta)
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([math.cos(gamma), math.sin(gamma), 0.0])
    ez = np.array([0.0, 0.0, 1.0])
    s1 = np.outer(np.arange(n1) * a, e1)
    s2 = np.outer(np.arange(n2) * b, e2)
    N1 = np.array([_rotate(ez, e1, k * th1) for k in range(n1)])
    N2 = np.array([_rotate(ez, e2, -k * th2) for k in range(n2)])
    return CauchyData(a, s1, s2, N1, N2, b if b != a else None)


def _frenet_strip(start_t, start_n, h, n, twist, kappas):
    pts = np.zeros((n, 3))
    nrm = np.zeros((n, 3))
    t = start_t.copy()
    N = start_n.copy()
    nrm[0] = N
    for k in range(n - 1):
        pts[k + 1] = pts[k] + h * t
        N = _rotate(N, t, twist)
        N /= np.linalg.norm(N)
        t = _rotate(t, N, kappas[k])
        t -= np.dot(t, N) * N
        t /= np.linalg.norm(t)
        nrm[k + 1] = N
    return pts, nrm


def perturbed_cauchy_data(seed: int, a: float, n: int, amplitude: float,
                          theta: Optional[float] = None, gamma: float = math.pi / 2) -> CauchyData:
    """Curved strips with constant plane twist, reproducible from *seed*.

    Each strip is an asymptotic polyline: the tangent plane turns by the
    twist about every edge, and the next edge turns inside the new plane by
    a bending angle of size amplitude * U(0.5, 1) with random sign.  The
    generator is numpy's PCG64 seeded with *seed*.  Amplitude 0 gives the
    straight Amsler strips.
    """
    if not (0 < gamma < math.pi):
        raise BadAngle(f"angle between strips must lie in (0, pi), got {gamma!r}")
    if n < 2:
        raise InputError("strips need at least 2 points")
    if not (0 <= amplitude < math.pi / 2):
        raise InputError("amplitude must lie in [0, pi/2)")
    rng = np.random.default_rng(seed)
    th, _ = _twists(a, a, n, n, theta)

    def bends():
        mag = rng.uniform(0.5, 1.0, size=n - 1)
        sgn = rng.choice([-1.0, 1.0], size=n - 1)
        return amplitude * mag * sgn

    k1, k2 = bends(), bends()
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([math.cos(gamma), math.sin(gamma), 0.0])
    ez = np.array([0.0, 0.0, 1.0])
    s1, N1 = _frenet_strip(e1, ez, a, n, th, k1)
    s2, N2 = _frenet_strip(e2, ez, a, n, -th, k2)
    return CauchyData(a, s1, s2, N1, N2)


def semidiscrete_amsler_surface(h: float, b: float = 0.1, u_max: float = 1.0, v_max: float = 1.0,
                                gamma: float = math.pi / 2, theta: Optional[float] = None):
    """Amsler net with edges h x b, read as a surface on [0, u_max] x bZ.

    Direction 1 is a continuum sampled at step h, direction 2 the lattice
    bZ.  As h -> 0 the net tends to a semi-discrete K-surface.
    """
    from .ksurface import build_from_cauchy
    from .tssurface import TimeScaleSurface
    from .timescale import TimeScale

    if not (h > 0 and b > 0 and u_max > 0 and v_max > 0):
        raise InputError("steps and window sizes must be positive")
    n1 = int(round(u_max / h)) + 1
    n2 = int(round(v_max / b)) + 1
    if abs((n1 - 1) * h - u_max) > 1e-9 * u_max:
        raise InputError("u_max must be a multiple of h")
    data = amsler_cauchy_data(gamma, h, n1, n2, theta=theta, b=b)
    mesh = build_from_cauchy(data)
    dom = GridDomain(TimeScale.interval(0.0, u_max), TimeScale.lattice(b),
                     (0.0, u_max), (0.0, (n2 - 1) * b), h)
    if dom.shape != mesh.shape:
        raise InputError(f"sampling gives {dom.shape} points, net has {mesh.shape}")
    return TimeScaleSurface(GridFunction(dom, mesh.vertices))
