"""First and second fundamental forms on sampled parameter grids.

Forms are sampled on a :class:`~tsps.timescale.GridDomain` whose axes are
treated as continuous coordinates.  All grid derivatives are second order:
central in the interior, one-sided three-point at the window edges
(``numpy.gradient`` with ``edge_order=2``).

``W`` always denotes the Gram determinant ``EG - F^2``.  Curvatures are

    K = (LN - M^2) / W,    H = (EN - 2FM + GL) / (2W),

and the normal is ``r_u x r_v / |r_u x r_v|``, which fixes the sign of H.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import BoundaryIndex, DegenerateChebyshevAngle, DegenerateFirstForm, FormatError, NotChebyshev
from .timescale import GridDomain, GridFunction

__all__ = [
    "FundamentalForms",
    "FormsField",
    "ChebyshevReport",
    "forms_field_from_immersion",
    "forms_from_immersion",
    "curvatures",
    "gauss_curvature_intrinsic",
    "codazzi_residuals",
    "chebyshev_residuals",
    "k_chebyshev",
    "chebyshev_constancy_report",
]

W_REL_TOL = 1e-12
CHEB_ANGLE_TOL = 1e-12


def _w_guard(E, G, W):
    return np.abs(W) < W_REL_TOL * np.maximum(np.abs(E * G), 1.0)


@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    L: float
    M: float
    N: float

    @property
    def W(self) -> float:
        return self.E * self.G - self.F * self.F

    def as_tuple(self) -> tuple:
        return (self.E, self.F, self.G, self.L, self.M, self.N)


def curvatures(f: FundamentalForms) -> tuple:
    """Gaussian and mean curvature ``(K, H)`` of a forms sextuple."""
    W = f.W
    if _w_guard(f.E, f.G, W):
        raise DegenerateFirstForm(f"first form is degenerate (W = {W:.3e})")
    K = (f.L * f.N - f.M * f.M) / W
    H = (f.E * f.N - 2.0 * f.F * f.M + f.G * f.L) / (2.0 * W)
    return K, H


def k_chebyshev(F: float, M: float) -> float:
    """Curvature -M^2 / (1 - F^2) of forms in Chebyshev asymptotic coordinates."""
    if abs(F) >= 1.0 - CHEB_ANGLE_TOL:
        raise DegenerateChebyshevAngle(f"|F| = {abs(F)!r} leaves no angle between the coordinate lines")
    return -(M * M) / ((1.0 - F) * (1.0 + F))


def chebyshev_residuals(f: FundamentalForms) -> tuple:
    """``(|E-1|, |G-1|, |L|, |N|)``: how far the forms are from Chebyshev/asymptotic form."""
    return (abs(f.E - 1.0), abs(f.G - 1.0), abs(f.L), abs(f.N))


class FormsField:
    """Sampled forms over a grid domain, with derived fields computed on demand."""

    def __init__(self, domain: GridDomain, E, F, G, L, M, N, stencil_depth: int = 2):
        self.domain = domain
        # distance from the window edge beyond which every nested difference is central;
        # forms sampled from an immersion already carry one level of differencing
        self.stencil_depth = stencil_depth
        arrs = [np.asarray(x, dtype=float) for x in (E, F, G, L, M, N)]
        for x in arrs:
            if x.shape != domain.shape:
                raise ValueError(f"form array shape {x.shape} does not match domain {domain.shape}")
        self.E, self.F, self.G, self.L, self.M, self.N = arrs

    @property
    def shape(self) -> tuple:
        return self.domain.shape

    def at(self, index) -> FundamentalForms:
        i, j = self.domain.check_index(index)
        return FundamentalForms(*(float(x[i, j]) for x in self._arrays()))

    def _arrays(self):
        return (self.E, self.F, self.G, self.L, self.M, self.N)

    def _du(self, x):
        return np.gradient(x, self.domain.u, axis=0, edge_order=2)

    def _dv(self, x):
        return np.gradient(x, self.domain.v, axis=1, edge_order=2)

    @cached_property
    def W(self) -> np.ndarray:
        return self.E * self.G - self.F * self.F

    def _check_w(self, mask=None):
        bad = _w_guard(self.E, self.G, self.W)
        if mask is not None:
            bad &= mask
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise DegenerateFirstForm(f"first form is degenerate at {(int(i), int(j))}")

    @cached_property
    def K(self) -> np.ndarray:
        self._check_w()
        return (self.L * self.N - self.M ** 2) / self.W

    @cached_property
    def H(self) -> np.ndarray:
        self._check_w()
        return (self.E * self.N - 2 * self.F * self.M + self.G * self.L) / (2 * self.W)

    @cached_property
    def K_intrinsic(self) -> np.ndarray:
        """Brioschi-type intrinsic curvature from E, F, G and their derivatives.

        K = -det[[E, E_u, E_v], [F, F_u, F_v], [G, G_u, G_v]] / (4 W^2)
            + (1 / (2 sqrt W)) * ( d/du[(F_v - G_u)/sqrt W] + d/dv[(F_u - E_v)/sqrt W] )
        """
        self._check_w()
        E, F, G, W = self.E, self.F, self.G, self.W
        Eu, Ev = self._du(E), self._dv(E)
        Fu, Fv = self._du(F), self._dv(F)
        Gu, Gv = self._du(G), self._dv(G)
        det = (E * (Fu * Gv - Fv * Gu)
               - Eu * (F * Gv - Fv * G)
               + Ev * (F * Gu - Fu * G))
        sw = np.sqrt(W)
        div = self._du((Fv - Gu) / sw) + self._dv((Fu - Ev) / sw)
        return -det / (4 * W * W) + div / (2 * sw)

    @cached_property
    def codazzi(self) -> tuple:
        """The two Mainardi-Codazzi left-hand sides as arrays."""
        self._check_w()
        E, F, G, L, M, N, W = self.E, self.F, self.G, self.L, self.M, self.N, self.W
        H = self.H
        Eu, Ev = self._du(E), self._dv(E)
        Fu, Fv = self._du(F), self._dv(F)
        Gu, Gv = self._du(G), self._dv(G)

        def det3(c1, c2, c3):
            (a1, a2, a3), (b1, b2, b3), (d1, d2, d3) = c1, c2, c3
            # columns (E, F, G), (dE, dF, dG), (L, M, N)
            return (a1 * (b2 * d3 - b3 * d2) - b1 * (a2 * d3 - a3 * d2) + d1 * (a2 * b3 - a3 * b2))

        det_u = det3((E, F, G), (Eu, Fu, Gu), (L, M, N))
        det_v = det3((E, F, G), (Ev, Fv, Gv), (L, M, N))
        c1 = self._dv(L) - self._du(M) - H * (Ev - Fu) + det_u / (2 * W)
        c2 = self._dv(M) - self._du(N) - H * (Fv - Gu) + det_v / (2 * W)
        return c1, c2

    def interior_mask(self, depth: Optional[int] = None) -> np.ndarray:
        depth = self.stencil_depth if depth is None else depth
        n1, n2 = self.shape
        mask = np.zeros(self.shape, dtype=bool)
        if n1 > 2 * depth and n2 > 2 * depth:
            mask[depth:n1 - depth, depth:n2 - depth] = True
        return mask

    def check_interior(self, index, depth: Optional[int] = None) -> tuple:
        depth = self.stencil_depth if depth is None else depth
        i, j = self.domain.check_index(index)
        n1, n2 = self.shape
        if not (depth <= i < n1 - depth and depth <= j < n2 - depth):
            raise BoundaryIndex(f"index {index} is within {depth} of the window edge")
        return i, j

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        stacked = np.stack(self._arrays(), axis=-1).reshape(-1, 6)
        return {"domain": self.domain.to_json(), "forms": stacked.tolist(), "stencil_depth": self.stencil_depth}

    @classmethod
    def from_json(cls, obj: dict) -> "FormsField":
        try:
            dom = GridDomain.from_json(obj["domain"])
            arr = np.asarray(obj["forms"], dtype=float).reshape(dom.shape + (6,))
            depth = int(obj.get("stencil_depth", 2))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad forms field: {exc}") from exc
        return cls(dom, *np.moveaxis(arr, -1, 0), stencil_depth=depth)

    def report_rows(self):
        """Rows (index_u, index_v, K_extrinsic, K_intrinsic, codazzi_1, codazzi_2) over the pure-central interior."""
        K, Ki = self.K, self.K_intrinsic
        c1, c2 = self.codazzi
        for i, j in np.argwhere(self.interior_mask()):
            yield (int(i), int(j), K[i, j], Ki[i, j], c1[i, j], c2[i, j])


def forms_field_from_immersion(r: GridFunction) -> FormsField:
    """Sample E, F, G, L, M, N of an immersion given by its grid positions."""
    if not r.is_vector:
        raise ValueError("immersion must be vector valued")
    dom = r.domain
    n1, n2 = dom.shape
    if n1 < 3 or n2 < 3:
        raise BoundaryIndex("second-order stencils need at least 3 samples per axis")
    x = r.values
    ru = np.gradient(x, dom.u, axis=0, edge_order=2)
    rv = np.gradient(x, dom.v, axis=1, edge_order=2)
    E = np.einsum("ijk,ijk->ij", ru, ru)
    F = np.einsum("ijk,ijk->ij", ru, rv)
    G = np.einsum("ijk,ijk->ij", rv, rv)
    W = E * G - F * F
    if np.any(_w_guard(E, G, W)):
        i, j = np.argwhere(_w_guard(E, G, W))[0]
        raise DegenerateFirstForm(f"first form is degenerate at {(int(i), int(j))}")
    c = np.cross(ru, rv)
    n = c / np.linalg.norm(c, axis=-1, keepdims=True)
    nu = np.gradient(n, dom.u, axis=0, edge_order=2)
    nv = np.gradient(n, dom.v, axis=1, edge_order=2)
    L = -np.einsum("ijk,ijk->ij", nu, ru)
    M = -np.einsum("ijk,ijk->ij", nu, rv)
    N = -np.einsum("ijk,ijk->ij", nv, rv)
    return FormsField(dom, E, F, G, L, M, N, stencil_depth=3)


def forms_from_immersion(r: GridFunction, index) -> FundamentalForms:
    r.domain.check_index(index)
    return forms_field_from_immersion(r).at(index)


def gauss_curvature_intrinsic(field: FormsField, index) -> float:
    """Intrinsic K at an index at least two samples away from every edge."""
    i, j = field.check_interior(index)
    return float(field.K_intrinsic[i, j])


def codazzi_residuals(field: FormsField, index) -> tuple:
    i, j = field.check_interior(index)
    c1, c2 = field.codazzi
    return float(c1[i, j]), float(c2[i, j])


@dataclass(frozen=True)
class ChebyshevReport:
    count: int
    mean: float
    min: float
    max: float
    std: float
    max_dev_from_mean: float
    max_dev_from_target: float
    worst_index: tuple
    target: float
    tol: float
    passed: bool


def chebyshev_constancy_report(field: FormsField, tol: float = 1e-12, target: float = -1.0,
                               form_tol: float = 1e-12) -> ChebyshevReport:
    """Statistics of -M^2/(1-F^2) over the interior of a Chebyshev forms field.

    Raises NotChebyshev if the forms are not in Chebyshev/asymptotic shape
    within *form_tol*, or if the interior is empty.  ``passed`` means every
    value lies within *tol* of *target*.
    """
    mask = field.interior_mask(depth=1)
    if not mask.any():
        raise NotChebyshev("window has no interior points")
    res = np.max(np.stack([np.abs(field.E - 1), np.abs(field.G - 1),
                           np.abs(field.L), np.abs(field.N)]), axis=0)
    if np.any(res[mask] > form_tol):
        i, j = np.argwhere((res > form_tol) & mask)[0]
        raise NotChebyshev(f"forms are not Chebyshev at {(int(i), int(j))} (residual {res[i, j]:.3e})")
    F, M = field.F, field.M
    if np.any(np.abs(F[mask]) >= 1 - CHEB_ANGLE_TOL):
        raise DegenerateChebyshevAngle("coordinate lines become tangent inside the window")
    k = -(M * M) / ((1.0 - F) * (1.0 + F))
    vals = k[mask]
    mean = float(vals.mean())
    dev_t = np.where(mask, np.abs(k - target), -np.inf)
    worst = np.unravel_index(int(np.argmax(dev_t)), k.shape)
    max_t = float(dev_t[worst])
    return ChebyshevReport(
        count=int(vals.size),
        mean=mean,
        min=float(vals.min()),
        max=float(vals.max()),
        std=float(vals.std()),
        max_dev_from_mean=float(np.max(np.abs(vals - mean))),
        max_dev_from_target=max_t,
        worst_index=(int(worst[0]), int(worst[1])),
        target=target,
        tol=tol,
        passed=bool(max_t <= tol),
    )
