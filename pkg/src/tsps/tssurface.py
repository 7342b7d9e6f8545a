"""Chebyshev nets on product time scales.

A :class:`TimeScaleSurface` is a vector grid function r on a GridDomain.
Its partial delta derivatives D1 r, D2 r are jump quotients at scattered
coordinates and forward differences at dense ones, and the normal is
unit(D1 r x D2 r).  The net conditions are

    |D1 r| = |D2 r| = 1,    D1 n . D1 r = D2 n . D2 r = 0,

and the curvature candidate is

    K = -(D1 n . D2 r)(D2 n . D1 r) / (1 - (D1 r . D2 r)^2).

On lattices K is exactly the discrete K-net curvature, on continua it tends
to the smooth Chebyshev curvature -M^2/(1-F^2).  Whether it is constant on
mixed scales is open; :func:`conjecture_constancy_report` only measures it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import BoundaryIndex, FormatError, NotChebyshevNet, TooSmall
from .ksurface import SurfaceMesh, _normalize_tangent_cross, kdisc_from_products, star_products
from .timescale import GridDomain, GridFunction, TimeScale, partial_delta_field

__all__ = [
    "TimeScaleSurface",
    "TSReport",
    "ConjectureReport",
    "ts_normal",
    "verify_ts_chebyshev",
    "ts_gaussian_curvature",
    "conjecture_constancy_report",
]


class TimeScaleSurface:
    def __init__(self, r: GridFunction):
        if not r.is_vector or r.values.shape[-1] != 3:
            raise ValueError("surface positions must be 3-vectors")
        self.r = r

    @property
    def domain(self) -> GridDomain:
        return self.r.domain

    @property
    def shape(self) -> tuple:
        return self.domain.shape

    @classmethod
    def from_mesh(cls, mesh: SurfaceMesh) -> "TimeScaleSurface":
        """View a lattice net as a surface on aZ x bZ."""
        s1 = TimeScale.lattice(mesh.a)
        s2 = TimeScale.lattice(mesh.b)
        dom = GridDomain(s1, s2, (0.0, (mesh.rows - 1) * mesh.a), (0.0, (mesh.cols - 1) * mesh.b))
        if dom.shape != mesh.shape:
            raise ValueError("lattice window does not reproduce the mesh size")
        return cls(GridFunction(dom, mesh.vertices))

    # cached fields ----------------------------------------------------
    @cached_property
    def D1r(self) -> np.ndarray:
        """Shape (n1-1, n2, 3)."""
        return partial_delta_field(self.r.values, self.domain, 1)

    @cached_property
    def D2r(self) -> np.ndarray:
        """Shape (n1, n2-1, 3)."""
        return partial_delta_field(self.r.values, self.domain, 2)

    @cached_property
    def n(self) -> np.ndarray:
        """Normal on the forward region, shape (n1-1, n2-1, 3)."""
        return _normalize_tangent_cross(self.D1r[:, :-1], self.D2r[:-1, :])

    @cached_property
    def _products(self):
        if min(self.shape) < 3:
            raise TooSmall("curvature needs at least 3x3 samples")
        g1 = self.domain.axis1.gaps[:-1].reshape(-1, 1)
        g2 = self.domain.axis2.gaps[:-1].reshape(1, -1)
        return star_products(self.D1r[:, :-1], self.D2r[:-1, :], g1[..., None], g2[..., None])

    @cached_property
    def K(self) -> np.ndarray:
        """Curvature candidate on the region (n1-2, n2-2)."""
        _, _, p12, p21, c = self._products
        return kdisc_from_products(p12, p21, c)

    @cached_property
    def D1n(self) -> np.ndarray:
        g1 = self.domain.axis1.gaps[:-1].reshape(-1, 1, 1)
        return (self.n[1:, :-1] - self.n[:-1, :-1]) / g1

    @cached_property
    def D2n(self) -> np.ndarray:
        g2 = self.domain.axis2.gaps[:-1].reshape(1, -1, 1)
        return (self.n[:-1, 1:] - self.n[:-1, :-1]) / g2

    def _check(self, index, depth):
        i, j = self.domain.check_index(index)
        n1, n2 = self.shape
        if i >= n1 - depth or j >= n2 - depth:
            raise BoundaryIndex(f"{index} needs {depth} forward samples in each direction")
        return i, j

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return self.r.to_json()

    @classmethod
    def from_json(cls, obj: dict) -> "TimeScaleSurface":
        gf = GridFunction.from_json(obj)
        if not gf.is_vector:
            raise FormatError("surface values must be [x, y, z] triples")
        return cls(gf)


def ts_normal(s: TimeScaleSurface, index) -> np.ndarray:
    i, j = s._check(index, 1)
    return s.n[i, j]


def ts_gaussian_curvature(s: TimeScaleSurface, index) -> float:
    i, j = s._check(index, 2)
    return float(s.K[i, j])


@dataclass(frozen=True)
class TSReport:
    """Residuals of the net conditions on a time-scale surface.

    Array fields are per point; ``unit_res_*`` live on the regions where
    D_j r exists, ``tangency_res_*`` on (n1-2, n2-2).  Complete delta
    differentiability is not decided: ``mixed_residual`` (relative, max over
    r) and ``sampling_irregularity`` (largest deviation of a dense gap from
    the sampling step) are reported as surrogates.
    """

    unit_res_1: np.ndarray
    unit_res_2: np.ndarray
    tangency_res_1: np.ndarray
    tangency_res_2: np.ndarray
    max_unit_residual: float
    max_tangency_residual: float
    mixed_residual: float
    sampling_irregularity: float
    tol: float
    passed: bool


def _mixed_residual_field(s: TimeScaleSurface) -> float:
    v = s.r.values
    g1 = s.domain.axis1.gaps.reshape(-1, 1, 1)
    g2 = s.domain.axis2.gaps.reshape(1, -1, 1)
    d2 = (v[:, 1:] - v[:, :-1]) / g2
    d1 = (v[1:] - v[:-1]) / g1
    d12 = (d2[1:] - d2[:-1]) / g1
    d21 = (d1[:, 1:] - d1[:, :-1]) / g2
    res = np.max(np.abs(d12 - d21), axis=-1)
    quad = np.max(np.abs(np.stack([v[:-1, :-1], v[1:, :-1], v[:-1, 1:], v[1:, 1:]])), axis=(0, -1))
    scale = quad / (g1[..., 0] * g2[..., 0])
    return float(np.max(np.where(scale > 0, res / np.where(scale > 0, scale, 1.0), res)))


def _sampling_irregularity(dom: GridDomain) -> float:
    if dom.sampling_step is None:
        return 0.0
    worst = 0.0
    for ax in (dom.axis1, dom.axis2):
        g = ax.gaps[ax.dense]
        if g.size > 1:
            # the last gap of a piece may legitimately be shorter
            worst = max(worst, float(np.max(np.abs(g[:-1] - dom.sampling_step))))
    return worst


def verify_ts_chebyshev(s: TimeScaleSurface, tol: float = 1e-8) -> TSReport:
    if min(s.shape) < 3:
        raise TooSmall(f"need at least 3x3 samples, got {s.shape}")
    u1 = np.abs(np.linalg.norm(s.D1r, axis=-1) - 1.0)
    u2 = np.abs(np.linalg.norm(s.D2r, axis=-1) - 1.0)
    p11, p22, *_ = s._products
    t1, t2 = np.abs(p11), np.abs(p22)
    mu = float(max(u1.max(), u2.max()))
    mt = float(max(t1.max(), t2.max()))
    return TSReport(u1, u2, t1, t2, mu, mt, _mixed_residual_field(s),
                    _sampling_irregularity(s.domain), tol, bool(mu < tol and mt < tol))


@dataclass(frozen=True)
class ConjectureReport:
    """Statistics of the curvature candidate over a window (an audit, not a test)."""

    label: str
    count: int
    mean: float
    min: float
    max: float
    std: float
    max_dev: float
    rel_dev: float
    worst_index: tuple
    profile_1: np.ndarray
    profile_2: np.ndarray
    target: Optional[float]
    max_dev_from_target: Optional[float]
    threshold: Optional[float]
    within_threshold: Optional[bool]

    def summary(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if not isinstance(v, np.ndarray)}
        out["worst_index"] = list(self.worst_index)
        out["profile_1"] = self.profile_1.tolist()
        out["profile_2"] = self.profile_2.tolist()
        return out


def conjecture_constancy_report(s: TimeScaleSurface, tol: float = 1e-8, threshold: Optional[float] = None,
                                target: Optional[float] = None) -> ConjectureReport:
    """Audit how constant the curvature candidate is over the window.

    The surface must first satisfy the net conditions within *tol*, else
    NotChebyshevNet.  ``profile_1`` / ``profile_2`` are the means of K along
    each row / column.  ``within_threshold`` is filled only when a
    *threshold* on ``max_dev`` is configured and carries no verdict on the
    conjecture itself.
    """
    rep = verify_ts_chebyshev(s, tol)
    if not rep.passed:
        raise NotChebyshevNet(f"net conditions fail (unit {rep.max_unit_residual:.3e}, "
                              f"tangency {rep.max_tangency_residual:.3e}, tol {tol:.1e})")
    K = s.K
    mean = float(K.mean())
    dev = np.abs(K - mean)
    w = np.unravel_index(int(np.argmax(dev)), K.shape)
    max_dev = float(dev[w])
    dt = None if target is None else float(np.max(np.abs(K - target)))
    return ConjectureReport(
        label="conjecture audit",
        count=int(K.size), mean=mean, min=float(K.min()), max=float(K.max()), std=float(K.std()),
        max_dev=max_dev, rel_dev=max_dev / abs(mean) if mean != 0 else math.inf,
        worst_index=(int(w[0]), int(w[1])),
        profile_1=K.mean(axis=1), profile_2=K.mean(axis=0),
        target=target, max_dev_from_target=dt,
        threshold=threshold, within_threshold=None if threshold is None else bool(max_dev <= threshold),
    )


def report_rows(s: TimeScaleSurface, tol: float = 1e-8):
    """Rows (u, v, point_class_1, point_class_2, K_time, unit_res_1, unit_res_2, tangency_res_1, tangency_res_2)."""
    rep = verify_ts_chebyshev(s, tol)
    K = s.K
    dom = s.domain
    for i in range(K.shape[0]):
        for j in range(K.shape[1]):
            u, v = dom.u[i], dom.v[j]
            yield (u, v, dom.scale1.classify(u).kind, dom.scale2.classify(v).kind, K[i, j],
                   rep.unit_res_1[i, j], rep.unit_res_2[i, j], rep.tangency_res_1[i, j], rep.tangency_res_2[i, j])
