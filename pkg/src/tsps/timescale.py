"""Time scales and delta/nabla calculus on them.

A :class:`TimeScale` is a finite, sorted union of closed intervals, optionally
repeated with a period.  Degenerate intervals ``[a, a]`` are isolated points,
so ``TimeScale.lattice(h)`` realizes the lattice ``hZ`` and
``TimeScale.interval(0, 1)`` the unit interval.

Grid functions live on a :class:`GridDomain`, the product of two scales cut to
a bounded window, with continuum pieces realized by a sampling step.  The
partial delta derivative there is the exact jump quotient at right-scattered
coordinates and a one-sided finite difference at right-dense ones.

Complete delta differentiability is not decided here.  Smooth functions
sampled on a grid satisfy the usual sufficient condition (continuous first
partials), and :func:`mixed_partial_residual` is the only numerical probe
offered.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import BoundaryIndex, BoundaryPoint, FormatError, NoConvergence, NotInScale
from .geometry import Plane

__all__ = [
    "TimeScale",
    "PointClass",
    "GridDomain",
    "GridFunction",
    "sigma",
    "rho",
    "classify",
    "delta_derivative",
    "nabla_derivative",
    "partial_delta",
    "partial_delta_field",
    "mixed_partial_residual",
    "delta_tangent_plane",
]


@dataclass(frozen=True)
class _Loc:
    """Position of a point: piece ``i`` of period copy ``k``."""

    i: int
    k: int


class TimeScale:
    """Closed subset of R given as disjoint closed pieces, optionally periodic.

    With ``period = L`` the scale is the union of ``piece + k*L`` over all
    integers k; the pieces must then fit strictly inside one period.  Points
    of the periodic copies are always evaluated as ``a_i + k*L`` so that
    membership tests stay exact on values produced by this class.
    """

    def __init__(self, pieces: Sequence[Sequence[float]], period: Optional[float] = None):
        ps = [(float(a), float(b)) for a, b in pieces]
        if not ps:
            raise ValueError("a time scale needs at least one piece")
        for a, b in ps:
            if not (math.isfinite(a) and math.isfinite(b)) or a > b:
                raise ValueError(f"bad piece [{a}, {b}]")
        for (a0, b0), (a1, b1) in zip(ps, ps[1:]):
            if not b0 < a1:
                raise ValueError("pieces must be sorted and pairwise disjoint")
        if period is not None:
            period = float(period)
            if not (period > 0 and math.isfinite(period)):
                raise ValueError("period must be positive and finite")
            if not ps[-1][1] - ps[0][0] < period:
                raise ValueError("pieces must fit strictly inside one period")
        self.pieces = tuple(ps)
        self.period = period

    # constructors -----------------------------------------------------
    @classmethod
    def lattice(cls, spacing: float = 1.0, offset: float = 0.0) -> "TimeScale":
        return cls([(offset, offset)], period=spacing)

    @classmethod
    def interval(cls, a: float, b: float) -> "TimeScale":
        return cls([(a, b)])

    @classmethod
    def isolated(cls, points: Sequence[float]) -> "TimeScale":
        return cls([(p, p) for p in sorted(points)])

    @classmethod
    def geometric(cls, q: float, kmin: int, kmax: int) -> "TimeScale":
        """Window {q^k : kmin <= k <= kmax} of the quantum scale q^Z."""
        return cls.isolated([float(q) ** k for k in range(kmin, kmax + 1)])

    # serialization ----------------------------------------------------
    def to_json(self) -> dict:
        return {
            "pieces": [[a, b] for a, b in self.pieces],
            "period": None if self.period is None else {"length": self.period},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TimeScale":
        try:
            period = obj.get("period")
            length = None if period is None else period["length"]
            return cls(obj["pieces"], length)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad time scale object: {exc}") from exc

    def __eq__(self, other):
        return (isinstance(other, TimeScale) and self.pieces == other.pieces
                and self.period == other.period)

    def __hash__(self):
        return hash((self.pieces, self.period))

    def __repr__(self):
        return f"TimeScale({list(self.pieces)!r}, period={self.period!r})"

    # geometry of the scale --------------------------------------------
    @property
    def bounded(self) -> bool:
        return self.period is None

    def _a(self, loc: _Loc) -> float:
        a = self.pieces[loc.i][0]
        return a if self.period is None else a + loc.k * self.period

    def _b(self, loc: _Loc) -> float:
        b = self.pieces[loc.i][1]
        return b if self.period is None else b + loc.k * self.period

    def _locate(self, t: float) -> _Loc:
        if self.period is None:
            ks = (0,)
        else:
            k0 = math.floor((t - self.pieces[0][0]) / self.period)
            ks = (k0 - 1, k0, k0 + 1)
        for k in ks:
            for i in range(len(self.pieces)):
                loc = _Loc(i, k)
                if self._a(loc) <= t <= self._b(loc):
                    return loc
        raise NotInScale(f"{t!r} is not a point of {self!r}")

    def __contains__(self, t) -> bool:
        try:
            self._locate(float(t))
        except NotInScale:
            return False
        return True

    def _next(self, loc: _Loc) -> Optional[_Loc]:
        if loc.i + 1 < len(self.pieces):
            return _Loc(loc.i + 1, loc.k)
        return None if self.period is None else _Loc(0, loc.k + 1)

    def _prev(self, loc: _Loc) -> Optional[_Loc]:
        if loc.i > 0:
            return _Loc(loc.i - 1, loc.k)
        return None if self.period is None else _Loc(len(self.pieces) - 1, loc.k - 1)

    def _gap_after(self, i: int) -> float:
        """Length of the gap following piece i (structural, period-independent)."""
        if i + 1 < len(self.pieces):
            return self.pieces[i + 1][0] - self.pieces[i][1]
        return self.period - (self.pieces[-1][1] - self.pieces[0][0])

    def is_right_boundary(self, t: float) -> bool:
        loc = self._locate(t)
        return t == self._b(loc) and self._next(loc) is None

    def is_left_boundary(self, t: float) -> bool:
        loc = self._locate(t)
        return t == self._a(loc) and self._prev(loc) is None

    def sigma(self, t: float) -> float:
        """Forward jump; the maximum of a bounded scale maps to itself."""
        t = float(t)
        loc = self._locate(t)
        if t < self._b(loc):
            return t
        nxt = self._next(loc)
        return t if nxt is None else self._a(nxt)

    def rho(self, t: float) -> float:
        t = float(t)
        loc = self._locate(t)
        if t > self._a(loc):
            return t
        prv = self._prev(loc)
        return t if prv is None else self._b(prv)

    def mu(self, t: float) -> float:
        """Forward graininess sigma(t) - t, taken from the stored gap lengths.

        On ``hZ`` this returns ``h`` itself, bit for bit, whatever t is.
        """
        t = float(t)
        loc = self._locate(t)
        if t < self._b(loc) or self._next(loc) is None:
            return 0.0
        return self._gap_after(loc.i)

    def nu(self, t: float) -> float:
        """Backward graininess t - rho(t)."""
        t = float(t)
        loc = self._locate(t)
        if t > self._a(loc) or self._prev(loc) is None:
            return 0.0
        j = loc.i - 1 if loc.i > 0 else len(self.pieces) - 1
        return self._gap_after(j)

    def classify(self, t: float) -> "PointClass":
        t = float(t)
        loc = self._locate(t)
        isolated_piece = self.pieces[loc.i][0] == self.pieces[loc.i][1]
        rb = t == self._b(loc) and self._next(loc) is None
        lb = t == self._a(loc) and self._prev(loc) is None
        # at a window boundary an isolated point keeps its scattered character
        rs = isolated_piece if rb else self.sigma(t) > t
        ls = isolated_piece if lb else self.rho(t) < t
        return PointClass(rs, ls, rb, lb)

    def realize(self, lo: float, hi: float, step: Optional[float] = None):
        """Sample points of the scale inside [lo, hi].

        Isolated points are taken as they are.  A continuum piece contributes
        ``start + k*step`` and its right end; the last gap may be shorter.
        Returns ``(points, piece_ids)`` where equal ids mark samples of one
        continuum piece.
        """
        lo, hi = float(lo), float(hi)
        if lo > hi:
            raise ValueError("empty window")
        if self.period is None:
            ks = [0]
        else:
            k0 = math.floor((lo - self.pieces[0][0]) / self.period) - 1
            k1 = math.floor((hi - self.pieces[0][0]) / self.period) + 1
            ks = range(k0, k1 + 1)
        pts: list[float] = []
        ids: list[int] = []
        pid = 0
        for k in ks:
            for i in range(len(self.pieces)):
                loc = _Loc(i, k)
                a, b = self._a(loc), self._b(loc)
                if b < lo or a > hi:
                    continue
                pid += 1
                s, e = max(a, lo), min(b, hi)
                if s == e:
                    pts.append(s)
                    ids.append(pid)
                    continue
                if step is None or step <= 0:
                    raise ValueError("a continuum piece needs a positive sampling step")
                n = int(math.floor((e - s) / step * (1 + 1e-12)))
                seg = [s + j * step for j in range(n + 1)]
                if e - seg[-1] <= 1e-9 * step:
                    seg[-1] = e
                else:
                    seg.append(e)
                pts.extend(seg)
                ids.extend([pid] * len(seg))
        if not pts:
            raise NotInScale(f"window [{lo}, {hi}] contains no point of {self!r}")
        return np.array(pts), np.array(ids)


_KINDS = {
    (True, True): "isolated",
    (False, False): "dense-both",
    (True, False): "right-scattered",
    (False, True): "left-scattered",
}


@dataclass(frozen=True)
class PointClass:
    """Scatter/dense classification of a point.

    ``kind`` is one of ``isolated``, ``dense-both``, ``right-scattered``
    (which implies left-dense) and ``left-scattered`` (implies right-dense).
    """

    right_scattered: bool
    left_scattered: bool
    right_boundary: bool = False
    left_boundary: bool = False

    @property
    def right_dense(self) -> bool:
        return not self.right_scattered

    @property
    def left_dense(self) -> bool:
        return not self.left_scattered

    @property
    def isolated(self) -> bool:
        return self.right_scattered and self.left_scattered

    @property
    def kind(self) -> str:
        return _KINDS[(self.right_scattered, self.left_scattered)]


def sigma(ts: TimeScale, t: float) -> float:
    return ts.sigma(t)


def rho(ts: TimeScale, t: float) -> float:
    return ts.rho(t)


def classify(ts: TimeScale, t: float) -> PointClass:
    return ts.classify(t)


def _richardson(quotient: Callable[[float], float], h0: float, tol: float,
                max_levels: int = 24) -> float:
    # one-sided differences have a full power series in h, so level j
    # eliminates the h^j term with factor 2^j
    table = [quotient(h0)]
    best = None
    for k in range(1, max_levels):
        row = [quotient(h0 / 2 ** k)]
        for j in range(1, k + 1):
            f = 2.0 ** j
            row.append(row[j - 1] + (row[j - 1] - table[j - 1]) / (f - 1.0))
        if abs(row[k] - table[k - 1]) <= tol:
            return row[k]
        err = abs(row[k] - table[k - 1])
        if best is None or err < best[0]:
            best = (err, row[k])
        table = row
    raise NoConvergence(f"Richardson extrapolation stalled at error {best[0]:.3e} > {tol:.1e}")


def delta_derivative(ts: TimeScale, f: Callable[[float], float], t: float,
                     tol: float = 1e-10) -> float:
    """Delta derivative of a scalar function at a point of the scale.

    Right-scattered: the jump quotient (f(sigma(t)) - f(t)) / mu(t).
    Right-dense: the right derivative, extrapolated from forward differences
    that stay inside the piece containing t.
    """
    t = float(t)
    if ts.is_right_boundary(t):
        raise BoundaryPoint(f"sigma is undefined at the right boundary {t!r}")
    mu = ts.mu(t)
    if mu > 0:
        return (f(ts.sigma(t)) - f(t)) / mu
    loc = ts._locate(t)
    room = ts._b(loc) - t
    h0 = min(room, 0.125 * max(1.0, abs(t)))
    f0 = f(t)
    return _richardson(lambda h: (f(t + h) - f0) / h, h0, tol)


def nabla_derivative(ts: TimeScale, f: Callable[[float], float], t: float,
                     tol: float = 1e-10) -> float:
    t = float(t)
    if ts.is_left_boundary(t):
        raise BoundaryPoint(f"rho is undefined at the left boundary {t!r}")
    nu = ts.nu(t)
    if nu > 0:
        return (f(ts.rho(t)) - f(t)) / -nu
    loc = ts._locate(t)
    room = t - ts._a(loc)
    h0 = min(room, 0.125 * max(1.0, abs(t)))
    f0 = f(t)
    return _richardson(lambda h: (f0 - f(t - h)) / h, h0, tol)


# ---------------------------------------------------------------------------
# product grids


@dataclass(frozen=True, eq=False)
class _Axis:
    points: np.ndarray
    gaps: np.ndarray       # divisor of the forward quotient at points[:-1]
    dense: np.ndarray      # True where the forward step stays inside a continuum piece
    piece: np.ndarray


def _realize_axis(ts: TimeScale, window, step) -> _Axis:
    pts, ids = ts.realize(window[0], window[1], step)
    n = len(pts)
    gaps = np.empty(max(n - 1, 0))
    dense = np.zeros(max(n - 1, 0), dtype=bool)
    for j in range(n - 1):
        if ids[j] == ids[j + 1]:
            dense[j] = True
            gaps[j] = pts[j + 1] - pts[j]
        else:
            gaps[j] = ts.mu(pts[j])
    return _Axis(pts, gaps, dense, ids)


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Bounded window of a product time scale, realized as sample points."""

    scale1: TimeScale
    scale2: TimeScale
    window1: tuple
    window2: tuple
    sampling_step: Optional[float] = None
    axis1: _Axis = field(init=False, repr=False)
    axis2: _Axis = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "window1", (float(self.window1[0]), float(self.window1[1])))
        object.__setattr__(self, "window2", (float(self.window2[0]), float(self.window2[1])))
        object.__setattr__(self, "axis1", _realize_axis(self.scale1, self.window1, self.sampling_step))
        object.__setattr__(self, "axis2", _realize_axis(self.scale2, self.window2, self.sampling_step))

    @classmethod
    def lattice(cls, spacing: float, rows: int, cols: int) -> "GridDomain":
        """``spacing*Z x spacing*Z`` cut to rows x cols points starting at 0."""
        ts = TimeScale.lattice(spacing)
        return cls(ts, ts, (0.0, (rows - 1) * spacing), (0.0, (cols - 1) * spacing))

    @classmethod
    def continuum(cls, window1, window2, step: float) -> "GridDomain":
        return cls(TimeScale.interval(*window1), TimeScale.interval(*window2),
                   window1, window2, step)

    @property
    def shape(self) -> tuple:
        return (len(self.axis1.points), len(self.axis2.points))

    @property
    def u(self) -> np.ndarray:
        return self.axis1.points

    @property
    def v(self) -> np.ndarray:
        return self.axis2.points

    def axis(self, direction: int) -> _Axis:
        if direction == 1:
            return self.axis1
        if direction == 2:
            return self.axis2
        raise ValueError("direction must be 1 or 2")

    def scale(self, direction: int) -> TimeScale:
        return self.scale1 if direction == 1 else self.scale2

    def mesh(self):
        return np.meshgrid(self.u, self.v, indexing="ij")

    def check_index(self, index) -> tuple:
        i, j = int(index[0]), int(index[1])
        n1, n2 = self.shape
        if not (0 <= i < n1 and 0 <= j < n2):
            raise BoundaryIndex(f"index {index} outside window of shape {self.shape}")
        return i, j

    def to_json(self) -> dict:
        return {
            "scale1": self.scale1.to_json(),
            "scale2": self.scale2.to_json(),
            "window1": list(self.window1),
            "window2": list(self.window2),
            "sampling_step": self.sampling_step,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "GridDomain":
        try:
            return cls(TimeScale.from_json(obj["scale1"]), TimeScale.from_json(obj["scale2"]),
                       tuple(obj["window1"]), tuple(obj["window2"]), obj.get("sampling_step"))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad grid domain: {exc}") from exc


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on a GridDomain; shape (n1, n2) for scalars or (n1, n2, 3) for vectors."""

    domain: GridDomain
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape[:2] != self.domain.shape:
            raise ValueError(f"values shape {vals.shape} does not match domain {self.domain.shape}")
        object.__setattr__(self, "values", vals)

    @property
    def is_vector(self) -> bool:
        return self.values.ndim == 3

    def __getitem__(self, index):
        return self.values[self.domain.check_index(index)]

    def to_json(self) -> dict:
        n1, n2 = self.domain.shape
        flat = self.values.reshape(n1 * n2, -1) if self.is_vector else self.values.reshape(-1)
        return {"domain": self.domain.to_json(), "values": flat.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "GridFunction":
        try:
            dom = GridDomain.from_json(obj["domain"])
            vals = np.asarray(obj["values"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad grid function: {exc}") from exc
        n1, n2 = dom.shape
        if vals.ndim == 2:
            vals = vals.reshape(n1, n2, vals.shape[1])
        else:
            vals = vals.reshape(n1, n2)
        return cls(dom, vals)


def _second_order_weights(h1, h2):
    s = h1 + h2
    return -(2 * h1 + h2) / (h1 * s), s / (h1 * h2), -h1 / (h2 * s)


def partial_delta(g: GridFunction, direction: int, index, order: int = 1):
    """Partial delta derivative of *g* at a grid index.

    ``order=2`` switches dense coordinates to a three-point one-sided
    stencil when the next two samples lie in the same continuum piece;
    scattered coordinates always use the exact jump quotient.
    """
    i, j = g.domain.check_index(index)
    ax = g.domain.axis(direction)
    p = i if direction == 1 else j
    if p >= len(ax.points) - 1:
        raise BoundaryIndex(f"no forward neighbour in direction {direction} at {index}")

    def at(q):
        return g.values[q, j] if direction == 1 else g.values[i, q]

    if order == 2 and ax.dense[p] and p + 1 < len(ax.dense) and ax.dense[p + 1] \
            and ax.piece[p] == ax.piece[p + 2]:
        w0, w1, w2 = _second_order_weights(ax.gaps[p], ax.gaps[p + 1])
        return w0 * at(p) + w1 * at(p + 1) + w2 * at(p + 2)
    return (at(p + 1) - at(p)) / ax.gaps[p]


def partial_delta_field(values: np.ndarray, domain: GridDomain, direction: int) -> np.ndarray:
    """First-order partial delta derivative on the whole window.

    The result loses the last row (direction 1) or column (direction 2),
    where no forward neighbour exists.
    """
    ax = domain.axis(direction)
    values = np.asarray(values, dtype=float)
    if direction == 1:
        gaps = ax.gaps.reshape((-1,) + (1,) * (values.ndim - 1))
        return (values[1:] - values[:-1]) / gaps
    gaps = ax.gaps.reshape((1, -1) + (1,) * (values.ndim - 2))
    return (values[:, 1:] - values[:, :-1]) / gaps


def mixed_partial_residual(g: GridFunction, index, relative: bool = False) -> float:
    """|D1 D2 g - D2 D1 g| at *index*, maximized over components.

    With ``relative=True`` the residual is divided by the natural size of
    the mixed quotient, max|g| over the 2x2 stencil divided by both step
    lengths, which is the scale of its rounding error.
    """
    i, j = g.domain.check_index(index)
    n1, n2 = g.domain.shape
    if i >= n1 - 1 or j >= n2 - 1:
        raise BoundaryIndex(f"mixed derivative needs forward neighbours at {index}")
    h1 = g.domain.axis1.gaps[i]
    h2 = g.domain.axis2.gaps[j]
    v = g.values
    d2_here = (v[i, j + 1] - v[i, j]) / h2
    d2_next = (v[i + 1, j + 1] - v[i + 1, j]) / h2
    d1_here = (v[i + 1, j] - v[i, j]) / h1
    d1_next = (v[i + 1, j + 1] - v[i, j + 1]) / h1
    d12 = (d2_next - d2_here) / h1
    d21 = (d1_next - d1_here) / h2
    res = float(np.max(np.abs(np.asarray(d12 - d21))))
    if relative:
        scale = float(np.max(np.abs(v[i:i + 2, j:j + 2]))) / (h1 * h2)
        return res / scale if scale > 0 else res
    return res


def delta_tangent_plane(g: GridFunction, index) -> Plane:
    """Delta tangent plane of the graph z = g(t, s) at a grid index.

    The plane is z = g0 + D1 g (x - t0) + D2 g (y - s0), with normal
    (-D1 g, -D2 g, 1) normalized.
    """
    if g.is_vector:
        raise ValueError("delta tangent plane is defined for scalar grid functions")
    i, j = g.domain.check_index(index)
    d1 = float(partial_delta(g, 1, (i, j)))
    d2 = float(partial_delta(g, 2, (i, j)))
    p0 = np.array([g.domain.u[i], g.domain.v[j], g.values[i, j]])
    return Plane.from_normal(p0, np.array([-d1, -d2, 1.0]))
