"""Piecewise boundaries of stadium and squash billiard tables.

A table is two strictly convex arcs joined C^1 to two straight flats.  The
boundary is traversed counter-clockwise and parametrized by arclength ``r``
starting at the first point of arc 1.  Component letters follow the symbolic
coding used throughout the package: 1 and 2 are the arcs, 3 and 4 the flats.
Signed curvature is negative on the convex arcs and zero on the flats.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import DegenerateChord, InvalidTable

TWO_PI = 2.0 * math.pi
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def rot90(v: np.ndarray) -> np.ndarray:
    return np.array([-v[1], v[0]])


def cross(a, b) -> float:
    return a[0] * b[1] - a[1] * b[0]


class Frame(NamedTuple):
    position: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    curvature: float


class Isometry:
    """Affine isometry ``x -> A x + b`` of the plane."""

    __slots__ = ("A", "b")

    def __init__(self, A=None, b=None):
        self.A = np.eye(2) if A is None else np.asarray(A, dtype=float)
        self.b = np.zeros(2) if b is None else np.asarray(b, dtype=float)

    @classmethod
    def reflection(cls, point, direction) -> "Isometry":
        d = np.asarray(direction, dtype=float)
        d = d / np.hypot(*d)
        n = rot90(d)
        A = np.eye(2) - 2.0 * np.outer(n, n)
        p = np.asarray(point, dtype=float)
        return cls(A, p - A @ p)

    def __call__(self, x):
        return self.A @ x + self.b

    def linear(self, v):
        return self.A @ v

    def compose(self, other: "Isometry") -> "Isometry":
        """Return ``self o other``."""
        return Isometry(self.A @ other.A, self.A @ other.b + self.b)

    @property
    def orientation(self) -> float:
        return float(np.sign(np.linalg.det(self.A)))

    def close_to(self, other: "Isometry", tol: float = 1e-12) -> bool:
        return bool(np.allclose(self.A, other.A, atol=tol) and np.allclose(self.b, other.b, atol=tol))


# ---------------------------------------------------------------------------
# Boundary pieces
# ---------------------------------------------------------------------------


class ArcSpec:
    """A strictly convex boundary arc with a native parameter ``t``.

    Subclasses provide ``point``, ``d1`` and ``d2`` (position and its first
    two native derivatives, vectorized over ``t``).  Arclength is obtained by
    panel Gauss-Legendre quadrature unless a subclass knows it in closed form.
    """

    kind = "abstract"
    t0: float
    t1: float

    def point(self, t):
        raise NotImplementedError

    def d1(self, t):
        raise NotImplementedError

    def d2(self, t):
        raise NotImplementedError

    # -- arclength ---------------------------------------------------------
    def _setup_arclength(self, panels: int = 48) -> None:
        edges = np.linspace(self.t0, self.t1, panels + 1)
        lens = [self._quad(a, b) for a, b in zip(edges[:-1], edges[1:])]
        self._edges = edges
        self._cum = np.concatenate([[0.0], np.cumsum(lens)])
        self.length = float(self._cum[-1])

    def speed(self, t):
        d = self.d1(t)
        return np.hypot(d[0], d[1])

    def _quad(self, a: float, b: float) -> float:
        h = 0.5 * (b - a)
        x = h * _GL_X + 0.5 * (a + b)
        return float(h * np.dot(_GL_W, self.speed(x)))

    def s_of_t(self, t: float) -> float:
        i = int(np.clip(np.searchsorted(self._edges, t) - 1, 0, len(self._edges) - 2))
        return float(self._cum[i] + self._quad(self._edges[i], t))

    def t_of_s(self, s: float) -> float:
        t = float(np.interp(s, self._cum, self._edges))
        lo, hi = self.t0, self.t1
        for _ in range(50):
            err = self.s_of_t(t) - s
            if err > 0:
                hi = min(hi, t)
            else:
                lo = max(lo, t)
            step = err / float(self.speed(t))
            t_new = t - step
            if not lo <= t_new <= hi:
                t_new = 0.5 * (lo + hi)
            if abs(t_new - t) <= 1e-15 * (1.0 + abs(t)):
                return t_new
            t = t_new
        return t

    # -- frames ------------------------------------------------------------
    def frame_t(self, t: float) -> Frame:
        p, v, a = self.point(t), self.d1(t), self.d2(t)
        sp = math.hypot(v[0], v[1])
        T = v / sp
        return Frame(p, T, rot90(T), -cross(v, a) / sp**3)

    def frame(self, s: float) -> Frame:
        return self.frame_t(self.t_of_s(s))

    def frames(self, s_values) -> list[Frame]:
        return [self.frame(float(s)) for s in s_values]

    @property
    def start(self) -> Frame:
        return self.frame_t(self.t0)

    @property
    def end(self) -> Frame:
        return self.frame_t(self.t1)

    # -- ray intersection --------------------------------------------------
    def intersect_ray(self, X: np.ndarray, v: np.ndarray, samples: int = 128):
        """Return ``[(distance, s)]`` for points where the ray X + d v meets the arc."""
        ts = np.linspace(self.t0, self.t1, samples + 1)
        P = self.point(ts)
        f = v[0] * (P[1] - X[1]) - v[1] * (P[0] - X[0])

        def g(t):
            p = self.point(t)
            return v[0] * (p[1] - X[1]) - v[1] * (p[0] - X[0])

        roots = []
        for i in range(samples):
            fa, fb = f[i], f[i + 1]
            if fa == 0.0:
                roots.append(ts[i])
            elif fa * fb < 0.0:
                roots.append(brentq(g, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15))
        if f[-1] == 0.0:
            roots.append(ts[-1])
        out = []
        for t in roots:
            p = self.point(t)
            out.append((float(np.dot(p - X, v)), self.s_of_t(t)))
        return out


class CircularArc(ArcSpec):
    """Circular arc traversed counter-clockwise from ``start_angle`` to ``end_angle``."""

    kind = "circular"

    def __init__(self, center, radius: float, start_angle: float, end_angle: float):
        if radius <= 0:
            raise InvalidTable("radius must be positive")
        if not end_angle > start_angle:
            raise InvalidTable("circular arcs run counter-clockwise: end_angle > start_angle")
        if end_angle - start_angle >= TWO_PI:
            raise InvalidTable("arc covers the full circle")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)
        self.start_angle = float(start_angle)
        self.end_angle = float(end_angle)
        self.t0, self.t1 = self.start_angle, self.end_angle
        self.length = self.radius * (self.t1 - self.t0)

    def point(self, t):
        return self.center.reshape(2, *([1] * np.ndim(t))) + self.radius * np.array([np.cos(t), np.sin(t)])

    def d1(self, t):
        return self.radius * np.array([-np.sin(t), np.cos(t)])

    def d2(self, t):
        return -self.radius * np.array([np.cos(t), np.sin(t)])

    def speed(self, t):
        return np.full(np.shape(t), self.radius) if np.ndim(t) else self.radius

    def s_of_t(self, t: float) -> float:
        return self.radius * (t - self.t0)

    def t_of_s(self, s: float) -> float:
        return self.t0 + s / self.radius

    def frame(self, s: float) -> Frame:
        t = self.t0 + s / self.radius
        c, sn = math.cos(t), math.sin(t)
        return Frame(
            np.array([self.center[0] + self.radius * c, self.center[1] + self.radius * sn]),
            np.array([-sn, c]),
            np.array([-c, -sn]),
            -1.0 / self.radius,
        )

    def frame_t(self, t: float) -> Frame:
        return self.frame(self.radius * (t - self.t0))

    def intersect_ray(self, X, v, samples: int = 0):
        w = X - self.center
        b = float(np.dot(v, w))
        c = float(np.dot(w, w)) - self.radius**2
        disc = b * b - c
        if disc < 0.0:
            return []
        sq = math.sqrt(disc)
        q = -(b + math.copysign(sq, b)) if b != 0.0 else sq
        ds = [q] if q == 0.0 else [q, c / q]
        out = []
        tol = 1e-13
        for d in ds:
            p = X + d * v
            ang = math.atan2(p[1] - self.center[1], p[0] - self.center[0])
            delta = (ang - self.t0) % TWO_PI
            span = self.t1 - self.t0
            if delta > TWO_PI - tol:
                delta -= TWO_PI
            if -tol <= delta <= span + tol:
                out.append((d, self.radius * delta))
        return out


class GraphArc(ArcSpec):
    """Arc given as the graph of a polynomial, then rotated and translated.

    The arc is ``offset + Rot(rotation) (x, g(x))`` for ``x`` in ``x_range``
    with ``g`` given by ascending ``coefficients``.  With ``ccw=True`` the
    arc is traversed with increasing ``x``.
    """

    kind = "graph-polynomial"

    def __init__(self, coefficients, x_range, rotation: float = 0.0, offset=(0.0, 0.0), ccw: bool = True):
        self.coefficients = tuple(float(c) for c in coefficients)
        self.x_range = (float(x_range[0]), float(x_range[1]))
        if not self.x_range[1] > self.x_range[0]:
            raise InvalidTable("empty x_range")
        self.rotation = float(rotation)
        self.offset = np.asarray(offset, dtype=float)
        self.ccw = bool(ccw)
        self._g = np.polynomial.Polynomial(self.coefficients)
        self._g1 = self._g.deriv(1)
        self._g2 = self._g.deriv(2)
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        self._R = np.array([[c, -s], [s, c]])
        self.t0, self.t1 = self.x_range
        self._sign = 1.0 if self.ccw else -1.0
        self._setup_arclength()

    def _x(self, t):
        return t if self.ccw else self.t0 + self.t1 - t

    def point(self, t):
        x = self._x(np.asarray(t, dtype=float))
        local = np.array([x, self._g(x)])
        return np.tensordot(self._R, local, axes=1) + self.offset.reshape(2, *([1] * np.ndim(t)))

    def d1(self, t):
        x = self._x(np.asarray(t, dtype=float))
        local = self._sign * np.array([np.ones_like(x), self._g1(x)])
        return np.tensordot(self._R, local, axes=1)

    def d2(self, t):
        x = self._x(np.asarray(t, dtype=float))
        local = np.array([np.zeros_like(x), self._g2(x)])
        return np.tensordot(self._R, local, axes=1)


class Segment:
    """Straight flat from ``p`` to ``q``."""

    kind = "flat"

    def __init__(self, p, q):
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        d = self.q - self.p
        self.length = float(math.hypot(d[0], d[1]))
        self.direction = d / self.length if self.length > 0 else np.zeros(2)

    def frame(self, s: float) -> Frame:
        T = self.direction
        return Frame(self.p + s * T, T.copy(), rot90(T), 0.0)

    @property
    def start(self) -> Frame:
        return self.frame(0.0)

    @property
    def end(self) -> Frame:
        return self.frame(self.length)

    def intersect_ray(self, X, v, samples: int = 0):
        if self.length == 0.0:
            return []
        T = self.direction
        den = cross(v, T)
        if abs(den) < 1e-300:
            return []
        w = self.p - X
        d = cross(w, T) / den
        s = cross(w, v) / den
        tol = 1e-13
        if -tol <= s <= self.length + tol:
            return [(d, min(max(s, 0.0), self.length))]
        return []

    def reflection(self) -> Isometry:
        return Isometry.reflection(self.p, self.direction)


class ReflectedArc(ArcSpec):
    """Mirror image of an arc, re-oriented so it is still traversed counter-clockwise."""

    kind = "reflected"

    def __init__(self, base: ArcSpec, iso: Isometry):
        self.base = base
        self.iso = iso
        self.t0, self.t1 = base.t0, base.t1
        self.length = base.length

    def _tb(self, t):
        return self.t0 + self.t1 - t

    def point(self, t):
        p = self.base.point(self._tb(t))
        return np.tensordot(self.iso.A, p, axes=1) + self.iso.b.reshape(2, *([1] * np.ndim(t)))

    def d1(self, t):
        return -np.tensordot(self.iso.A, self.base.d1(self._tb(t)), axes=1)

    def d2(self, t):
        return np.tensordot(self.iso.A, self.base.d2(self._tb(t)), axes=1)

    def speed(self, t):
        return self.base.speed(self._tb(t))

    def s_of_t(self, t: float) -> float:
        return self.length - self.base.s_of_t(self._tb(t))

    def t_of_s(self, s: float) -> float:
        return self._tb(self.base.t_of_s(self.length - s))

    def frame(self, s: float) -> Frame:
        f = self.base.frame(self.length - s)
        return Frame(self.iso(f.position), -self.iso.linear(f.tangent), self.iso.linear(f.normal), f.curvature)

    def frame_t(self, t: float) -> Frame:
        return self.frame(self.s_of_t(t))

    def intersect_ray(self, X, v, samples: int = 128):
        Xb = np.linalg.solve(self.iso.A, X - self.iso.b)
        vb = np.linalg.solve(self.iso.A, v)
        return [(d, self.length - s) for d, s in self.base.intersect_ray(Xb, vb, samples)]


def reflect_arc(arc: ArcSpec, iso: Isometry) -> ArcSpec:
    if isinstance(arc, ReflectedArc) and iso.compose(arc.iso).close_to(Isometry()):
        return arc.base
    return ReflectedArc(arc, iso)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


class BoundaryPoint(NamedTuple):
    r: float
    position: np.ndarray
    tangent: np.ndarray
    inward_normal: np.ndarray
    curvature: float
    component: int
    local_s: float


class TableSpec:
    """Two strictly convex arcs joined C^1 by two flats, traversed counter-clockwise.

    The flat following arc 1 carries ``flat_labels[0]`` (3 by default) and the
    flat following arc 2 carries ``flat_labels[1]``.  The flats are the
    segments between consecutive arc endpoints and may have zero length.
    """

    def __init__(
        self,
        arc1: ArcSpec,
        arc2: ArcSpec,
        flat_labels: tuple[int, int] = (3, 4),
        angle_tol: float = 1e-10,
        convexity_samples: int = 64,
        name: str | None = None,
    ):
        self.arc1 = arc1
        self.arc2 = arc2
        self.flat_labels = tuple(int(x) for x in flat_labels)
        if sorted(self.flat_labels) != [3, 4]:
            raise InvalidTable("flat labels must be 3 and 4")
        self.name = name
        e1, s2, e2, s1 = arc1.end, arc2.start, arc2.end, arc1.start
        flat_a = Segment(e1.position, s2.position)
        flat_b = Segment(e2.position, s1.position)
        la, lb = self.flat_labels
        self._flats = {la: flat_a, lb: flat_b}
        self.pieces = ((1, arc1), (la, flat_a), (2, arc2), (lb, flat_b))
        lengths = [p.length for _, p in self.pieces]
        self.offsets = tuple(np.concatenate([[0.0], np.cumsum(lengths)[:-1]]).tolist())
        self.perimeter = float(sum(lengths))
        self.gluing_points = {
            (1, la): e1.position,
            (2, la): s2.position,
            (2, lb): e2.position,
            (1, lb): s1.position,
        }
        self._validate(angle_tol, convexity_samples)

    # -- validation --------------------------------------------------------
    def _validate(self, angle_tol: float, samples: int) -> None:
        for letter, arc in ((1, self.arc1), (2, self.arc2)):
            ss = (np.arange(samples) + 0.5) / samples * arc.length
            ks = np.array([arc.frame(float(s)).curvature for s in ss])
            ks = np.concatenate([ks, [arc.start.curvature, arc.end.curvature]])
            if not np.all(ks < -1e-9):
                raise InvalidTable(f"arc {letter} is not strictly convex (max curvature {ks.max():.3e})")
        jumps = {}
        for (la, flat), (a_end, a_start) in (
            ((self.flat_labels[0], self._flats[self.flat_labels[0]]), (self.arc1.end, self.arc2.start)),
            ((self.flat_labels[1], self._flats[self.flat_labels[1]]), (self.arc2.end, self.arc1.start)),
        ):
            if flat.length > 1e-12:
                d = flat.direction
                for fr in (a_end, a_start):
                    ang = abs(math.atan2(cross(fr.tangent, d), float(np.dot(fr.tangent, d))))
                    if ang > angle_tol:
                        raise InvalidTable(f"boundary is not C^1 at flat {la} (angle {ang:.3e} rad)")
            else:
                ang = abs(math.atan2(cross(a_end.tangent, a_start.tangent), float(np.dot(a_end.tangent, a_start.tangent))))
                if ang > angle_tol:
                    raise InvalidTable(f"arcs meet with a corner at flat {la}")
            jumps[la] = (abs(a_end.curvature), abs(a_start.curvature))
        self.curvature_jumps = jumps
        for la, (k_in, k_out) in jumps.items():
            if self._flats[la].length <= 1e-12 and abs(k_in - k_out) < 1e-12:
                warnings.warn(f"curvature is continuous across gluing at flat {la}", stacklevel=3)
        # convex polygon with positive area => simple closed counter-clockwise curve
        pts = []
        for _, piece in self.pieces:
            if isinstance(piece, Segment):
                pts.append(piece.p)
            else:
                for s in np.linspace(0.0, piece.length, 65)[:-1]:
                    pts.append(piece.frame(float(s)).position)
        P = np.array(pts)
        nxt = np.roll(P, -1, axis=0)
        area = 0.5 * float(np.sum(P[:, 0] * nxt[:, 1] - nxt[:, 0] * P[:, 1]))
        if area <= 0:
            raise InvalidTable("boundary is not counter-clockwise")
        E = nxt - P
        E = E[np.hypot(E[:, 0], E[:, 1]) > 1e-14]
        turns = E[:, 0] * np.roll(E, -1, axis=0)[:, 1] - E[:, 1] * np.roll(E, -1, axis=0)[:, 0]
        scale = float(np.max(np.hypot(E[:, 0], E[:, 1]))) ** 2
        if np.any(turns < -1e-9 * scale):
            raise InvalidTable("boundary is not a simple convex curve")
        heading = np.arctan2(E[:, 1], E[:, 0])
        total = float(np.sum(np.angle(np.exp(1j * np.diff(np.concatenate([heading, heading[:1]]))))))
        if abs(total - TWO_PI) > 1e-6:
            raise InvalidTable("boundary does not wind once")

    # -- accessors ---------------------------------------------------------
    @property
    def kind(self) -> str:
        a, b = self._flats[3], self._flats[4]
        da = a.direction if a.length > 1e-12 else self.arc1.end.tangent
        db = b.direction if b.length > 1e-12 else self.arc2.end.tangent
        if abs(cross(da, db)) < 1e-9 and float(np.dot(da, db)) < 0:
            return "stadium"
        return "squash"

    @property
    def flat3(self) -> Segment:
        return self._flats[3]

    @property
    def flat4(self) -> Segment:
        return self._flats[4]

    def flat(self, letter: int) -> Segment:
        return self._flats[letter]

    def arc(self, letter: int) -> ArcSpec:
        return self.arc1 if letter == 1 else self.arc2

    def piece_index(self, letter: int) -> int:
        for i, (lab, _) in enumerate(self.pieces):
            if lab == letter:
                return i
        raise KeyError(letter)

    def component_range(self, letter: int) -> tuple[float, float]:
        i = self.piece_index(letter)
        return self.offsets[i], self.offsets[i] + self.pieces[i][1].length

    def gluing_r(self) -> list[float]:
        return list(self.offsets) + [self.perimeter]

    def locate(self, r: float) -> tuple[int, float]:
        """Return (piece index, local arclength) for boundary coordinate r."""
        r = float(r) % self.perimeter
        for i in range(3, -1, -1):
            if r >= self.offsets[i] and self.pieces[i][1].length > 0:
                return i, r - self.offsets[i]
        return 0, r

    def diameter(self, samples: int = 2000) -> float:
        """Largest distance between boundary points: dense sampling, then local refinement."""
        rs = np.linspace(0.0, self.perimeter, samples, endpoint=False)
        P = np.array([boundary_at(self, r).position for r in rs])
        best = (-1.0, 0, 0)
        for i in range(samples):
            d = np.hypot(*(P - P[i]).T)
            j = int(np.argmax(d))
            if d[j] > best[0]:
                best = (float(d[j]), i, j)

        def neg(x):
            a = boundary_at(self, x[0]).position
            b = boundary_at(self, x[1]).position
            return -math.hypot(*(a - b))

        res = minimize(neg, np.array([rs[best[1]], rs[best[2]]]), method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-16, "maxiter": 2000})
        return max(best[0], -float(res.fun))

    def __repr__(self) -> str:
        return f"TableSpec({self.name or self.kind}, perimeter={self.perimeter:.6g})"


def boundary_at(table: TableSpec, r: float) -> BoundaryPoint:
    """Position, unit frame and signed curvature at arclength ``r`` (taken modulo the perimeter)."""
    i, s = table.locate(r)
    letter, piece = table.pieces[i]
    f = piece.frame(s)
    return BoundaryPoint(table.offsets[i] + s, f.position, f.tangent, f.normal, f.curvature, letter, s)


# ---------------------------------------------------------------------------
# Canonical tables
# ---------------------------------------------------------------------------


def std_stadium(R: float = 1.0, L: float = 2.0) -> TableSpec:
    """Semicircular caps of radius R joined by horizontal flats of length L."""
    if R <= 0 or L < 0:
        raise InvalidTable("std-stadium needs R > 0 and L >= 0")
    arc1 = CircularArc((L / 2, 0.0), R, -math.pi / 2, math.pi / 2)
    arc2 = CircularArc((-L / 2, 0.0), R, math.pi / 2, 3 * math.pi / 2)
    return TableSpec(arc1, arc2, name=f"std-stadium(R={R:g},L={L:g})")


def weak_stadium() -> TableSpec:
    t = std_stadium(1.0, 0.2)
    t.name = "weak-stadium"
    return t


def squash_stadium(R1: float, R2: float, d: float) -> TableSpec:
    """Two circular caps with centers a distance d apart joined by their outer common tangents.

    Arc 1 (radius R1) is on the right, arc 2 (radius R2) on the left.  The
    flats are parallel exactly when R1 == R2.
    """
    if not (R1 > 0 and R2 > 0 and d > abs(R2 - R1)):
        raise InvalidTable("squash needs d > |R2 - R1|")
    beta = math.asin((R2 - R1) / d)
    top = math.pi / 2 - beta
    arc1 = CircularArc((d / 2, 0.0), R1, -top, top)
    arc2 = CircularArc((-d / 2, 0.0), R2, top, TWO_PI - top)
    return TableSpec(arc1, arc2, name=f"squash(R1={R1:g},R2={R2:g},d={d:g})")


def squash_from_curvatures(tau_star: float, K1: float, K2: float) -> TableSpec:
    """Standard squash with given diameter and arc curvatures."""
    R1, R2 = 1.0 / K1, 1.0 / K2
    return squash_stadium(R1, R2, tau_star - R1 - R2)


def graph_squash(coefficients, half_width: float, R2: float) -> TableSpec:
    """Squash whose right cap is the graph of an even polynomial and whose left cap is a circle.

    The right cap is ``(-g(y), y)`` for ``|y| <= half_width``; the flats
    continue its end tangents and the left cap is the circle of radius R2
    tangent to both flats.
    """
    arc1 = GraphArc(coefficients, (-half_width, half_width), rotation=math.pi / 2)
    g = np.polynomial.Polynomial(arc1.coefficients)
    m = float(g.deriv(1)(half_width))
    if m <= 0:
        raise InvalidTable("graph cap must open towards the left")
    beta = math.atan2(1.0, m)
    apex_x = -float(g(half_width)) + half_width * m
    c2 = np.array([apex_x - R2 / math.sin(beta), 0.0])
    top = math.pi / 2 - beta
    arc2 = CircularArc(c2, R2, top, TWO_PI - top)
    return TableSpec(arc1, arc2, name="graph-squash")


def reflect_table(table: TableSpec, across: int) -> TableSpec:
    """Mirror image of the table across the line of flat ``across``."""
    iso = table.flat(across).reflection()
    a1 = reflect_arc(table.arc1, iso)
    a2 = reflect_arc(table.arc2, iso)
    la, lb = table.flat_labels
    return TableSpec(a1, a2, flat_labels=(lb, la), name=f"mirror[{across}]({table.name})")


@dataclass(frozen=True)
class DoubleCover:
    """A table glued to its mirror image along one flat."""

    base: TableSpec
    mirror: TableSpec
    across: int
    reflection: Isometry

    @property
    def arcs(self) -> dict[str, ArcSpec]:
        return {"1": self.base.arc1, "2": self.base.arc2, "~1": self.mirror.arc1, "~2": self.mirror.arc2}

    @property
    def gluing_points(self) -> dict:
        out = {k: v for k, v in self.base.gluing_points.items()}
        out.update({("~",) + k: v for k, v in self.mirror.gluing_points.items()})
        return out


def double_cover(table: TableSpec, across: int) -> DoubleCover:
    """Unfold the table across flat ``across`` (3 or 4)."""
    if across not in (3, 4):
        raise InvalidTable("double cover is taken across flat 3 or 4")
    iso = table.flat(across).reflection()
    return DoubleCover(table, reflect_table(table, across), across, iso)


# ---------------------------------------------------------------------------
# Defocusing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DefocusingReport:
    holds: bool
    worst_margin: float
    witness: tuple
    pairs: int


def _arc_samples(arc: ArcSpec, n: int):
    ss = (np.arange(n) + 0.5) / n * arc.length
    frames = arc.frames(ss)
    P = np.array([f.position for f in frames])
    N = np.array([f.normal for f in frames])
    K = np.array([abs(f.curvature) for f in frames])
    return ss, P, N, K


def _margin(P1, N1, K1, P2, N2, K2):
    D = P2[None, :, :] - P1[:, None, :]
    dist = np.hypot(D[..., 0], D[..., 1])
    if dist.min() < 1e-12:
        raise DegenerateChord(f"chord of length {dist.min():.3e} between the arcs")
    u = D / dist[..., None]
    c1 = np.einsum("ijk,ik->ij", u, N1)
    c2 = -np.einsum("ijk,jk->ij", u, N2)
    osc = np.maximum(2.0 * c1 / K1[:, None], 2.0 * c2 / K2[None, :])
    return dist - osc


def _pair_margin(arc_a, arc_b, sa, sb):
    fa, fb = arc_a.frame(sa), arc_b.frame(sb)
    D = fb.position - fa.position
    dist = math.hypot(*D)
    if dist < 1e-12:
        raise DegenerateChord(f"chord of length {dist:.3e} between the arcs")
    u = D / dist
    c1 = float(np.dot(u, fa.normal))
    c2 = -float(np.dot(u, fb.normal))
    return dist - max(2 * c1 / abs(fa.curvature), 2 * c2 / abs(fb.curvature))


def _crosses(flat: Segment, P1, P2) -> np.ndarray:
    """Mask of chords P1[i] -> P2[j] passing through the flat segment."""
    T = flat.direction
    N = rot90(T)
    h1 = (P1 - flat.p) @ N
    h2 = (P2 - flat.p) @ N
    den = h1[:, None] - h2[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = h1[:, None] / den
    S1 = (P1 - flat.p) @ T
    S2 = (P2 - flat.p) @ T
    s = S1[:, None] + lam * (S2[None, :] - S1[:, None])
    return (h1[:, None] * h2[None, :] < 0) & (s >= 0) & (s <= flat.length)


def check_defocusing(table: TableSpec, grid: int = 256, doubly: bool = False, refine: bool = True) -> DefocusingReport:
    """Sampled check of the defocusing inequality |P1P2| > max(|P1Q1|, |P2Q2|).

    ``Q_i`` is the second intersection of the line P1P2 with the osculating
    circle at ``P_i``; its distance from ``P_i`` is ``2 cos(phi_i) / |K_i|``.
    With ``doubly=True`` the chords running through a flat into the mirrored
    arcs are checked as well.
    """
    s1, P1, N1, K1 = _arc_samples(table.arc1, grid)
    s2, P2, N2, K2 = _arc_samples(table.arc2, grid)
    cases = [(table.arc1, table.arc2, s1, s2, _margin(P1, N1, K1, P2, N2, K2), "base")]
    if doubly:
        for across in (3, 4):
            flat = table.flat(across)
            if flat.length <= 1e-12:
                continue
            iso = flat.reflection()
            for first, second, sa, sb, Pa, Na, Ka, Pb, Nb, Kb in (
                (table.arc1, table.arc2, s1, s2, P1, N1, K1, P2, N2, K2),
                (table.arc2, table.arc1, s2, s1, P2, N2, K2, P1, N1, K1),
            ):
                Pm = Pb @ iso.A.T + iso.b
                Nm = Nb @ iso.A.T
                mask = _crosses(flat, Pa, Pm)
                if not mask.any():
                    continue
                M = _margin(Pa, Na, Ka, Pm, Nm, Kb)
                M = np.where(mask, M, np.inf)
                cases.append((first, ReflectedArc(second, iso), sa, second.length - sb, M, f"flat{across}"))
    worst = None
    for arc_a, arc_b, sa, sb, M, tag in cases:
        i, j = np.unravel_index(int(np.argmin(M)), M.shape)
        val = float(M[i, j])
        if worst is None or val < worst[0]:
            worst = (val, arc_a, arc_b, float(sa[i]), float(sb[j]), tag)
    val, arc_a, arc_b, sa, sb, tag = worst
    if refine and np.isfinite(val):
        ha, hb = arc_a.length / grid, arc_b.length / grid
        bounds = [(max(0.0, sa - ha), min(arc_a.length, sa + ha)), (max(0.0, sb - hb), min(arc_b.length, sb + hb))]

        def obj(x):
            return _pair_margin(arc_a, arc_b, float(np.clip(x[0], *bounds[0])), float(np.clip(x[1], *bounds[1])))

        res = minimize(obj, np.array([sa, sb]), method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 400})
        x = [float(np.clip(res.x[0], *bounds[0])), float(np.clip(res.x[1], *bounds[1]))]
        if obj(x) < val:
            val, sa, sb = float(obj(x)), x[0], x[1]
    tol = 1e-9 * table.perimeter
    witness = (tag, arc_a.frame(sa).position, arc_b.frame(sb).position)
    return DefocusingReport(bool(val > tol), val, witness, int(sum(np.isfinite(c[4]).sum() for c in cases)))
