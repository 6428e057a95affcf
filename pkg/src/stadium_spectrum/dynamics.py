"""Billiard map, free path and their derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GluingHit, InfeasibleChord, TangentialShot, ValidationError
from .geometry import BoundaryPoint, TableSpec, boundary_at, cross

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class PhasePoint:
    """Collision coordinates: arclength ``r`` and angle ``phi`` to the inward normal."""

    r: float
    phi: float

    def __post_init__(self):
        if not abs(self.phi) <= HALF_PI + 1e-15:
            raise ValidationError(f"|phi| must not exceed pi/2, got {self.phi}")


def phase_point(table: TableSpec, r: float, phi: float) -> PhasePoint:
    return PhasePoint(float(r) % table.perimeter, float(phi))


class MapStep(NamedTuple):
    z1: PhasePoint
    tau: float
    component: int
    point: BoundaryPoint


class PathHessian(NamedTuple):
    tau: float
    d_r: float
    d_r1: float
    d_rr: float
    d_rr1: float
    d_r1r1: float
    phi: float
    phi1: float


def direction(bp: BoundaryPoint, phi: float) -> np.ndarray:
    return math.cos(phi) * bp.inward_normal + math.sin(phi) * bp.tangent


def _gluing_distance(table: TableSpec, r: float) -> float:
    best = math.inf
    for g in table.offsets:
        d = abs((r - g + 0.5 * table.perimeter) % table.perimeter - 0.5 * table.perimeter)
        best = min(best, d)
    return best


def shoot(table: TableSpec, X: np.ndarray, v: np.ndarray, exclude: float = 1e-12):
    """First boundary hit of the ray ``X + d v`` with ``d > exclude * perimeter``.

    Returns ``(d, r)``.
    """
    best = None
    floor = exclude * table.perimeter
    for i, (_, piece) in enumerate(table.pieces):
        if piece.length <= 0:
            continue
        for d, s in piece.intersect_ray(X, v):
            if d > floor and (best is None or d < best[0]):
                best = (d, table.offsets[i] + min(max(s, 0.0), piece.length))
    if best is None:
        raise InfeasibleChord("ray leaves the table")
    return best


def billiard_map(table: TableSpec, z: PhasePoint, gluing_tol: float = 1e-11) -> MapStep:
    """Next collision ``z1`` and the free path ``tau`` from ``z``."""
    if abs(abs(z.phi) - HALF_PI) < 1e-12:
        raise TangentialShot(f"tangential shot at r={z.r}")
    bp = boundary_at(table, z.r)
    v = direction(bp, z.phi)
    d, r1 = shoot(table, bp.position, v)
    if _gluing_distance(table, r1) < gluing_tol:
        raise GluingHit(f"collision at r={r1!r} is within {gluing_tol} of a gluing point")
    bp1 = boundary_at(table, r1)
    phi1 = math.atan2(float(np.dot(v, bp1.tangent)), -float(np.dot(v, bp1.inward_normal)))
    if abs(abs(phi1) - HALF_PI) < 1e-12:
        raise TangentialShot(f"tangential arrival at r={r1}")
    return MapStep(PhasePoint(bp1.r, phi1), d, bp1.component, bp1)


def reflection_residual(table: TableSpec, z: PhasePoint) -> float:
    """Mismatch between incidence and reflection angles at the next collision."""
    bp = boundary_at(table, z.r)
    v = direction(bp, z.phi)
    step = billiard_map(table, z)
    n1 = step.point.inward_normal
    out = v - 2.0 * float(np.dot(v, n1)) * n1
    inc = math.atan2(abs(cross(v, n1)), -float(np.dot(v, n1)))
    ref = math.atan2(abs(cross(out, n1)), float(np.dot(out, n1)))
    return abs(inc - ref)


def trajectory(table: TableSpec, z: PhasePoint, steps: int) -> list[MapStep]:
    out = []
    for _ in range(steps):
        st = billiard_map(table, z)
        out.append(st)
        z = st.z1
    return out


def map_differential(table: TableSpec, z: PhasePoint) -> np.ndarray:
    """Jacobian of the billiard map in (r, phi) coordinates."""
    step = billiard_map(table, z)
    K = boundary_at(table, z.r).curvature
    K1 = step.point.curvature
    tau = step.tau
    c, c1 = math.cos(z.phi), math.cos(step.z1.phi)
    return (-1.0 / c1) * np.array(
        [
            [tau * K + c, tau],
            [tau * K * K1 + K * c1 + K1 * c, tau * K1 + c1],
        ]
    )


def free_path_jet(table: TableSpec, r: float, r1: float) -> PathHessian:
    """Free path between two boundary points with first and second partials."""
    a = boundary_at(table, r)
    b = boundary_at(table, r1)
    D = b.position - a.position
    tau = math.hypot(D[0], D[1])
    if tau < 1e-12 * table.perimeter:
        raise InfeasibleChord("coincident endpoints")
    u = D / tau
    cphi = float(np.dot(u, a.inward_normal))
    if cphi <= 1e-14:
        raise InfeasibleChord("chord leaves the table at its start")
    d, rr = shoot(table, a.position, u)
    if abs(d - tau) > 1e-9 * table.perimeter:
        raise InfeasibleChord("chord meets the boundary before its endpoint")
    phi = math.atan2(float(np.dot(u, a.tangent)), cphi)
    phi1 = math.atan2(float(np.dot(u, b.tangent)), -float(np.dot(u, b.inward_normal)))
    c, c1 = math.cos(phi), math.cos(phi1)
    K, K1 = a.curvature, b.curvature
    return PathHessian(
        tau,
        -math.sin(phi),
        math.sin(phi1),
        K * c + c * c / tau,
        c * c1 / tau,
        K1 * c1 + c1 * c1 / tau,
        phi,
        phi1,
    )


def chord_jet(X, dX, ddX, Y, dY, ddY):
    """Distance |Y - X| with partials in the curve parameters of both endpoints.

    ``dX, ddX`` (and ``dY, ddY``) are the first two derivatives of the
    endpoint curves.  Returns ``(tau, g_x, g_y, h_xx, h_xy, h_yy)``.
    """
    D = Y - X
    tau = math.hypot(D[0], D[1])
    u = D / tau
    ux, uy = float(u @ dX), float(u @ dY)
    g_x, g_y = -ux, uy
    h_xx = (float(dX @ dX) - ux * ux) / tau - float(u @ ddX)
    h_yy = (float(dY @ dY) - uy * uy) / tau + float(u @ ddY)
    h_xy = (-float(dX @ dY) + ux * uy) / tau
    return tau, g_x, g_y, h_xx, h_xy, h_yy


def expansion_factor(table: TableSpec, z: PhasePoint) -> float:
    """One-step expansion ``|1 + tau B+|`` of a flat wave front reflected at ``z``.

    ``B+ = -2/d`` with ``d = -cos(phi)/K`` the focusing distance at ``z``.
    """
    bp = boundary_at(table, z.r)
    if bp.curvature == 0.0:
        raise ValidationError("expansion factor needs a collision on a convex arc")
    step = billiard_map(table, z)
    d = -math.cos(z.phi) / bp.curvature
    return abs(1.0 - 2.0 * step.tau / d)
