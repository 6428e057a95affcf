"""Deformation families, the length-derivative identity, Lagrange cancellations and channel orbits."""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .dynamics import PhasePoint, chord_jet
from .errors import (
    InfeasibleChord,
    InfeasibleOrbit,
    InvalidTable,
    NearUnitLambda,
    NoConvergence,
    OrbitBifurcation,
    ValidationError,
)
from .geometry import ArcSpec, CircularArc, Segment, TableSpec, boundary_at, check_defocusing
from .orbits import (
    LengthFunctional,
    OrbitResult,
    _family_seeds,
    _Gap,
    _solve_with_fallback,
    code_of,
    palindromic_orbit,
    solve_code,
)

# ---------------------------------------------------------------------------
# Displacement profiles
# ---------------------------------------------------------------------------


class Profile:
    """Scalar function of base arclength with two derivatives."""

    def __call__(self, s):
        return self.derivs(s)[0]

    def derivs(self, s):
        raise NotImplementedError


class ZeroProfile(Profile):
    def derivs(self, s):
        z = np.zeros_like(np.asarray(s, dtype=float))
        return z, z, z


class PolynomialProfile(Profile):
    """``sum c_k (s - center)^k``."""

    def __init__(self, coefficients, center: float = 0.0):
        self.poly = np.polynomial.Polynomial(np.asarray(coefficients, dtype=float))
        self.center = float(center)
        self._d1 = self.poly.deriv(1)
        self._d2 = self.poly.deriv(2)

    def derivs(self, s):
        x = np.asarray(s, dtype=float) - self.center
        return self.poly(x), self._d1(x), self._d2(x)


class BumpProfile(Profile):
    """``amplitude * x^power * exp(1 - 1/(1 - x^2))`` with ``x = (s - center)/width``, zero for ``|x| >= 1``.

    ``power > 0`` makes the bump flat to that order at its center.
    """

    def __init__(self, center: float, width: float, amplitude: float = 1.0, power: int = 0):
        if width <= 0:
            raise ValidationError("bump width must be positive")
        self.center, self.width, self.amplitude, self.power = float(center), float(width), float(amplitude), int(power)

    def derivs(self, s):
        s = np.asarray(s, dtype=float)
        x = (s - self.center) / self.width
        inside = np.abs(x) < 1.0
        xi = np.where(inside, x, 0.0)
        u = 1.0 - xi * xi
        g = np.where(inside, np.exp(1.0 - 1.0 / np.where(inside, u, 1.0)), 0.0)
        us = np.where(inside, u, 1.0)
        g1 = g * (-2.0 * xi / us**2)
        g2 = g * (4.0 * xi * xi - (2.0 + 6.0 * xi * xi) * us) / us**4
        p = self.power
        xp = xi**p
        xp1 = p * xi ** (p - 1) if p >= 1 else np.zeros_like(xi)
        xp2 = p * (p - 1) * xi ** (p - 2) if p >= 2 else np.zeros_like(xi)
        h0 = xp * g
        h1 = xp1 * g + xp * g1
        h2 = xp2 * g + 2 * xp1 * g1 + xp * g2
        a, w = self.amplitude, self.width
        return a * h0, a * h1 / w, a * h2 / (w * w)


class GaussianProfile(Profile):
    """``amplitude * x^power * exp(-x^2)`` with ``x = (s - center)/width``."""

    def __init__(self, center: float, width: float, amplitude: float = 1.0, power: int = 0):
        if width <= 0:
            raise ValidationError("gaussian width must be positive")
        self.center, self.width, self.amplitude, self.power = float(center), float(width), float(amplitude), int(power)

    def derivs(self, s):
        x = (np.asarray(s, dtype=float) - self.center) / self.width
        g = np.exp(-x * x)
        g1 = -2 * x * g
        g2 = (4 * x * x - 2) * g
        p = self.power
        xp = x**p
        xp1 = p * x ** (p - 1) if p >= 1 else np.zeros_like(x)
        xp2 = p * (p - 1) * x ** (p - 2) if p >= 2 else np.zeros_like(x)
        a, w = self.amplitude, self.width
        return a * xp * g, a * (xp1 * g + xp * g1) / w, a * (xp2 * g + 2 * xp1 * g1 + xp * g2) / (w * w)


def profile_from_dict(d: dict | None) -> Profile:
    if not d:
        return ZeroProfile()
    kind = d.get("kind", "bump")
    if kind == "zero":
        return ZeroProfile()
    if kind == "polynomial":
        return PolynomialProfile(d["coefficients"], d.get("center", 0.0))
    if kind == "bump":
        return BumpProfile(d["center"], d["width"], d.get("amplitude", 1.0), d.get("power", 0))
    if kind == "gaussian":
        return GaussianProfile(d["center"], d["width"], d.get("amplitude", 1.0), d.get("power", 0))
    raise ValidationError(f"unknown profile kind {kind!r}")


# ---------------------------------------------------------------------------
# Displaced arcs and deformation families
# ---------------------------------------------------------------------------


class DisplacedArc(ArcSpec):
    """Circular arc whose points move by ``mu * f(sigma)`` along the outward normal.

    The parameter is the base arclength ``sigma``.
    """

    kind = "displaced"

    def __init__(self, base: CircularArc, profile: Profile, mu: float):
        if not isinstance(base, CircularArc):
            raise InvalidTable("deformations are supported on circular arcs only")
        self.base, self.profile, self.mu = base, profile, float(mu)
        self.t0, self.t1 = 0.0, base.length
        self._setup_arclength()

    def _basis(self, t):
        th = self.base.start_angle + np.asarray(t, dtype=float) / self.base.radius
        out = np.array([np.cos(th), np.sin(th)])
        tan = np.array([-np.sin(th), np.cos(th)])
        return out, tan

    def point(self, t):
        out, _ = self._basis(t)
        f = self.profile.derivs(t)[0]
        c = self.base.center.reshape(2, *([1] * np.ndim(t)))
        return c + (self.base.radius + self.mu * f) * out

    def d1(self, t):
        out, tan = self._basis(t)
        f, f1, _ = self.profile.derivs(t)
        K = 1.0 / self.base.radius
        return (1.0 + self.mu * K * f) * tan + self.mu * f1 * out

    def d2(self, t):
        out, tan = self._basis(t)
        f, f1, f2 = self.profile.derivs(t)
        K = 1.0 / self.base.radius
        return 2 * self.mu * f1 * K * tan + (-K + self.mu * (f2 - f * K * K)) * out

    def base_normal_out(self, t):
        return self._basis(t)[0]


@dataclass
class DeformationFamily:
    """Tables ``Omega_mu`` whose arcs move by ``mu * f_i`` along the outward normal; flats stay fixed."""

    base: TableSpec
    profiles: dict
    mu_range: tuple = (-1e-2, 1e-2)
    end_tol: float = 1e-10
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for letter in (1, 2):
            arc = self.base.arc(letter)
            if not isinstance(arc, CircularArc):
                raise InvalidTable("deformation families need circular base arcs")
            prof = self.profiles.setdefault(letter, ZeroProfile())
            f0, d0, _ = prof.derivs(np.array([0.0, arc.length]))
            if np.max(np.abs(f0)) > self.end_tol or np.max(np.abs(d0)) > self.end_tol:
                raise InvalidTable(f"displacement on arc {letter} must vanish with its derivative at the gluing points")

    def table(self, mu: float) -> TableSpec:
        mu = float(mu)
        if mu == 0.0:
            return self.base
        hit = self._cache.get(mu)
        if hit is None:
            a1 = DisplacedArc(self.base.arc1, self.profiles[1], mu)
            a2 = DisplacedArc(self.base.arc2, self.profiles[2], mu)
            hit = TableSpec(a1, a2, flat_labels=self.base.flat_labels, name=f"{self.base.name}+{mu:g}f")
            self._cache[mu] = hit
        return hit

    def defocusing(self, mu: float, grid: int = 128):
        return check_defocusing(self.table(mu), grid=grid)


def deformation_G(family: DeformationFamily, mu: float, z: PhasePoint) -> float:
    """``n(mu, r) cos(phi)`` with ``n`` the normal velocity of the boundary point at ``r``."""
    table = family.table(mu)
    idx, s = table.locate(z.r)
    letter, piece = table.pieces[idx]
    if isinstance(piece, Segment):
        return 0.0
    if isinstance(piece, DisplacedArc):
        sigma = piece.t_of_s(s)
        f = float(family.profiles[letter](sigma))
        frame = piece.frame_t(sigma)
        n_out_mu = -frame.normal
        dot = float(piece.base_normal_out(sigma) @ n_out_mu)
        return f * dot * math.cos(z.phi)
    return float(family.profiles[letter](s)) * math.cos(z.phi)


def sum_G(family: DeformationFamily, mu: float, orbit: OrbitResult) -> float:
    return math.fsum(deformation_G(family, mu, z) for z in orbit.points)


def _solve_for(table: TableSpec, code, seed=None) -> OrbitResult:
    code = code_of(code)
    seeds = ([seed] if seed is not None else []) + list(_family_seeds(table, code))
    return _solve_with_fallback(table, code, seeds)


@dataclass
class DerivativeCheck:
    code: str
    lhs: float
    rhs: float
    rel_err: float
    lengths: tuple


def isospectral_derivative_check(family: DeformationFamily, code, mu: float = 0.0, h: float = 1e-5, rivals=None) -> DerivativeCheck:
    """Compare half the central difference of the orbit length in ``mu`` with the sum of G along the orbit.

    With ``rivals`` (codes of the same rotation number) the longest code is
    determined at ``mu - h`` and ``mu + h``; a change raises ``OrbitBifurcation``.
    """
    code = code_of(code)
    orb = _solve_for(family.table(mu), code)
    lengths = {}
    for sgn in (-1, 1):
        try:
            lengths[sgn] = _solve_for(family.table(mu + sgn * h), code, seed=orb.arc_r).total_length
        except (NoConvergence, InfeasibleOrbit) as exc:
            raise OrbitBifurcation(f"orbit {code} does not persist at mu={mu + sgn * h:g}: {exc}") from exc
    if rivals:
        winners = []
        for sgn in (-1, 1):
            tab = family.table(mu + sgn * h)
            best = (lengths[sgn], str(code))
            for rc in rivals:
                rc = code_of(rc)
                try:
                    L = _solve_for(tab, rc).total_length
                except (NoConvergence, InfeasibleOrbit):
                    continue
                best = max(best, (L, str(rc)))
            winners.append(best[1])
        if winners[0] != winners[1]:
            raise OrbitBifurcation(f"longest code changes from {winners[0]} to {winners[1]} across mu={mu:g}")
    lhs = 0.5 * (lengths[1] - lengths[-1]) / (2 * h)
    rhs = sum_G(family, mu, orb)
    scale = max(abs(rhs), abs(lhs))
    rel = abs(lhs - rhs) / scale if scale > 0 else 0.0
    return DerivativeCheck(str(code), lhs, rhs, rel, (lengths[-1], orb.total_length, lengths[1]))


# ---------------------------------------------------------------------------
# Lagrange coefficients and cancellations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LagrangeCoeffs:
    m: int
    lam: float
    A: tuple
    weighted: bool
    exact: tuple | None = field(default=None, repr=False)

    def weight(self, u: float) -> float:
        return math.cos(u) if self.weighted else 1.0

    def moment(self, k: int, weighted: bool | None = None) -> float:
        """``sum_j A_j lam^(-k j)``, divided by ``cos(lam^-j)`` when weighted.

        When the requested weighting matches the coefficients, the weights
        cancel and the sum is taken in rational arithmetic on the binary
        value of ``lam``, then rounded once.
        """
        wtd = self.weighted if weighted is None else weighted
        if wtd == self.weighted and self.exact is not None:
            q = Fraction(self.lam)
            total = float(sum(a / q ** (k * j) for j, a in enumerate(self.exact)))
            return total / math.cos(1.0) if wtd else total
        terms = []
        for j, a in enumerate(self.A):
            u = self.lam ** (-j)
            terms.append(a * self.lam ** (-k * j) / (math.cos(u) if wtd else 1.0))
        return math.fsum(terms)


def _exact_products(m: int, lam: float) -> list:
    q = Fraction(lam)
    out = []
    for j in range(1, m + 1):
        prod = Fraction(1)
        for i in range(1, m + 1):
            if i != j:
                prod *= (q**i - 1) / (q ** (i - j) - 1)
        out.append(prod)
    return out


def lagrange_coeffs(m: int, lam: float) -> LagrangeCoeffs:
    """Values at ``u = 1`` of the weighted Lagrange basis on the nodes ``lam^-1 .. lam^-m``, with ``A_0 = -1``.

    The weight is ``cos u`` for even ``m`` and 1 for odd ``m``.  The node
    products are formed exactly and rounded once.
    """
    if m < 2:
        raise ValidationError("m must be at least 2")
    if lam - 1.0 < 1e-6:
        raise NearUnitLambda(f"lambda - 1 = {lam - 1.0:.3e} is below 1e-6")
    weighted = m % 2 == 0
    w = (lambda u: math.cos(u)) if weighted else (lambda u: 1.0)
    prods = _exact_products(m, float(lam))
    A = [-1.0] + [w(lam ** (-j)) / w(1.0) * float(p) for j, p in enumerate(prods, start=1)]
    exact = tuple([Fraction(-1)] + prods)
    return LagrangeCoeffs(m, float(lam), tuple(A), weighted, exact)


_PAL_CACHE: dict = {}


def _palindromic(table: TableSpec, n: int) -> OrbitResult:
    key = (id(table), n)
    hit = _PAL_CACHE.get(key)
    if hit is None or hit[0] is not table:
        hit = (table, palindromic_orbit(table, n))
        _PAL_CACHE[key] = hit
    return hit[1]


@dataclass
class SValues:
    n: int
    ell: int
    definitional: float
    complement: float
    orbit_sum: float


def s_values(table: TableSpec, profiles: dict, n: int, ell: int) -> SValues:
    """Both forms of the partial G-sum of the palindromic orbit ``n`` truncated at ``ell``."""
    if n < 2 * ell:
        raise ValidationError("need n >= 2 * ell")
    orb = _palindromic(table, n)

    def G(idx: int) -> float:
        z = orb.points[idx]
        letter = orb.letters[idx]
        if letter not in (1, 2):
            return 0.0
        lo, _ = table.component_range(letter)
        s = (z.r - lo) % table.perimeter
        return float(profiles.get(letter, ZeroProfile())(s)) * math.cos(z.phi)

    # collision list: y(0-), x(0), y(0), x(1), y(1), ..., x(n), y(n), x(n+1)
    def x(k):
        return G(1) if k == 0 else G(2 * k + 1)

    def y(k):
        return G(2) if k == 0 else G(2 * k + 2)

    definitional = -x(0) - 2 * y(0) - 2 * math.fsum(x(k) + y(k) for k in range(1, ell + 1))
    complement = math.fsum([x(k) for k in range(ell + 1, n - ell + 2)] + [y(k) for k in range(ell + 1, n - ell + 1)])
    total = math.fsum(G(i) for i in range(orb.period))
    return SValues(n, ell, definitional, complement, total)


@dataclass
class CancellationResult:
    ell: int
    m: int
    S: list
    S_complement: list
    orbit_sums: list
    A: tuple
    combo: float
    combo_complement: float
    predicted_bound: float


def cancellation_sums(table: TableSpec, profiles: dict, ell: int, m: int, lam: float | None = None) -> CancellationResult:
    """``sum_j A_{m,j} S_{2 ell + j}(ell)`` from the palindromic orbits ``2 ell .. 2 ell + m``."""
    if lam is None:
        from .invariants import analyze_period_two

        lam = analyze_period_two(table).lam
    coeffs = lagrange_coeffs(m, lam)
    vals = [s_values(table, profiles, 2 * ell + j, ell) for j in range(m + 1)]
    S = [v.definitional for v in vals]
    Sc = [v.complement for v in vals]
    combo = math.fsum(a * s for a, s in zip(coeffs.A, S))
    combo_c = math.fsum(a * s for a, s in zip(coeffs.A, Sc))
    return CancellationResult(ell, m, S, Sc, [v.orbit_sum for v in vals], coeffs.A, combo, combo_c, lam ** (-m * ell))


def cancellation_noise(res: CancellationResult) -> float:
    """Rounding scale of the combination: ``eps * sum |A_j S_j|`` times a safety factor."""
    return 1e4 * np.finfo(float).eps * math.fsum(abs(a * s) for a, s in zip(res.A, res.S))


def cancellation_decay(table: TableSpec, profiles: dict, ells, m: int):
    """Fitted exponent ``-d log|combo| / d ell`` over ``ells``; points at the rounding floor are dropped."""
    from .invariants import analyze_period_two

    lam = analyze_period_two(table).lam
    res = [cancellation_sums(table, profiles, e, m, lam) for e in ells]
    pts = [(r.ell, abs(r.combo)) for r in res if abs(r.combo) > cancellation_noise(r)]
    if len(pts) < 2:
        raise ValidationError("fewer than two combinations above the rounding floor")
    x = np.array([p[0] for p in pts], dtype=float)
    y = np.log([p[1] for p in pts])
    slope = np.polyfit(x, y, 1)[0]
    return -float(slope), lam, res


# ---------------------------------------------------------------------------
# Unfolded channel
# ---------------------------------------------------------------------------


def channel_quotient(table: TableSpec) -> float:
    """Flat length over the distance between the parallel flats."""
    if table.kind != "stadium":
        raise InvalidTable("the channel needs parallel flats")
    g = table.gluing_points
    P13, P23, P14 = g[(1, 3)], g[(2, 3)], g[(1, 4)]
    return float(np.hypot(*(P23 - P13)) / np.hypot(*(P13 - P14)))


def _cell_iso(table: TableSpec, n: int):
    """Isometry onto the n-th cell, reached by crossing flat 3 first."""
    first = table.flat_labels[0]
    other = table.flat_labels[1]
    flats = [first if k % 2 == 0 else other for k in range(n)]
    return _Gap(table, flats)


def _arc_jet(arc, s):
    f = arc.frame(s)
    return f.position, f.tangent, -f.curvature * f.normal


def _check_channel(table: TableSpec, gap: _Gap, X, Y):
    D = Y - X
    for iso, seg in gap.lines:
        p = iso(seg.p)
        dvec = iso.linear(seg.direction)
        den = D[0] * dvec[1] - D[1] * dvec[0]
        if abs(den) < 1e-300:
            raise InfeasibleChord("chord parallel to a cell wall")
        w = p - X
        lam = (w[0] * dvec[1] - w[1] * dvec[0]) / den
        s = (w[0] * D[1] - w[1] * D[0]) / den
        if not (0.0 < lam < 1.0 and 0.0 <= s <= seg.length):
            raise InfeasibleChord("chord leaves the channel")


def _maximize(F, x0, lo, hi, tol=1e-13, max_iter=200):
    x = np.array(x0, dtype=float)
    L, g, H = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(g)) < tol:
            return x, L, g, H
        try:
            d = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            d = g
        if g @ d <= 0:
            d = g
        a = 1.0
        while a > 1e-14:
            xn = np.clip(x + a * d, lo, hi)
            Ln, gn, Hn = F(xn)
            if Ln >= L - 1e-15 * abs(L) or np.max(np.abs(gn)) < np.max(np.abs(g)):
                break
            a *= 0.5
        else:
            break
        x, L, g, H = xn, Ln, gn, Hn
    if np.max(np.abs(g)) < 1e-10:
        return x, L, g, H
    raise NoConvergence(f"channel maximization stalled at |grad|={np.max(np.abs(g)):.3e}")


def _grid_start(arcA, arcB, iso, samples=64):
    sa = np.linspace(0, arcA.length, samples + 1)[1:-1]
    sb = np.linspace(0, arcB.length, samples + 1)[1:-1]
    PA = np.array([f.position for f in arcA.frames(sa)])
    PB = np.array([f.position for f in arcB.frames(sb)])
    QB = PB @ iso.A.T + iso.b
    D = np.linalg.norm(PA[:, None, :] - QB[None, :, :], axis=-1)
    i, j = np.unravel_index(int(np.argmax(D)), D.shape)
    return sa[i], sb[j]


@dataclass
class ChannelFoot:
    s: float
    distance_to_gluing: float
    gluing: tuple
    curvature_at_gluing: float


def _foot(table: TableSpec, letter: int, s: float) -> ChannelFoot:
    arc = table.arc(letter)
    lo, hi = table.component_range(letter)
    if s <= arc.length - s:
        r_g, d = lo, s
    else:
        r_g, d = hi, arc.length - s
    key = min(table.gluing_points, key=lambda k: np.hypot(*(table.gluing_points[k] - boundary_at(table, r_g).position)))
    K = abs(arc.frame(0.0 if r_g == lo else arc.length).curvature)
    return ChannelFoot(s, d, key, K)


@dataclass
class ChannelPeriodTwo:
    n: int
    s_bar: float
    t_bar: float
    foot_A: ChannelFoot
    foot_B: ChannelFoot
    length: float
    perpendicularity: float


def unfolded_period_two(table: TableSpec, n: int) -> ChannelPeriodTwo:
    """Longest chord from arc 1 in cell 0 to arc 2 in cell ``n`` of the unfolded channel."""
    if table.kind != "stadium":
        raise InvalidTable("the channel needs parallel flats")
    if n < 1:
        raise ValidationError("n must be positive")
    A, B = table.arc1, table.arc2
    gap = _cell_iso(table, n)
    iso = gap.iso

    def F(x):
        X, dX, ddX = _arc_jet(A, x[0])
        P, T, Acc = _arc_jet(B, x[1])
        tau, gx, gy, hxx, hxy, hyy = chord_jet(X, dX, ddX, iso(P), iso.linear(T), iso.linear(Acc))
        return tau, np.array([gx, gy]), np.array([[hxx, hxy], [hxy, hyy]])

    s0 = _grid_start(A, B, iso)
    x, L, g, _ = _maximize(F, s0, [0.0, 0.0], [A.length, B.length])
    XA = A.frame(x[0])
    XB = B.frame(x[1])
    _check_channel(table, gap, XA.position, iso(XB.position))
    fa = _foot(table, 1, x[0])
    fb = _foot(table, 2, x[1])
    return ChannelPeriodTwo(n, fa.distance_to_gluing, fb.distance_to_gluing, fa, fb, L, float(np.max(np.abs(g))))


@dataclass
class ChannelPeriodFour:
    n: int
    m: int
    s_bar: float
    t1_bar: float
    t2_bar: float
    phi_bar: float
    angle_mismatch: float
    perpendicularity: float
    length: float


def unfolded_period_four(table: TableSpec, n: int, rho: float) -> ChannelPeriodFour:
    """Longest pair of chords from one arc-1 point in cell 0 to arc 2 in cells ``n`` and ``floor(n rho)``."""
    if table.kind != "stadium":
        raise InvalidTable("the channel needs parallel flats")
    m = int(math.floor(n * rho))
    if m <= n:
        raise ValidationError("floor(n * rho) must exceed n")
    A, B = table.arc1, table.arc2
    g1, g2 = _cell_iso(table, n), _cell_iso(table, m)
    i1, i2 = g1.iso, g2.iso

    def F(x):
        X, dX, ddX = _arc_jet(A, x[0])
        g = np.zeros(3)
        H = np.zeros((3, 3))
        L = 0.0
        for j, iso in ((1, i1), (2, i2)):
            P, T, Acc = _arc_jet(B, x[j])
            tau, gx, gy, hxx, hxy, hyy = chord_jet(X, dX, ddX, iso(P), iso.linear(T), iso.linear(Acc))
            L += tau
            g[0] += gx
            g[j] += gy
            H[0, 0] += hxx
            H[j, j] += hyy
            H[0, j] += hxy
            H[j, 0] += hxy
        return L, g, H

    p1 = unfolded_period_two(table, n)
    p2 = unfolded_period_two(table, m)
    x0 = [0.5 * (p1.foot_A.s + p2.foot_A.s), p1.foot_B.s, p2.foot_B.s]
    x, L, g, _ = _maximize(F, x0, [0.0] * 3, [A.length, B.length, B.length])
    fa = A.frame(x[0])
    angles = []
    for j, (gap, iso) in enumerate(((g1, i1), (g2, i2)), start=1):
        Y = iso(B.frame(x[j]).position)
        _check_channel(table, gap, fa.position, Y)
        u = (Y - fa.position) / np.hypot(*(Y - fa.position))
        angles.append(math.atan2(float(u @ fa.tangent), float(u @ fa.normal)))
    fa_s = _foot(table, 1, x[0]).distance_to_gluing
    t1 = _foot(table, 2, x[1]).distance_to_gluing
    t2 = _foot(table, 2, x[2]).distance_to_gluing
    phi = 0.5 * abs(angles[0] - angles[1])
    mismatch = abs(abs(angles[0]) - abs(angles[1])) if angles[0] * angles[1] < 0 else abs(angles[0] + angles[1])
    return ChannelPeriodFour(n, m, fa_s, t1, t2, phi, mismatch, float(np.max(np.abs(g))), L)


def weighted_intercept(ns, values):
    """Intercept and slope of ``n * value`` against ``1/n`` with weights ``n^2``."""
    ns = np.asarray(ns, dtype=float)
    y = ns * np.asarray(values, dtype=float)
    x = 1.0 / ns
    W = ns**2
    A = np.column_stack([np.ones_like(x), x])
    sw = np.sqrt(W)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    return float(coef[0]), float(coef[1])
