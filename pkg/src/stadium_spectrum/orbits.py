"""Periodic orbits over symbolic codes, found by maximizing the length functional.

Orbit variables are the arclength positions of the arc collisions only.
Collisions with flats are removed by unfolding: the chord leaving an arc
point runs straight into the mirror copies of the table and ends at the image
of the next arc point.  The length is then a smooth function of the arc
positions and its gradient and Hessian come from the free path derivatives.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynamics import PhasePoint, billiard_map, chord_jet
from .errors import InfeasibleOrbit, InvalidCode, NoConvergence, NonConcave
from .geometry import Isometry, TableSpec, boundary_at, cross

ARC_LETTERS = (1, 2)
FLAT_LETTERS = (3, 4)
# cyclic order of the components along the boundary, in quarter turns
_POSITION = {1: 0, 3: 1, 2: 2, 4: 3}


# ---------------------------------------------------------------------------
# Symbolic codes
# ---------------------------------------------------------------------------


def _parse_word(text: str) -> list[int]:
    pos = 0
    s = text.strip()

    def seq() -> list[int]:
        nonlocal pos
        out: list[int] = []
        while pos < len(s) and s[pos] != ")":
            if s[pos].isspace():
                pos += 1
            elif s[pos] == "(":
                pos += 1
                inner = seq()
                if pos >= len(s) or s[pos] != ")":
                    raise InvalidCode(f"unbalanced parentheses in {text!r}")
                pos += 1
                out.extend(inner * power())
            elif s[pos] in "1234":
                letter = int(s[pos])
                pos += 1
                out.extend([letter] * power())
            else:
                raise InvalidCode(f"unexpected character {s[pos]!r} in {text!r}")
        return out

    def power() -> int:
        nonlocal pos
        if pos < len(s) and s[pos] == "^":
            m = re.match(r"\^(\d+)", s[pos:])
            if not m:
                raise InvalidCode(f"bad exponent in {text!r}")
            pos += len(m.group(0))
            return int(m.group(1))
        return 1

    word = seq()
    if pos != len(s):
        raise InvalidCode(f"unbalanced parentheses in {text!r}")
    return word


@dataclass(frozen=True)
class SymbolicCode:
    """Cyclic word over {1, 2, 3, 4}: 1, 2 are the arcs and 3, 4 the flats."""

    word: tuple[int, ...]
    label: str | None = field(default=None, compare=False)

    def __post_init__(self):
        w = tuple(int(x) for x in self.word)
        object.__setattr__(self, "word", w)
        if not w:
            raise InvalidCode("empty code")
        if any(x not in (1, 2, 3, 4) for x in w):
            raise InvalidCode(f"letters must be in 1..4: {w}")
        if not any(x in ARC_LETTERS for x in w):
            raise InvalidCode("code needs at least one arc letter")
        q = len(w)
        for i in range(q):
            a, b = w[i], w[(i + 1) % q]
            if a in FLAT_LETTERS and a == b:
                raise InvalidCode(f"flat letter {a} repeats consecutively")
        if q == 1:
            raise InvalidCode("period one is not admissible")
        if self.winding == 0:
            raise InvalidCode("code has zero winding")

    @classmethod
    def parse(cls, text: str) -> "SymbolicCode":
        return cls(tuple(_parse_word(text)), label=text.strip())

    @property
    def period(self) -> int:
        return len(self.word)

    @property
    def winding(self) -> int:
        total = 0
        q = len(self.word)
        for i in range(q):
            a, b = self.word[i], self.word[(i + 1) % q]
            total += (_POSITION[b] - _POSITION[a]) % 4
        p = total // 4
        return min(p, q - p)

    @property
    def rotation(self) -> Fraction:
        return Fraction(self.winding, self.period)

    @property
    def has_repeated_arc(self) -> bool:
        q = len(self.word)
        return any(self.word[i] == self.word[(i + 1) % q] for i in range(q))

    def canonical(self) -> tuple[int, ...]:
        """Smallest rotation of the word or of its reversal (time reversal)."""
        w = self.word
        cands = [w[i:] + w[:i] for i in range(len(w))]
        r = tuple(reversed(w))
        cands += [r[i:] + r[:i] for i in range(len(r))]
        return min(cands)

    def count(self, letter: int) -> int:
        return self.word.count(letter)

    def __str__(self) -> str:
        return self.label or "".join(str(x) for x in self.word)


def code_of(x) -> SymbolicCode:
    if isinstance(x, SymbolicCode):
        return x
    if isinstance(x, str):
        return SymbolicCode.parse(x)
    return SymbolicCode(tuple(x))


def family_code(n: int, i: int, hat: bool = False) -> SymbolicCode:
    """Code ``(i 12...12)`` with ``2n`` alternating letters (``(i 21...21)`` if ``hat``)."""
    pair = "21" if hat else "12"
    return SymbolicCode((i,) + tuple(int(c) for c in pair) * n, label=f"{i}({pair})^{n}")


def palindromic_code(n: int, hat: bool = False) -> SymbolicCode:
    """``(323 12...121)`` with ``2n + 1`` arc letters (``(313 212...12)`` if ``hat``)."""
    if hat:
        return SymbolicCode((3, 1, 3) + (2, 1) * n + (2,), label=f"313(21)^{n} 2")
    return SymbolicCode((3, 2, 3) + (1, 2) * n + (1,), label=f"323(12)^{n} 1")


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------


@dataclass
class OrbitResult:
    code: SymbolicCode
    points: list[PhasePoint]
    letters: list[int]
    chord_lengths: list[float]
    total_length: float
    grad_norm: float
    hessian_definite: bool
    feasible: bool
    arc_r: np.ndarray
    hessian_max_eig: float
    iterations: int
    notes: dict = field(default_factory=dict)

    @property
    def period(self) -> int:
        return len(self.points)

    def arc_points(self, letter: int | None = None) -> list[tuple[int, PhasePoint]]:
        return [(k, z) for k, (z, a) in enumerate(zip(self.points, self.letters)) if a in ARC_LETTERS and (letter is None or a == letter)]

    def excess(self, tau_star: float) -> float:
        """Total length minus ``period * tau_star`` as a compensated sum of per-chord excesses.

        The arc-to-arc chords are taken in the unfolded picture, so each flat
        collision contributes one extra ``-tau_star``.
        """
        chords = self.notes["unfolded_chords"]
        terms = [t - tau_star for t in chords] + [-tau_star] * (self.period - len(chords))
        return math.fsum(terms)

    def replay_error(self, table: TableSpec) -> float:
        """Largest mismatch between one billiard map step from each collision and the next collision.

        Steps are checked one at a time because iterating a hyperbolic orbit
        amplifies round-off by the expansion rate.
        """
        worst = 0.0
        P = table.perimeter
        for k, z in enumerate(self.points):
            st = billiard_map(table, z)
            target = self.points[(k + 1) % self.period]
            if st.component != self.letters[(k + 1) % self.period]:
                return math.inf
            dr = abs((st.z1.r - target.r + 0.5 * P) % P - 0.5 * P)
            worst = max(worst, dr, abs(st.z1.phi - target.phi))
        return worst


# ---------------------------------------------------------------------------
# Unfolded length functional
# ---------------------------------------------------------------------------


class _Gap:
    """Passage from one arc collision to the next through a list of flats."""

    __slots__ = ("flats", "iso", "lines")

    def __init__(self, table: TableSpec, flats: list[int]):
        self.flats = flats
        iso = Isometry()
        lines = []
        for f in flats:
            seg = table.flat(f)
            lines.append((iso, seg))
            iso = iso.compose(seg.reflection())
        self.iso = iso
        self.lines = lines


class LengthFunctional:
    """Length of a closed billiard path with prescribed code, as a function of the arc positions."""

    def __init__(self, table: TableSpec, code: SymbolicCode):
        self.table = table
        self.code = code
        w = code.word
        idx = [k for k, a in enumerate(w) if a in ARC_LETTERS]
        self.arc_index = idx
        self.arc_letters = [w[k] for k in idx]
        m = len(idx)
        self.m = m
        gaps = []
        for j in range(m):
            a, b = idx[j], idx[(j + 1) % m]
            if b <= a:
                b += len(w)
            gaps.append(_Gap(table, [w[k % len(w)] for k in range(a + 1, b)]))
        self.gaps = gaps
        self.ranges = [table.component_range(a) for a in self.arc_letters]

    def _frames(self, x):
        out = []
        for letter, (lo, _), r in zip(self.arc_letters, self.ranges, x):
            f = self.table.arc(letter).frame(float(r - lo))
            out.append((f.position, f.tangent, -f.curvature * f.normal))
        return out

    def inside(self, x, margin: float = 0.0) -> bool:
        return all(lo + margin < r < hi - margin for r, (lo, hi) in zip(x, self.ranges))

    def value(self, x) -> float:
        fr = self._frames(x)
        tot = []
        for j, gap in enumerate(self.gaps):
            X = fr[j][0]
            Y = gap.iso(fr[(j + 1) % self.m][0])
            tot.append(math.hypot(*(Y - X)))
        return math.fsum(tot)

    def evaluate(self, x):
        fr = self._frames(x)
        m = self.m
        g = np.zeros(m)
        H = np.zeros((m, m))
        chords = []
        for j, gap in enumerate(self.gaps):
            k = (j + 1) % m
            X, dX, ddX = fr[j]
            P, T, A = fr[k]
            Y, dY, ddY = gap.iso(P), gap.iso.linear(T), gap.iso.linear(A)
            if math.hypot(*(Y - X)) < 1e-12:
                raise InfeasibleOrbit("two consecutive collisions coincide")
            tau, gx, gy, hxx, hxy, hyy = chord_jet(X, dX, ddX, Y, dY, ddY)
            chords.append(tau)
            g[j] += gx
            g[k] += gy
            H[j, j] += hxx
            H[k, k] += hyy
            H[j, k] += hxy
            H[k, j] += hxy
        return math.fsum(chords), g, H, chords


def _ascent_direction(g, H):
    try:
        d = np.linalg.solve(H, -g)
    except np.linalg.LinAlgError:
        d = None
    if d is None or not np.all(np.isfinite(d)) or float(g @ d) <= 0:
        w, V = np.linalg.eigh(0.5 * (H + H.T))
        scale = max(1.0, float(np.max(np.abs(w))))
        w = -np.maximum(np.abs(w), 1e-8 * scale)
        d = -V @ ((V.T @ g) / w)
    return d


def _newton(F: LengthFunctional, x0, max_iter: int = 200, target: float = 1e-12, accept: float = 1e-10, margin: float = 0.0):
    x = np.array(x0, dtype=float)
    if not F.inside(x, margin):
        raise InfeasibleOrbit("seed lies outside the arcs")
    L, g, H, _ = F.evaluate(x)
    it = 0
    for it in range(1, max_iter + 1):
        gn = float(np.max(np.abs(g)))
        if gn < target:
            break
        d = _ascent_direction(g, H)
        alpha = 1.0
        accepted = False
        while alpha > 1e-14:
            xn = x + alpha * d
            if F.inside(xn, margin):
                try:
                    Ln, gn_vec, Hn, _ = F.evaluate(xn)
                except InfeasibleOrbit:
                    alpha *= 0.5
                    continue
                small = gn < 1e-6 and float(np.max(np.abs(gn_vec))) < gn
                if Ln >= L - 1e-14 * max(1.0, abs(L)) or small:
                    accepted = True
                    break
            alpha *= 0.5
        if not accepted:
            break
        x, L, g, H = xn, Ln, gn_vec, Hn
    gn = float(np.max(np.abs(g)))
    if not gn < accept:
        if not F.inside(x, 1e-11):
            raise InfeasibleOrbit(f"ascent drifted onto a gluing point (|grad|={gn:.3e})")
        raise NoConvergence(f"|grad|={gn:.3e} after {it} steps")
    return x, g, H, it


def _assemble(F: LengthFunctional, x, g, H, it) -> OrbitResult:
    table = F.table
    fr = F._frames(x)
    points: list[PhasePoint] = []
    letters: list[int] = []
    chords: list[float] = []
    unfolded: list[float] = []
    feasible = True
    reasons = []
    gl_tol = 1e-11
    for j, gap in enumerate(F.gaps):
        k = (j + 1) % F.m
        X = fr[j][0]
        Y = gap.iso(fr[k][0])
        D = Y - X
        tau = math.hypot(*D)
        u = D / tau
        unfolded.append(tau)
        bp = boundary_at(table, x[j])
        if min(x[j] - F.ranges[j][0], F.ranges[j][1] - x[j]) < gl_tol:
            feasible = False
            reasons.append("arc collision on a gluing point")
        phi = math.atan2(float(u @ bp.tangent), float(u @ bp.inward_normal))
        points.append(PhasePoint(float(x[j]) % table.perimeter, phi))
        letters.append(F.arc_letters[j])
        lam_prev = 0.0
        for (iso, seg), f in zip(gap.lines, gap.flats):
            # image of the flat line under iso
            p = iso(seg.p)
            dvec = iso.linear(seg.direction)
            den = cross(u, dvec)
            if abs(den) < 1e-15:
                feasible = False
                reasons.append("chord parallel to a flat")
                lam = lam_prev
                s_loc = 0.0
            else:
                w = p - X
                lam = cross(w, dvec) / den / tau
                s_loc = cross(w, u) / den
            if not (lam_prev < lam < 1.0):
                feasible = False
                reasons.append("flat crossings out of order")
            if not (gl_tol < s_loc < seg.length - gl_tol):
                feasible = False
                reasons.append(f"chord misses flat {f}")
            after = iso.compose(seg.reflection())
            wdir = np.linalg.solve(after.A, u)
            r_flat = table.component_range(f)[0] + min(max(s_loc, 0.0), seg.length)
            fbp = boundary_at(table, r_flat)
            phi_f = math.atan2(float(wdir @ fbp.tangent), float(wdir @ fbp.inward_normal))
            chords.append(tau * (lam - lam_prev))
            points.append(PhasePoint(r_flat, phi_f))
            letters.append(f)
            lam_prev = lam
        chords.append(tau * (1.0 - lam_prev))
    # rotate so the listing follows the code word
    start = F.arc_index[0]
    if start:
        points = points[-start:] + points[:-start]
        letters = letters[-start:] + letters[:-start]
        chords = chords[-start:] + chords[:-start]
    Hs = 0.5 * (H + H.T)
    eig = np.linalg.eigvalsh(Hs)
    res = OrbitResult(
        code=F.code,
        points=points,
        letters=letters,
        chord_lengths=chords,
        total_length=math.fsum(chords),
        grad_norm=float(np.max(np.abs(g))),
        hessian_definite=bool(eig.max() < 0),
        feasible=feasible,
        arc_r=np.array(x, dtype=float),
        hessian_max_eig=float(eig.max()),
        iterations=it,
        notes={"unfolded_chords": unfolded, "infeasibility": sorted(set(reasons))},
    )
    return res


def default_seed(table: TableSpec, code: SymbolicCode) -> np.ndarray:
    """Arc midpoints, with runs of one arc letter fanned out across the arc."""
    F = LengthFunctional(table, code)
    x = np.empty(F.m)
    j = 0
    while j < F.m:
        k = j
        while k + 1 < F.m and F.arc_letters[k + 1] == F.arc_letters[j] and not F.gaps[k].flats:
            k += 1
        lo, hi = F.ranges[j]
        run = k - j + 1
        if run == 1:
            x[j] = 0.5 * (lo + hi)
        else:
            for i in range(run):
                x[j + i] = lo + (hi - lo) * (i + 1) / (run + 1)
        j = k + 1
    if F.m > 1 and F.arc_letters[0] == F.arc_letters[-1] and not F.gaps[-1].flats:
        lo, hi = F.ranges[0]
        x[-1] = lo + 0.3 * (hi - lo)
        x[0] = lo + 0.7 * (hi - lo)
    return x


def solve_code(
    table: TableSpec,
    code,
    seed=None,
    require_concave: bool = False,
    max_iter: int = 200,
    check_replay: bool = True,
) -> OrbitResult:
    """Periodic orbit with the given code as a critical point of the length functional.

    ``seed`` lists one arclength per arc letter.  The result reports the
    stationarity residual, whether the Hessian is negative definite, and
    whether the unfolded chords pass through the flats they name.
    """
    code = code_of(code)
    F = LengthFunctional(table, code)
    x0 = default_seed(table, code) if seed is None else np.asarray(seed, dtype=float)
    if len(x0) != F.m:
        raise InvalidCode(f"seed has {len(x0)} entries, code has {F.m} arc letters")
    x, g, H, it = _newton(F, x0, max_iter=max_iter)
    res = _assemble(F, x, g, H, it)
    if res.feasible and check_replay:
        err = res.replay_error(table)
        res.notes["replay_error"] = err
        if not err < 1e-8:
            res.feasible = False
            res.notes["infeasibility"].append("replay does not reproduce the code")
    if not res.feasible:
        raise InfeasibleOrbit(f"orbit {code} is not realized: {', '.join(res.notes['infeasibility'])}")
    if not res.hessian_definite:
        if require_concave:
            raise NonConcave(f"Hessian of the length has eigenvalue {res.hessian_max_eig:.3e} >= 0", res)
        warnings.warn(f"orbit {code} is not a strict local maximum of the length", stacklevel=2)
    return res


# ---------------------------------------------------------------------------
# Named families
# ---------------------------------------------------------------------------

_P2_CACHE: dict[int, OrbitResult] = {}


def period_two(table: TableSpec, check_diameter: bool = True) -> OrbitResult:
    """The maximal period-two orbit bouncing perpendicularly between the arcs."""
    key = id(table)
    hit = _P2_CACHE.get(key)
    if hit is not None and hit.notes.get("table") is table:
        return hit
    res = solve_code(table, SymbolicCode((1, 2), label="12"))
    tau = res.total_length / 2
    res.notes["tau_star"] = tau
    res.notes["table"] = table
    if check_diameter:
        diam = table.diameter()
        res.notes["diameter"] = diam
        if abs(diam - tau) > 1e-8:
            raise InfeasibleOrbit(f"period-two length {tau} differs from the diameter {diam}")
    _P2_CACHE[key] = res
    return res


def _profile_seed(table: TableSpec, code: SymbolicCode, offsets) -> np.ndarray:
    """Seed arc positions at the period-two points shifted by ``offsets`` (arclength)."""
    p2 = period_two(table, check_diameter=False)
    star = {1: p2.arc_r[0], 2: p2.arc_r[1]}
    F = LengthFunctional(table, code)
    x = np.array([star[a] + o for a, o in zip(F.arc_letters, offsets)])
    for j, (lo, hi) in enumerate(F.ranges):
        x[j] = min(max(x[j], lo + 1e-3 * (hi - lo)), hi - 1e-3 * (hi - lo))
    return x


def _solve_with_fallback(table, code, seeds, **kw) -> OrbitResult:
    last = None
    for s in seeds:
        try:
            return solve_code(table, code, seed=s, **kw)
        except (NoConvergence, InfeasibleOrbit) as exc:
            last = exc
    raise last


def rotation_orbit(table: TableSpec, n: int, i: int, hat: bool = False, expert: bool = False, **kw) -> OrbitResult:
    """Orbit ``(i 12...12)`` with ``2n`` alternating arc letters; period ``2n + 1``."""
    if n < 1:
        raise InvalidCode("n must be at least 1")
    if i not in (1, 2, 3, 4):
        raise InvalidCode("i must be one of 1, 2, 3, 4")
    if i == 1 and not expert:
        raise InvalidCode("code (1 12...12) repeats an arc letter; pass expert=True to solve it")
    code = family_code(n, i, hat)
    return _solve_with_fallback(table, code, _family_seeds(table, code), **kw)


def _half_step_ratio(table: TableSpec) -> float:
    """Square root of the leading monodromy eigenvalue of the period-two orbit."""
    from .dynamics import map_differential

    p2 = period_two(table, check_diameter=False)
    M = map_differential(table, p2.points[1]) @ map_differential(table, p2.points[0])
    lam = max(abs(np.linalg.eigvals(M)))
    return math.sqrt(max(lam, 1.0 + 1e-6))


def _family_seeds(table: TableSpec, code: SymbolicCode):
    """Seeds whose offsets from the period-two points grow like a hyperbolic sine along the run."""
    F = LengthFunctional(table, code)
    m = F.m
    rho = _half_step_ratio(table)
    mid = 0.5 * (m - 1)
    shape = np.array([math.sinh(math.log(rho) * (j - mid)) for j in range(m)])
    top = max(abs(shape.max()), 1e-300)
    half = min(hi - lo for lo, hi in F.ranges) / 2
    seeds = []
    for amp in (0.4, 0.25, 0.6):
        for sign in (1.0, -1.0):
            seeds.append(_profile_seed(table, code, sign * amp * half * shape / top))
    seeds.append(default_seed(table, code))
    return seeds


def palindromic_orbit(table: TableSpec, n: int, variant: str = "gamma", **kw) -> OrbitResult:
    """Palindromic orbit ``(323 12...121)`` (``variant="gamma"``) or ``(313 212...12)`` (``"hat"``).

    The two flat collisions are unfolded, so the solve takes place on the
    table doubled across the flat.  The result is checked for the mirror
    symmetry of the arc run and for the perpendicular hit in its middle.
    """
    hat = variant in ("hat", "gamma_hat")
    code = palindromic_code(n, hat)
    res = _solve_with_fallback(table, code, _family_seeds(table, code), **kw)
    arc = [(k, z) for k, z in enumerate(res.points) if res.letters[k] in ARC_LETTERS]
    run = [z for _, z in arc[1:]]
    sym = max(abs(run[k].r - run[-1 - k].r) for k in range(len(run)))
    anti = max(abs(run[k].phi + run[-1 - k].phi) for k in range(len(run)))
    mid = abs(run[n].phi)
    res.notes.update({"symmetry_residual": sym, "phi_antisymmetry": anti, "middle_phi": mid})
    if sym > 1e-8 or mid > 1e-8:
        raise InfeasibleOrbit(f"palindromic symmetry violated ({sym:.2e}, {mid:.2e})")
    return res


# ---------------------------------------------------------------------------
# Marked length spectrum
# ---------------------------------------------------------------------------


@dataclass
class MarkedLengthEntry:
    rotation: Fraction
    max_length: float
    argmax_code: SymbolicCode
    argmax_codes: tuple
    candidates_examined: int
    lengths: dict
    failures: dict
    partial: bool
    orbits: dict = field(default_factory=dict, repr=False)


def marked_length_max(table: TableSpec, q: int, tie_tol: float = 1e-9, include_repeated: bool = True) -> MarkedLengthEntry:
    """Longest orbit of rotation number (q - 1)/(2q) among the family codes ``(i 12...12)``.

    Codes equal up to cyclic shift or time reversal are solved once.  Lengths
    within ``tie_tol`` of the maximum are all reported as maximizers.
    """
    if q < 3 or q % 2 == 0:
        raise InvalidCode("q must be odd and at least 3")
    n = (q - 1) // 2
    seen = {}
    for i in (1, 2, 3, 4):
        if i == 1 and not include_repeated:
            continue
        for hat in (False, True):
            c = family_code(n, i, hat)
            seen.setdefault(c.canonical(), c)
    lengths, failures, orbits = {}, {}, {}
    for key in sorted(seen):
        c = seen[key]
        try:
            res = _solve_with_fallback(table, c, _family_seeds(table, c))
        except (NoConvergence, InfeasibleOrbit) as exc:
            failures[str(c)] = f"{type(exc).__name__}: {exc}"
            continue
        lengths[str(c)] = res.total_length
        orbits[str(c)] = res
    if not lengths:
        raise NoConvergence(f"no candidate of period {q} could be solved")
    best = max(lengths.values())
    arg = tuple(sorted(k for k, v in lengths.items() if best - v <= tie_tol))
    return MarkedLengthEntry(
        rotation=Fraction(n, q),
        max_length=best,
        argmax_code=orbits[arg[0]].code,
        argmax_codes=arg,
        candidates_examined=len(seen),
        lengths=lengths,
        failures=failures,
        partial=bool(failures),
        orbits=orbits,
    )
