"""Monodromy of the period-two orbit, homoclinic constants and length-spectrum invariants."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .dynamics import map_differential
from .errors import (
    BranchAmbiguity,
    FitUnstable,
    InsufficientDecayWindow,
    InvalidCode,
    NoRealRoot,
    NotHyperbolic,
    ParityMismatch,
    ValidationError,
)
from .geometry import TableSpec, boundary_at
from .orbits import OrbitResult, marked_length_max, period_two, rotation_orbit

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# Period-two monodromy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PeriodTwoData:
    tau_star: float
    K_z: float
    K_w: float
    a_z: float
    a_w: float
    b: float
    lam: float
    theta_z: float
    theta_w: float
    lambda_z: float
    lambda_w: float
    r_z: float
    r_w: float
    monodromy: np.ndarray = field(repr=False)
    numeric: dict = field(default_factory=dict, repr=False)

    @property
    def lambda_(self) -> float:
        return self.lam


def _lambda_from_trace(tr: float) -> float:
    return 0.5 * (abs(tr) + math.sqrt(tr * tr - 4.0))


def _unit_eigvec(M: np.ndarray, ev: float) -> np.ndarray:
    w, V = np.linalg.eig(M)
    k = int(np.argmin(abs(w - ev)))
    v = np.real(V[:, k])
    v = v / np.hypot(*v)
    return v if v[0] >= 0 else -v


def analyze_period_two(table: TableSpec) -> PeriodTwoData:
    """Closed-form monodromy data of the period-two orbit plus an independent numerical route.

    The closed forms use the arc curvatures at the two bounce points.  The
    numerical route multiplies the two map Jacobians and diagonalizes the
    product; ``numeric`` stores its results and the largest discrepancy.
    """
    p2 = period_two(table)
    tau = p2.total_length / 2
    z, w = p2.points[0], p2.points[1]
    K_z = -boundary_at(table, z.r).curvature
    K_w = -boundary_at(table, w.r).curvature
    a_z, a_w = 1.0 - K_z * tau, 1.0 - K_w * tau
    b = tau * K_z * K_w - K_z - K_w

    DFz = map_differential(table, z)
    DFw = map_differential(table, w)
    Mz = DFw @ DFz
    Mw = DFz @ DFw
    tr_num = float(np.trace(Mz))
    if abs(tr_num) <= 2.0 + 1e-12:
        raise NotHyperbolic(f"trace of the period-two monodromy is {tr_num:.15g}")

    tr = 2.0 * (2.0 * a_z * a_w - 1.0)
    if abs(tr) <= 2.0 + 1e-12:
        raise NotHyperbolic(f"2(2 a_z a_w - 1) = {tr:.15g}")
    lam = _lambda_from_trace(tr)
    tan_z = (1.0 / lam - lam) / (4.0 * a_w * tau)
    tan_w = (1.0 / lam - lam) / (4.0 * a_z * tau)
    theta_z, theta_w = math.atan(tan_z), math.atan(tan_w)
    lambda_z = -math.cos(theta_z) / math.cos(theta_w) * (lam + 1.0) / (2.0 * a_w)
    lambda_w = -math.cos(theta_w) / math.cos(theta_z) * (lam + 1.0) / (2.0 * a_z)

    # numerical route
    eig = np.linalg.eigvals(Mz)
    lam_num = float(max(abs(eig)))
    vs_z = _unit_eigvec(Mz, 1.0 / lam_num)
    vs_w = _unit_eigvec(Mw, 1.0 / lam_num)
    vu_z = _unit_eigvec(Mz, lam_num)
    vu_w = _unit_eigvec(Mw, lam_num)
    img = DFz @ vu_z
    lz_num = float(img @ vu_w)
    img = DFw @ vu_w
    lw_num = float(img @ vu_z)
    numeric = {
        "lam": lam_num,
        "theta_z": math.atan2(vs_z[1], vs_z[0]),
        "theta_w": math.atan2(vs_w[1], vs_w[0]),
        "lambda_z": lz_num,
        "lambda_w": lw_num,
        "det": float(np.linalg.det(Mz)),
        "trace": tr_num,
    }
    numeric["lam_rel_err"] = abs(lam_num - lam) / lam
    return PeriodTwoData(
        tau_star=tau,
        K_z=K_z,
        K_w=K_w,
        a_z=a_z,
        a_w=a_w,
        b=b,
        lam=lam,
        theta_z=theta_z,
        theta_w=theta_w,
        lambda_z=lambda_z,
        lambda_w=lambda_w,
        r_z=z.r,
        r_w=w.r,
        monodromy=Mz,
        numeric=numeric,
    )


# ---------------------------------------------------------------------------
# Coordinates of family orbits relative to the period-two orbit
# ---------------------------------------------------------------------------


def _wrap(x: float, P: float) -> float:
    return (x + 0.5 * P) % P - 0.5 * P


def family_coordinates(table: TableSpec, orbit: OrbitResult, data: PeriodTwoData):
    """Offsets ``(s_j, phi_j)`` of the arc-1 hits and ``(t_j, psi_j)`` of the arc-2 hit right after each.

    The orbit must be a family orbit ``(i 12...12)``; ``j`` counts the
    alternating run from its first arc-1 collision.
    """
    P = table.perimeter
    letters = orbit.letters
    start = letters.index(1)
    S, T = [], []
    k = start
    q = orbit.period
    while k + 1 < q and letters[k] == 1 and letters[k + 1] == 2:
        z1, z2 = orbit.points[k], orbit.points[k + 1]
        S.append((_wrap(z1.r - data.r_z, P), z1.phi))
        T.append((_wrap(z2.r - data.r_w, P), z2.phi))
        k += 2
    return np.array(S), np.array(T)


@dataclass
class HomoclinicFit:
    C_s: float
    C_phi: float
    C_t: float
    C_psi: float
    C_neg_s: float
    C_neg_t: float
    decay_exponent: float
    Theta_z: float
    Theta_w: float
    fit_residuals: dict
    window: tuple
    family: int
    N: int


def _two_term_fit(k: np.ndarray, y: np.ndarray, lam: float):
    """Least squares for ``y_k = C lam^-k + E lam^-2k`` in relative weighting."""
    A = np.column_stack([np.ones_like(k, dtype=float), lam ** (-k.astype(float))])
    rhs = y * lam ** k.astype(float)
    coef, *_ = np.linalg.lstsq(A, rhs, rcond=None)
    res = rhs - A @ coef
    return float(coef[0]), float(np.max(np.abs(res))) if len(res) else 0.0


def _usable_window(vals: np.ndarray, floor: float, limit: int) -> int:
    n = 0
    while n < min(len(vals), limit) and abs(vals[n]) > floor:
        n += 1
    return n


def fit_homoclinic_constants(
    table: TableSpec,
    family: int = 2,
    n: int | None = None,
    n_shadow: int | None = None,
    floor: float = 1e-11,
) -> HomoclinicFit:
    """Leading constants of the homoclinic orbit approximated by a long family orbit.

    ``n`` selects the proxy orbit ``(family 12...12)`` with ``2n + 1``
    alternating pairs; by default it is chosen so that the tail reaches
    ``floor`` well before the middle.  ``Theta_z`` comes from comparing the
    shorter orbit ``n_shadow`` against the proxy near its middle, and
    ``Theta_w`` is the analogous coefficient measured on arc 2.
    """
    data = analyze_period_two(table)
    lam = data.lam
    k_floor = int(math.ceil(math.log(1.0 / floor) / math.log(lam)))
    if n is None:
        n = k_floor + 4
    N = 2 * n + 1
    orbit = rotation_orbit(table, N, family, expert=(family == 1))
    S, T = family_coordinates(table, orbit, data)
    half = (len(S) + 1) // 2 - 1
    m = min(_usable_window(S[:, 0], floor, half), _usable_window(T[:, 0], floor, half))
    if m < 4:
        raise InsufficientDecayWindow(f"only {m} decaying collisions above {floor:g} (lambda={lam:.4g}, n={n})")
    k0 = 2 if m >= 6 else 0
    k = np.arange(k0, m)
    C_s, r_s = _two_term_fit(k, S[k0:m, 0], lam)
    C_phi, r_phi = _two_term_fit(k, S[k0:m, 1], lam)
    C_t, r_t = _two_term_fit(k, T[k0:m, 0], lam)
    C_psi, r_psi = _two_term_fit(k, T[k0:m, 1], lam)
    slope = np.polyfit(k, np.log(np.abs(S[k0:m, 0])), 1)[0]

    # backward tail: arc-1 hits counted from the end, paired with the arc-2 hit before them
    Sb = S[::-1]
    Tb = T[:-1][::-1]
    mb = min(m, len(Tb))
    kb = np.arange(k0, mb)
    C_ns, _ = _two_term_fit(kb, Sb[k0:mb, 0], lam)
    C_nt, _ = _two_term_fit(kb, Tb[k0:mb, 0], lam)

    if n_shadow is None:
        n_shadow = max(3, min(n - 3, k_floor // 2 + 1))
    short = rotation_orbit(table, 2 * n_shadow + 1, family, expert=(family == 1))
    Ss, Ts = family_coordinates(table, short, data)
    kk = n_shadow
    Theta_z = (Ss[kk, 0] - S[kk, 0]) * lam ** (2 * n_shadow - kk) / C_s
    Theta_w = (Ts[kk - 1, 0] - T[kk - 1, 0]) * lam ** (2 * n_shadow - kk + 1) / C_t
    return HomoclinicFit(
        C_s=C_s,
        C_phi=C_phi,
        C_t=C_t,
        C_psi=C_psi,
        C_neg_s=C_ns,
        C_neg_t=C_nt,
        decay_exponent=-float(slope),
        Theta_z=float(Theta_z),
        Theta_w=float(Theta_w),
        fit_residuals={"s": r_s, "phi": r_phi, "t": r_t, "psi": r_psi},
        window=(k0, m - 1),
        family=family,
        N=N,
    )


# ---------------------------------------------------------------------------
# Length defects
# ---------------------------------------------------------------------------


@dataclass
class DefectSeries:
    defects: list  # (k, 2 tau* - l_k)
    partial_sum: float
    ratio: float
    tail: float
    window: tuple


def length_defect_series(table: TableSpec, n_max: int | None = None, family: int = 2, floor: float = 1e-14) -> DefectSeries:
    """Defects ``2 tau* - l_k`` of consecutive chord pairs along a long family orbit.

    ``l_k`` pairs the chord from the k-th arc-1 hit to the following arc-2
    hit with the chord back to the next arc-1 hit.  Only the approach half
    of the orbit is used and the first pair (next to the excursion) is left
    out of the ratio fit.
    """
    data = analyze_period_two(table)
    tau = data.tau_star
    lam = data.lam
    if n_max is None:
        n_max = int(math.ceil(math.log(1e13) / (2 * math.log(lam)))) + 4
    N = 2 * n_max + 1
    orbit = rotation_orbit(table, N, family, expert=(family == 1))
    letters = orbit.letters
    first = letters.index(1)
    ch = orbit.chord_lengths
    out = []
    for j in range(n_max):
        a = first + 2 * j
        d = -math.fsum([ch[a] - tau, ch[a + 1] - tau])
        out.append((j + 1, d))
    vals = np.array([d for _, d in out])
    usable = [i for i in range(1, len(vals)) if abs(vals[i]) > floor]
    usable = [i for i in usable if i == usable[0] or i - 1 in usable]
    if len(usable) < 4:
        raise InsufficientDecayWindow(f"only {len(usable)} defects above {floor:g}")
    kk = np.array(usable, dtype=float)
    slope = np.polyfit(kk, np.log(np.abs(vals[usable])), 1)[0]
    ratio = float(math.exp(slope))
    last = vals[usable[-1]]
    tail = float(last * ratio / (1.0 - ratio))
    return DefectSeries(out, math.fsum(vals), ratio, tail, (usable[0] + 1, usable[-1] + 1))


# ---------------------------------------------------------------------------
# Geometric-limit fits
# ---------------------------------------------------------------------------


@dataclass
class GeometricFit:
    index: list
    values: list
    limit: float
    ratio: float
    coefficient: float
    accelerated: list
    residual_bound: float
    window_shift_change: float
    stable: bool
    used: list


def _amplitude_index(v, limit, noise, margin: float = 1e6) -> int:
    """Last point whose distance to the limit exceeds the noise by ``margin`` (else the first point)."""
    ok = [j for j in range(len(v)) if abs(v[j] - limit) > margin * noise[j]]
    return ok[-1] if ok else 0


def _aitken(x0, x1, x2):
    d1, d2 = x1 - x0, x2 - x1
    den = d2 - d1
    if den == 0.0:
        return x2
    return x2 - d2 * d2 / den


def fit_geometric_limit(index, values, noise=None) -> GeometricFit:
    """Limit, ratio and amplitude of ``v_j = limit + c rho^index_j`` for equally spaced indices.

    Successive differences carry the rate (no limit is needed for it); the
    limit is the Aitken extrapolation of the last triple above the noise.
    ``noise`` is the absolute uncertainty of each value.
    """
    idx = np.asarray(index, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(v) < 3:
        raise FitUnstable("need at least three values")
    step = np.diff(idx)
    if not np.allclose(step, step[0]):
        raise FitUnstable("indices must be equally spaced")
    h = float(step[0])
    if noise is None:
        noise = np.full(len(v), 4 * EPS * max(1.0, float(np.max(np.abs(v)))))
    noise = np.broadcast_to(np.asarray(noise, dtype=float), v.shape)
    dv = np.diff(v)
    sig = np.hypot(noise[1:], noise[:-1])
    good = np.abs(dv) > 3 * sig
    if good.sum() < 2:
        raise FitUnstable("fewer than two differences rise above the noise")
    # weighted log-linear fit of |dv|
    used = np.nonzero(good)[0]
    x = idx[used]
    y = np.log(np.abs(dv[used]))
    wts = 1.0 / (1e-6 + (sig[used] / np.abs(dv[used])) ** 2)
    slope, icpt = np.polyfit(x, y, 1, w=np.sqrt(wts))
    rho = float(math.exp(slope))
    if not (0.0 < rho < 1.0):
        raise FitUnstable(f"fitted ratio {rho:.6g} is not a contraction")
    acc = []
    for j in range(len(v) - 2):
        if good[j] and good[j + 1]:
            acc.append(_aitken(v[j], v[j + 1], v[j + 2]))
        else:
            acc.append(math.nan)
    valid = [j for j, a in enumerate(acc) if math.isfinite(a)]
    last_good = int(used[-1]) + 1
    if valid:
        limit = acc[valid[-1]]
        tailv = v[valid[-1] + 2]
    else:
        limit = v[last_good] + dv[last_good - 1] * rho**h / (1 - rho**h)
        tailv = v[last_good]
    # the values beyond the noise floor are already at the limit within noise
    resid = abs(limit - tailv) + float(noise[-1])
    change = abs(acc[valid[-1]] - acc[valid[-2]]) if len(valid) >= 2 else math.nan
    if not math.isfinite(limit):
        raise FitUnstable("acceleration diverged")
    stable = bool(len(valid) >= 2 and change <= max(resid, abs(v[valid[-2] + 2] - acc[valid[-2]])))
    base = _amplitude_index(v, limit, noise)
    c = float((v[base] - limit) / rho ** idx[base])
    return GeometricFit(
        index=list(idx),
        values=list(v),
        limit=float(limit),
        ratio=rho,
        coefficient=c,
        accelerated=acc,
        residual_bound=float(resid),
        window_shift_change=float(change),
        stable=stable,
        used=[int(u) for u in used],
    )


def family_residuals(table: TableSpec, n_values, family: int = 2, tau_star: float | None = None):
    """``(n, q, L - q tau*)`` for the family orbits with ``2n + 1`` alternating pairs (period ``4n + 3``)."""
    if tau_star is None:
        tau_star = analyze_period_two(table).tau_star
    out = []
    for n in n_values:
        N = 2 * n + 1
        orb = rotation_orbit(table, N, family, expert=(family == 1))
        out.append((n, orb.period, orb.excess(tau_star)))
    return out


def _noise(q: int, tau: float) -> float:
    return 8.0 * EPS * tau * math.sqrt(q)


# ---------------------------------------------------------------------------
# Spectral invariants
# ---------------------------------------------------------------------------


@dataclass
class ClassEstimate:
    parity: int
    qs: list
    d: list
    fit: GeometricFit
    B: float
    rate_per_n: float
    C: float
    D: float
    argmax: list


@dataclass
class SpectralEstimates:
    tau_star: float
    lam: float
    B: float
    rate: float
    rate_per_q: float
    rate_ratio_log: float
    C: dict
    D: dict
    L_infinity: float
    classes: dict
    diagnostics: dict
    tau_from_spectrum: float = math.nan

    @property
    def lam_measured(self) -> float:
        return self.rate ** -0.5


def _class_of(q: int) -> int:
    return ((q - 1) // 2) % 2


def extract_spectral_invariants(table: TableSpec, q_list, entries: dict | None = None, family: int = 2) -> SpectralEstimates:
    """Limit, rates and amplitudes of ``d_q = ML(q) - q tau*`` on the two parity classes of q.

    The class of an odd ``q`` is ``(q - 1)/2 mod 2``; within a class ``q``
    steps by 4.  A class that is present needs at least three members.
    ``entries`` may carry precomputed ``marked_length_max`` results keyed by q.
    """
    qs = sorted(set(int(q) for q in q_list))
    if any(q < 3 or q % 2 == 0 for q in qs):
        raise InvalidCode("q values must be odd and at least 3")
    groups: dict[int, list[int]] = {}
    for q in qs:
        groups.setdefault(_class_of(q), []).append(q)
    for cls, members in groups.items():
        if len(members) < 3:
            raise ParityMismatch(f"parity class {cls} has only {len(members)} member(s): {members}")
        if any(b - a != 4 for a, b in zip(members, members[1:])):
            raise ParityMismatch(f"parity class {cls} is not an arithmetic run with step 4: {members}")
    data = analyze_period_two(table)
    tau = data.tau_star
    entries = dict(entries or {})
    d, argmax = {}, {}
    for q in qs:
        e = entries.get(q) or marked_length_max(table, q)
        entries[q] = e
        best = e.orbits[e.argmax_codes[0]]
        d[q] = best.excess(tau)
        argmax[q] = list(e.argmax_codes)

    classes = {}
    for cls, members in sorted(groups.items()):
        vals = [d[q] for q in members]
        fit = fit_geometric_limit(members, vals, noise=[_noise(q, tau) for q in members])
        rate_n = fit.ratio**4
        classes[cls] = ClassEstimate(cls, members, vals, fit, -fit.limit, rate_n, math.nan, math.nan, [argmax[q] for q in members])

    # per-q rate from all consecutive odd q
    all_q = qs
    if len(all_q) >= 3 and all(b - a == 2 for a, b in zip(all_q, all_q[1:])):
        comb = fit_geometric_limit(all_q, [d[q] for q in all_q], noise=[_noise(q, tau) for q in all_q])
        rate_q = comb.ratio
    else:
        rate_q = float(np.exp(np.mean([math.log(c.fit.ratio) for c in classes.values()])))
    rate_n = float(np.exp(np.mean([math.log(c.rate_per_n) for c in classes.values()])))
    lam_half = 1.0 / rate_q
    lam_meas = rate_n**-0.5
    C, D = {}, {}
    for cls, ce in classes.items():
        j = _amplitude_index(ce.d, -ce.B, [_noise(q, tau) for q in ce.qs])
        q = ce.qs[j]
        ce.C = lam_half**q * abs(ce.d[j] + ce.B)
        n_idx = (q - 3) // 4
        ce.D = lam_meas ** (2 * n_idx) * (-ce.B - ce.d[j])
        C[cls], D[cls] = ce.C, ce.D
    B = float(np.mean([c.B for c in classes.values()]))

    # direct sum along a long family orbit
    n_long = int(math.ceil(math.log(1e14) / (2 * math.log(data.lam)))) + 2
    orb = rotation_orbit(table, 2 * n_long + 1, family, expert=(family == 1))
    L_inf = orb.excess(tau)
    # half the growth of ML between the two largest consecutive odd q
    ml = {q: d[q] + q * tau for q in qs}
    top = [q for q in qs if q - 2 in ml]
    tau_spec = (ml[top[-1]] - ml[top[-1] - 2]) / 2 if top else math.nan
    return SpectralEstimates(
        tau_from_spectrum=tau_spec,
        tau_star=tau,
        lam=data.lam,
        B=B,
        rate=rate_n,
        rate_per_q=rate_q,
        rate_ratio_log=math.log(rate_n) / math.log(rate_q),
        C=C,
        D=D,
        L_infinity=L_inf,
        classes=classes,
        diagnostics={"d": d, "argmax": argmax, "long_orbit_period": orb.period, "entries": entries},
    )


def write_spectral_report(path, est: SpectralEstimates, recovered=None) -> None:
    """CSV with one row per q, plus ``<name>_summary.csv`` with the fitted invariants."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q [count]", "class [index]", "ML_max [length]", "d_q [length]", "accelerated_limit [length]", "local_rate [1]"])
        for cls, ce in sorted(est.classes.items()):
            for j, q in enumerate(ce.qs):
                ml = ce.d[j] + q * est.tau_star
                acc = ce.fit.accelerated[j] if j < len(ce.fit.accelerated) else math.nan
                rate = (ce.d[j + 1] - ce.d[j]) / (ce.d[j] - ce.d[j - 1]) if 0 < j < len(ce.qs) - 1 else math.nan
                w.writerow([q, cls, f"{ml:.17g}", f"{ce.d[j]:.17g}", f"{acc:.17g}", f"{rate:.17g}"])
    with open(summary_path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["quantity [name]", "value [see unit]", "unit [name]"])
        for k, v, unit in spectral_summary_rows(est, recovered):
            w.writerow([k, f"{v:.17g}", unit])


def summary_path(path) -> str:
    root, ext = os.path.splitext(str(path))
    return f"{root}_summary{ext or '.csv'}"


def spectral_summary_rows(est: SpectralEstimates, recovered=None) -> list:
    rows = [
        ("tau_star", est.tau_star, "length"),
        ("lambda_analytic", est.lam, "1"),
        ("lambda_measured", est.lam_measured, "1"),
        ("B", est.B, "length"),
        ("rate_per_n", est.rate, "1"),
        ("rate_per_q", est.rate_per_q, "1"),
        ("L_infinity", est.L_infinity, "length"),
    ]
    rows += [(f"C_class{c}", v, "length") for c, v in sorted(est.C.items())]
    rows += [(f"D_class{c}", v, "length") for c, v in sorted(est.D.items())]
    if recovered is not None:
        rows += [("K1", recovered.K1, "1/length"), ("K2", recovered.K2, "1/length")]
    return rows


# ---------------------------------------------------------------------------
# Curvature recovery
# ---------------------------------------------------------------------------


@dataclass
class CurvatureRecovery:
    K1: float
    K2: float
    roots: list
    ambiguous: bool
    residual: float


def _relations(K, lam, tau, lhs2):
    K1, K2 = K
    r1 = 4.0 * (tau * K1 - 1.0) * (tau * K2 - 1.0) - 2.0 - (lam + 1.0 / lam)
    u1, u2 = 1.0 - 1.0 / (tau * K1), 1.0 - 1.0 / (tau * K2)
    den = (1.0 - 1.0 / (tau * K1) - 1.0 / (tau * K2)) ** 2 + 3.0
    if abs(den) < 1e-14:
        raise ValidationError("relation denominator vanishes")
    r2 = (u1 * u1 - u2 * u2) / den - lhs2
    return np.array([r1, r2])


def relation_two_lhs(C1: float, C2: float, lam: float) -> float:
    return (C1 - C2) * (lam + 1.0) ** 2 / ((C1 + C2) * (lam - 1.0) ** 2)


def recover_curvatures(
    tau_star: float,
    lam: float,
    C1: float,
    C2: float,
    strict: bool = False,
    starts: int = 12,
    tol: float = 1e-12,
) -> CurvatureRecovery:
    """Arc curvatures of a circular squash from its diameter, multiplier and class amplitudes.

    Solves the two curvature relations by damped Newton from a grid of
    starts.  Distinct roots are all returned; with ``strict`` an ambiguous
    answer raises ``BranchAmbiguity``.
    """
    if not lam > 1.0:
        raise NoRealRoot("multiplier must exceed 1")
    if C1 + C2 == 0:
        raise NoRealRoot("class amplitudes sum to zero")
    lhs2 = relation_two_lhs(C1, C2, lam)
    lo, hi = 1.0 / tau_star * (1 + 1e-6), 40.0 / tau_star
    grid = np.geomspace(lo * 1.05, hi, starts)
    roots: list[tuple[float, float]] = []
    for a in grid:
        for b in grid:
            K = np.array([a, b])
            try:
                F = _relations(K, lam, tau_star, lhs2)
            except ValidationError:
                continue
            for _ in range(100):
                J = np.empty((2, 2))
                for j in range(2):
                    h = 1e-7 * K[j]
                    Kp, Km = K.copy(), K.copy()
                    Kp[j] += h
                    Km[j] -= h
                    J[:, j] = (_relations(Kp, lam, tau_star, lhs2) - _relations(Km, lam, tau_star, lhs2)) / (2 * h)
                try:
                    step = np.linalg.solve(J, -F)
                except np.linalg.LinAlgError:
                    break
                t = 1.0
                while t > 1e-8:
                    Kn = K + t * step
                    if np.all(Kn > lo):
                        Fn = _relations(Kn, lam, tau_star, lhs2)
                        if np.linalg.norm(Fn) < np.linalg.norm(F):
                            break
                    t *= 0.5
                else:
                    break
                K, F = Kn, Fn
                if np.linalg.norm(F) < tol:
                    break
            if np.linalg.norm(F) < 1e-10 and np.all(K > lo):
                if not any(abs(K[0] - r[0]) < 1e-7 and abs(K[1] - r[1]) < 1e-7 for r in roots):
                    roots.append((float(K[0]), float(K[1])))
    if not roots:
        raise NoRealRoot("no admissible curvature pair satisfies both relations")
    roots.sort()
    # defocusing requires tau* K > 2 on both arcs
    admissible = [r for r in roots if tau_star * r[0] > 2 and tau_star * r[1] > 2] or roots
    ambiguous = len(admissible) > 1
    if ambiguous and strict:
        raise BranchAmbiguity(f"{len(admissible)} curvature pairs satisfy the relations", admissible)
    K1, K2 = admissible[0]
    res = float(np.linalg.norm(_relations(np.array([K1, K2]), lam, tau_star, lhs2)))
    return CurvatureRecovery(K1, K2, admissible, ambiguous, res)


def recover_from_estimates(est: SpectralEstimates, strict: bool = False) -> CurvatureRecovery:
    """Curvature recovery from measured invariants, using the per-n rate for the multiplier."""
    if set(est.C) != {0, 1}:
        raise ParityMismatch("curvature recovery needs amplitudes from both parity classes")
    return recover_curvatures(est.tau_star, est.lam_measured, est.C[1], est.C[0], strict=strict)
