"""Command line runner: one subcommand per experiment, CSV outputs and a text summary.

Examples
--------
  stadium-spectrum check --table std-stadium:R=1,L=2
  stadium-spectrum invariants --table weak-stadium --q 3,7,11,15,19,23 --output out/
  stadium-spectrum deform --config deform.toml

A config file (TOML) holds the same information as the flags and wins over
them.  Exit codes: 0 success, 1 validation error, 2 solver failure, 3 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import geometry, invariants, orbits, rigidity
from .dynamics import PhasePoint, trajectory
from .errors import EXIT_CODES, BilliardError, ConfigError

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python < 3.11
    import tomli as tomllib

EXPERIMENTS = ("check", "map", "orbit", "spectrum", "invariants", "recover", "deform", "unfold", "cancel")

PARAMS = {
    "check": {"grid": 256, "doubly": False},
    "map": {"r": None, "phi": None, "steps": 20},
    "orbit": {"codes": ["12"]},
    "spectrum": {"q": [3, 5, 7, 9, 11]},
    "invariants": {"q": [3, 7, 11, 15, 19, 23], "recover": False},
    "recover": {"q": [], "tau_star": None, "lam": None, "C1": None, "C2": None, "strict": False},
    "deform": {"codes": ["12", "2 12"], "mu": 0.0, "arc1": None, "arc2": None, "rivals": []},
    "unfold": {"n_min": 20, "n_max": 200, "n_step": 10, "rho": 2.0},
    "cancel": {"m": 3, "ells": [1, 2, 3, 4], "arc1": None, "arc2": None},
}

# floors keep user overrides above what double precision can deliver
TOLERANCE_FLOORS = {"tie_tol": 1e-13, "fd_step": 1e-8}
TOLERANCE_DEFAULTS = {"tie_tol": 1e-9, "fd_step": 1e-5}

TOP_KEYS = {"experiment", "output", "seed", "table", "params", "tolerances"}

LAMBDA_FIT_LIMIT = 1e3


@dataclass
class ExperimentConfig:
    experiment: str
    table: dict
    params: dict = field(default_factory=dict)
    output: str = "stadium_out"
    seed: int = 0
    tolerances: dict = field(default_factory=dict)


@dataclass
class Output:
    """Everything an experiment produces; written only after it finishes."""

    tables: list = field(default_factory=list)  # (filename, header, rows)
    summary: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

TABLE_KINDS = {
    "std-stadium": ({"R": 1.0, "L": 2.0}, lambda p: geometry.std_stadium(p["R"], p["L"])),
    "weak-stadium": ({}, lambda p: geometry.weak_stadium()),
    "squash": ({"R1": 1.0, "R2": 0.8, "d": 1.0}, lambda p: geometry.squash_stadium(p["R1"], p["R2"], p["d"])),
    "squash-curvatures": (
        {"tau_star": 3.0, "K1": 1.0, "K2": 0.8},
        lambda p: geometry.squash_from_curvatures(p["tau_star"], p["K1"], p["K2"]),
    ),
    "graph-squash": (
        {"coefficients": [0.0, 0.0, 0.5], "half_width": 0.8, "R2": 1.0},
        lambda p: geometry.graph_squash(p["coefficients"], p["half_width"], p["R2"]),
    ),
    "arcs": ({"arc1": None, "arc2": None}, None),
}


def _circular(d) -> geometry.CircularArc:
    if not isinstance(d, dict) or set(d) != {"center", "radius", "start", "end"}:
        raise ConfigError("arcs need center, radius, start and end (angles in radians)")
    return geometry.CircularArc(d["center"], d["radius"], d["start"], d["end"])


def build_table(spec: dict) -> geometry.TableSpec:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in TABLE_KINDS:
        raise ConfigError(f"unknown table {name!r}; choose from {', '.join(TABLE_KINDS)}")
    defaults, builder = TABLE_KINDS[name]
    unknown = set(spec) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown table keys for {name}: {sorted(unknown)}")
    p = {**defaults, **spec}
    if name == "arcs":
        return geometry.TableSpec(_circular(p["arc1"]), _circular(p["arc2"]), name="arcs")
    return builder(p)


def parse_table_flag(text: str) -> dict:
    """``name`` or ``name:key=value,key=value``."""
    name, _, rest = text.partition(":")
    spec = {"name": name.strip()}
    if rest:
        for item in rest.split(","):
            k, sep, v = item.partition("=")
            if not sep:
                raise ConfigError(f"bad table parameter {item!r}")
            spec[k.strip()] = float(v)
    return spec


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------


def _check_params(experiment: str, params: dict) -> dict:
    allowed = PARAMS[experiment]
    unknown = set(params) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown parameters for {experiment}: {sorted(unknown)}")
    return {**allowed, **params}


def _check_tolerances(tol: dict) -> dict:
    unknown = set(tol) - set(TOLERANCE_FLOORS)
    if unknown:
        raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
    out = dict(TOLERANCE_DEFAULTS)
    for k, v in tol.items():
        if not isinstance(v, (int, float)) or not v >= TOLERANCE_FLOORS[k]:
            raise ConfigError(f"tolerance {k} must be a number >= {TOLERANCE_FLOORS[k]:g}")
        out[k] = float(v)
    return out


def load_config(path: str) -> dict:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def make_config(experiment: str, flags: dict, file_data: dict | None = None) -> ExperimentConfig:
    data = file_data or {}
    exp = data.get("experiment", experiment)
    if exp not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {exp!r}")
    if exp != experiment:
        raise ConfigError(f"config file is for {exp!r}, command was {experiment!r}")
    table = data.get("table") or flags.get("table")
    if not table:
        raise ConfigError("no table given (use --table or a [table] section)")
    params = {**flags.get("params", {}), **data.get("params", {})}
    seed = data.get("seed", flags.get("seed", 0))
    if not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return ExperimentConfig(
        experiment=exp,
        table=dict(table),
        params=_check_params(exp, params),
        output=str(data.get("output", flags.get("output") or "stadium_out")),
        seed=seed,
        tolerances=_check_tolerances(data.get("tolerances", {})),
    )


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _orbit_rows(res: orbits.OrbitResult):
    rows = []
    for k, (z, letter, tau) in enumerate(zip(res.points, res.letters, res.chord_lengths)):
        rows.append([str(res.code), k, letter, z.r, z.phi, tau])
    return rows


ORBIT_HEADER = ["code [word]", "k [index]", "component [letter]", "r [length]", "phi [rad]", "chord [length]"]


def run_check(table, p, tol, seed, out: Output):
    rep = geometry.check_defocusing(table, grid=int(p["grid"]), doubly=bool(p["doubly"]))
    out.tables.append(("check.csv", ["quantity [name]", "value [see unit]", "unit [name]"], [
        ["holds", int(rep.holds), "bool"],
        ["worst_margin", rep.worst_margin, "length"],
        ["pairs", rep.pairs, "count"],
        ["perimeter", table.perimeter, "length"],
    ]))
    out.summary += [f"defocusing holds: {rep.holds}", f"worst margin: {rep.worst_margin:.17g} ({rep.witness[0]})"]


def run_map(table, p, tol, seed, out: Output):
    rng = np.random.default_rng(seed)
    r = p["r"] if p["r"] is not None else float(rng.uniform(0, table.perimeter))
    phi = p["phi"] if p["phi"] is not None else float(rng.uniform(-1.2, 1.2))
    steps = trajectory(table, PhasePoint(float(r) % table.perimeter, float(phi)), int(p["steps"]))
    rows = [[0, r, phi, math.nan, geometry.boundary_at(table, r).component]]
    rows += [[k + 1, st.z1.r, st.z1.phi, st.tau, st.component] for k, st in enumerate(steps)]
    out.tables.append(("trajectory.csv", ["step [index]", "r [length]", "phi [rad]", "tau [length]", "component [letter]"], rows))
    out.summary.append(f"{len(steps)} collisions from r={r:.17g}, phi={phi:.17g}")


def run_orbit(table, p, tol, seed, out: Output):
    rows, summary = [], []
    for c in p["codes"]:
        code = orbits.code_of(c)
        res = orbits._solve_with_fallback(table, code, [None] + list(orbits._family_seeds(table, code)))
        rows += _orbit_rows(res)
        summary.append([str(code), res.period, res.total_length, res.grad_norm, int(res.hessian_definite), res.replay_error(table)])
        out.summary.append(f"{code}: length {res.total_length:.17g}, |grad| {res.grad_norm:.3e}")
    out.tables.append(("orbits.csv", ORBIT_HEADER, rows))
    out.tables.append(("orbit_lengths.csv", ["code [word]", "period [count]", "length [length]", "grad_norm [1]", "concave [bool]", "replay_error [1]"], summary))


def run_spectrum(table, p, tol, seed, out: Output):
    rows = []
    for q in p["q"]:
        e = orbits.marked_length_max(table, int(q), tie_tol=tol["tie_tol"])
        rows.append([q, str(e.rotation), e.max_length, " ".join(str(c) for c in e.argmax_codes), e.candidates_examined, int(e.partial)])
        out.summary.append(f"q={q}: ML={e.max_length:.17g} argmax {', '.join(str(c) for c in e.argmax_codes)}")
    out.tables.append(("spectrum.csv", ["q [count]", "rotation [1]", "ML_max [length]", "argmax [word]", "candidates [count]", "partial [bool]"], rows))


def _lambda_warning(lam: float, out: Output):
    if lam > LAMBDA_FIT_LIMIT:
        out.warnings.append(f"lambda = {lam:.4g} is large; geometric fits reach rounding noise within a few terms")


def run_invariants(table, p, tol, seed, out: Output):
    data = invariants.analyze_period_two(table)
    _lambda_warning(data.lam, out)
    est = invariants.extract_spectral_invariants(table, [int(q) for q in p["q"]])
    rec = invariants.recover_from_estimates(est) if p["recover"] else None
    rows = []
    for cls, ce in sorted(est.classes.items()):
        for j, q in enumerate(ce.qs):
            rows.append([q, cls, ce.d[j] + q * est.tau_star, ce.d[j]])
    out.tables.append(("spectral_rows.csv", ["q [count]", "class [index]", "ML_max [length]", "d_q [length]"], rows))
    srows = [[k, v, u] for k, v, u in invariants.spectral_summary_rows(est, rec)]
    srows += [["theta_z", data.theta_z, "rad"], ["a_z", data.a_z, "1"], ["a_w", data.a_w, "1"]]
    out.tables.append(("spectral_report.csv", ["quantity [name]", "value [see unit]", "unit [name]"], srows))
    out.summary += [f"{k} = {v:.17g} [{u}]" for k, v, u in srows]


def run_recover(table, p, tol, seed, out: Output):
    if p["q"]:
        est = invariants.extract_spectral_invariants(table, [int(q) for q in p["q"]])
        rec = invariants.recover_from_estimates(est, strict=bool(p["strict"]))
        tau = est.tau_star
    else:
        missing = [k for k in ("tau_star", "lam", "C1", "C2") if p[k] is None]
        if missing:
            raise ConfigError(f"recover needs q or all of tau_star, lam, C1, C2 (missing {missing})")
        tau = float(p["tau_star"])
        rec = invariants.recover_curvatures(tau, float(p["lam"]), float(p["C1"]), float(p["C2"]), strict=bool(p["strict"]))
    rows = [[k1, k2, int(len(rec.roots) > 1)] for k1, k2 in rec.roots]
    out.tables.append(("recovered.csv", ["K1 [1/length]", "K2 [1/length]", "ambiguous [bool]"], rows))
    out.summary += [f"tau_star = {tau:.17g}", f"K1 = {rec.K1:.17g}", f"K2 = {rec.K2:.17g}", f"residual = {rec.residual:.3e}"]
    if rec.ambiguous:
        out.warnings.append(f"{len(rec.roots)} curvature pairs fit; the first is reported")


def _family(table, p) -> rigidity.DeformationFamily:
    return rigidity.DeformationFamily(table, {1: rigidity.profile_from_dict(p["arc1"]), 2: rigidity.profile_from_dict(p["arc2"])})


def run_deform(table, p, tol, seed, out: Output):
    fam = _family(table, p)
    rows = []
    for c in p["codes"]:
        r = rigidity.isospectral_derivative_check(fam, c, mu=float(p["mu"]), h=tol["fd_step"], rivals=p["rivals"] or None)
        rows.append([r.code, r.lhs, r.rhs, r.rel_err])
        out.summary.append(f"{r.code}: lhs {r.lhs:.17g} rhs {r.rhs:.17g} rel_err {r.rel_err:.3e}")
    out.tables.append(("deform.csv", ["code [word]", "lhs [length]", "rhs [length]", "rel_err [1]"], rows))


def run_unfold(table, p, tol, seed, out: Output):
    ns = list(range(int(p["n_min"]), int(p["n_max"]) + 1, int(p["n_step"])))
    rho = float(p["rho"])
    two = [rigidity.unfolded_period_two(table, n) for n in ns]
    four = [rigidity.unfolded_period_four(table, n, rho) for n in ns]
    rows = [[n, a.s_bar, a.t_bar, b.s_bar, b.t1_bar, b.t2_bar, b.phi_bar] for n, a, b in zip(ns, two, four)]
    out.tables.append(("unfold.csv", [
        "n [count]", "s_bar [length]", "t_bar [length]", "s4_bar [length]", "t1_bar [length]", "t2_bar [length]", "phi_bar [rad]",
    ], rows))
    Q = rigidity.channel_quotient(table)
    fits = [
        ("n*s_bar", rigidity.weighted_intercept(ns, [a.s_bar for a in two])[0], Q / two[-1].foot_A.curvature_at_gluing),
        ("n*t_bar", rigidity.weighted_intercept(ns, [a.t_bar for a in two])[0], Q / two[-1].foot_B.curvature_at_gluing),
        ("n*phi_bar", rigidity.weighted_intercept(ns, [b.phi_bar for b in four])[0], Q * (1 - 1 / rho) / 2),
    ]
    out.tables.append(("unfold_fits.csv", ["quantity [name]", "intercept [length]", "predicted [length]"], [list(f) for f in fits]))
    out.summary.append(f"Q = {Q:.17g}")
    out.summary += [f"{k}: intercept {a:.17g}, predicted {b:.17g}" for k, a, b in fits]


def run_cancel(table, p, tol, seed, out: Output):
    profiles = {1: rigidity.profile_from_dict(p["arc1"]), 2: rigidity.profile_from_dict(p["arc2"])}
    m = int(p["m"])
    exponent, lam, res = rigidity.cancellation_decay(table, profiles, [int(e) for e in p["ells"]], m)
    rows = [[r.ell, r.combo, r.combo_complement, r.predicted_bound, rigidity.cancellation_noise(r)] for r in res]
    out.tables.append(("cancel.csv", ["ell [index]", "combo [length]", "combo_complement [length]", "lambda^-m*ell [1]", "noise [length]"], rows))
    out.summary += [f"lambda = {lam:.17g}", f"fitted exponent {exponent:.6g} vs m log lambda {m * math.log(lam):.6g}"]


RUNNERS = {
    "check": run_check,
    "map": run_map,
    "orbit": run_orbit,
    "spectrum": run_spectrum,
    "invariants": run_invariants,
    "recover": run_recover,
    "deform": run_deform,
    "unfold": run_unfold,
    "cancel": run_cancel,
}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_outputs(out: Output, directory: str, cfg: ExperimentConfig, status: str = "ok") -> list:
    os.makedirs(directory, exist_ok=True)
    written = []
    for name, header, rows in out.tables:
        path = os.path.join(directory, name)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
        written.append(path)
    path = os.path.join(directory, "summary.txt")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"experiment: {cfg.experiment}\ntable: {cfg.table}\nseed: {cfg.seed}\nstatus: {status}\n")
        for line in out.summary:
            fh.write(line + "\n")
        for line in out.warnings:
            fh.write("warning: " + line + "\n")
    written.append(path)
    return written


def run(cfg: ExperimentConfig) -> int:
    """Execute ``cfg``; returns the exit code."""
    out = Output()
    try:
        table = build_table(cfg.table)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            RUNNERS[cfg.experiment](table, cfg.params, cfg.tolerances, cfg.seed, out)
        out.warnings += [str(w.message) for w in caught]
    except BilliardError as exc:
        code = EXIT_CODES.get(exc.category, 2)
        print(f"error [{exc.category}] {type(exc).__name__}: {exc}", file=sys.stderr)
        if exc.category != "validation":
            out.summary.append(f"error [{exc.category}] {type(exc).__name__}: {exc}")
            write_outputs(out, cfg.output, cfg, status="partial")
        return code
    write_outputs(out, cfg.output, cfg)
    for line in out.summary:
        print(line)
    for line in out.warnings:
        print("warning:", line, file=sys.stderr)
    return 0


def _list(kind):
    def parse(text: str):
        items = [x.strip() for x in text.split("," if kind is not str else ";") if x.strip()]
        return [kind(x) for x in items]

    return parse


class _Parser(argparse.ArgumentParser):
    # usage errors are validation errors (exit 1), not solver failures (argparse uses 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error [validation] {message}", file=sys.stderr)
        sys.exit(EXIT_CODES["validation"])


def _table_flag(text: str) -> dict:
    try:
        return parse_table_flag(text)
    except (ConfigError, ValueError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="stadium-spectrum", description="Periodic orbits and length-spectrum invariants of stadium-like billiards.")
    sub = ap.add_subparsers(dest="experiment", required=True, parser_class=_Parser)

    def common(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--table", type=_table_flag, help="table name, optionally name:key=value,...")
        p.add_argument("--config", help="TOML config file (overrides flags)")
        p.add_argument("--output", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = common("check", "defocusing check")
    p.add_argument("--grid", type=int)
    p.add_argument("--doubly", action="store_true", default=None)
    p = common("map", "iterate the billiard map")
    p.add_argument("--r", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--steps", type=int)
    p = common("orbit", "solve periodic orbits by code")
    p.add_argument("--codes", type=_list(str), help="codes separated by ';'")
    p = common("spectrum", "marked length spectrum maxima")
    p.add_argument("--q", type=_list(int))
    p = common("invariants", "tau*, lambda, B, rates and amplitudes")
    p.add_argument("--q", type=_list(int))
    p.add_argument("--recover", action="store_true", default=None)
    p = common("recover", "curvatures from invariants")
    p.add_argument("--q", type=_list(int))
    for k in ("tau_star", "lam", "C1", "C2"):
        p.add_argument(f"--{k}", type=float)
    p.add_argument("--strict", action="store_true", default=None)
    p = common("deform", "length derivative along a deformation (profiles via --config)")
    p.add_argument("--codes", type=_list(str))
    p.add_argument("--mu", type=float)
    p = common("unfold", "channel orbits and their 1/n asymptotics")
    for k in ("n_min", "n_max", "n_step"):
        p.add_argument(f"--{k}", type=int)
    p.add_argument("--rho", type=float)
    p = common("cancel", "Lagrange cancellation of palindromic sums (profiles via --config)")
    p.add_argument("--m", type=int)
    p.add_argument("--ells", type=_list(int))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    ns = vars(args)
    exp = ns.pop("experiment")
    flags = {k: ns.pop(k) for k in ("table", "output", "seed")}
    config_path = ns.pop("config")
    flags["params"] = {k: v for k, v in ns.items() if v is not None}
    try:
        data = load_config(config_path) if config_path else None
        cfg = make_config(exp, flags, data)
    except (ConfigError, OSError) as exc:
        print(f"error [validation] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES["validation"]
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
