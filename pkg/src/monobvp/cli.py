"""Config-driven experiment runner.

Subcommands: ``solve``, ``converge``, ``bounds``, ``probe``, ``depend``, ``list``.
A JSON config (``--config``) is merged over the defaults below; ``--seed``,
``--out`` and ``--format`` override the matching config fields.

Exit codes: 0 success, 1 config or usage error, 2 solver non-convergence,
3 reference oracle failure.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from dataclasses import fields

from . import __version__
from .analysis import bound_report, fit_rate, grid_errors
from .dependence import (DEFAULT_M_LIST, NotAffineError, WeakFamily,
                         dependence_experiment)
from .mesh import Grid, norm_e
from .problems import (UnknownProblemError, builtin, builtin_rhs, nonlinearity_ids,
                       probe_operator_monotonicity, probe_p1, probe_p2, rhs_ids)
from .reference import (ManufacturedError, OracleError, discrete_reference,
                        exact_solution, fine_grid, linear_direct, manufactured,
                        shooting, _EXACT)
from .solver import LineSearchError, SolverOptions, solve
from .system import DiscreteProblem

SCHEMA_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED, EXIT_ORACLE = 0, 1, 2, 3

DEFAULT_CONFIG = {
    "problem": {"f_id": "linear", "g_params": {}, "manufactured": "sin", "h_id": None,
                "h_amplitude": 1.0},
    "sweep": {"n_list": [16, 32, 64, 128, 256, 512]},
    "solver": {f.name: f.default for f in fields(SolverOptions)},
    "reference": {"kind": "auto", "n_ref": 8192, "steps": 100_000},
    "dependence": {"amplitude": 1.0, "m_list": list(DEFAULT_M_LIST), "n_ref": 2048},
    "probe": {"trials": 10_000, "operator_trials": 1000, "n": 32, "r": 1.0},
    "output": {"format": "csv", "path": None},
    "seed": 0,
}

CONVERGE_COLUMNS = ["n", "e_x", "e_v", "norm_E", "sqrtn_normE", "Q_obs", "N_obs",
                    "ogr_ratio", "cert", "iters"]
BOUNDS_COLUMNS = ["n", "norm_E", "norm_0", "sup_h", "ogr_rhs", "ogr_ratio", "Q_obs",
                  "Q_bound", "N_obs", "N_bound", "sqrtn_normE", "sobolev_lhs",
                  "sobolev_rhs", "chain_ok"]
DEPEND_COLUMNS = ["m", "sup_gap", "e_norm_gap", "h_sup_gap"]
REFERENCE_KINDS = ("auto", "manufactured", "shooting", "fine-grid", "linear-direct")


class ConfigError(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


# -- config -------------------------------------------------------------------


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config field {path + key!r}")
        if isinstance(base[key], dict) and isinstance(value, dict) and key != "g_params":
            out[key] = _merge(base[key], value, path + key + ".")
        else:
            out[key] = value
    return out


def load_config(path=None, overrides=None) -> dict:
    user = {}
    if path:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
    problem = user.get("problem", {})
    if "h_id" in problem and "manufactured" not in problem:
        # an explicit forcing replaces the default manufactured case
        problem = dict(problem, manufactured=None)
        user = dict(user, problem=problem)
    cfg = _merge(DEFAULT_CONFIG, user)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "seed":
            cfg["seed"] = value
        elif key == "out":
            cfg["output"]["path"] = value
        elif key == "format":
            cfg["output"]["format"] = value
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict):
    prob = cfg["problem"]
    if prob.get("f_id") not in nonlinearity_ids():
        raise ConfigError(f"unknown nonlinearity id {prob.get('f_id')!r}; "
                          f"known: {', '.join(nonlinearity_ids())}")
    man = prob.get("manufactured")
    h_id = prob.get("h_id")
    if man is not None and h_id is not None:
        raise ConfigError("give either problem.h_id or problem.manufactured, not both")
    if man is None and h_id is None:
        raise ConfigError("problem needs h_id or manufactured")
    if man is not None and man not in _EXACT:
        raise ConfigError(f"unknown manufactured solution {man!r}; known: {', '.join(_EXACT)}")
    if h_id is not None and h_id not in rhs_ids():
        raise ConfigError(f"unknown forcing id {h_id!r}; known: {', '.join(rhs_ids())}")
    unknown = set(prob.get("g_params") or {}) - {"g", "g1"}
    if unknown:
        raise ConfigError(f"unknown g_params keys {sorted(unknown)}")
    n_list = cfg["sweep"]["n_list"]
    if (not n_list or any(not isinstance(n, int) or n < 2 for n in n_list)
            or any(b <= a for a, b in zip(n_list, n_list[1:]))):
        raise ConfigError("sweep.n_list must be strictly increasing integers >= 2")
    if cfg["reference"]["kind"] not in REFERENCE_KINDS:
        raise ConfigError(f"reference.kind must be one of {REFERENCE_KINDS}")
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ConfigError("seed must be a non-negative integer")
    solver_fields = {f.name for f in fields(SolverOptions)}
    bad = set(cfg["solver"]) - solver_fields
    if bad:
        raise ConfigError(f"unknown solver options {sorted(bad)}")
    try:
        SolverOptions(**cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver options: {exc}") from None


def build_problem(cfg: dict):
    """``(f, h, exact_reference_or_None)`` from the problem section."""
    prob = cfg["problem"]
    gp = prob.get("g_params") or {}
    f = builtin(prob["f_id"], g=gp.get("g"), g1=gp.get("g1"))
    if prob.get("manufactured") is not None:
        try:
            h, ref = manufactured(exact_solution(prob["manufactured"]), f)
        except ManufacturedError as exc:
            raise ConfigError(str(exc)) from None
        return f, h, ref
    return f, builtin_rhs(prob["h_id"], prob.get("h_amplitude", 1.0)), None


def solver_options(cfg: dict) -> SolverOptions:
    try:
        return SolverOptions(**cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"solver: {exc}") from None


# -- output -------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    return str(value)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return _fmt(value)
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def render(command: str, columns, rows, footer: dict, fmt: str) -> str:
    footer = dict(footer, schema_version=SCHEMA_VERSION, command=command)
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "columns": columns,
               "rows": [{c: r[c] for c in columns} for r in rows], "footer": footer}
        return json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_fmt(r[c]) for c in columns])
    buf.write("# " + json.dumps(_json_safe(footer), sort_keys=True) + "\n")
    return buf.getvalue()


def emit(text: str, cfg: dict, stdout):
    path = cfg["output"]["path"]
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _fit(points):
    pts = [(n, e) for n, e in points if e > 0]
    if len(pts) < 3:
        return {"slope": None, "undefined": True, "points": [list(p) for p in points]}
    return dict(fit_rate(pts).to_dict(), undefined=False)


def _solve_checked(p, opts):
    try:
        sol = solve(p, opts)
    except LineSearchError as exc:
        raise NonConvergence(f"n={p.n}: {exc}") from None
    if not sol.converged:
        raise NonConvergence(f"n={p.n}: not converged after {sol.iterations} "
                             f"iterations, certificate {sol.certificate:.3e}")
    return sol


def build_reference(cfg, f, h, exact, opts):
    kind = cfg["reference"]["kind"]
    if kind == "auto":
        kind = "manufactured" if exact is not None else "fine-grid"
    if kind == "manufactured":
        if exact is None:
            raise ConfigError("reference.kind=manufactured needs problem.manufactured")
        return exact
    if kind == "shooting":
        return shooting(f, h, steps=cfg["reference"]["steps"])
    n_ref = cfg["reference"]["n_ref"]
    if n_ref < 8 * max(cfg["sweep"]["n_list"]):
        raise ConfigError("reference.n_ref must be at least 8x the largest n in the sweep")
    if kind == "fine-grid":
        return fine_grid(f, h, n_ref, opts)
    if f.id not in ("zero", "linear"):
        raise ConfigError("linear-direct reference needs f_id 'zero' or 'linear'")
    a = 0.0 if f.id == "zero" else 1.0
    return discrete_reference(linear_direct(a, h, Grid(n_ref)))


# -- commands -----------------------------------------------------------------


def cmd_solve(cfg, stdout):
    """Solve the problem for every n in the sweep and print certificates."""
    f, h, _ = build_problem(cfg)
    opts = solver_options(cfg)
    rows = []
    status = EXIT_OK
    for n in cfg["sweep"]["n_list"]:
        p = DiscreteProblem(f, h, Grid(n))
        try:
            sol = solve(p, opts)
        except LineSearchError as exc:
            stdout.write(f"n={n}: line search failed: {exc}\n")
            return EXIT_NONCONVERGED
        rows.append({"n": n, "iterations": sol.iterations, "certificate": sol.certificate,
                     "norm_E": norm_e(sol.x), "converged": sol.converged,
                     "method": sol.method_used})
        if not sol.converged:
            status = EXIT_NONCONVERGED
    cols = ["n", "iterations", "certificate", "norm_E", "converged", "method"]
    summary = "".join(
        f"n={r['n']} iterations={r['iterations']} certificate={r['certificate']:.3e} "
        f"norm_E={r['norm_E']:.12g} converged={str(r['converged']).lower()}\n"
        for r in rows)
    stdout.write(summary)
    if cfg["output"]["path"]:
        emit(render("solve", cols, rows, {"f_id": f.id, "h_id": h.id},
                    cfg["output"]["format"]), cfg, stdout)
    return status


def cmd_converge(cfg, stdout):
    """Nodal errors against a reference along the n sweep, with rate fits."""
    f, h, exact = build_problem(cfg)
    opts = solver_options(cfg)
    ref = build_reference(cfg, f, h, exact, opts)
    rows = []
    for n in cfg["sweep"]["n_list"]:
        p = DiscreteProblem(f, h, Grid(n))
        sol = _solve_checked(p, opts)
        err = grid_errors(sol.x, ref)
        rep = bound_report(p, sol.x)
        rows.append({"n": n, "e_x": err.e_x, "e_v": err.e_v, "norm_E": rep.norm_E,
                     "sqrtn_normE": rep.sqrtn_norm_E, "Q_obs": rep.Q_obs,
                     "N_obs": rep.N_obs, "ogr_ratio": rep.ogr_ratio,
                     "cert": sol.certificate, "iters": sol.iterations})
    footer = {
        "f_id": f.id, "h_id": h.id, "reference": ref.provenance,
        "reference_accuracy": ref.accuracy_estimate,
        "fit_e_x": _fit([(r["n"], r["e_x"]) for r in rows]),
        "fit_e_v": _fit([(r["n"], r["e_v"]) for r in rows]),
        "fit_norm_E": _fit([(r["n"], r["norm_E"]) for r in rows]),
    }
    footer.update(_ogr_finding(rows))
    emit(render("converge", CONVERGE_COLUMNS, rows, footer, cfg["output"]["format"]),
         cfg, stdout)
    return EXIT_OK


def _ogr_finding(rows):
    """Whether ``||x||_E <= 2 n^(-3/2) sup|h|`` held along the sweep."""
    failing = [r["n"] for r in rows if r["ogr_ratio"] > 1.0]
    return {"ogr_bound_holds": not failing,
            "ogr_first_failure_n": failing[0] if failing else None}


def cmd_bounds(cfg, stdout):
    """Measured a-priori bound quantities along the n sweep."""
    f, h, _ = build_problem(cfg)
    opts = solver_options(cfg)
    rows = []
    chain_ok = True
    for n in cfg["sweep"]["n_list"]:
        p = DiscreteProblem(f, h, Grid(n))
        sol = _solve_checked(p, opts)
        rep = bound_report(p, sol.x)
        chain_ok &= rep.chain_ok
        d = rep.to_dict()
        d["sqrtn_normE"] = d.pop("sqrtn_norm_E")
        d["chain_ok"] = rep.chain_ok
        rows.append(d)
    footer = {"f_id": f.id, "h_id": h.id, "chain_ok": chain_ok,
              "fit_norm_E": _fit([(r["n"], r["norm_E"]) for r in rows]),
              "Q_obs_max": max(r["Q_obs"] for r in rows),
              "N_obs_max": max(r["N_obs"] for r in rows)}
    footer.update(_ogr_finding(rows))
    emit(render("bounds", BOUNDS_COLUMNS, rows, footer, cfg["output"]["format"]),
         cfg, stdout)
    return EXIT_OK


def cmd_probe(cfg, stdout):
    """Seeded probes of the hypotheses on f and of operator monotonicity."""
    f, _, _ = build_problem(cfg)
    pc = cfg["probe"]
    seed = cfg["seed"]
    reports = {
        "p2": probe_p2(f, trials=pc["trials"], seed=seed).to_dict(),
        "operator_monotonicity": probe_operator_monotonicity(
            f, Grid(pc["n"]), trials=pc["operator_trials"], seed=seed).to_dict(),
        "p1": (probe_p1(f, pc["r"], trials=pc["trials"], seed=seed).to_dict()
               if f.dominator is not None else None),
    }
    doc = {"schema_version": SCHEMA_VERSION, "command": "probe", "f_id": f.id,
           "seed": seed, "reports": reports}
    emit(json.dumps(_json_safe(doc), indent=2, sort_keys=True) + "\n", cfg, stdout)
    return EXIT_OK


def cmd_depend(cfg, stdout):
    """Solution gaps for the weakly convergent forcing family."""
    f, h, _ = build_problem(cfg)
    if f.affine_decomposition is None:
        raise ConfigError(
            f"depend: nonlinearity {f.id!r} lacks the structure "
            "f(t, v, x) = f1(t, x) + v g(t) required for continuous dependence"
        )
    dc = cfg["dependence"]
    fam = WeakFamily(h, float(dc["amplitude"]))
    rows = [r.to_dict() for r in dependence_experiment(
        f, fam, dc["m_list"], Grid(dc["n_ref"]), solver_options(cfg))]
    footer = {"f_id": f.id, "h0_id": h.id, "amplitude": fam.amplitude,
              "n_ref": dc["n_ref"],
              "fit_sup_gap": _fit([(r["m"], r["sup_gap"]) for r in rows
                                   if math.isfinite(r["m"])])}
    emit(render("depend", DEPEND_COLUMNS, rows, footer, cfg["output"]["format"]),
         cfg, stdout)
    return EXIT_OK


def cmd_list(cfg, stdout):
    """List registered nonlinearities, forcings and manufactured solutions."""
    stdout.write("nonlinearities:\n")
    for fid in nonlinearity_ids():
        f = builtin(fid)
        tags = []
        if f.affine_decomposition is not None:
            tags.append("affine")
        if f.dominator is not None:
            tags.append("dominator")
        if not f.depends_on_v:
            tags.append("v-independent")
        stdout.write(f"  {fid:8s} {f.description}  [{', '.join(tags)}]\n")
    stdout.write("forcings:\n")
    for hid in rhs_ids():
        stdout.write(f"  {hid}\n")
    stdout.write("manufactured solutions:\n")
    for xid in _EXACT:
        stdout.write(f"  {xid}\n")
    stdout.write(f"reference kinds: {', '.join(REFERENCE_KINDS)}\n")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "converge": cmd_converge,
    "bounds": cmd_bounds,
    "probe": cmd_probe,
    "depend": cmd_depend,
    "list": cmd_list,
}


def build_parser() -> argparse.ArgumentParser:
    defaults = json.dumps(DEFAULT_CONFIG, indent=2)
    parser = argparse.ArgumentParser(
        prog="monobvp",
        description="Solve x'' = f(t, x', x) - h, x(0) = x(1) = 0, and its "
                    "finite-difference scheme; run verification experiments.",
        epilog="config defaults (JSON):\n" + defaults,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=(COMMANDS[name].__doc__ or "").strip() or None,
                            epilog="config defaults (JSON):\n" + defaults,
                            formatter_class=argparse.RawDescriptionHelpFormatter)
        sp.add_argument("--config", help="JSON experiment config")
        sp.add_argument("--seed", type=int, help="seed for randomized probes")
        sp.add_argument("--out", help="write output to this file instead of stdout")
        sp.add_argument("--format", choices=("csv", "json"))
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = load_config(args.config, {"seed": args.seed, "out": args.out,
                                        "format": args.format})
        return COMMANDS[args.command](cfg, stdout)
    except (ConfigError, UnknownProblemError, NotAffineError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    except NonConvergence as exc:
        stderr.write(f"solver did not converge: {exc}\n")
        return EXIT_NONCONVERGED
    except OracleError as exc:
        stderr.write(f"reference oracle failed: {exc}\n")
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
