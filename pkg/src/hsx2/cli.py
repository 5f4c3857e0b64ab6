"""Command-line scenario runner.

``hsx2 run <file>`` evolves the initial data of a JSON scenario, checks the
structural invariants at every requested time and writes CSV/JSON artifacts.
``hsx2 example <name>`` compares a built-in scenario with its closed-form
solution. Exit codes: 0 all checks pass, 2 invariant violation, 3 input error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from . import golden, scenarios
from .evolution import (BumpTestFunction, PicardConfig, solve_event_driven, solve_picard,
                        weak_residual)
from .functions import (ALPHA_LIBRARY, INVALID, AlphaFunction, PiecewiseLinear,
                        StepFunction)
from .lagrangian import CorruptStateError, LagrangianState, check_F_alpha, max_node_difference
from .maps import EulerianState, InvalidStateError, L_map, M_map, admissible_data, pi_normalize
from .stability import MetricContext, lipschitz_verify

EXIT_OK, EXIT_INVARIANT, EXIT_INPUT = 0, 2, 3
DEFAULT_OUT = "hsx2_out"
RESIDUAL_TOL = 1e-6
RESIDUAL_MU_TOL = 1e-8

_PL = {"type": "object", "required": ["knots"],
       "properties": {"knots": {"type": "array",
                                "items": {"type": "array", "items": {"type": "number"},
                                          "minItems": 2, "maxItems": 2}},
                      "left": {"type": "number"}, "right": {"type": "number"}}}
_STEP = {"type": "object", "required": ["edges", "values"],
         "properties": {"edges": {"type": "array", "items": {"type": "number"}},
                        "values": {"type": "array", "items": {"type": "number"}}}}
_NUMS = {"type": "array", "items": {"type": "number"}}
_INITIAL = {
    "type": "object", "minProperties": 1, "maxProperties": 1,
    "properties": {
        "eulerian": {"type": "object", "required": ["u"], "additionalProperties": False,
                     "properties": {"u": _PL, "rho_density": _STEP,
                                    "atoms": {"type": "array",
                                              "items": {"type": "array", "items": {"type": "number"},
                                                        "minItems": 2, "maxItems": 2}}}},
        "lagrangian": {"type": "object", "required": ["xi", "y", "U", "H", "V", "r"],
                       "properties": {k: _NUMS for k in ("xi", "y", "U", "H", "V", "r")}},
        "random": {"type": "object", "additionalProperties": False,
                   "properties": {"n_cells": {"type": "integer", "minimum": 1, "maximum": 64},
                                  "with_rho": {"type": "boolean"},
                                  "with_atoms": {"type": "boolean"},
                                  "span": {"type": "number", "exclusiveMinimum": 0}}},
    },
    "additionalProperties": False,
}
SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "initial", "alpha", "times"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "initial": _INITIAL,
        "partner": _INITIAL,
        "alpha": {"type": "object", "minProperties": 1, "maxProperties": 1,
                  "additionalProperties": False,
                  "properties": {
                      "constant": {"type": "number", "minimum": 0, "maximum": 1},
                      "profile": _PL,
                      "sample": {"type": "object", "additionalProperties": False,
                                 "required": ["function", "start", "stop", "count"],
                                 "properties": {"function": {"enum": sorted(ALPHA_LIBRARY)},
                                                "start": {"type": "number"},
                                                "stop": {"type": "number"},
                                                "count": {"type": "integer", "minimum": 2}}}}},
        "times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "mode": {"enum": ["event", "picard", "both"]},
        "picard": {"type": "object", "additionalProperties": False,
                   "properties": {"tol": {"type": "number", "exclusiveMinimum": 0},
                                  "max_iter": {"type": "integer", "minimum": 1},
                                  "window_fraction": {"type": "number", "exclusiveMinimum": 0,
                                                      "maximum": 1}}},
        "outputs": {"type": "array", "uniqueItems": True,
                    "items": {"enum": ["states", "eulerian", "eventlog", "metrics",
                                       "residuals", "plots"]}},
        "tolerances": {"type": "object", "additionalProperties": False,
                       "properties": {"identity": {"type": "number", "exclusiveMinimum": 0},
                                      "conservation": {"type": "number", "exclusiveMinimum": 0}}},
        "allow_invalid_alpha": {"type": "boolean"},
        "expected_failures": {"type": "array",
                              "items": {"enum": ["membership", "roundtrip", "conservation",
                                                 "picard", "residuals", "metrics"]}},
        "characteristics": _NUMS,
        "test_functions": {"type": "array",
                           "items": {"type": "object", "required": ["xc", "tc", "rx", "rt"],
                                     "additionalProperties": False,
                                     "properties": {k: {"type": "number"}
                                                    for k in ("xc", "tc", "rx", "rt")}}},
        "seed": {"type": "integer"},
    },
}


class InputError(Exception):
    """Scenario could not be loaded; maps to exit code 3."""


def fmt(v) -> str:
    return format(float(v), ".17g")


def validate_scenario(obj) -> list[str]:
    """Schema violations as 'pointer: message' strings, sorted for stable output."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = []
    for err in validator.iter_errors(obj):
        pointer = "/" + "/".join(str(p) for p in err.absolute_path)
        errors.append(f"{pointer}: {err.message}")
    if not errors:
        t = obj["times"]
        if any(b < a for a, b in zip(t, t[1:])):
            errors.append("/times: must be sorted")
    return sorted(errors)


def _alpha(spec: dict) -> AlphaFunction:
    if "constant" in spec:
        return AlphaFunction.constant(spec["constant"])
    if "profile" in spec:
        return AlphaFunction(PiecewiseLinear.from_json(spec["profile"]))
    s = spec["sample"]
    knots = np.linspace(s["start"], s["stop"], s["count"])
    return AlphaFunction.sampled(ALPHA_LIBRARY[s["function"]], knots)


@dataclass
class Scenario:
    name: str
    initial: EulerianState | LagrangianState
    alpha: AlphaFunction
    times: list
    mode: str = "event"
    picard: PicardConfig = field(default_factory=PicardConfig)
    outputs: tuple = ("states", "eulerian", "eventlog")
    identity_tol: float = 1e-10
    conservation_tol: float = 1e-12
    allow_invalid_alpha: bool = False
    expected_failures: tuple = ()
    partner: EulerianState | LagrangianState | None = None
    characteristics: tuple | None = None
    test_functions: tuple = ()


def _initial(spec: dict, rng: np.random.Generator):
    if "eulerian" in spec:
        e = spec["eulerian"]
        u = PiecewiseLinear.from_json(e["u"])
        rho = StepFunction.from_json(e["rho_density"]) if "rho_density" in e else None
        return admissible_data(u, rho, e.get("atoms", ()))
    if "lagrangian" in spec:
        return LagrangianState.from_json(spec["lagrangian"])
    return scenarios.random_multipeakon(rng, **spec["random"])


def load_scenario(obj: dict, seed: int | None = None) -> Scenario:
    errors = validate_scenario(obj)
    if errors:
        raise InputError("invalid scenario:\n  " + "\n  ".join(errors))
    rng = np.random.default_rng(seed if seed is not None else obj.get("seed", 0))
    try:
        alpha = _alpha(obj["alpha"])
        initial = _initial(obj["initial"], rng)
        partner = _initial(obj["partner"], rng) if "partner" in obj else None
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    tol = obj.get("tolerances", {})
    return Scenario(
        name=obj["name"], initial=initial, alpha=alpha, times=[float(t) for t in obj["times"]],
        mode=obj.get("mode", "event"), picard=PicardConfig(**obj.get("picard", {})),
        outputs=tuple(obj.get("outputs", ("states", "eulerian", "eventlog"))),
        identity_tol=tol.get("identity", 1e-10), conservation_tol=tol.get("conservation", 1e-12),
        allow_invalid_alpha=obj.get("allow_invalid_alpha", False),
        expected_failures=tuple(obj.get("expected_failures", ())), partner=partner,
        characteristics=tuple(obj["characteristics"]) if "characteristics" in obj else None,
        test_functions=tuple(BumpTestFunction(**f) for f in obj.get("test_functions", ())))


def _to_lagrangian(init, a: AlphaFunction) -> LagrangianState:
    if isinstance(init, LagrangianState):
        return init
    invalid = a.klass == INVALID
    return L_map(init, None if invalid else a, validate=not invalid, diagnostic=invalid)


@dataclass
class RunResult:
    scenario: Scenario
    trajectory: object
    checks: dict
    picard: object = None
    metrics: dict | None = None
    residuals: list = field(default_factory=list)

    @property
    def unexpected(self) -> list[str]:
        return sorted(k for k, ok in self.checks.items()
                      if not ok and k.split(":")[0] not in self.scenario.expected_failures)


def run_scenario(sc: Scenario) -> RunResult:
    """Evolve, check and collect everything the artifacts need."""
    a = sc.alpha
    if a.klass == INVALID and not sc.allow_invalid_alpha:
        raise InputError("alpha is neither strictly below one nor identically one; "
                         "pass --allow-invalid-alpha to evolve it anyway")
    try:
        X0 = _to_lagrangian(sc.initial, a)
        horizon = max(sc.times, default=0.0)
        traj = solve_event_driven(X0, a, horizon, sc.allow_invalid_alpha)
    except (ValueError, CorruptStateError, InvalidStateError) as exc:
        raise InputError(str(exc)) from exc

    checks = {}
    nu0 = mu_prev = None
    for t in sc.times:
        X = traj.state_at(t)
        key = f"{t:.17g}"
        if not X.diagnostic:
            checks[f"membership:{key}"] = bool(check_F_alpha(X, a, sc.identity_tol))
        E = M_map(X)
        if nu0 is None:
            nu0, mu_prev = E.nu.total, E.mu.total
        checks[f"conservation:nu:{key}"] = abs(E.nu.total - nu0) <= sc.conservation_tol * (1 + nu0)
        checks[f"conservation:mu:{key}"] = E.mu.total <= mu_prev + sc.conservation_tol * (1 + nu0)
        mu_prev = E.mu.total
        invalid = a.klass == INVALID
        back = L_map(E, None if invalid else a, validate=not invalid, diagnostic=X.diagnostic)
        checks[f"roundtrip:{key}"] = max_node_difference(pi_normalize(X), back) <= sc.identity_tol

    picard = None
    if sc.mode in ("picard", "both"):
        ptraj, picard = solve_picard(X0, a, max(sc.times, default=0.0), sc.picard,
                                     sc.allow_invalid_alpha)
        checks["picard:converged"] = picard.converged
        if sc.mode == "picard":
            traj = ptraj
        else:
            for t in sc.times:
                checks[f"picard:agree:{t:.17g}"] = (
                    max_node_difference(ptraj.state_at(t), traj.state_at(t)) <= sc.identity_tol)

    metrics = None
    if "metrics" in sc.outputs and sc.partner is not None:
        Xb0 = _to_lagrangian(sc.partner, a)
        ctx = MetricContext.for_states(X0, Xb0, a)
        metrics = lipschitz_verify(X0, Xb0, a, ctx, sc.times)
        checks["metrics:lipschitz"] = metrics["passed"]

    residuals = []
    if "residuals" in sc.outputs:
        for i, phi in enumerate(sc.test_functions):
            ru, rr, rm = weak_residual(traj, phi)
            residuals.append({"index": i, "r_u": ru, "r_rho": rr, "r_mu": rm})
            checks[f"residuals:{i}"] = (abs(ru) < RESIDUAL_TOL and abs(rr) < RESIDUAL_TOL
                                        and rm >= -RESIDUAL_MU_TOL)
    return RunResult(sc, traj, checks, picard, metrics, residuals)


# artifact writers

def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_json(path: Path, obj):
    with open(path, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def lagrangian_rows(traj, times):
    for t in times:
        X = traj.state_at(t)
        r = np.append(X.r, 0.0)
        for i in range(X.xi.size):
            yield (t, X.xi[i], X.y[i], X.U[i], X.H[i], X.V[i], r[i])


def eulerian_rows(traj, times):
    for t in times:
        E = traj.eulerian_at(t)
        for x in E.knots():
            yield (t, x, E.u(x), E.rho(x), E.mu.cdf(x), E.nu.cdf(x))


def export_plot_data(result: RunResult, kind: str, path) -> Path:
    """Write plot-ready long-form CSV for one of the supported kinds."""
    path = Path(path)
    traj, times = result.trajectory, result.scenario.times
    if kind == "profile":
        rows = ((t, x, E.u(x), E.rho(x)) for t in times
                for E in [traj.eulerian_at(t)] for x in E.knots())
        _write_csv(path, ["t", "x", "u", "rho"], rows)
    elif kind == "cdf":
        def cdf_rows():
            for t in times:
                E = traj.eulerian_at(t)
                for x in E.knots():
                    yield (t, x, E.mu.cdf(x), E.nu.cdf(x))
                    if E.mu.atom_at(x) > 0 or E.nu.atom_at(x) > 0:
                        yield (t, x, E.mu.cdf(x, True), E.nu.cdf(x, True))
        _write_csv(path, ["t", "x", "F_mu", "F_nu"], cdf_rows())
    elif kind == "characteristics":
        labels = result.scenario.characteristics
        if labels is None:
            labels = traj.base.xi
        horizon = max(times, default=0.0)
        grid = [] if not times else sorted(set(np.linspace(0.0, horizon, 101).tolist())
                                           | {e for e in traj.event_times if e <= horizon})
        rows = ((s, t, traj.state_at(t).nodes_at(np.array([s]))["y"][0])
                for s in labels for t in grid)
        _write_csv(path, ["xi", "t", "y"], rows)
    elif kind == "metric_growth":
        if result.metrics is None:
            raise ValueError("metric_growth needs a partner state and the metrics output")
        rows = ((e["t"], e["dtilde"], e["bound"]) for e in result.metrics["entries"])
        _write_csv(path, ["t", "dtilde", "C_dtilde0"], rows)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    return path


def write_artifacts(result: RunResult, out: Path) -> list[Path]:
    sc = result.scenario
    out = Path(out) / sc.name
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "states" in sc.outputs:
        p = out / "lagrangian.csv"
        _write_csv(p, ["t", "xi", "y", "U", "H", "V", "r"], lagrangian_rows(result.trajectory, sc.times))
        written.append(p)
    if "eulerian" in sc.outputs:
        p = out / "eulerian.csv"
        _write_csv(p, ["t", "x", "u", "rho", "F_mu", "F_nu"], eulerian_rows(result.trajectory, sc.times))
        written.append(p)
    if "eventlog" in sc.outputs:
        p = out / "events.json"
        _write_json(p, result.trajectory.log.until(max(sc.times, default=0.0)).to_json())
        written.append(p)
    if "plots" in sc.outputs:
        kinds = ["profile", "cdf", "characteristics"]
        if result.metrics is not None:
            kinds.append("metric_growth")
        for kind in kinds:
            written.append(export_plot_data(result, kind, out / f"plot_{kind}.csv"))
    if result.metrics is not None:
        p = out / "metrics.json"
        _write_json(p, result.metrics)
        written.append(p)
    report = {"name": sc.name, "checks": result.checks,
              "expected_failures": list(sc.expected_failures),
              "unexpected_failures": result.unexpected,
              "residuals": result.residuals}
    if result.picard is not None:
        report["picard"] = [{"window": [w.start, w.end], "distinct": w.distinct,
                             "converged": w.converged,
                             "sup_delta": [it.sup_delta for it in w.iterates]}
                            for w in result.picard.windows]
    if result.trajectory.base.diagnostic:
        report["diagnostic"] = _diagnostic(result)
    p = out / "report.json"
    _write_json(p, report)
    written.append(p)
    return written


def _diagnostic(result: RunResult) -> dict:
    """Gap between normalizing directly and passing through Eulerian data."""
    rows = {}
    for t in result.scenario.times:
        X = result.trajectory.state_at(t)
        P = pi_normalize(X)
        LM = L_map(M_map(X), validate=False, diagnostic=True)
        grid = np.union1d(P.xi, LM.xi)
        rows[f"{t:.17g}"] = {"sup_V_difference": float(np.max(np.abs(
            P.nodes_at(grid)["V"] - LM.nodes_at(grid)["V"])))}
    return rows


def _out_dir(args) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get("HSX2_OUT", DEFAULT_OUT))


def cmd_run(args) -> int:
    try:
        with open(args.file) as f:
            obj = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        if isinstance(obj, dict):
            if args.mode:
                obj["mode"] = args.mode
            if args.allow_invalid_alpha:
                obj["allow_invalid_alpha"] = True
        sc = load_scenario(obj, args.seed)
        if args.tol is not None:
            sc.identity_tol = args.tol
            sc.picard.tol = min(sc.picard.tol, args.tol)
        result = run_scenario(sc)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    paths = write_artifacts(result, _out_dir(args))
    for p in paths:
        print(f"wrote {p}")
    failed = [k for k, ok in sorted(result.checks.items()) if not ok]
    for k in failed:
        tag = "unexpected" if k in result.unexpected else "expected"
        print(f"check failed ({tag}): {k}")
    if result.unexpected:
        return EXIT_INVARIANT
    print(f"{sc.name}: all {len(result.checks)} checks as expected")
    return EXIT_OK


def cmd_example(args) -> int:
    rep = golden.REPORTS[args.name]()
    for line in rep.lines():
        print(line)
    for title, table in rep.tables.items():
        if title == "trace":
            for row in table:
                print(f"trace window={row['window'][0]:.6g}..{row['window'][1]:.6g} n={row['n']} "
                      f"alpha_at_break={row['alpha_at_break']} sup_delta={row['sup_delta']:.3e}")
        else:
            print(f"norm table {title}:")
            for k, (got, ref) in table.items():
                print(f"  {k:<8s} computed={fmt(got)} closed_form={fmt(ref)}")
    if args.out or os.environ.get("HSX2_OUT"):
        out = _out_dir(args) / f"example_{args.name}"
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "report.json", {
            "name": rep.name, "ok": rep.ok,
            "checks": [{"label": c.label, "value": c.value, "expected": c.expected,
                        "deviation": c.deviation, "tol": c.tol, "ok": c.ok} for c in rep.checks]})
    if not rep.ok:
        for c in rep.failures():
            print(f"deviation beyond tolerance: {c.label}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsx2", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output directory (default: $HSX2_OUT or ./hsx2_out)")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run a JSON scenario file")
    run.add_argument("file")
    run.add_argument("--mode", choices=["event", "picard", "both"])
    run.add_argument("--tol", type=float, help="tolerance for the identity checks")
    run.add_argument("--allow-invalid-alpha", action="store_true",
                     help="evolve alpha outside the admissible classes (diagnostic)")
    run.add_argument("--seed", type=int, help="seed for randomly generated initial data")
    run.set_defaults(func=cmd_run)

    ex = sub.add_parser("example", parents=[common], help="compare a built-in example "
                                                          "with its closed form")
    ex.add_argument("name", choices=sorted(golden.REPORTS))
    ex.set_defaults(func=cmd_example)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
