"""Command-line interface for multiband threshold design.

Subcommands:
  optimize   solve one instance (joint solver or uniform baseline)
  sweep      solve across a budget range, emit CSV
  validate   Monte Carlo check of the analytic Pf/Pd model at the
             optimized thresholds
  simulate   empirical detection rates for an arbitrary occupancy

Exit codes: 0 success, 1 tolerance or convergence failure, 2 infeasible
instance, 3 invalid usage, 4 unreadable or invalid scenario file.
Respects NO_COLOR; output is plain when stdout is not a terminal.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from .detection import prob_detection, prob_false_alarm
from .optimize import (
    PrimaryUserGroup,
    Solution,
    solve_p2,
    solve_p3,
    solve_uniform_baseline,
)
from .scenario import Scenario, ScenarioError, load_scenario, table1_scenario
from .simulate import empirical_rates, make_channel, simulate_energies

__all__ = ["main"]


class _CliError(Exception):
    pass


def _color_enabled(stream) -> bool:
    return stream.isatty() and "NO_COLOR" not in os.environ


def _paint(text: str, code: str, enabled: bool) -> str:
    return f"\x1b[{code}m{text}\x1b[0m" if enabled else text


def _fmt(x) -> str:
    return f"{x:.12g}"


def _load(args) -> Scenario:
    if args.bundled and args.scenario is not None:
        raise _CliError("give either a scenario path or --bundled, not both")
    if args.bundled:
        return table1_scenario()
    if args.scenario is None:
        raise _CliError("a scenario path (or --bundled) is required")
    return load_scenario(args.scenario)


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    spec = scenario.spec
    if getattr(args, "epsilon", None) is not None:
        groups = tuple(PrimaryUserGroup(members=g.members, epsilon=args.epsilon)
                       for g in spec.groups)
        spec = dataclasses.replace(spec, groups=groups)
    if getattr(args, "delta", None) is not None:
        spec = dataclasses.replace(spec, delta=args.delta)
    if spec is not scenario.spec:
        scenario = dataclasses.replace(scenario, spec=spec)
    return scenario


def _solve(spec, problem: str, uniform: bool) -> Solution:
    if uniform:
        return solve_uniform_baseline(spec, problem)
    return solve_p2(spec) if problem == "p2" else solve_p3(spec)


def _solution_dict(sol: Solution) -> dict:
    def arr(a):
        return None if a is None else [float(v) for v in np.asarray(a).ravel()]

    doc = {
        "status": sol.status,
        "problem": sol.problem,
        "objective": sol.objective,
        "throughput": sol.throughput,
        "weighted_false_alarm": sol.weighted_false_alarm,
        "gamma": arr(sol.gamma),
        "pf": arr(sol.pf),
        "pm": arr(sol.pm),
        "slacks": arr(sol.slacks),
        "kkt_residual": sol.kkt_residual,
        "iterations": sol.iterations,
        "message": sol.message,
    }
    if sol.multipliers is not None:
        doc["multipliers"] = {
            "aggregate": arr(sol.multipliers.aggregate),
            "lower": arr(sol.multipliers.lower),
            "upper": arr(sol.multipliers.upper),
        }
    else:
        doc["multipliers"] = None
    return doc


def _cmd_optimize(args) -> int:
    scenario = _apply_overrides(_load(args), args)
    sol = _solve(scenario.spec, args.problem, args.uniform)
    if args.json:
        print(json.dumps(_solution_dict(sol), indent=2))
        if sol.status == "infeasible":
            return 2
        return 0 if sol.status == "optimal" else 1

    enabled = _color_enabled(sys.stdout)
    if sol.status == "infeasible":
        print(f"status: {_paint('infeasible', '31', enabled)}")
        print(f"reason: {sol.message}")
        return 2
    status_col = "32" if sol.status == "optimal" else "33"
    print(f"status: {_paint(sol.status, status_col, enabled)}")
    label = "throughput" if sol.problem == "p2" else "weighted miss probability"
    print(f"objective ({label}): {_fmt(sol.objective)}")
    if sol.problem == "p2":
        print(f"weighted false alarm: {_fmt(sol.weighted_false_alarm)}")
    else:
        print(f"throughput: {_fmt(sol.throughput)}")
    for j, slack in enumerate(sol.slacks):
        print(f"constraint {j} slack: {_fmt(slack)}")
    print(f"kkt residual: {_fmt(sol.kkt_residual)}")
    print("channel  gamma            pf               pm")
    for k in range(len(sol.gamma)):
        print(f"{k:<8d} {sol.gamma[k]:<16.10g} {sol.pf[k]:<16.10g} {sol.pm[k]:<16.10g}")
    return 0 if sol.status == "optimal" else 1


def _cmd_sweep(args) -> int:
    scenario = _apply_overrides(_load(args), args)
    if args.steps < 2:
        raise _CliError("--steps must be >= 2")
    if not (args.start < args.stop):
        raise _CliError("--start must be strictly less than --stop")
    # the swept budget only enters its own problem form, so default the
    # form from the parameter; an explicit --problem still wins
    problem = args.problem or ("p2" if args.param == "epsilon" else "p3")
    spec = scenario.spec
    k = spec.num_subchannels
    header = (["sweep_value", "objective_joint", "objective_uniform"]
              + [f"gamma_{i}" for i in range(k)]
              + [f"pf_{i}" for i in range(k)]
              + [f"pm_{i}" for i in range(k)]
              + ["status"])
    lines = [",".join(header)]
    for value in np.linspace(args.start, args.stop, args.steps):
        value = float(value)
        if args.param == "epsilon":
            groups = tuple(PrimaryUserGroup(members=g.members, epsilon=value)
                           for g in spec.groups)
            spec_i = dataclasses.replace(spec, groups=groups)
        else:
            spec_i = dataclasses.replace(spec, delta=value)
        joint = _solve(spec_i, problem, uniform=False)
        uni = solve_uniform_baseline(spec_i, problem)
        nan = float("nan")
        obj_j = joint.objective if joint.status == "optimal" else nan
        obj_u = uni.objective if uni.status == "optimal" else nan
        if joint.gamma is not None:
            gam, pf, pm = joint.gamma, joint.pf, joint.pm
        else:
            gam = pf = pm = np.full(k, nan)
        row = ([_fmt(value), _fmt(obj_j), _fmt(obj_u)]
               + [_fmt(v) for v in gam] + [_fmt(v) for v in pf]
               + [_fmt(v) for v in pm] + [joint.status])
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _parse_gamma(raw: str, k: int) -> np.ndarray:
    try:
        vals = [float(tok) for tok in raw.split(",")]
    except ValueError as err:
        raise _CliError(f"--gamma: {err}") from err
    if len(vals) != k:
        raise _CliError(f"--gamma needs {k} comma-separated values, got {len(vals)}")
    return np.array(vals)


def _thresholds(scenario: Scenario, args) -> np.ndarray:
    if getattr(args, "gamma", None):
        return _parse_gamma(args.gamma, scenario.spec.num_subchannels)
    sol = _solve(scenario.spec, args.problem, args.uniform)
    if sol.status == "infeasible":
        raise _CliError(f"cannot derive thresholds, instance infeasible: {sol.message}",)
    return sol.gamma


def _mc_rows(spec, gamma, occupancy, trials, seed, method="gaussian"):
    gains = [s.gain_power for s in spec.subchannels]
    channel = make_channel(gains)
    batch = simulate_energies(channel, occupancy, spec.noise, trials, seed,
                              method=method)
    emp = empirical_rates(batch, gamma)
    rows = []
    for idx, sub in enumerate(spec.subchannels):
        if occupancy[idx]:
            analytic = prob_detection(float(gamma[idx]), sub, spec.noise)
        else:
            analytic = prob_false_alarm(float(gamma[idx]), spec.noise)
        err = abs(emp.rate[idx] - analytic)
        # SE under the analytic rate: the empirical one collapses at 0/1
        se = np.sqrt(analytic * (1.0 - analytic) / trials)
        tol = 6.0 * se + 1e-4
        rows.append((idx, emp.labels[idx], emp.rate[idx], analytic, err, tol, err <= tol))
    return rows


def _cmd_validate(args) -> int:
    scenario = _apply_overrides(_load(args), args)
    trials = args.trials if args.trials is not None else scenario.trials
    seed = args.seed if args.seed is not None else scenario.seed
    if trials < 1:
        raise _CliError("--trials must be >= 1")
    spec = scenario.spec
    gamma = _thresholds(scenario, args)
    k = spec.num_subchannels
    enabled = _color_enabled(sys.stdout)
    total = passed = 0
    for occ_name, occupancy, run_seed in (
        ("vacant", np.zeros(k, dtype=bool), seed),
        ("occupied", np.ones(k, dtype=bool), seed + 1),
    ):
        print(f"occupancy={occ_name} trials={trials} seed={run_seed}")
        print("channel  rate  empirical   analytic    error      tol        verdict")
        for idx, label, emp, ana, err, tol, ok in _mc_rows(spec, gamma, occupancy, trials, run_seed):
            total += 1
            passed += ok
            verdict = _paint("ok", "32", enabled) if ok else _paint("MISS", "31", enabled)
            print(f"{idx:<8d} {label:<5s} {emp:<11.6f} {ana:<11.6f} "
                  f"{err:<10.6f} {tol:<10.6f} {verdict}")
    all_ok = passed == total
    word = _paint("PASS", "32", enabled) if all_ok else _paint("FAIL", "31", enabled)
    print(f"overall: {word} ({passed}/{total} comparisons within tolerance)")
    return 0 if all_ok else 1


def _cmd_simulate(args) -> int:
    scenario = _apply_overrides(_load(args), args)
    trials = args.trials if args.trials is not None else scenario.trials
    seed = args.seed if args.seed is not None else scenario.seed
    if trials < 1:
        raise _CliError("--trials must be >= 1")
    spec = scenario.spec
    k = spec.num_subchannels
    if args.occupancy is None:
        occupancy = np.ones(k, dtype=bool)
    else:
        if len(args.occupancy) != k or set(args.occupancy) - {"0", "1"}:
            raise _CliError(f"--occupancy must be a string of {k} characters from 0/1")
        occupancy = np.array([c == "1" for c in args.occupancy])
    gamma = _thresholds(scenario, args)
    print("channel,occupied,gamma,rate_kind,empirical,std_error,analytic,abs_error")
    for idx, label, emp, ana, err, _tol, _ok in _mc_rows(spec, gamma, occupancy,
                                                         trials, seed, args.method):
        print(",".join([
            str(idx), "1" if occupancy[idx] else "0", _fmt(float(gamma[idx])),
            label, _fmt(emp), _fmt(np.sqrt(max(emp * (1 - emp), 0.0) / trials)),
            _fmt(ana), _fmt(err),
        ]))
    return 0


def _add_common(sub):
    sub.add_argument("scenario", nargs="?", default=None,
                     help="path to a scenario JSON file")
    sub.add_argument("--bundled", action="store_true",
                     help="use the bundled eight-subchannel reference instance")
    sub.add_argument("--problem", choices=("p2", "p3"), default="p2",
                     help="throughput form (p2) or interference form (p3)")
    sub.add_argument("--epsilon", type=float, default=None,
                     help="override every group interference budget")
    sub.add_argument("--delta", type=float, default=None,
                     help="override the aggregate throughput floor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbsense",
        description="Multiband joint detection: per-subchannel energy "
                    "thresholds via convex optimization.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_opt = subs.add_parser("optimize", help="solve one instance")
    _add_common(p_opt)
    p_opt.add_argument("--uniform", action="store_true",
                       help="solve the uniform-threshold baseline instead")
    p_opt.add_argument("--json", action="store_true", help="emit JSON")
    p_opt.set_defaults(func=_cmd_optimize)

    p_sweep = subs.add_parser("sweep", help="solve across a budget range, emit CSV")
    _add_common(p_sweep)
    p_sweep.set_defaults(problem=None)
    p_sweep.add_argument("--param", choices=("epsilon", "delta"), required=True,
                         help="which budget to sweep (also picks the problem "
                              "form unless --problem is given)")
    p_sweep.add_argument("--start", type=float, required=True)
    p_sweep.add_argument("--stop", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, default=25,
                         help="number of sweep points (default 25)")
    p_sweep.add_argument("--output", default=None, help="CSV output path (default stdout)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_val = subs.add_parser("validate",
                           help="Monte Carlo check of the analytic model")
    _add_common(p_val)
    p_val.add_argument("--uniform", action="store_true",
                       help="validate at the uniform-baseline thresholds")
    p_val.add_argument("--gamma", default=None,
                       help="comma-separated explicit thresholds (skips the solver)")
    p_val.add_argument("--trials", type=int, default=None)
    p_val.add_argument("--seed", type=int, default=None)
    p_val.set_defaults(func=_cmd_validate)

    p_sim = subs.add_parser("simulate",
                            help="empirical rates for an arbitrary occupancy")
    _add_common(p_sim)
    p_sim.add_argument("--uniform", action="store_true",
                       help="use the uniform-baseline thresholds")
    p_sim.add_argument("--gamma", default=None,
                       help="comma-separated explicit thresholds (skips the solver)")
    p_sim.add_argument("--occupancy", default=None,
                       help="0/1 string, one character per subchannel (default all 1)")
    p_sim.add_argument("--method", choices=("gaussian", "frequency", "time"),
                       default="gaussian",
                       help="statistic generator (physical paths deviate from "
                            "the analytic tails by up to ~0.02 at M=100)")
    p_sim.add_argument("--trials", type=int, default=None)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.set_defaults(func=_cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 3
    try:
        return args.func(args)
    except _CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
