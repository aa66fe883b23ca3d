"""Command line front end.

Subcommands: simulate, bound, classify, observability, conjugate, report.
Exit codes: 0 on success, 2 when a dominance check fails, 1 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import decay_bounds
from .damping import make_h
from .decay_bounds import OdeProblem, dominance_check, envelope, power_law_minorant, solve_ode
from .forcing import conjugate, gamma_linear, gamma_nonlinear
from .harness import (ConfigError, PipelineError, calibrate_constants,
                      load_scenario, run_experiment, _take, _write_curve_csv)
from .observability import estimate_linear_constant, estimate_nonlinear_constant
from .wave_solver import energy, run as run_wave, WaveState


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="wavedecay",
                     description="Energy decay laboratory for damped, forced waves")
    sub = parser.add_subparsers(dest="command")
    for name, help_text in [
        ("simulate", "run the wave solver and write the energy trace CSV"),
        ("bound", "integrate the comparison ODE and write S / envelope CSVs"),
        ("classify", "classify the bound decay and write the verdict JSON"),
        ("observability", "estimate observability constants, write JSON"),
        ("conjugate", "tabulate the convex conjugate pair as CSV"),
        ("report", "full pipeline: all artifacts into the output directory"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="scenario JSON file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--dx", type=float, default=None, help="override grid spacing")
        p.add_argument("--dt", type=float, default=None, help="override time step")
        p.add_argument("--horizon", type=float, default=None)
    return parser


def _apply_overrides(scenario, args):
    if args.dx is not None:
        g = dict(scenario.grid)
        if g.get("dimension", 1) == 1:
            g["cells"] = max(8, int(round(g.get("length", 1.0) / args.dx)))
        else:
            lx, ly = g.get("lengths", (1.0, 1.0))
            g["cells"] = [max(8, int(round(lx / args.dx))),
                          max(8, int(round(ly / args.dx)))]
        scenario.grid = g
    numerics = dict(scenario.numerics)
    if args.dt is not None:
        numerics["dt"] = args.dt
    if args.horizon is not None:
        numerics["horizon"] = args.horizon
    scenario.numerics = numerics
    return scenario


def _out_dir(args, scenario, command):
    out = args.out or f"{scenario.name}_{command}"
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_simulate(scenario, args):
    grid = scenario.build_grid()
    damper = scenario.build_damper(grid)
    law = scenario.build_law()
    forcing = scenario.build_forcing()
    rng = np.random.default_rng(scenario.resolved_seed(args.seed))
    u0, v0 = scenario.build_initial(grid, rng)
    trace = run_wave(grid, damper, law, forcing, u0, v0, scenario.horizon,
                     scenario.dt(grid))
    out = _out_dir(args, scenario, "simulate")
    trace.to_csv(os.path.join(out, "trace.csv"))
    print(f"trace with {len(trace.times)} samples -> {out}/trace.csv "
          f"(E0={trace.initial_energy:.6g}, E_end={trace.energy[-1]:.6g})")
    return 0


def _setup_bound(scenario, args):
    grid = scenario.build_grid()
    damper = scenario.build_damper(grid)
    law = scenario.build_law()
    forcing = scenario.build_forcing()
    T = scenario.control_window(grid, damper)
    if scenario.horizon <= T:
        raise ConfigError("horizon must exceed T")
    consts, _, _ = calibrate_constants(scenario, grid, damper, law, T, args.seed)
    rng = np.random.default_rng(scenario.resolved_seed(args.seed))
    u0, v0 = scenario.build_initial(grid, rng)
    e0 = energy(WaveState(0.0, u0, v0), grid)
    pair = None
    if law.is_linear():
        gamma = gamma_linear(forcing, consts["C_1T"])
        problem = OdeProblem.linear_bound(T, consts["C_T"], gamma, e0)
    else:
        h = make_h(law, damper.mass(T))
        pair = conjugate(T, consts["C_T"], h)
        gamma = gamma_nonlinear(forcing, pair)
        if consts.get("K") is None:
            l1 = 0.0 if gamma.is_zero() else gamma.l1_norm()
            consts["K"] = 4.0 * max(consts["C_T"], e0 + l1)
        problem = OdeProblem.nonlinear_bound(T, h, consts["K"], gamma, e0,
                                               c_t=consts["C_T"])
    return grid, damper, law, T, consts, gamma, problem, pair


def _cmd_bound(scenario, args):
    _, _, _, T, consts, gamma, problem, _ = _setup_bound(scenario, args)
    horizon = scenario.horizon
    s_times, s_values = solve_ode(problem, horizon - T, (horizon - T) / 2000.0)
    curve = envelope(s_times, s_values, gamma, T,
                     _take(scenario.constants, "envelope_factor", 4.0),
                     _take(scenario.constants, "gamma_window_factor", 2.0))
    out = _out_dir(args, scenario, "bound")
    _write_curve_csv(os.path.join(out, "ode.csv"), {"t": s_times, "S": s_values})
    _write_curve_csv(os.path.join(out, "envelope.csv"),
                     {"t": curve.times, "B": curve.values})
    print(f"S and envelope on [{T:.4g}, {horizon:.4g}] -> {out} "
          f"(constants: {json.dumps(consts, sort_keys=True, default=float)})")
    return 0


def _cmd_classify(scenario, args):
    _, _, law, T, consts, gamma, problem, _ = _setup_bound(scenario, args)
    horizon = float(_take(scenario.numerics, "ode_horizon",
                          max(1e4, 20.0 * scenario.horizon)))
    long_times, long_values = solve_ode(problem, horizon, horizon / 4000.0)
    if gamma.is_zero() or law.is_linear():
        cls = decay_bounds.classify(problem.p, gamma, problem.s0, horizon=horizon,
                                    name_window=(horizon / 10.0, horizon))
    else:
        positive = long_values[long_values > 0]
        s_lo = max(float(np.min(positive, initial=problem.s0)) * 0.5, 1e-12)
        s_hi = max(float(np.max(long_values)), problem.s0) * 2.0
        _, _, p_tilde = power_law_minorant(problem.p, s_lo, s_hi)
        cls = decay_bounds.classify(p_tilde, gamma, problem.s0, horizon=horizon,
                                    name_window=(horizon / 10.0, horizon))
    result = {"classification": cls.to_dict(), "constants": consts}
    exit_code = 0
    if cls.case in ("forced-subdominant", "forced-dominant") and cls.bound is not None:
        curve = np.asarray(cls.bound(long_times[1:]), dtype=float)
        dom = dominance_check(long_values[1:], curve, long_times[1:])
        result["dominance"] = {"passed": dom.passed,
                               "max_violation": dom.max_violation,
                               "at_time": dom.at_time}
        if not dom.passed:
            exit_code = 2
    out = _out_dir(args, scenario, "classify")
    with open(os.path.join(out, "verdict.json"), "w") as fh:
        json.dump(result, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    print(f"classification: {cls.case} / {cls.model} -> {out}/verdict.json")
    return exit_code


def _cmd_observability(scenario, args):
    grid = scenario.build_grid()
    damper = scenario.build_damper(grid)
    law = scenario.build_law()
    T = scenario.control_window(grid, damper)
    from .observability import EnsembleConfig

    ens = scenario.ensemble
    forcing_factory = None
    if _take(scenario.forcing, "profile", "zero") != "zero":
        forcing_factory = lambda amp: scenario.build_forcing(amplitude=amp)
    config = EnsembleConfig(
        n_runs=_take(ens, "runs", 32), n_modes=_take(ens, "modes", 16),
        seed=scenario.resolved_seed(args.seed), horizon=_take(ens, "horizon"),
        amplitude_range=tuple(_take(ens, "amplitude_range", (1e-3, 1.0))),
        forcing_factory=forcing_factory,
        safety=_take(scenario.constants, "safety", 2.0))
    report = estimate_linear_constant(grid, damper, T, config)
    out = _out_dir(args, scenario, "observability")
    payload = {"linear": report.to_dict()}
    if not law.is_linear():
        h = make_h(law, damper.mass(T))
        nl = estimate_nonlinear_constant(grid, damper, law, h, T, config,
                                         linear_report=report)
        payload["nonlinear"] = nl.to_dict()
    with open(os.path.join(out, "constants.json"), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")
    print(f"observability constants -> {out}/constants.json "
          f"(linear hat_C_T = {report.constant:.6g})")
    return 0


def _cmd_conjugate(scenario, args):
    grid = scenario.build_grid()
    damper = scenario.build_damper(grid)
    law = scenario.build_law()
    T = scenario.control_window(grid, damper)
    c_t = _take(scenario.constants, "C_T", 1.0)
    h = make_h(law, damper.mass(T))
    pair = conjugate(T, c_t, h)
    s = np.geomspace(1e-6, 10.0, 200)
    table = pair.psi_star_table()
    out = _out_dir(args, scenario, "conjugate")
    _write_curve_csv(os.path.join(out, "psi_table.csv"),
                     {"s": s, "psi": pair.psi(s), "psi_star": table(s)})
    print(f"psi / psi* table (T={T:.4g}, C_T={c_t:.4g}) -> {out}/psi_table.csv")
    return 0


def _cmd_report(scenario, args):
    out = _out_dir(args, scenario, "report")
    verdict, artifacts = run_experiment(scenario, out_dir=out, seed=args.seed)
    status = "pass" if verdict.dominance_passed else "DOMINANCE VIOLATION"
    print(f"report -> {out} ({status}; agreement={verdict.agreement}; "
          f"predicted={verdict.predicted_model})")
    return 0 if verdict.dominance_passed else 2


_COMMANDS = {
    "simulate": _cmd_simulate,
    "bound": _cmd_bound,
    "classify": _cmd_classify,
    "observability": _cmd_observability,
    "conjugate": _cmd_conjugate,
    "report": _cmd_report,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        scenario = load_scenario(args.config)
        scenario = _apply_overrides(scenario, args)
        return _COMMANDS[args.command](scenario, args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except PipelineError as exc:
        print(f"pipeline error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
