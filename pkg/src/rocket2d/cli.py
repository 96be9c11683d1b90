"""Command-line front end: design, simulate, analyze, reproduce."""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import statistics
import sys

import numpy as np

from . import analysis, config as cfgmod, navigation
from .acceptance import run_all
from .control import lyapunov_certificates
from .linmodel import StateSpace, attitude_extended_model
from .riccati import CareSolverError, lqr_gain
from .sim import (
    ScenarioConfig,
    SimulationAbort,
    run_scenario,
    summarize,
    trace_from_csv,
)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rocket2d",
        description="Planar thrust-vectored rocket control and navigation testbed",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="TOML scenario file (defaults built in)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry, e.g. sim.dt=0.0005")

    p_design = sub.add_parser("design", help="compute gains, eigenvalues and margins")
    common(p_design)

    p_sim = sub.add_parser("simulate", help="run a scenario, write trace CSV and summary")
    common(p_sim)
    p_sim.add_argument("--runs", type=int, default=1,
                       help="number of seeded runs to fan out concurrently")

    p_an = sub.add_parser("analyze", help="recompute stats and plots from a trace CSV")
    common(p_an)
    p_an.add_argument("--trace", required=True, help="trace CSV produced by simulate")

    p_rep = sub.add_parser("reproduce", help="run the canned experiments and acceptance table")
    common(p_rep)
    return parser


def _load(args) -> ScenarioConfig:
    scenario = cfgmod.load_scenario(args.config, args.overrides)
    if args.seed is not None:
        scenario = scenario.with_overrides(seed=args.seed)
    return scenario


def _design_entries(scenario: ScenarioConfig) -> dict:
    params = scenario.params
    model = attitude_extended_model(params)
    K = lqr_gain(model, np.diag(scenario.lqr_Q), [[scenario.lqr_R]])[0]
    closed_eigs = np.linalg.eigvals(model.A - model.B @ K.reshape(1, 3))
    gm = analysis.gain_margin(StateSpace(model.A, model.B, K.reshape(1, 3)))
    l_att = navigation.attitude_gain(scenario.attitude_q, scenario.attitude_r)
    l_y, l_v = navigation.altitude_gains(scenario.altitude_q, scenario.altitude_r)
    alt_eigs = np.linalg.eigvals(navigation.AltitudeFilter(l_y, l_v).error_matrix())
    entries = {
        "lqr.K": [float(k) for k in K],
        "lqr.k_p": float(K[0]),
        "lqr.k_d": float(K[1]),
        "lqr.k_i": float(-K[2]),
        "attitude.closed_loop_eigenvalues": [complex(e) for e in np.sort_complex(closed_eigs)],
        "attitude.gain_margin_db": gm.gm_db,
        "attitude.gain_margin_direction": gm.direction,
        "attitude.phase_crossover_rad_s": gm.omega_pc,
        "attitude_filter.l": l_att,
        "attitude_filter.eigenvalue": -l_att,
        "altitude_filter.l_y": l_y,
        "altitude_filter.l_v": l_v,
        "altitude_filter.eigenvalues": [complex(e) for e in np.sort_complex(alt_eigs)],
    }
    return entries


def cmd_design(args) -> int:
    scenario = _load(args)
    try:
        entries = _design_entries(scenario)
    except CareSolverError as exc:
        print(f"design failed: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "design_report.txt")
    cfgmod.write_report(path, entries)
    for key, value in entries.items():
        print(f"{key} = {value}")
    print(f"report written to {path}")
    return 0


def _one_run(scenario: ScenarioConfig) -> dict:
    return summarize(run_scenario(scenario))


def cmd_simulate(args) -> int:
    scenario = _load(args)
    os.makedirs(args.out, exist_ok=True)
    if args.runs <= 1:
        try:
            trace = run_scenario(scenario)
        except SimulationAbort as exc:
            print(f"simulation aborted: {exc}", file=sys.stderr)
            return 2
        trace_path = os.path.join(args.out, "trace.csv")
        trace.to_csv(trace_path)
        summary = summarize(trace)
        cfgmod.write_report(os.path.join(args.out, "summary.txt"), summary)
        for key, value in summary.items():
            print(f"{key} = {value}")
        print(f"trace written to {trace_path}")
        return 0
    scenarios = [scenario.with_overrides(seed=scenario.seed + i) for i in range(args.runs)]
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=min(args.runs, os.cpu_count() or 1)
    ) as pool:
        summaries = list(pool.map(_one_run, scenarios))
    for i, summary in enumerate(summaries):
        cfgmod.write_report(os.path.join(args.out, f"summary_run{i:03d}.txt"), summary)
    numeric = [k for k, v in summaries[0].items() if isinstance(v, (int, float))
               and not isinstance(v, bool)]
    aggregate = {"runs": args.runs}
    for key in numeric:
        values = [s[key] for s in summaries]
        aggregate[f"{key}.mean"] = statistics.fmean(values)
        aggregate[f"{key}.std"] = statistics.pstdev(values)
    aggregate["diverged_count"] = sum(1 for s in summaries if s["diverged"])
    cfgmod.write_report(os.path.join(args.out, "summary_aggregate.txt"), aggregate)
    for key, value in aggregate.items():
        print(f"{key} = {value}")
    return 0


def cmd_analyze(args) -> int:
    from . import plots

    scenario = _load(args)
    trace = trace_from_csv(args.trace)
    trace.config = scenario
    os.makedirs(args.out, exist_ok=True)
    summary = summarize(trace)
    discard = min(10.0, 0.5 * float(trace.t[-1]))
    mean_th, std_th = analysis.error_stats(trace, "theta", "theta_hat", discard=discard)
    mean_y, std_y = analysis.error_stats(trace, "y", "y_hat", discard=discard)
    summary.update({
        "theta_est_mean_rad": mean_th, "theta_est_std_rad": std_th,
        "altitude_est_mean_m": mean_y, "altitude_est_std_m": std_y,
    })
    for report in lyapunov_certificates(trace):
        summary[f"clf.{report.name}.non_increasing"] = report.non_increasing
        summary[f"clf.{report.name}.max_increase"] = report.max_increase
    cfgmod.write_report(os.path.join(args.out, "analysis.txt"), summary)
    plots.trajectory_svg(trace, os.path.join(args.out, "trajectory.svg"))
    plots.estimates_svg(trace, os.path.join(args.out, "estimates.svg"))
    for key, value in summary.items():
        print(f"{key} = {value}")
    return 0


def cmd_reproduce(args) -> int:
    from . import plots
    from .acceptance import _closed_loop, _open_loop, _baseline_attitude_gain
    from .control import GuidanceGains, TrajectoryRef
    from .plant import RocketParams

    os.makedirs(args.out, exist_ok=True)
    seed = 1 if args.seed is None else args.seed
    params = RocketParams()
    K = _baseline_attitude_gain(params)

    # pitch step and Bode
    t, y = analysis.step_response(_closed_loop(params, K), duration=20.0)
    plots.step_svg(t, y, os.path.join(args.out, "pitch_step.svg"))
    analysis.write_csv(os.path.join(args.out, "pitch_step.csv"), {"t": t, "theta": y})
    closed_fr = analysis.frequency_response(_closed_loop(params, K))
    open_fr = analysis.frequency_response(_open_loop(params, K))
    plots.bode_svg([("closed loop", closed_fr), ("open loop", open_fr)],
                   os.path.join(args.out, "pitch_bode.svg"))
    closed_fr.to_csv(os.path.join(args.out, "pitch_bode_closed.csv"))
    open_fr.to_csv(os.path.join(args.out, "pitch_bode_open.csv"))

    # reduced lateral
    lateral = run_scenario(ScenarioConfig(
        ref=TrajectoryRef(x_d=2.0, ydot_d=2.0), guidance=GuidanceGains(k_x=0.5),
        variant="reduced-lateral", navigation=False, duration=35.0,
    ))
    plots.trajectory_svg(lateral, os.path.join(args.out, "lateral_reduced.svg"))

    # reduced vertical
    vertical = run_scenario(ScenarioConfig(
        ref=TrajectoryRef(x_d=0.0, ydot_d=2.0), variant="reduced-vertical",
        navigation=False, duration=15.0,
    ))
    plots.trajectory_svg(vertical, os.path.join(args.out, "vertical_reduced.svg"))

    # full 2-D with navigation
    full = run_scenario(ScenarioConfig(seed=seed))
    plots.trajectory_svg(full, os.path.join(args.out, "full2d_response.svg"))
    plots.estimates_svg(full, os.path.join(args.out, "full2d_estimates.svg"))
    full.to_csv(os.path.join(args.out, "full2d_trace.csv"))

    results = run_all()
    table_path = os.path.join(args.out, "acceptance_table.txt")
    with open(table_path, "w") as fh:
        for result in results:
            fh.write(result.line() + "\n")
    for result in results:
        print(f"{result.line()}  [{result.runtime_s:.2f}s / limit {result.runtime_limit_s:.0f}s]")
    overall = all(r.passed for r in results)
    print(f"acceptance: {'PASS' if overall else 'FAIL'}; artifacts in {args.out}")
    return 0 if overall else 1


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    handlers = {
        "design": cmd_design,
        "simulate": cmd_simulate,
        "analyze": cmd_analyze,
        "reproduce": cmd_reproduce,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
