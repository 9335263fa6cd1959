"""Command line: simulate, periodic, verify, stability, heat.

Each subcommand reads an optional config file, applies flag overrides,
runs the corresponding library call, writes data files into the output
directory, and prints the summary lines. Exit codes: 0 success, 2
configuration or input error, 3 non-convergence, 4 numeric failure,
5 certificate failure, 6 stability certificate inapplicable. verify
always exits 0 when it runs: reporting margins is its whole job, a
negative margin is an answer, not a failure.
"""
import argparse
import dataclasses
import math
import os
import sys

import numpy as np

from . import reports
from .analysis import build_report, decay_experiment
from .config import OMEGA, RunConfig, emit_config, parse_config, resolved_step
from .core import (
    AffineDelayForm,
    HistorySegment,
    ImpulseSchedule,
    Nonlinearity,
    SpectralOperator,
)
from .errors import (
    EXIT_CERTIFICATE_FAILED,
    EXIT_CERTIFICATE_INAPPLICABLE,
    EXIT_OK,
    ImpulseDDEError,
)
from .heat import build_heat_problem, initial_history, run_heat_pipeline
from .integrate import IntegratorConfig, ProblemSpec, integrate_ivp
from .periodic import picard_periodic


def build_linear_problem(cfg):
    """ProblemSpec for the linear kind: diagonal A, sin forcing, fixed jumps.

    The forcing is amplitude * sin(t) on the first coordinate; impulses
    are state-independent jumps of the given sizes on the first
    coordinate, so their Lipschitz constants are zero and the hypothesis
    margins depend only on the declared forcing bound.
    """
    h = resolved_step(cfg)
    dim = len(cfg.eigenvalues)
    operator = SpectralOperator(list(cfg.eigenvalues))
    amp = float(cfg.forcing_amplitude)
    e1 = np.zeros(dim)
    e1[0] = 1.0
    forcing = (lambda t: (amp * math.sin(t)) * e1) if amp else None
    affine = AffineDelayForm(state_gain=None, kernel=None, forcing=forcing)
    F = Nonlinearity.from_affine(affine, OMEGA, declared_c0=abs(amp),
                                 declared_c1=0.0, declared_c2=0.0)

    def const_map(value):
        jump = value * e1
        return lambda x: jump

    maps = [const_map(v) for v in cfg.impulse_values]
    impulses = ImpulseSchedule(OMEGA, list(cfg.impulse_times), maps,
                               [0.0] * len(maps))
    delay_r = cfg.delay_r if cfg.delay_r > 0.0 else h
    return ProblemSpec(operator, F, impulses, delay_r, OMEGA)


def _build(cfg):
    if cfg.kind == "heat":
        return build_heat_problem(cfg.heat)
    return build_linear_problem(cfg)


def _history(cfg, problem, h):
    if cfg.kind == "heat":
        return initial_history(cfg.heat)
    dim = len(cfg.eigenvalues)
    return HistorySegment.zeros(problem.delay_r, h, dim)


def _emit(cfg, pairs, files):
    os.makedirs(cfg.out_dir, exist_ok=True)
    for name, writer in files:
        writer(os.path.join(cfg.out_dir, name))
    path = os.path.join(cfg.out_dir, "summary.txt")
    reports.write_summary(path, pairs)
    for line in reports.summary_lines(pairs):
        print(line)


def cmd_simulate(cfg):
    problem = _build(cfg)
    h = resolved_step(cfg)
    icfg = IntegratorConfig(h, cfg.scheme)
    phi = _history(cfg, problem, h)
    traj = integrate_ivp(problem, phi, cfg.t_end, icfg)
    pairs = [("subcommand", "simulate"), ("t_end", cfg.t_end),
             ("grid_step", h), ("scheme", icfg.scheme),
             ("nodes", traj.node_count), ("pc_norm", traj.pc_norm()),
             ("impulses_applied", len(traj.jump_records))]
    _emit(cfg, pairs, [("trajectory.tsv",
                        lambda p: reports.write_trajectory(p, traj))])
    return EXIT_OK


def cmd_periodic(cfg):
    problem = _build(cfg)
    h = resolved_step(cfg)
    icfg = IntegratorConfig(h, cfg.scheme)
    sol = picard_periodic(problem, None, cfg.tol, cfg.max_iter, icfg)
    # cross-check: run the flow from the computed orbit's own history and
    # measure how far the last period drifts from the orbit
    n_check = min(cfg.n_periods, 3)
    traj = integrate_ivp(problem, sol.history_segment(problem.delay_r),
                         n_check * OMEGA, icfg)
    N = sol.nodes_per_period
    idx0 = traj.index_of((n_check - 1) * OMEGA)
    last = traj.samples[idx0:idx0 + N + 1]
    gap = float(np.max(np.linalg.norm(last - sol.one_period.samples, axis=1)))
    pairs = [("subcommand", "periodic")]
    pairs += reports.solution_pairs(sol)
    pairs += [("poincare_gap", gap), ("poincare_periods", n_check)]
    _emit(cfg, pairs, [("period.tsv",
                        lambda p: reports.write_trajectory(p, sol.one_period))])
    return EXIT_OK


def cmd_verify(cfg):
    problem = _build(cfg)
    rep = build_report(problem, seed=cfg.seed)
    pairs = [("subcommand", "verify")] + reports.hypothesis_pairs(rep)
    _emit(cfg, pairs, [])
    return EXIT_OK


def cmd_stability(cfg):
    problem = _build(cfg)
    h = resolved_step(cfg)
    icfg = IntegratorConfig(h, cfg.scheme)
    sol = picard_periodic(problem, None, cfg.tol, cfg.max_iter, icfg)
    phi = _history(cfg, problem, h)
    rec = decay_experiment(problem, sol, phi, cfg.n_periods, icfg)
    pairs = [("subcommand", "stability")] + reports.decay_pairs(rec)
    _emit(cfg, pairs, [("decay.tsv", lambda p: reports.write_decay(p, rec))])
    if not rec.applicable:
        return EXIT_CERTIFICATE_INAPPLICABLE
    certified = bool(rec.product_bound_holds and rec.fitted_rate is not None
                     and rec.fitted_rate >= rec.sigma)
    return EXIT_OK if certified else EXIT_CERTIFICATE_FAILED


def cmd_heat(cfg):
    out = run_heat_pipeline(cfg.heat, tol=cfg.tol, max_iter=cfg.max_iter,
                            n_periods=cfg.n_periods, scheme=cfg.scheme,
                            out_dir=cfg.out_dir)
    with open(os.path.join(cfg.out_dir, "summary.txt")) as fh:
        print(fh.read(), end="")
    return out.exit_code


_COMMANDS = {
    "simulate": cmd_simulate,
    "periodic": cmd_periodic,
    "verify": cmd_verify,
    "stability": cmd_stability,
    "heat": cmd_heat,
}


def make_parser():
    parser = argparse.ArgumentParser(
        prog="impulsedde",
        description="Periodic solutions and stability certificates for "
                    "impulsive delay evolution equations.")
    parser.add_argument("subcommand", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="config file path")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--seed", type=int, help="random seed override")
    parser.add_argument("--scheme", choices=["etd1", "etd2"],
                        help="integrator scheme override")
    parser.add_argument("--step", type=float, help="grid step override")
    parser.add_argument("--emit-config", action="store_true",
                        help="print the resolved config and exit")
    return parser


def resolve(args):
    cfg = parse_config(args.config) if args.config else RunConfig()
    cfg.subcommand = args.subcommand
    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.heat = _replace_heat(cfg.heat, seed=args.seed)
    if args.scheme is not None:
        cfg.scheme = args.scheme.upper()
    if args.step is not None:
        cfg.grid_step = args.step
        cfg.heat = _replace_heat(cfg.heat, grid_step=args.step)
    return cfg


def _replace_heat(heat, **kw):
    return dataclasses.replace(heat, **kw)


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        if args.emit_config:
            print(emit_config(cfg), end="")
            return EXIT_OK
        return _COMMANDS[args.subcommand](cfg)
    except ImpulseDDEError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
