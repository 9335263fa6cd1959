"""Delimited data files and key = value summaries.

Every float is printed with 17 significant digits so a parse of the file
recovers the exact binary value, and nothing time- or host-dependent is
written: identical runs produce byte-identical files.

Trajectory files are tab separated: time, state norm, the n coefficients,
and a side tag. Ordinary nodes carry the tag "."; an impulse node emits
two rows, the left limit tagged L and the right limit tagged R, so a
plotting tool can draw the jump without parsing jump records.
"""
import os

import numpy as np

from .core import state_norm

F = "%.17g"


def _fmt_row(time, vec, side):
    cells = [F % time, F % state_norm(vec)]
    cells.extend(F % v for v in np.atleast_1d(vec))
    cells.append(side)
    return "\t".join(cells)


def trajectory_lines(traj):
    dim = traj.samples.shape[1]
    head = ["time", "norm"] + ["c%d" % (j + 1) for j in range(dim)] + ["side"]
    lines = ["# " + "\t".join(head)]
    rights = {traj.index_of(t): right for t, _, right in traj.jump_records}
    for j in range(traj.node_count):
        t = traj.start_time + j * traj.grid_step
        u = traj.samples[j]
        if j in rights:
            lines.append(_fmt_row(t, u, "L"))
            lines.append(_fmt_row(t, rights[j], "R"))
        else:
            lines.append(_fmt_row(t, u, "."))
    return lines


def write_trajectory(path, traj):
    with open(path, "w") as fh:
        fh.write("\n".join(trajectory_lines(traj)) + "\n")


def decay_lines(record):
    cols = ["time", "e_left", "e_right"]
    arrays = [record.times, record.e_left, record.e_right]
    if record.applicable:
        cols += ["envelope_sigma", "envelope_product"]
        arrays += [record.envelope_sigma, record.envelope_product]
    lines = ["# " + "\t".join(cols)]
    for row in zip(*arrays):
        lines.append("\t".join(F % v for v in row))
    return lines


def write_decay(path, record):
    with open(path, "w") as fh:
        fh.write("\n".join(decay_lines(record)) + "\n")


def _fmt_value(value):
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, float):
        return F % value
    if isinstance(value, (tuple, list)):
        return ", ".join(F % v for v in value)
    return str(value)


def summary_lines(pairs):
    return ["%s = %s" % (k, _fmt_value(v)) for k, v in pairs]


def write_summary(path, pairs):
    with open(path, "w") as fh:
        fh.write("\n".join(summary_lines(pairs)) + "\n")


def hypothesis_pairs(rep):
    return [
        ("M", rep.M), ("nu0", rep.nu0), ("omega", rep.omega),
        ("delay_r", rep.delay_r),
        ("c0", rep.c0), ("c1", rep.c1), ("c2", rep.c2), ("a", rep.a),
        ("H3_margin", rep.H3_margin),
        ("H3prime_margin", rep.H3prime_margin),
        ("kappa", rep.kappa), ("sigma", rep.sigma), ("rho", rep.rho),
        ("h3_holds", rep.h3_holds), ("h3prime_holds", rep.h3prime_holds),
        ("constants_verified", rep.constants_verified),
        ("worst_c0", rep.worst_c0), ("worst_c1", rep.worst_c1),
        ("worst_c2", rep.worst_c2), ("worst_a", rep.worst_a),
        ("spot_samples", rep.spot_samples), ("spot_seed", rep.spot_seed),
    ]


def solution_pairs(sol):
    return [
        ("period_omega", sol.period_omega),
        ("nodes_per_period", sol.nodes_per_period),
        ("grid_step", sol.grid_step),
        ("residual", sol.residual),
        ("iterations_used", sol.iterations_used),
        ("last_delta", sol.last_delta),
        ("contraction_estimate", sol.contraction_estimate),
        ("measured_ratio", sol.measured_ratio),
        ("unverified_contraction", sol.unverified_contraction),
    ]


def decay_pairs(rec):
    return [
        ("c_phi", rec.c_phi), ("sigma", rec.sigma), ("rho", rec.rho),
        ("applicable", rec.applicable), ("allowance", rec.allowance),
        ("sigma_bound_holds", rec.sigma_bound_holds),
        ("sigma_max_excess", rec.sigma_max_excess),
        ("product_bound_holds", rec.product_bound_holds),
        ("product_max_excess", rec.product_max_excess),
        ("fitted_rate", rec.fitted_rate),
    ]


def write_pipeline(out, out_dir):
    """All files for one pipeline run: report, orbit, decay data, summary."""
    os.makedirs(out_dir, exist_ok=True)
    write_summary(os.path.join(out_dir, "report.txt"),
                  hypothesis_pairs(out.hypothesis))
    write_trajectory(os.path.join(out_dir, "period.tsv"),
                     out.solution.one_period)
    write_decay(os.path.join(out_dir, "decay.tsv"), out.decay)
    pairs = [("exit_code", out.exit_code),
             ("existence_certified", out.existence_certified),
             ("stability_applicable", out.stability_applicable),
             ("stability_certified", out.stability_certified),
             ("sigma_bound_holds", out.sigma_bound_holds)]
    pairs += solution_pairs(out.solution)
    pairs += decay_pairs(out.decay)
    write_summary(os.path.join(out_dir, "summary.txt"), pairs)
