"""Initial value problem integration for u' + A u = F(t, u, u_t) with impulses.

Exponential time differencing with exact per-mode weights: the linear
part is propagated by T(h) in closed form, so stiffness from large
eigenvalues costs nothing. ETD1 freezes F at the post-jump left endpoint
of each step; ETD2 adds a predictor-corrector term using the ETD1
predictor at the right endpoint. Impulses land exactly on grid nodes,
are applied to the left limit before the step, and are recorded as
(time, left, right) on the returned trajectory.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    GRID_SNAP_TOL,
    HistorySegment,
    ImpulseSchedule,
    Nonlinearity,
    SpectralOperator,
    Trajectory,
    snap_to_grid,
)
from .errors import (
    ConfigurationError,
    InvalidInputError,
    NumericFailureError,
)

_SCHEMES = ("ETD1", "ETD2")


@dataclass(frozen=True)
class IntegratorConfig:
    """Grid step and scheme choice.

    grid_step must divide the delay, the period, and the impulse gaps of
    the problem it is used with (checked where the grid is built). The
    periodic solvers treat grid_step as a resolution request and use the
    nearest step that divides the period exactly.
    """

    grid_step: float
    scheme: str = "ETD2"

    def __post_init__(self):
        if not np.isfinite(self.grid_step) or self.grid_step <= 0.0:
            raise InvalidInputError("grid_step must be finite and > 0")
        scheme = str(self.scheme).upper()
        if scheme not in _SCHEMES:
            raise InvalidInputError(
                "scheme must be one of %s, got %r" % ((_SCHEMES,), self.scheme))
        object.__setattr__(self, "scheme", scheme)

    @property
    def use_etd2(self):
        return self.scheme == "ETD2"


class ProblemSpec:
    """The full problem data: operator, nonlinearity, impulses, delay, period."""

    def __init__(self, operator, nonlinearity, impulses, delay_r, period_omega):
        if not isinstance(operator, SpectralOperator):
            raise InvalidInputError("operator must be a SpectralOperator")
        if not isinstance(nonlinearity, Nonlinearity):
            raise InvalidInputError("nonlinearity must be a Nonlinearity")
        if not isinstance(impulses, ImpulseSchedule):
            raise InvalidInputError("impulses must be an ImpulseSchedule")
        if not np.isfinite(delay_r) or delay_r <= 0.0:
            raise InvalidInputError("delay_r must be finite and > 0")
        if not np.isfinite(period_omega) or period_omega <= 0.0:
            raise InvalidInputError("period_omega must be finite and > 0")
        tol = GRID_SNAP_TOL * period_omega
        if abs(nonlinearity.period_omega - period_omega) > tol \
                or abs(impulses.period_omega - period_omega) > tol:
            raise InvalidInputError(
                "period mismatch: problem omega %r, nonlinearity %r, impulses %r"
                % (period_omega, nonlinearity.period_omega, impulses.period_omega))
        self.operator = operator
        self.nonlinearity = nonlinearity
        self.impulses = impulses
        self.delay_r = float(delay_r)
        self.period_omega = float(period_omega)

    @property
    def dimension(self):
        return self.operator.dimension


def etd_weights(lam, h):
    """Per-mode ETD weights (E, w1, w2) for step h.

    E = exp(-z), w1 = h (1 - E)/z, w2 = h (z - 1 + E)/z^2 with z = lam h.
    Series are used for |z| < 1e-3 to avoid cancellation; the z -> 0
    limits are w1 -> h and w2 -> h/2.
    """
    lam = np.asarray(lam, dtype=float)
    z = lam * h
    E = np.exp(-z)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    w1 = h * np.where(small,
                      1.0 - z / 2 + z ** 2 / 6 - z ** 3 / 24 + z ** 4 / 120,
                      -np.expm1(-zs) / zs)
    w2 = h * np.where(small,
                      0.5 - z / 6 + z ** 2 / 24 - z ** 3 / 120 + z ** 4 / 720,
                      (zs + np.expm1(-zs)) / zs ** 2)
    return E, w1, w2


def _impulse_nodes(impulses, h, node_start, node_end, offset):
    """Scan indices and map indices of impulses in (t_start, t_end].

    node_start/node_end are the grid indices of t_start and t_end;
    offset is the scan-array index of t_start. Integer arithmetic after
    snapping t_i and omega keeps late periods drift-free.
    """
    p = impulses.count
    if p == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    K = snap_to_grid(impulses.period_omega, h, what="period_omega")
    base = [snap_to_grid(t, h, what="impulse time") for t in impulses.times]
    nodes, maps = [], []
    j = node_start // K - 1
    while j * K <= node_end:
        for kmap, kb in enumerate(base):
            node = kb + j * K
            if node_start < node <= node_end:
                nodes.append(offset + node - node_start)
                maps.append(kmap)
        j += 1
    return np.asarray(nodes, dtype=np.int64), np.asarray(maps, dtype=np.int64)


def _segment_from_arrays(u, uR, jump_set, top_idx, m, h, r, top_value):
    """Build the history window ending at node top_idx with a replaced top."""
    samples = np.array(u[top_idx - m:top_idx + 1])
    samples[-1] = top_value
    jumps = []
    for idx in range(top_idx - m, top_idx):
        if idx in jump_set:
            jumps.append(((idx - top_idx) * h, uR[idx]))
    return HistorySegment(r, h, samples, jumps)


def _generic_scan(problem, E, w1, w2, u, uR, jump_nodes, jump_maps,
                  m, k_start, h, node_times, use_etd2, jump_set):
    """Python fallback scan calling the nonlinearity's generic evaluation.

    jump_set starts as the node indices of history jumps and grows as
    impulses are applied, so window construction sees every right limit.
    """
    T = u.shape[0] - 1
    F = problem.nonlinearity
    r = m * h
    jp = 0
    nj = len(jump_nodes)
    for k in range(k_start, T):
        if jp < nj and jump_nodes[jp] == k:
            uR[k] = u[k] + problem.impulses.apply(jump_maps[jp], u[k])
            jump_set.add(k)
            jp += 1
        else:
            uR[k] = u[k]
        seg = _segment_from_arrays(u, uR, jump_set, k, m, h, r, uR[k])
        fL = F(node_times[k], uR[k], seg)
        uhat = E * uR[k] + w1 * fL
        if use_etd2:
            seg2 = _segment_from_arrays(u, uR, jump_set, k + 1, m, h, r, uhat)
            fR = F(node_times[k + 1], uhat, seg2)
            u[k + 1] = uhat + w2 * (fR - fL)
        else:
            u[k + 1] = uhat


def _prefill_history(u, uR, phi, m):
    u[:m + 1] = phi.samples
    uR[:m + 1] = phi.samples
    for idx, right in phi._overrides.items():
        uR[idx] = right


def _tabulate_nodes(func, times, dim):
    """Evaluate a scalar- or vector-valued function of time at every node."""
    if func is None:
        return None
    first = np.asarray(func(times[0]), dtype=float)
    if first.ndim == 0:
        out = np.empty(times.size)
        out[0] = first
        for i in range(1, times.size):
            out[i] = func(times[i])
        return out
    out = np.empty((times.size, dim))
    out[0] = first
    for i in range(1, times.size):
        out[i] = np.asarray(func(times[i]), dtype=float)
    return out


def integrate_ivp(problem, phi, t_end, cfg, t_start=0.0):
    """Integrate the impulsive delay IVP on [t_start, t_end].

    phi is the history on [t_start - r, t_start]; the returned Trajectory
    covers [t_start - r, t_end] and its first r/h + 1 nodes replay phi.
    t_start and t_end must be grid nodes; the step must divide the delay,
    every impulse time, and (when impulses are present) the period, so
    jumps land exactly on nodes. The nonlinearity and the (periodically
    extended) impulse schedule see absolute time, which is what makes
    restarting from history_at(traj, t1, r) reproduce the original tail.
    """
    if not isinstance(phi, HistorySegment):
        raise InvalidInputError("phi must be a HistorySegment")
    h = cfg.grid_step
    r = problem.delay_r
    n = problem.dimension
    m = snap_to_grid(r, h, what="delay_r")
    if abs(phi.delay_r - r) > GRID_SNAP_TOL * max(1.0, r):
        raise InvalidInputError(
            "history delay %r does not match problem delay %r" % (phi.delay_r, r))
    if abs(phi.grid_step - h) > GRID_SNAP_TOL * h:
        raise ConfigurationError(
            "history grid step %r does not match integrator step %r"
            % (phi.grid_step, h))
    if phi.dimension != n:
        raise InvalidInputError(
            "history dimension %d does not match problem dimension %d"
            % (phi.dimension, n))
    if not np.isfinite(t_start) or not np.isfinite(t_end) or t_end <= t_start:
        raise InvalidInputError("need finite t_start < t_end")
    s0 = snap_to_grid(t_start, h, what="t_start")
    steps = snap_to_grid(t_end, h, what="t_end") - s0

    jump_nodes, jump_maps = _impulse_nodes(problem.impulses, h,
                                           s0, s0 + steps, offset=m)

    total = m + steps
    u = np.empty((total + 1, n))
    uR = np.empty((total + 1, n))
    _prefill_history(u, uR, phi, m)

    E, w1, w2 = etd_weights(problem.operator.eigenvalues, h)
    node_times = (s0 - m + np.arange(total + 1)) * h
    use_etd2 = cfg.use_etd2

    # impulse exactly at t_end: recorded on the trajectory, never stepped over
    terminal = jump_nodes.size and jump_nodes[-1] == total
    scan_nodes = jump_nodes[:-1] if terminal else jump_nodes
    scan_maps = jump_maps[:-1] if terminal else jump_maps

    affine = problem.nonlinearity.affine
    if affine is not None:
        gain = _tabulate_nodes(affine.state_gain, node_times, n)
        if gain is None:
            gain = np.zeros(total + 1)
        g = _tabulate_nodes(affine.forcing, node_times, n)
        if g is None:
            g = np.zeros((total + 1, n))
        has_delay = affine.kernel is not None
        if has_delay:
            win_times = -r + np.arange(m + 1) * h
            tw = 0.5 * h * np.asarray(affine.kernel(win_times), dtype=float)
        else:
            tw = np.zeros(m + 1)
        cb = problem.impulses.apply
        _kernels.affine_ivp_scan(E, w1, w2, tw, gain, g, u, uR,
                                 scan_nodes, scan_maps, cb, m, m,
                                 use_etd2, has_delay)
        uR[total] = u[total]
    else:
        _generic_scan(problem, E, w1, w2, u, uR, scan_nodes, scan_maps,
                      m, m, h, node_times, use_etd2,
                      jump_set=set(phi._overrides))
        uR[total] = u[total]

    if terminal:
        uR[total] = u[total] + problem.impulses.apply(jump_maps[-1], u[total])

    if not np.all(np.isfinite(u)):
        bad = int(np.argmax(~np.all(np.isfinite(u), axis=1)))
        raise NumericFailureError(
            "non-finite state during integration",
            at_time=float(node_times[bad]))

    records = [(float(node_times[idx]), phi.samples[idx], right)
               for idx, right in sorted(phi._overrides.items())]
    for node, kmap in zip(jump_nodes, jump_maps):
        records.append((float(node_times[node]), u[node].copy(), uR[node].copy()))
    return Trajectory(h, float(node_times[0]), u, records)


def history_at(traj, t, r):
    """Restriction of a trajectory to [t - r, t], re-indexed to [-r, 0].

    Samples stay left-continuous; jump records with times in [t - r, t)
    are carried over at their window offsets. A jump exactly at t
    describes behavior after the window and is dropped.
    """
    if not isinstance(traj, Trajectory):
        raise InvalidInputError("traj must be a Trajectory")
    if not np.isfinite(r) or r <= 0.0:
        raise InvalidInputError("r must be finite and > 0")
    h = traj.grid_step
    m = snap_to_grid(r, h, what="window length r")
    idx = traj.index_of(t)
    if idx - m < 0:
        raise InvalidInputError(
            "window [%r, %r] escapes the trajectory domain starting at %r"
            % (t - r, t, traj.start_time))
    samples = traj.samples[idx - m:idx + 1]
    jumps = [((j - idx) * h, traj._rights[j])
             for j in sorted(traj._rights)
             if idx - m <= j < idx]
    return HistorySegment(r, h, samples, jumps)
