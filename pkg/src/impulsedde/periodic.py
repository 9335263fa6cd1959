"""Periodic mild solutions.

linear_periodic realizes the linear solution operator: the unique
periodic initial value is recovered from the zero-start scan via
x0 = (I - T(omega))^{-1} [ integral of T(omega - s) f(s) ds
                           + sum of T(omega - t_i) v_i ]
where the bracket is exactly the zero-start mild solution at omega, and
the full orbit is that scan plus the homogeneous decay from x0, so the
seam residual is rounding-level by construction.

picard_periodic iterates the composed operator: evaluate the forcing and
the jump values on the current iterate, solve the linear periodic
problem, repeat. The forcing is evaluated with post-jump window tops and
ETD1 predictors at right endpoints (see _kernels), which makes the fixed
point agree with the explicit IVP flow to rounding rather than to the
scheme's order.
"""
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analysis import hypothesis_numbers
from .core import (
    GRID_SNAP_TOL,
    HistorySegment,
    SpectralOperator,
    Trajectory,
    inv_I_minus_T_omega,
    snap_to_grid,
    state_norm,
)
from .errors import (
    ConfigurationError,
    InvalidInputError,
    NonConvergenceError,
    NumericFailureError,
    UnsupportedConfigurationError,
)
from .integrate import etd_weights, history_at, integrate_ivp


@dataclass
class PeriodicSolution:
    """One period of a periodic orbit plus solver diagnostics.

    one_period covers [0, omega] with matching endpoint samples (impulses
    sit strictly inside, so the seam needs no jump bookkeeping). The
    accessors wrap node indices periodically.
    """

    one_period: Trajectory
    period_omega: float
    residual: float
    iterations_used: int
    contraction_estimate: float = None
    measured_ratio: float = None
    unverified_contraction: bool = False
    last_delta: float = None
    deltas: list = field(default_factory=list)

    @property
    def nodes_per_period(self):
        return self.one_period.node_count - 1

    @property
    def grid_step(self):
        return self.one_period.grid_step

    def sample_at_node(self, j):
        """Left-continuous value at global node index j (wraps periodically)."""
        return self.one_period.samples[int(j) % self.nodes_per_period]

    def right_at_node(self, j):
        return self.one_period.right_at(int(j) % self.nodes_per_period)

    def value(self, t):
        """Left-continuous value at a grid time, any number of periods away."""
        j = snap_to_grid(t, self.grid_step, what="time")
        return self.sample_at_node(j).copy()

    def history_segment(self, r):
        """The periodic history window u*_0 on [-r, 0] (wraps through omega)."""
        h = self.grid_step
        m = snap_to_grid(r, h, what="window length r")
        N = self.nodes_per_period
        if m > N:
            raise UnsupportedConfigurationError(
                "window r = %r exceeds the period omega = %r" % (r, self.period_omega))
        samples = np.array([self.sample_at_node(j) for j in range(N - m, N + 1)])
        jumps = []
        for j in range(N - m, N):
            right = self.right_at_node(j)
            if right is not self.one_period.samples[j % N]:
                jumps.append(((j - N) * h, right))
        return HistorySegment(r, h, samples, jumps)


def _resolve_period_grid(omega, cfg):
    """Nodes per period for a requested step; the effective step divides omega."""
    N = int(round(omega / cfg.grid_step))
    if N < 2:
        raise ConfigurationError(
            "grid step %r leaves fewer than 2 nodes per period %r"
            % (cfg.grid_step, omega))
    return N, omega / N


def _forcing_grid(forcing, node_times, dim):
    if forcing is None:
        return np.zeros((node_times.size, dim))
    if callable(forcing):
        rows = [np.atleast_1d(np.asarray(forcing(t), dtype=float))
                for t in node_times]
        fgrid = np.asarray(rows, dtype=float)
    else:
        fgrid = np.asarray(forcing, dtype=float)
        if fgrid.ndim == 1:
            fgrid = fgrid[:, None]
    if fgrid.shape != (node_times.size, dim):
        raise InvalidInputError(
            "forcing samples must have shape (%d, %d), got %r"
            % (node_times.size, dim, fgrid.shape))
    return fgrid


def _impulse_value_nodes(impulse_values, h, N, dim):
    nodes, vals = [], []
    last = 0
    for t_i, v_i in impulse_values:
        k = snap_to_grid(t_i, h, what="impulse time")
        if not 0 < k < N:
            raise InvalidInputError(
                "impulse time %r must lie strictly inside (0, omega)" % t_i)
        if k <= last:
            raise InvalidInputError("impulse times must be strictly increasing")
        last = k
        v = np.asarray(v_i, dtype=float)
        if v.shape != (dim,):
            raise InvalidInputError(
                "impulse value at %r has shape %r, expected (%d,)"
                % (t_i, v.shape, dim))
        nodes.append(k)
        vals.append(v)
    if nodes:
        return np.asarray(nodes, dtype=np.int64), np.asarray(vals, dtype=float)
    return np.empty(0, dtype=np.int64), np.empty((0, dim), dtype=float)


def _solve_linear_period(A, fL, fR, jump_nodes, jump_vals, omega, N, h, use_etd2):
    """Zero-start scan, periodic initial value, superposed orbit."""
    E, w1, w2 = etd_weights(A.eigenvalues, h)
    w = _kernels.linear_scan(E, w1, w2, fL, fR, jump_nodes, jump_vals,
                             np.zeros(A.dimension), use_etd2)
    x0 = inv_I_minus_T_omega(A, omega, w[N])
    t = np.arange(N + 1) * h
    u = np.exp(-t[:, None] * A.eigenvalues[None, :]) * x0[None, :] + w
    return u


def linear_periodic(A, forcing, impulse_values, omega, cfg):
    """Unique periodic solution of u' + A u = f(t) with additive jumps v_i.

    forcing is a function of time or an array of node samples on [0,
    omega]; impulse_values is a sequence of (time, vector) pairs with
    times strictly inside the period. The map (f, v) -> solution is
    linear. Requires an exponentially stable operator.
    """
    if not isinstance(A, SpectralOperator):
        raise InvalidInputError("A must be a SpectralOperator")
    if not np.isfinite(omega) or omega <= 0.0:
        raise InvalidInputError("omega must be finite and > 0")
    A.require_stable()
    N, h = _resolve_period_grid(omega, cfg)
    node_times = np.arange(N + 1) * h
    fgrid = _forcing_grid(forcing, node_times, A.dimension)
    jump_nodes, jump_vals = _impulse_value_nodes(impulse_values, h, N, A.dimension)

    u = _solve_linear_period(A, fgrid[:N], fgrid[1:], jump_nodes, jump_vals,
                             omega, N, h, cfg.use_etd2)
    if not np.all(np.isfinite(u)):
        raise NumericFailureError("non-finite state in linear periodic solve")
    records = [(float(node_times[k]), u[k].copy(), u[k] + v)
               for k, v in zip(jump_nodes, jump_vals)]
    residual = state_norm(u[N] - u[0])
    return PeriodicSolution(
        one_period=Trajectory(h, 0.0, u, records),
        period_omega=float(omega),
        residual=residual,
        iterations_used=1,
    )


def _generic_periodic_forcing(problem, u, uR, node_times, impulse_node_set,
                              E, w1, m, h, N, use_etd2):
    """Per-node window construction for nonlinearities without affine form."""
    F = problem.nonlinearity
    r = m * h
    n = u.shape[1]
    fL = np.empty((N, n))
    fR = np.empty((N, n))

    def window(top_k, top_value):
        samples = np.empty((m + 1, n))
        jumps = []
        for i in range(m + 1):
            jj = (top_k - m + i) % N
            samples[i] = u[jj]
            if i < m and jj in impulse_node_set:
                jumps.append(((i - m) * h, uR[jj]))
        samples[m] = top_value
        return HistorySegment(r, h, samples, jumps)

    for k in range(N):
        fL[k] = F(node_times[k], uR[k], window(k, uR[k]))
        uhat = E * uR[k] + w1 * fL[k]
        if use_etd2:
            fR[k] = F(node_times[k + 1], uhat, window(k + 1, uhat))
    return fL, fR


def picard_periodic(problem, guess, tol, max_iter, cfg):
    """Periodic solution of the full problem by Picard iteration.

    Each sweep evaluates the forcing F(t, u, u_t) and the jump values
    I_i(u(t_i)) on the current iterate and solves the linear periodic
    problem. Convergence is measured in the sup norm over grid samples;
    the returned measured_ratio is the last successive-difference ratio,
    to be compared with contraction_estimate (the declared-constant
    kappa). A non-positive declared margin flags unverified_contraction
    but the iteration still runs.
    """
    A = problem.operator
    A.require_stable()
    if not np.isfinite(tol) or tol <= 0.0:
        raise InvalidInputError("tol must be finite and > 0")
    if max_iter < 1:
        raise InvalidInputError("max_iter must be >= 1")
    omega = problem.period_omega
    N, h = _resolve_period_grid(omega, cfg)
    m = snap_to_grid(problem.delay_r, h, what="delay_r")
    if m > N:
        raise UnsupportedConfigurationError(
            "delay r = %r exceeds the period omega = %r; the periodic window "
            "wrap supports r <= omega only" % (problem.delay_r, omega))
    n = problem.dimension
    sched = problem.impulses
    jump_nodes = np.asarray(
        [snap_to_grid(t, h, what="impulse time") for t in sched.times],
        dtype=np.int64)
    if jump_nodes.size and (jump_nodes[0] <= 0 or jump_nodes[-1] >= N):
        raise ConfigurationError("impulse times must map to nodes inside (0, N)")

    F = problem.nonlinearity
    if None in (F.declared_c0, F.declared_c1, F.declared_c2):
        kappa = None
        unverified = True
    else:
        numbers = hypothesis_numbers(
            M=A.growth_bound_M, nu0=-float(A.eigenvalues[0]), omega=omega,
            delay_r=problem.delay_r, c0=F.declared_c0, c1=F.declared_c1,
            c2=F.declared_c2, a=sched.lipschitz_a)
        kappa = numbers["kappa"]
        unverified = not (numbers["H3_margin"] > 0.0)

    node_times = np.arange(N + 1) * h
    E, w1, w2 = etd_weights(A.eigenvalues, h)
    use_etd2 = cfg.use_etd2

    affine = F.affine
    if affine is not None:
        gain = np.zeros(N + 1)
        if affine.state_gain is not None:
            gain = np.array([affine.state_gain(t) for t in node_times])
        g = np.zeros((N + 1, n))
        if affine.forcing is not None:
            g = np.array([np.asarray(affine.forcing(t), dtype=float)
                          for t in node_times])
        has_delay = affine.kernel is not None
        if has_delay:
            win_times = -m * h + np.arange(m + 1) * h
            tw = 0.5 * h * np.asarray(affine.kernel(win_times), dtype=float)
        else:
            tw = np.zeros(m + 1)

    if guess is None:
        u = np.zeros((N + 1, n))
    elif isinstance(guess, PeriodicSolution):
        if guess.one_period.samples.shape != (N + 1, n):
            raise InvalidInputError(
                "guess grid %r does not match solver grid (%d, %d)"
                % (guess.one_period.samples.shape, N + 1, n))
        u = np.array(guess.one_period.samples)
    else:
        raise InvalidInputError("guess must be None or a PeriodicSolution")

    impulse_node_set = set(int(k) for k in jump_nodes)

    def jumps_of(state):
        vals = np.array([sched.apply(i, state[k]) for i, k in
                         enumerate(jump_nodes)]).reshape(len(jump_nodes), n)
        rights = np.array(state)
        for k, v in zip(jump_nodes, vals):
            rights[k] = state[k] + v
        return vals, rights

    deltas = []
    ratio = None
    converged = False
    solves = 0
    jump_vals, uR = jumps_of(u)
    while solves < max_iter:
        if affine is not None:
            fL, fR = _kernels.picard_forcing(E, w1, w2, tw, gain, g, u, uR,
                                             m, use_etd2, has_delay)
        else:
            fL, fR = _generic_periodic_forcing(
                problem, u, uR, node_times, impulse_node_set,
                E, w1, m, h, N, use_etd2)
        unew = _solve_linear_period(A, fL, fR, jump_nodes, jump_vals,
                                    omega, N, h, use_etd2)
        solves += 1
        if not np.all(np.isfinite(unew)):
            raise NumericFailureError(
                "non-finite state in Picard sweep %d" % solves)
        vals_new, uR_new = jumps_of(unew)
        # Successive difference in the discrete PC sup-norm: samples and
        # right limits both count.
        delta = float(max(np.max(np.linalg.norm(unew - u, axis=1)),
                          np.max(np.linalg.norm(uR_new - uR, axis=1))))
        if deltas and deltas[-1] > 0.0:
            ratio = delta / deltas[-1]
        deltas.append(delta)
        u, jump_vals, uR = unew, vals_new, uR_new
        if delta <= tol:
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            "Picard iteration did not reach tol %g in %d sweeps "
            "(last delta %g, last ratio %r)"
            % (tol, max_iter, deltas[-1] if deltas else float("nan"), ratio),
            iterations=solves, last_ratio=ratio,
            last_delta=deltas[-1] if deltas else None)

    records = [(float(node_times[k]), u[k].copy(), u[k] + v)
               for k, v in zip(jump_nodes, jump_vals)]
    return PeriodicSolution(
        one_period=Trajectory(h, 0.0, u, records),
        period_omega=float(omega),
        residual=state_norm(u[N] - u[0]),
        iterations_used=solves,
        contraction_estimate=kappa,
        measured_ratio=ratio,
        unverified_contraction=unverified,
        last_delta=deltas[-1],
        deltas=deltas,
    )


def poincare_iterate(problem, phi0, n_periods, cfg):
    """History segments u_{k omega} for k = 1..n_periods from one long run.

    The successive distances contract once inside the attraction basin
    and the limit agrees with picard_periodic by uniqueness. Requires
    r <= omega so one period fully refreshes the history.
    """
    omega = problem.period_omega
    if problem.delay_r > omega * (1.0 + GRID_SNAP_TOL):
        raise UnsupportedConfigurationError(
            "poincare_iterate requires r <= omega (r = %r, omega = %r)"
            % (problem.delay_r, omega))
    if int(n_periods) != n_periods or n_periods < 1:
        raise InvalidInputError("n_periods must be an integer >= 1")
    n_periods = int(n_periods)
    traj = integrate_ivp(problem, phi0, n_periods * omega, cfg)
    return [history_at(traj, k * omega, problem.delay_r)
            for k in range(1, n_periods + 1)]
