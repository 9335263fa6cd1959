"""Domain types, norms, and spectral semigroup operations.

The evolution operator A is diagonal in an orthonormal eigenbasis with
eigenvalues lam_1 <= ... <= lam_n, so the semigroup T(t) = exp(-A t)
acts mode by mode and every formula is exact per mode. States are the
coefficient vectors in that basis with the Euclidean norm (Parseval).

Piecewise-continuous functions in time (histories, trajectories) are
uniform-grid LEFT-continuous samples plus explicit right-limit records
at jump nodes. Jumps must sit exactly on grid nodes; interpolation never
crosses a jump, so sup-norms and impulse handling stay exact.
"""
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigurationError,
    InvalidInputError,
    NotExponentiallyStableError,
)

# relative tolerance for deciding that a time sits on a grid node
GRID_SNAP_TOL = 1e-9


def state_norm(v):
    """Euclidean norm of a coefficient vector."""
    return float(np.linalg.norm(v))


def snap_to_grid(x, h, what="time"):
    """Return round(x/h) after checking x sits on the h-grid.

    Raises ConfigurationError when x is further than GRID_SNAP_TOL
    (relative to max(1, |x|)) from the nearest node.
    """
    k = int(round(x / h))
    if abs(x - k * h) > GRID_SNAP_TOL * max(1.0, abs(x)):
        raise ConfigurationError(
            "%s = %r is not commensurate with grid step h = %r "
            "(nearest node %r)" % (what, x, h, k * h))
    return k


class SpectralOperator:
    """Diagonal realization of A.

    growth_bound_M is the M of ||T(t)|| <= M exp(nu0 t); it equals 1 for
    this diagonal self-adjoint model and is kept as a field so hypothesis
    arithmetic can carry a different value.

    Eigenvalues are only required to be sorted and finite here; operations
    that rely on exponential stability (lam_1 > 0) raise
    NotExponentiallyStableError when it fails.
    """

    def __init__(self, eigenvalues, growth_bound_M=1.0):
        lam = np.atleast_1d(np.asarray(eigenvalues, dtype=float))
        if lam.ndim != 1 or lam.size == 0:
            raise InvalidInputError("eigenvalues must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(lam)):
            raise InvalidInputError("eigenvalues must be finite")
        if np.any(np.diff(lam) < 0):
            raise InvalidInputError("eigenvalues must be sorted ascending")
        if not np.isfinite(growth_bound_M) or growth_bound_M < 1.0:
            raise InvalidInputError("growth_bound_M must be a finite real >= 1")
        lam = lam.copy()
        lam.setflags(write=False)
        self.eigenvalues = lam
        self.growth_bound_M = float(growth_bound_M)

    @property
    def dimension(self):
        return int(self.eigenvalues.size)

    def is_exponentially_stable(self):
        return bool(self.eigenvalues[0] > 0.0)

    def require_stable(self):
        if not self.is_exponentially_stable():
            raise NotExponentiallyStableError(
                "operator is not exponentially stable: smallest eigenvalue "
                "%r <= 0" % float(self.eigenvalues[0]))

    def __repr__(self):
        return "SpectralOperator(n=%d, lam_1=%g, lam_n=%g, M=%g)" % (
            self.dimension, self.eigenvalues[0], self.eigenvalues[-1],
            self.growth_bound_M)


def _as_state(v, dim, what="state vector"):
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise InvalidInputError(
            "%s has shape %r, expected (%d,)" % (what, v.shape, dim))
    return v


def semigroup_apply(A, t, v):
    """Apply T(t) = exp(-A t): w_j = exp(-lam_j t) v_j. Requires t >= 0."""
    if not np.isfinite(t) or t < 0.0:
        raise InvalidInputError("semigroup time must be finite and >= 0, got %r" % t)
    v = _as_state(v, A.dimension)
    return np.exp(-A.eigenvalues * t) * v


def growth_exponent(A):
    """Growth exponent nu0 = -lam_1 of the semigroup."""
    return -float(A.eigenvalues[0])


def inv_I_minus_T_omega(A, omega, v):
    """Apply (I - T(omega))^{-1} mode by mode: w_j = v_j / (1 - exp(-lam_j omega)).

    Well posed only for exponentially stable A (all lam_j > 0), where the
    operator norm of the inverse is 1 / (1 - exp(nu0 omega)).
    """
    if not np.isfinite(omega) or omega <= 0.0:
        raise InvalidInputError("period omega must be finite and > 0, got %r" % omega)
    A.require_stable()
    v = _as_state(v, A.dimension)
    # 1 - exp(-lam omega) via expm1 keeps small lam*omega accurate
    return v / (-np.expm1(-A.eigenvalues * omega))


class HistorySegment:
    """phi in PC([-r, 0], R^n): left-continuous samples plus jump records.

    samples[i] is the left-continuous value at s_i = -r + i h for
    i = 0..m with m = r/h. jumps is a sorted tuple of (s, right_limit)
    pairs with s a grid node in [-r, 0); the right limit overrides
    interpolation immediately to the right of s. A jump at s = 0 would
    describe behavior outside the window and is rejected.
    """

    def __init__(self, delay_r, grid_step, samples, jumps=()):
        if not np.isfinite(delay_r) or delay_r <= 0.0:
            raise InvalidInputError("delay_r must be finite and > 0, got %r" % delay_r)
        if not np.isfinite(grid_step) or grid_step <= 0.0:
            raise InvalidInputError("grid_step must be finite and > 0, got %r" % grid_step)
        m = snap_to_grid(delay_r, grid_step, what="delay_r")
        if m < 1:
            raise InvalidInputError("delay_r must span at least one grid step")
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] != m + 1:
            raise InvalidInputError(
                "samples must have shape (r/h + 1, n) = (%d, n), got %r"
                % (m + 1, samples.shape))
        samples = samples.copy()
        samples.setflags(write=False)

        self.delay_r = float(delay_r)
        self.grid_step = float(grid_step)
        self.samples = samples
        self.steps = m

        n = samples.shape[1]
        norm_jumps = []
        overrides = {}
        last_idx = -1
        for s, right in jumps:
            if not (-delay_r - GRID_SNAP_TOL <= s < 0.0):
                raise InvalidInputError(
                    "jump time %r outside [-r, 0) for r = %r" % (s, delay_r))
            idx = snap_to_grid(s + delay_r, grid_step, what="jump time offset")
            if idx <= last_idx:
                raise InvalidInputError("jump times must be strictly increasing")
            last_idx = idx
            right = _as_state(right, n, what="jump right limit")
            right = right.copy()
            right.setflags(write=False)
            norm_jumps.append((-delay_r + idx * grid_step, right))
            overrides[idx] = right
        self.jumps = tuple(norm_jumps)
        self._overrides = overrides

    @property
    def dimension(self):
        return int(self.samples.shape[1])

    @property
    def node_times(self):
        return -self.delay_r + np.arange(self.steps + 1) * self.grid_step

    @classmethod
    def zeros(cls, delay_r, grid_step, dim):
        m = snap_to_grid(delay_r, grid_step, what="delay_r")
        return cls(delay_r, grid_step, np.zeros((m + 1, dim)))

    @classmethod
    def from_function(cls, delay_r, grid_step, func, dim=None):
        """Sample a continuous function on the window grid.

        func maps a time s in [-r, 0] to a state vector (or a scalar for
        dim = 1 problems).
        """
        m = snap_to_grid(delay_r, grid_step, what="delay_r")
        times = -delay_r + np.arange(m + 1) * grid_step
        rows = [np.atleast_1d(np.asarray(func(s), dtype=float)) for s in times]
        samples = np.asarray(rows)
        if dim is not None and samples.shape[1] != dim:
            raise InvalidInputError(
                "func returned dimension %d, expected %d" % (samples.shape[1], dim))
        return cls(delay_r, grid_step, samples)

    def right_limit_at(self, idx):
        """Right limit at node idx: the override if a jump is recorded, else the sample."""
        got = self._overrides.get(idx)
        return self.samples[idx] if got is None else got

    def value(self, s):
        """Left-continuous evaluation with linear interpolation.

        At a grid node the stored left limit is returned; strictly to the
        right of a jump node interpolation starts from the right limit.
        """
        r, h = self.delay_r, self.grid_step
        if s < -r - GRID_SNAP_TOL * max(1.0, r) or s > GRID_SNAP_TOL:
            raise InvalidInputError("s = %r outside [-r, 0] for r = %r" % (s, r))
        pos = (s + r) / h
        j = int(np.floor(pos + GRID_SNAP_TOL))
        j = min(max(j, 0), self.steps)
        frac = pos - j
        if frac <= GRID_SNAP_TOL:
            return self.samples[j].copy()
        left = self.right_limit_at(j)
        return (1.0 - frac) * left + frac * self.samples[j + 1]

    def sup_norm(self):
        """The PC sup-norm over [-r, 0]: max over samples and recorded right limits."""
        best = float(np.max(np.linalg.norm(self.samples, axis=1)))
        for _, right in self.jumps:
            best = max(best, state_norm(right))
        return best

    def replace_top(self, top):
        """Copy of the segment with the s = 0 sample replaced.

        Integrator plumbing: evaluating F just after an impulse at the
        window top uses the post-jump value there.
        """
        samples = np.array(self.samples)
        samples[-1] = np.asarray(top, dtype=float)
        return HistorySegment(self.delay_r, self.grid_step, samples, self.jumps)


def history_norm(phi):
    """Sup-norm of a history segment (samples and right limits)."""
    if not isinstance(phi, HistorySegment):
        raise InvalidInputError("history_norm expects a HistorySegment")
    return phi.sup_norm()


def windowed_trapz(phi, kernel):
    """Trapezoidal integral of kernel(s) * phi(s) over [-r, 0] honoring jumps.

    Each cell [s_i, s_{i+1}] starts from the right limit at s_i when a jump
    is recorded there, so the rule keeps its O(h^2) accuracy across
    impulses. kernel maps an array of times in [-r, 0] to weights >= 0.
    """
    h = phi.grid_step
    kv = np.asarray(kernel(phi.node_times), dtype=float)
    if kv.shape != (phi.steps + 1,):
        raise InvalidInputError("kernel must return one weight per window node")
    starts = np.array(phi.samples[:-1])
    for idx, right in phi._overrides.items():
        if idx < phi.steps:
            starts[idx] = right
    return 0.5 * h * (kv[:-1] @ starts + kv[1:] @ phi.samples[1:])


class ImpulseSchedule:
    """Impulse times, jump maps, and declared Lipschitz constants on one period.

    times satisfy 0 < t_1 < ... < t_p < omega; maps[k](x) returns the jump
    I_k(x) = u(t_k+) - u(t_k-); the schedule extends periodically with
    t_{k+p} = t_k + omega. lipschitz_a holds the declared (H2) constants;
    declarations are recorded, not proven, and build_report spot-checks
    them by sampling.
    """

    def __init__(self, period_omega, times=(), maps=(), lipschitz_a=()):
        if not np.isfinite(period_omega) or period_omega <= 0.0:
            raise InvalidInputError("period_omega must be finite and > 0")
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if times.size and (np.any(np.diff(times) <= 0)
                           or times[0] <= 0.0 or times[-1] >= period_omega):
            raise InvalidInputError(
                "impulse times must satisfy 0 < t_1 < ... < t_p < omega")
        a = np.atleast_1d(np.asarray(lipschitz_a, dtype=float)) if len(lipschitz_a) \
            else np.zeros(times.size)
        maps = tuple(maps)
        if len(maps) != times.size or a.size != times.size:
            raise InvalidInputError(
                "times, maps, and lipschitz_a must have equal length")
        if np.any(~np.isfinite(a)) or np.any(a < 0):
            raise InvalidInputError("lipschitz_a must be finite and >= 0")
        times = times.copy()
        times.setflags(write=False)
        a = a.copy()
        a.setflags(write=False)
        self.period_omega = float(period_omega)
        self.times = times
        self.maps = maps
        self.lipschitz_a = a

    @property
    def count(self):
        return int(self.times.size)

    def apply(self, k, x):
        """Jump I_k(x) for the k-th impulse map (0-based)."""
        return np.asarray(self.maps[k](np.asarray(x, dtype=float)), dtype=float)

    def sum_a(self):
        return float(np.sum(self.lipschitz_a))

    def events_between(self, t0, t1):
        """(time, map index) pairs with t0 < time <= t1 under periodic extension."""
        if self.count == 0 or t1 <= t0:
            return []
        om = self.period_omega
        out = []
        j = int(np.floor(t0 / om)) - 1
        while j * om <= t1:
            for k, tk in enumerate(self.times):
                t = tk + j * om
                if t0 < t <= t1:
                    out.append((t, k))
            j += 1
        return out


@dataclass(frozen=True)
class AffineDelayForm:
    """Closed form F(t, x, phi) = state_gain(t) x + int_{-r}^0 kernel(s) phi(s) ds + forcing(t).

    Integrators exploit this structure in the hot loop: the scalar gain and
    the forcing are tabulated per grid node and the delay integral becomes
    a windowed dot product. Any of the three parts may be None.
    """

    state_gain: object = None  # callable t -> float
    kernel: object = None      # callable s-array -> weight array on [-r, 0]
    forcing: object = None     # callable t -> state vector


class Nonlinearity:
    """The right-hand side F(t, x, u_t) with its declared (H1') constants.

    func(t, x, phi) evaluates F for a state x and a HistorySegment phi.
    declared_c0 bounds ||F(t, 0, 0)||, declared_c1/c2 are the Lipschitz
    constants in x and in the history sup-norm. When the problem has the
    affine structure of AffineDelayForm, pass it so integrators can use
    the fast path; build via from_affine to keep both views consistent.
    """

    def __init__(self, func, period_omega, declared_c0=0.0, declared_c1=0.0,
                 declared_c2=0.0, affine=None):
        if not callable(func):
            raise InvalidInputError("func must be callable")
        if not np.isfinite(period_omega) or period_omega <= 0.0:
            raise InvalidInputError("period_omega must be finite and > 0")
        for name, c in (("declared_c0", declared_c0),
                        ("declared_c1", declared_c1),
                        ("declared_c2", declared_c2)):
            if c is not None and (not np.isfinite(c) or c < 0):
                raise InvalidInputError("%s must be finite and >= 0" % name)
        self._func = func
        self.period_omega = float(period_omega)
        # None means "not declared"; certification then refuses to run.
        self.declared_c0 = None if declared_c0 is None else float(declared_c0)
        self.declared_c1 = None if declared_c1 is None else float(declared_c1)
        self.declared_c2 = None if declared_c2 is None else float(declared_c2)
        self.affine = affine

    def __call__(self, t, x, phi):
        return np.asarray(self._func(t, x, phi), dtype=float)

    @classmethod
    def from_affine(cls, affine, period_omega, declared_c0=0.0, declared_c1=0.0,
                    declared_c2=0.0):
        """Build a Nonlinearity whose generic evaluation matches the affine form.

        The generic path uses the same jump-corrected trapezoidal rule as
        the integrator kernels, so both evaluations agree to rounding.
        """
        gain, kernel, forcing = affine.state_gain, affine.kernel, affine.forcing

        def func(t, x, phi):
            acc = np.zeros_like(np.asarray(x, dtype=float))
            if gain is not None:
                acc = acc + gain(t) * np.asarray(x, dtype=float)
            if kernel is not None:
                acc = acc + windowed_trapz(phi, kernel)
            if forcing is not None:
                acc = acc + np.asarray(forcing(t), dtype=float)
            return acc

        return cls(func, period_omega, declared_c0, declared_c1, declared_c2,
                   affine=affine)


class Trajectory:
    """Numerical PC solution on a uniform grid.

    samples[k] is the left-continuous value at start_time + k h;
    jump_records holds (time, left, right) for each applied impulse.
    right_at(k) is the right limit at node k, which differs from the
    sample exactly at jump nodes.
    """

    def __init__(self, grid_step, start_time, samples, jump_records=()):
        if not np.isfinite(grid_step) or grid_step <= 0.0:
            raise InvalidInputError("grid_step must be finite and > 0")
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 1:
            samples = samples[:, None]
        if samples.ndim != 2 or samples.shape[0] < 2:
            raise InvalidInputError("samples must be a (nodes, dim) array, nodes >= 2")
        self.grid_step = float(grid_step)
        self.start_time = float(start_time)
        self.samples = samples
        n = samples.shape[1]
        recs = []
        rights = {}
        for t, left, right in jump_records:
            idx = snap_to_grid(t - self.start_time, self.grid_step,
                               what="jump record time offset")
            if not 0 <= idx < samples.shape[0]:
                raise InvalidInputError("jump record at %r outside the grid" % t)
            left = _as_state(left, n, "jump left limit")
            right = _as_state(right, n, "jump right limit")
            recs.append((self.start_time + idx * self.grid_step, left, right))
            rights[idx] = right
        self.jump_records = tuple(recs)
        self._rights = rights

    @property
    def dimension(self):
        return int(self.samples.shape[1])

    @property
    def node_count(self):
        return int(self.samples.shape[0])

    @property
    def end_time(self):
        return self.start_time + (self.node_count - 1) * self.grid_step

    @property
    def node_times(self):
        return self.start_time + np.arange(self.node_count) * self.grid_step

    def index_of(self, t):
        idx = snap_to_grid(t - self.start_time, self.grid_step, what="time offset")
        if not 0 <= idx < self.node_count:
            raise InvalidInputError(
                "time %r outside trajectory domain [%r, %r]"
                % (t, self.start_time, self.end_time))
        return idx

    def value(self, t):
        """Left-continuous value at a grid time."""
        return self.samples[self.index_of(t)].copy()

    def right_at(self, idx):
        got = self._rights.get(idx)
        return self.samples[idx] if got is None else got

    def pc_norm(self):
        """Sup over grid samples and recorded right limits of the state norm."""
        best = float(np.max(np.linalg.norm(self.samples, axis=1)))
        for _, _, right in self.jump_records:
            best = max(best, state_norm(right))
        return best
