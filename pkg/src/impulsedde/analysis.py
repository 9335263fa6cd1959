"""Certification arithmetic and stability experiments.

hypothesis_numbers turns declared constants into the existence margin
(H3), the stability margin (H3'), the contraction factor kappa and the
decay rate sigma. build_report wraps that arithmetic in a randomized
spot check of the declared Lipschitz constants: sampling can refute a
declared constant, never confirm it, so violations only downgrade the
report to "constants unverified" while the arithmetic stands as
declared. gronwall_bound is the impulsive Gronwall envelope and
decay_experiment measures an actual orbit against the certified
envelopes.
"""
import math
from dataclasses import dataclass

import numpy as np

from .core import HistorySegment, growth_exponent, state_norm
from .errors import InternalConsistencyError, InvalidInputError
from .integrate import integrate_ivp


def hypothesis_numbers(M, nu0, omega, delay_r, c0, c1, c2, a):
    """Margins, contraction factor and decay rate from declared constants.

    nu0 is the semigroup growth exponent (negative for a stable
    operator); a is the per-event impulse Lipschitz list. Returns a dict
    with keys abs_nu, sum_a, log_term, H3_margin, H3prime_margin, kappa,
    sigma, rho:

        H3_margin       = |nu0|/M - [(c1 + c2) + (1/omega) sum a_k]
        H3prime_margin  = |nu0|/M - [(c1 + c2 e^{|nu0| r}) + (1/omega) sum a_k]
        kappa           = (M/|nu0|)(c1 + c2) + (M/(|nu0| omega)) sum a_k
        sigma           = |nu0| - (1/omega) sum ln(1 + M a_k)
                                - M (c1 + c2 e^{|nu0| r})
        rho             = |nu0| - M (c1 + c2 e^{|nu0| r})

    For periodic schedules the long-time impulse log-average is the
    closed form (1/omega) sum ln(1 + M a_k); no numerical limit is
    taken. Since ln(1 + M a_k) <= M a_k, a positive H3prime_margin
    forces sigma > 0.
    """
    if not np.isfinite(M) or M < 1.0:
        raise InvalidInputError("M must be finite and >= 1")
    if not np.isfinite(nu0) or nu0 >= 0.0:
        raise InvalidInputError(
            "growth exponent nu0 must be negative, got %r" % nu0)
    if not np.isfinite(omega) or omega <= 0.0:
        raise InvalidInputError("omega must be finite and > 0")
    if not np.isfinite(delay_r) or delay_r < 0.0:
        raise InvalidInputError("delay_r must be finite and >= 0")
    for name, c in (("c0", c0), ("c1", c1), ("c2", c2)):
        if c is None or not np.isfinite(c) or c < 0.0:
            raise InvalidInputError("%s must be finite and >= 0" % name)
    a = np.asarray(a, dtype=float)
    if a.size and (not np.all(np.isfinite(a)) or np.any(a < 0.0)):
        raise InvalidInputError("impulse constants a_k must be finite and >= 0")

    abs_nu = -float(nu0)
    sum_a = float(np.sum(a))
    log_term = float(np.sum(np.log1p(M * a))) / omega if a.size else 0.0
    lip_delayed = c1 + c2 * math.exp(abs_nu * delay_r)
    return {
        "abs_nu": abs_nu,
        "sum_a": sum_a,
        "log_term": log_term,
        "H3_margin": abs_nu / M - ((c1 + c2) + sum_a / omega),
        "H3prime_margin": abs_nu / M - (lip_delayed + sum_a / omega),
        "kappa": (M / abs_nu) * (c1 + c2) + (M / (abs_nu * omega)) * sum_a,
        "sigma": abs_nu - log_term - M * lip_delayed,
        "rho": abs_nu - M * lip_delayed,
    }


@dataclass
class HypothesisReport:
    """Declared constants, the derived margins, and spot-check results.

    H3_margin > 0 certifies existence of the periodic solution,
    H3prime_margin > 0 certifies exponential stability at rate sigma.
    constants_verified is False when sampling found a pair violating a
    declared constant (worst_* hold the worst measured/declared ratios);
    the arithmetic always uses the declared values.
    """

    M: float
    nu0: float
    omega: float
    delay_r: float
    c0: float
    c1: float
    c2: float
    a: tuple
    H3_margin: float
    H3prime_margin: float
    kappa: float
    sigma: float
    rho: float
    constants_verified: bool
    worst_c0: float
    worst_c1: float
    worst_c2: float
    worst_a: tuple
    spot_samples: int
    spot_seed: int

    @property
    def h3_holds(self):
        return self.H3_margin > 0.0

    @property
    def h3prime_holds(self):
        return self.H3prime_margin > 0.0


# Declared constants are accepted when the measured ratio stays within
# this slack; the history spot check uses a trapezoidal quadrature whose
# O(h^2) excess over an exact integral kernel must not read as a
# violation.
SPOT_REL_SLACK = 1e-4
SPOT_ABS_SLACK = 1e-12
_SPOT_CELLS = 32


def _spot_ok(measured, declared):
    return measured <= declared * (1.0 + SPOT_REL_SLACK) + SPOT_ABS_SLACK


def build_report(problem, M=None, samples=1000, seed=0):
    """Hypothesis report for a problem, with randomized constant checks.

    samples pairs are drawn per declared constant: state pairs for c1,
    history pairs for c2, state pairs per impulse map for a_k, and
    zero-argument evaluations for c0. Draw amplitudes sweep three
    decades so locally-flat nonlinearities are still probed.
    """
    A = problem.operator
    A.require_stable()
    if M is None:
        M = A.growth_bound_M
    F = problem.nonlinearity
    if None in (F.declared_c0, F.declared_c1, F.declared_c2):
        raise InvalidInputError(
            "nonlinearity must declare c0, c1, c2 to build a report")
    if int(samples) != samples or samples < 1:
        raise InvalidInputError("samples must be an integer >= 1")
    samples = int(samples)

    sched = problem.impulses
    a = np.asarray(sched.lipschitz_a, dtype=float)
    numbers = hypothesis_numbers(
        M=M, nu0=growth_exponent(A), omega=problem.period_omega,
        delay_r=problem.delay_r, c0=F.declared_c0, c1=F.declared_c1,
        c2=F.declared_c2, a=a)

    rng = np.random.default_rng(seed)
    n = problem.dimension
    r = problem.delay_r
    omega = problem.period_omega
    h_spot = r / _SPOT_CELLS

    def spot_segment(amp):
        rows = amp * rng.standard_normal((_SPOT_CELLS + 1, n))
        return HistorySegment(r, h_spot, rows)

    worst_c0 = worst_c1 = worst_c2 = 0.0
    for _ in range(samples):
        t = rng.uniform(0.0, omega)
        amp = 10.0 ** rng.uniform(-2.0, 1.0)
        zero_seg = HistorySegment.zeros(r, h_spot, n)
        worst_c0 = max(worst_c0, state_norm(F(t, np.zeros(n), zero_seg)))

        phi = spot_segment(amp)
        x1 = amp * rng.standard_normal(n)
        x2 = amp * rng.standard_normal(n)
        dx = state_norm(x1 - x2)
        if dx > 0.0:
            diff = state_norm(F(t, x1, phi) - F(t, x2, phi))
            worst_c1 = max(worst_c1, diff / dx)

        x = amp * rng.standard_normal(n)
        p1, p2 = spot_segment(amp), spot_segment(amp)
        dphi = float(np.max(np.linalg.norm(p1.samples - p2.samples, axis=1)))
        if dphi > 0.0:
            diff = state_norm(F(t, x, p1) - F(t, x, p2))
            worst_c2 = max(worst_c2, diff / dphi)

    worst_a = []
    for k in range(sched.count):
        worst = 0.0
        for _ in range(samples):
            amp = 10.0 ** rng.uniform(-2.0, 1.0)
            x1 = amp * rng.standard_normal(n)
            x2 = amp * rng.standard_normal(n)
            dx = state_norm(x1 - x2)
            if dx == 0.0:
                continue
            diff = state_norm(sched.apply(k, x1) - sched.apply(k, x2))
            worst = max(worst, diff / dx)
        worst_a.append(worst)

    verified = (_spot_ok(worst_c0, F.declared_c0)
                and _spot_ok(worst_c1, F.declared_c1)
                and _spot_ok(worst_c2, F.declared_c2)
                and all(_spot_ok(w, ak) for w, ak in zip(worst_a, a)))

    return HypothesisReport(
        M=float(M), nu0=growth_exponent(A), omega=float(omega),
        delay_r=float(r), c0=F.declared_c0, c1=F.declared_c1,
        c2=F.declared_c2, a=tuple(float(x) for x in a),
        H3_margin=numbers["H3_margin"],
        H3prime_margin=numbers["H3prime_margin"],
        kappa=numbers["kappa"], sigma=numbers["sigma"], rho=numbers["rho"],
        constants_verified=verified,
        worst_c0=worst_c0, worst_c1=worst_c1, worst_c2=worst_c2,
        worst_a=tuple(worst_a), spot_samples=samples, spot_seed=int(seed))


def gronwall_bound(phi_norm, alpha1, alpha2, beta, t):
    """Envelope phi_norm * prod_{0 < t_k < t} (1 + beta_k) * e^{(a1+a2) t}.

    Dominates every solution of the impulsive integral inequality
    psi(t) <= phi_norm + a1 int psi + a2 int sup-history psi
                       + sum_{t_k < t} beta_k psi(t_k).
    The product is over events strictly before t. Monotone nondecreasing
    in every argument.
    """
    for name, v in (("phi_norm", phi_norm), ("alpha1", alpha1),
                    ("alpha2", alpha2), ("t", t)):
        if not np.isfinite(v) or v < 0.0:
            raise InvalidInputError("%s must be finite and >= 0" % name)
    prod = 1.0
    last = 0.0
    for t_k, b_k in beta:
        if t_k <= last:
            raise InvalidInputError(
                "impulse times must be positive and strictly increasing")
        if not np.isfinite(b_k) or b_k < 0.0:
            raise InvalidInputError("impulse weights must be finite and >= 0")
        last = t_k
        if t_k < t:
            prod *= 1.0 + b_k
    return phi_norm * prod * math.exp((alpha1 + alpha2) * t)


@dataclass
class DecayRecord:
    """Measured error of one orbit against the periodic solution.

    e_left/e_right are the node errors of the left-continuous values and
    of the right limits (they differ only at impulse nodes).
    envelope_sigma is C(phi) e^{-sigma t}; envelope_product is the
    sharper per-event form M C(phi) prod_{t_k < t}(1 + M a_k) e^{-rho t}
    whose left-limit product is strict. When H3prime_margin <= 0 the
    certificate is inapplicable: only raw errors are recorded and the
    bound fields are None.
    """

    times: np.ndarray
    e_left: np.ndarray
    e_right: np.ndarray
    c_phi: float
    sigma: float
    rho: float
    applicable: bool
    allowance: float
    envelope_sigma: object
    envelope_product: object
    sigma_bound_holds: object
    sigma_max_excess: object
    product_bound_holds: object
    product_max_excess: object
    fitted_rate: object
    hypothesis: dict


def _fitted_decay_rate(times, errors):
    """Least-squares slope of log e from the error peak down to the floor.

    Fast decays reach the integrator's rounding plateau early, so the fit
    window runs from the global maximum of e to the last node still above
    the floor (10x the median of the final tenth). Returns None when the
    windowed errors span less than two decades: there is no decay to read,
    only noise.
    """
    tail = errors[max(0, times.size - max(10, times.size // 10)):]
    positive_tail = tail[tail > 0.0]
    floor = max(1e-12, 10.0 * float(np.median(positive_tail))) \
        if positive_tail.size else 1e-12
    keep = errors > floor
    keep[:int(np.argmax(errors))] = False
    if np.count_nonzero(keep) < 2:
        return None
    e_w = errors[keep]
    if np.max(e_w) < 100.0 * np.min(e_w):
        return None
    coeffs = np.polyfit(times[keep], np.log(e_w), 1)
    return -float(coeffs[0])


def decay_experiment(problem, ustar, phi, n_periods, cfg):
    """Integrate from phi and test the exponential-decay certificates.

    Checks e(t) <= C(phi) e^{-sigma t} and the per-event product
    envelope at every node, left limits and right limits, with an
    allowance of 1e-8 plus the integrator's a priori error scale. The
    product for a left limit at an impulse node excludes that node's
    factor; the right limit includes it.
    """
    if int(n_periods) != n_periods or n_periods < 1:
        raise InvalidInputError("n_periods must be an integer >= 1")
    n_periods = int(n_periods)
    A = problem.operator
    A.require_stable()
    F = problem.nonlinearity
    omega = problem.period_omega
    numbers = hypothesis_numbers(
        M=A.growth_bound_M, nu0=growth_exponent(A), omega=omega,
        delay_r=problem.delay_r, c0=F.declared_c0, c1=F.declared_c1,
        c2=F.declared_c2, a=problem.impulses.lipschitz_a)
    sigma, rho = numbers["sigma"], numbers["rho"]
    applicable = numbers["H3prime_margin"] > 0.0
    if applicable and sigma <= 0.0:
        raise InternalConsistencyError(
            "H3prime_margin %g > 0 but sigma %g <= 0; the log-term bound "
            "makes this impossible" % (numbers["H3prime_margin"], sigma))

    N = ustar.nodes_per_period
    h = ustar.grid_step
    if abs(omega / N - h) > 1e-9 * h:
        raise InvalidInputError("ustar grid does not divide the period")
    if abs(cfg.grid_step - h) > 1e-9 * h:
        raise InvalidInputError(
            "cfg.grid_step %r does not match the periodic solution's step %r"
            % (cfg.grid_step, h))
    m = phi.samples.shape[0] - 1
    M = A.growth_bound_M
    abs_nu = numbers["abs_nu"]

    c_phi = 0.0
    for i in range(m + 1):
        weight = math.exp(abs_nu * (i * h - m * h))
        j = i - m
        c_phi = max(
            c_phi,
            weight * state_norm(phi.samples[i] - ustar.sample_at_node(j)),
            weight * state_norm(phi.right_limit_at(i) - ustar.right_at_node(j)))

    traj = integrate_ivp(problem, phi, n_periods * omega, cfg)
    total = n_periods * N
    times = np.arange(total + 1) * h
    star = np.vstack([np.tile(ustar.one_period.samples[:N], (n_periods, 1)),
                      ustar.one_period.samples[N:]])
    e_left = np.linalg.norm(traj.samples[m:] - star, axis=1)
    e_right = e_left.copy()
    impulse_nodes = [int(round(t_k / h)) for t_k in problem.impulses.times]
    for per in range(n_periods):
        for node in impulse_nodes:
            j = node + per * N
            e_right[j] = state_norm(traj.right_at(m + j)
                                    - ustar.right_at_node(j))

    order = 2 if cfg.use_etd2 else 1
    allowance = 1e-8 + h ** order * max(1.0, c_phi)
    fitted = _fitted_decay_rate(times, e_left)

    if not applicable:
        return DecayRecord(
            times=times, e_left=e_left, e_right=e_right, c_phi=c_phi,
            sigma=sigma, rho=rho, applicable=False, allowance=allowance,
            envelope_sigma=None, envelope_product=None,
            sigma_bound_holds=None, sigma_max_excess=None,
            product_bound_holds=None, product_max_excess=None,
            fitted_rate=fitted, hypothesis=numbers)

    envelope_sigma = c_phi * np.exp(-sigma * times)
    factors = np.ones(total + 1)
    for k, node in enumerate(impulse_nodes):
        for per in range(n_periods):
            factors[node + per * N] = 1.0 + M * problem.impulses.lipschitz_a[k]
    # Product over events strictly before t for left limits; including t
    # for right limits. Multiplying by 1.0 is exact, so cumprod only
    # rounds at the impulse nodes themselves.
    prod_incl = np.cumprod(factors)
    prod_excl = prod_incl / factors
    decay = np.exp(-rho * times)
    envelope_product = M * c_phi * prod_excl * decay
    envelope_right = M * c_phi * prod_incl * decay
    sigma_excess = float(max(np.max(e_left - envelope_sigma),
                             np.max(e_right - envelope_sigma)))
    product_excess = float(max(np.max(e_left - envelope_product),
                               np.max(e_right - envelope_right)))

    return DecayRecord(
        times=times, e_left=e_left, e_right=e_right, c_phi=c_phi,
        sigma=sigma, rho=rho, applicable=True, allowance=allowance,
        envelope_sigma=envelope_sigma, envelope_product=envelope_product,
        sigma_bound_holds=bool(sigma_excess <= allowance),
        sigma_max_excess=float(sigma_excess),
        product_bound_holds=bool(product_excess <= allowance),
        product_max_excess=float(product_excess),
        fitted_rate=fitted, hypothesis=numbers)
