"""Linear periodic operator, Picard iteration, and the Poincare cross-check."""
import math

import numpy as np
import pytest

import impulsedde as idd
from impulsedde import (
    HistorySegment,
    ImpulseSchedule,
    IntegratorConfig,
    InvalidInputError,
    NonConvergenceError,
    Nonlinearity,
    NotExponentiallyStableError,
    ProblemSpec,
    SpectralOperator,
    UnsupportedConfigurationError,
    linear_periodic,
    picard_periodic,
    poincare_iterate,
)
from tests.conftest import H_SCALAR, OMEGA, R_SCALAR, make_scalar_problem

OM = 2 * math.pi


def test_linear_periodic_zero_forcing():
    sol = linear_periodic(SpectralOperator([1.0, 4.0]), None, [], OM,
                          IntegratorConfig(OM / 500))
    assert sol.one_period.pc_norm() == 0.0
    assert sol.residual == 0.0


def test_linear_periodic_sin_oracle_at_spec_step():
    # h = 1e-3 resolves to the closest period-commensurate step
    sol = linear_periodic(SpectralOperator([1.0]),
                          lambda t: np.array([math.sin(t)]), [], OM,
                          IntegratorConfig(1e-3))
    t = sol.one_period.node_times
    exact = 0.5 * (np.sin(t) - np.cos(t))
    assert abs(sol.one_period.samples[0, 0] + 0.5) <= 1e-6
    assert np.max(np.abs(sol.one_period.samples[:, 0] - exact)) <= 1e-6
    assert sol.residual <= 1e-12


def test_linear_periodic_order_two():
    def err(h):
        sol = linear_periodic(SpectralOperator([1.0]),
                              lambda t: np.array([math.sin(t)]), [], OM,
                              IntegratorConfig(h))
        t = sol.one_period.node_times
        return float(np.max(np.abs(sol.one_period.samples[:, 0]
                                   - 0.5 * (np.sin(t) - np.cos(t)))))
    assert err(OM / 1000) / err(OM / 2000) >= 3.6


def test_linear_periodic_impulse_oracle():
    x0 = math.exp(-math.pi) / (1.0 - math.exp(-2 * math.pi))
    sol = linear_periodic(SpectralOperator([1.0]), None,
                          [(math.pi, np.array([1.0]))], OM,
                          IntegratorConfig(OM / 2000))
    assert abs(sol.one_period.samples[0, 0] - x0) <= 1e-10
    assert sol.residual <= 1e-12
    # seam closes: u(omega) = u(0)
    np.testing.assert_allclose(sol.one_period.samples[-1],
                               sol.one_period.samples[0], atol=1e-14)


def test_linear_periodic_is_linear():
    rng = np.random.default_rng(11)
    A = SpectralOperator([0.7, 2.0])
    cfg = IntegratorConfig(OM / 400)
    N = 400
    t_half = OM / 2  # grid node: N even
    f1 = rng.standard_normal((N + 1, 2))
    f2 = rng.standard_normal((N + 1, 2))
    v1 = rng.standard_normal(2)
    v2 = rng.standard_normal(2)
    al, be = 0.7, -1.3
    s1 = linear_periodic(A, f1, [(t_half, v1)], OM, cfg)
    s2 = linear_periodic(A, f2, [(t_half, v2)], OM, cfg)
    s3 = linear_periodic(A, al * f1 + be * f2, [(t_half, al * v1 + be * v2)],
                         OM, cfg)
    combo = al * s1.one_period.samples + be * s2.one_period.samples
    assert np.max(np.abs(s3.one_period.samples - combo)) <= 1e-10


def test_linear_periodic_requires_stability():
    with pytest.raises(NotExponentiallyStableError):
        linear_periodic(SpectralOperator([-1.0]), None, [], OM,
                        IntegratorConfig(OM / 100))


def test_linear_periodic_rejects_bad_impulse_times():
    A = SpectralOperator([1.0])
    cfg = IntegratorConfig(OM / 100)
    with pytest.raises(InvalidInputError):
        linear_periodic(A, None, [(0.0, np.array([1.0]))], OM, cfg)
    with pytest.raises(InvalidInputError):
        linear_periodic(A, None, [(OM, np.array([1.0]))], OM, cfg)


def test_picard_zero_problem_converges_immediately():
    F = Nonlinearity(lambda t, x, phi: np.zeros_like(x), OM)
    prob = ProblemSpec(SpectralOperator([1.0]), F, ImpulseSchedule(OM), OM / 4, OM)
    sol = picard_periodic(prob, None, 1e-12, 5, IntegratorConfig(OM / 200))
    assert sol.iterations_used == 1
    assert sol.one_period.pc_norm() == 0.0


def test_picard_state_free_forcing_is_exact():
    aff = idd.AffineDelayForm(None, None, lambda t: np.array([math.sin(t)]))
    F = Nonlinearity.from_affine(aff, OM, declared_c0=1.0)
    prob = ProblemSpec(SpectralOperator([1.0]), F, ImpulseSchedule(OM), OM / 20, OM)
    sol = picard_periodic(prob, None, 1e-8, 5, IntegratorConfig(OM / 2000))
    assert sol.iterations_used <= 2   # Q is constant; second sweep certifies
    t = sol.one_period.node_times
    exact = 0.5 * (np.sin(t) - np.cos(t))
    assert np.max(np.abs(sol.one_period.samples[:, 0] - exact)) <= 1e-5


def test_picard_scalar_problem(scalar_problem, scalar_cfg, scalar_solution):
    sol = scalar_solution
    assert sol.last_delta <= 1e-10
    assert sol.residual <= 1e-12
    assert not sol.unverified_contraction
    assert sol.measured_ratio <= sol.contraction_estimate + 0.05
    # reapplying Q moves the solution by at most ~tol: fixed point
    again = picard_periodic(scalar_problem, sol, 1e-9, 10, scalar_cfg)
    assert again.iterations_used == 1
    assert again.last_delta <= 2e-9


def test_picard_periodic_extension_accessors(scalar_solution):
    N = scalar_solution.nodes_per_period
    np.testing.assert_array_equal(scalar_solution.sample_at_node(3),
                                  scalar_solution.sample_at_node(3 + 2 * N))
    v1 = scalar_solution.value(0.25 * OMEGA)
    v2 = scalar_solution.value(2.25 * OMEGA)
    np.testing.assert_allclose(v1, v2, rtol=0, atol=1e-14)


def test_picard_reintegration_stays_on_orbit(scalar_problem, scalar_cfg,
                                             scalar_solution):
    phi0 = scalar_solution.history_segment(R_SCALAR)
    segs = poincare_iterate(scalar_problem, phi0, 3, scalar_cfg)
    for seg in segs:
        gap = np.max(np.linalg.norm(seg.samples - phi0.samples, axis=1))
        assert gap <= 1e-8


def test_picard_poincare_agreement(scalar_problem, scalar_cfg, scalar_solution):
    phi0 = HistorySegment.zeros(R_SCALAR, H_SCALAR, 1)
    segs = poincare_iterate(scalar_problem, phi0, 12, scalar_cfg)
    star = scalar_solution.history_segment(R_SCALAR)
    gaps = [np.max(np.linalg.norm(s.samples - star.samples, axis=1))
            for s in segs]
    assert gaps[-1] <= 1e-7
    # contraction regime: distances shrink geometrically once transients pass
    assert gaps[-1] <= gaps[3]


def test_poincare_pure_decay_rate():
    F = Nonlinearity(lambda t, x, phi: np.zeros_like(x), OM)
    prob = ProblemSpec(SpectralOperator([1.0]), F, ImpulseSchedule(OM), OM / 20, OM)
    h = OM / 500
    phi0 = HistorySegment.from_function(OM / 20, h, lambda s: 1.0)
    segs = poincare_iterate(prob, phi0, 3, IntegratorConfig(h))
    for k, seg in enumerate(segs, start=1):
        bound = math.exp(-OM * (k - 1)) * 1.0  # worst node is the oldest one
        assert idd.history_norm(seg) <= bound * (1 + 1e-10)


def test_picard_flags_unverified_contraction():
    # declared impulse constants blow past (H3) while the true maps stay tame
    prob = make_scalar_problem(declared_a=3.0)
    cfg = IntegratorConfig(H_SCALAR)
    sol = picard_periodic(prob, None, 1e-8, 100, cfg)
    assert sol.unverified_contraction
    assert sol.contraction_estimate > 1.0
    assert sol.residual <= 1e-12


def test_picard_nonconvergence_reports_ratio(scalar_problem, scalar_cfg):
    with pytest.raises(NonConvergenceError) as err:
        picard_periodic(scalar_problem, None, 1e-10, 2, scalar_cfg)
    assert err.value.iterations == 2
    assert err.value.last_delta is not None
    assert 0.0 < err.value.last_ratio < 1.0


def test_picard_rejects_mismatched_guess(scalar_problem, scalar_cfg,
                                         scalar_solution):
    other = picard_periodic(scalar_problem, None, 1e-6, 50,
                            IntegratorConfig(OMEGA / 1000))
    with pytest.raises(InvalidInputError):
        picard_periodic(scalar_problem, other, 1e-8, 50, scalar_cfg)


def test_delay_longer_than_period_unsupported():
    prob = make_scalar_problem()
    cfg = IntegratorConfig(H_SCALAR)
    long_r = ProblemSpec(prob.operator, prob.nonlinearity, prob.impulses,
                         1.5 * OMEGA, OMEGA)
    with pytest.raises(UnsupportedConfigurationError):
        picard_periodic(long_r, None, 1e-8, 10, cfg)
    phi = HistorySegment.zeros(1.5 * OMEGA, OMEGA / 2000, 1)
    with pytest.raises(UnsupportedConfigurationError):
        poincare_iterate(long_r, phi, 2, cfg)
