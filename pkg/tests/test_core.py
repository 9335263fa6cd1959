"""Semigroup primitives, history segments, and schedule bookkeeping."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import impulsedde as idd
from impulsedde import (
    ConfigurationError,
    HistorySegment,
    ImpulseSchedule,
    InvalidInputError,
    NotExponentiallyStableError,
    SpectralOperator,
    Trajectory,
)
from impulsedde.core import snap_to_grid, state_norm, windowed_trapz


def test_semigroup_identity_at_zero():
    A = SpectralOperator([1.0])
    np.testing.assert_array_equal(idd.semigroup_apply(A, 0.0, [3.5]), [3.5])


def test_semigroup_direct_evaluation():
    A = SpectralOperator([1.0, 4.0])
    w = idd.semigroup_apply(A, math.log(2.0), [1.0, 1.0])
    np.testing.assert_allclose(w, [0.5, 0.0625], rtol=1e-14)


def test_semigroup_zero_vector():
    A = SpectralOperator([2.0])
    np.testing.assert_array_equal(idd.semigroup_apply(A, 1.0, [0.0]), [0.0])


def test_semigroup_law_and_contraction():
    rng = np.random.default_rng(7)
    A = SpectralOperator([0.5, 1.0, 3.0, 10.0])
    for _ in range(50):
        s, t = rng.uniform(0.0, 3.0, size=2)
        v = rng.standard_normal(4)
        once = idd.semigroup_apply(A, s + t, v)
        twice = idd.semigroup_apply(A, s, idd.semigroup_apply(A, t, v))
        np.testing.assert_allclose(once, twice, rtol=1e-12, atol=1e-300)
        # ||T(t)v|| <= e^{nu0 t} ||v|| with nu0 = -lam_1
        bound = math.exp(idd.growth_exponent(A) * t) * state_norm(v)
        assert state_norm(idd.semigroup_apply(A, t, v)) <= bound * (1 + 1e-12)


def test_semigroup_rejects_bad_input():
    A = SpectralOperator([1.0, 2.0])
    with pytest.raises(InvalidInputError):
        idd.semigroup_apply(A, -0.5, [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        idd.semigroup_apply(A, 1.0, [1.0])


def test_growth_exponent():
    assert idd.growth_exponent(SpectralOperator([1.0, 4.0, 9.0])) == -1.0
    assert idd.growth_exponent(SpectralOperator([0.3])) == -0.3
    heat = SpectralOperator([float(j * j) for j in range(1, 17)])
    assert idd.growth_exponent(heat) == -1.0


def test_spectral_operator_validation():
    with pytest.raises(InvalidInputError):
        SpectralOperator([])
    with pytest.raises(InvalidInputError):
        SpectralOperator([2.0, 1.0])  # not sorted
    with pytest.raises(InvalidInputError):
        SpectralOperator([1.0], growth_bound_M=0.5)
    A = SpectralOperator([-1.0, 1.0])  # construction allowed, use restricted
    assert not A.is_exponentially_stable()
    with pytest.raises(NotExponentiallyStableError):
        A.require_stable()


def test_inv_I_minus_T_omega_examples():
    A = SpectralOperator([1.0])
    v = np.array([1.0 - math.exp(-2 * math.pi)])
    np.testing.assert_allclose(idd.inv_I_minus_T_omega(A, 2 * math.pi, v),
                               [1.0], rtol=1e-14)
    B = SpectralOperator([1.0, 2.0])
    w = idd.inv_I_minus_T_omega(B, math.log(2.0), [1.0, 1.0])
    np.testing.assert_allclose(w, [2.0, 4.0 / 3.0], rtol=1e-14)
    with pytest.raises(NotExponentiallyStableError):
        idd.inv_I_minus_T_omega(SpectralOperator([-1.0]), 1.0, [1.0])


def test_inv_identity_roundtrip():
    rng = np.random.default_rng(3)
    A = SpectralOperator([0.01, 1.0, 40.0])
    for omega in (0.1, 2 * math.pi, 30.0):
        v = rng.standard_normal(3)
        w = idd.inv_I_minus_T_omega(A, omega, v)
        back = w - idd.semigroup_apply(A, omega, w)
        np.testing.assert_allclose(back, v, rtol=1e-12)


def test_history_norm_examples():
    zero = HistorySegment.zeros(1.0, 0.25, 1)
    assert idd.history_norm(zero) == 0.0
    ramp = HistorySegment.from_function(1.0, 0.25, lambda s: s)
    assert idd.history_norm(ramp) == 1.0
    seg = HistorySegment(1.0, 0.25, 0.3 * np.ones(5), jumps=[(-0.5, [0.9])])
    assert idd.history_norm(seg) == 0.9


@given(st.integers(min_value=0, max_value=2 ** 32 - 1),
       st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
@settings(max_examples=40, deadline=None)
def test_history_norm_is_a_norm(seed, scale):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((5, 2))
    b = rng.standard_normal((5, 2))
    na = HistorySegment(1.0, 0.25, a).sup_norm()
    nb = HistorySegment(1.0, 0.25, b).sup_norm()
    nab = HistorySegment(1.0, 0.25, a + b).sup_norm()
    nsa = HistorySegment(1.0, 0.25, scale * a).sup_norm()
    assert nab <= na + nb + 1e-12
    assert abs(nsa - abs(scale) * na) <= 1e-12 * max(1.0, na)


def test_history_segment_value_semantics():
    # jump at s = -0.5: left limit 1, right limit 5, next sample 2
    seg = HistorySegment(1.0, 0.25, [0.0, 1.0, 1.0, 2.0, 3.0],
                         jumps=[(-0.5, [5.0])])
    assert seg.value(-0.5)[0] == 1.0            # left-continuous at the node
    np.testing.assert_allclose(seg.value(-0.375), [3.5])  # lerp from right limit
    np.testing.assert_allclose(seg.value(-0.125), [2.5])  # plain lerp
    np.testing.assert_allclose(seg.right_limit_at(2), [5.0])
    assert seg.value(0.0)[0] == 3.0


def test_history_segment_validation():
    with pytest.raises(ConfigurationError):
        HistorySegment(1.0, 0.3, np.zeros(4))   # r not commensurate
    with pytest.raises(InvalidInputError):
        HistorySegment(1.0, 0.25, np.zeros(4))  # wrong sample count
    with pytest.raises(InvalidInputError):
        HistorySegment(1.0, 0.25, np.zeros(5), jumps=[(0.0, [1.0])])  # s = 0
    with pytest.raises(InvalidInputError):
        HistorySegment(1.0, 0.25, np.zeros(5), jumps=[(-1.5, [1.0])])
    seg = HistorySegment(1.0, 0.25, np.zeros(5))
    with pytest.raises(ValueError):
        seg.samples[0] = 1.0                     # read-only view


def test_replace_top_keeps_jumps():
    seg = HistorySegment(1.0, 0.25, [0.0, 1.0, 1.0, 2.0, 3.0],
                         jumps=[(-0.5, [5.0])])
    top = seg.replace_top([9.0])
    assert top.value(0.0)[0] == 9.0
    np.testing.assert_allclose(top.right_limit_at(2), [5.0])
    assert seg.value(0.0)[0] == 3.0              # original untouched


def test_windowed_trapz_smooth_matches_plain_rule():
    h = 0.05
    seg = HistorySegment.from_function(1.0, h, lambda s: math.cos(s))
    kern = lambda s: np.exp(2.0 * np.asarray(s))
    got = windowed_trapz(seg, kern)
    s = seg.node_times
    want = np.trapezoid(np.exp(2 * s) * np.cos(s), s)
    np.testing.assert_allclose(got, [want], rtol=1e-13)


def test_windowed_trapz_uses_right_limit_after_jump():
    # phi = 1 on [-1, -0.5], right limit 3 at -0.5, then 3; kernel = 1
    seg = HistorySegment(1.0, 0.25, [1.0, 1.0, 1.0, 3.0, 3.0],
                         jumps=[(-0.5, [3.0])])
    got = windowed_trapz(seg, lambda s: np.ones_like(s))
    # cells: [1,1], [1,1], [3_right, 3], [3, 3] -> 0.25*(1+1+3+3)
    np.testing.assert_allclose(got, [2.0], rtol=1e-14)


def test_impulse_schedule_validation_and_events():
    om = 2 * math.pi
    with pytest.raises(InvalidInputError):
        ImpulseSchedule(om, [0.0, 1.0], [lambda x: x] * 2, [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        ImpulseSchedule(om, [2.0, 1.0], [lambda x: x] * 2, [1.0, 1.0])
    with pytest.raises(InvalidInputError):
        ImpulseSchedule(om, [1.0], [lambda x: x], [-0.5])
    sched = ImpulseSchedule(om, [math.pi / 2, 3 * math.pi / 2],
                            [lambda x: x, lambda x: 2 * x], [1.0, 2.0])
    assert sched.count == 2
    assert sched.sum_a() == 3.0
    np.testing.assert_allclose(sched.apply(1, [2.0]), [4.0])
    events = sched.events_between(0.0, 2 * om)
    assert len(events) == 4
    np.testing.assert_allclose([t for t, _ in events],
                               [math.pi / 2, 3 * math.pi / 2,
                                math.pi / 2 + om, 3 * math.pi / 2 + om])
    assert [k for _, k in events] == [0, 1, 0, 1]
    # half-open (t0, t1]
    assert sched.events_between(math.pi / 2, math.pi / 2) == []
    hit = sched.events_between(0.0, math.pi / 2)
    assert len(hit) == 1 and hit[0][1] == 0


def test_snap_to_grid():
    assert snap_to_grid(0.3, 0.1) == 3
    assert snap_to_grid(100 * 0.007, 0.007) == 100
    with pytest.raises(ConfigurationError):
        snap_to_grid(0.35, 0.1)


def test_trajectory_jump_records_and_norm():
    h = 0.5
    samples = np.array([[1.0], [2.0], [0.5], [0.25]])
    traj = Trajectory(h, 0.0, samples, [(1.0, [2.0], [4.0])])
    assert traj.node_count == 4
    assert traj.end_time == 1.5
    np.testing.assert_allclose(traj.right_at(2), [4.0])
    np.testing.assert_allclose(traj.right_at(1), [2.0])  # no jump there
    assert traj.pc_norm() == 4.0                         # sup includes rights
    np.testing.assert_allclose(traj.value(1.0), [0.5])   # left-continuous
    rec_t, left, right = traj.jump_records[0]
    np.testing.assert_allclose(np.asarray(right) - np.asarray(left), [2.0])


def test_trajectory_validation():
    with pytest.raises(InvalidInputError):
        Trajectory(0.5, 0.0, np.zeros((3, 1)), [(2.0, [0.0], [1.0])])  # off grid end
    with pytest.raises(ConfigurationError):
        Trajectory(0.5, 0.0, np.zeros((3, 1)), [(0.26, [0.0], [1.0])])
    with pytest.raises(InvalidInputError):
        Trajectory(-0.5, 0.0, np.zeros((3, 1)))
