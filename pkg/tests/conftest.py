"""Shared fixtures: a scalar impulsive delay problem small enough to solve fast."""
import math

import numpy as np
import pytest

import impulsedde as idd

OMEGA = 2 * math.pi
N_SCALAR = 2000
H_SCALAR = OMEGA / N_SCALAR
R_SCALAR = 100 * H_SCALAR


def make_scalar_problem(impulse_scale=0.3, declared_a=None, forcing_amp=1.0):
    A = idd.SpectralOperator([1.0])
    aff = idd.AffineDelayForm(
        state_gain=lambda t: 0.25 * math.sin(t),
        kernel=lambda s: np.exp(4.0 * np.asarray(s)),
        forcing=(lambda t: np.array([forcing_amp * math.sin(t)]))
        if forcing_amp else None)
    c2 = 0.25 * (1.0 - math.exp(-4.0 * R_SCALAR))
    F = idd.Nonlinearity.from_affine(aff, OMEGA, declared_c0=abs(forcing_amp),
                                     declared_c1=0.25, declared_c2=c2)
    jump = lambda x: impulse_scale * np.sin(x)
    a = impulse_scale if declared_a is None else declared_a
    sched = idd.ImpulseSchedule(OMEGA, [math.pi / 2, 3 * math.pi / 2],
                                [jump, jump], [a, a])
    return idd.ProblemSpec(A, F, sched, R_SCALAR, OMEGA)


@pytest.fixture(scope="session")
def scalar_problem():
    return make_scalar_problem()


@pytest.fixture(scope="session")
def scalar_cfg():
    return idd.IntegratorConfig(grid_step=H_SCALAR)


@pytest.fixture(scope="session")
def scalar_solution(scalar_problem, scalar_cfg):
    return idd.picard_periodic(scalar_problem, None, 1e-10, 200, scalar_cfg)
