import math

import numpy as np
import pytest

from loglaw.core import torus_ball
from loglaw.estimators import RadiusSchedule, section_check
from loglaw.systems import Suspension, TorusMap


def test_constant_roof_is_exact():
    model = Suspension(TorusMap("cat"), 1.0, 0.0)
    rep = section_check(model, torus_ball((0.3, 0.7)), RadiusSchedule.geometric(0.2, 0.5, 4), 40, seed=1, workers=1)
    assert rep.mean_return == 1.0
    assert rep.max_residual == 0.0
    ok = ~rep.flow_censored
    sec, flow = rep.section_counts[ok], rep.flow_taus[ok]
    # unit roofs: flow time = (1 - h0) + tau_sec with 1 - h0 in (0, 1]
    assert np.all(flow[sec == -1] == 0)
    assert np.array_equal(np.ceil(flow[sec >= 0]) - 1, sec[sec >= 0])


def _roof_quadrature(c0, c1, k=100_000):
    x = (np.arange(k) + 0.5) / k
    return float(np.mean(c0 + c1 * np.cos(2 * np.pi * x)))


@pytest.mark.parametrize("variant,center", [("cat", (0.3, 0.7)), ("doubling", (0.3,))])
def test_cosine_roof_identity_and_mean_return(variant, center):
    model = Suspension(TorusMap(variant), 1.0, 0.5)
    rep = section_check(model, torus_ball(center), RadiusSchedule.geometric(0.2, 0.5, 4), 60, seed=2, workers=1)
    assert rep.max_residual < 1e-9
    assert np.all(rep.residuals < 1e-9)
    oracle = _roof_quadrature(1.0, 0.5)
    assert abs(rep.mean_return - oracle) < 4 * rep.mean_return_stderr + 0.02


def test_exponents_agree():
    model = Suspension(TorusMap("doubling"), 1.0, 0.5)
    rep = section_check(model, torus_ball((0.3,)), RadiusSchedule.dyadic(3, 8), 100, seed=3, workers=1)
    assert rep.exponent_gap <= 0.1
    assert all(0.5 < r < 2 for r in rep.ratio_by_radius)
