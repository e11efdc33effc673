import numpy as np
import pytest
from hypothesis import given, strategies as st

from loglaw import InsufficientDataError, InvalidArgumentError
from loglaw.estimators import RadiusSchedule, fit_hitting_exponent, loglog_fit


def test_exact_line():
    x = np.arange(5.0)
    f = loglog_fit(np.column_stack([x, 2 * x + 1]))
    assert f.slope == pytest.approx(2) and f.intercept == pytest.approx(1)
    assert f.r_squared == pytest.approx(1) and f.stderr < 1e-12


def test_two_points_are_not_enough():
    with pytest.raises(InsufficientDataError):
        loglog_fit([(0, 1), (1, 3)])


def test_repeated_abscissa_is_degenerate():
    with pytest.raises(InsufficientDataError):
        loglog_fit([(1, 1), (1, 2), (1, 3)])


@given(st.integers(0, 2**32 - 1))
def test_noisy_line_within_three_stderr(seed):
    gen = np.random.default_rng(seed)
    x = np.linspace(0, 5, 12)
    y = 1.5 * x - 0.5 + gen.normal(0, 0.1, len(x))
    f = loglog_fit(np.column_stack([x, y]))
    # a 3-sigma statement; with t(10) tails a handful of seeds in a thousand fail
    assert abs(f.slope - 1.5) < 4 * f.stderr


def test_weights_pick_out_points():
    pts = [(0, 0), (1, 1), (2, 2), (3, 30)]
    f = loglog_fit(pts, weights=[1, 1, 1, 1e-12])
    assert f.slope == pytest.approx(1, abs=1e-9)


def test_schedule_rules():
    s = RadiusSchedule.geometric(0.25, 0.5, 4)
    assert s.l_values == (0.25, 0.125, 0.0625, 0.03125)
    assert RadiusSchedule.dyadic(2, 4).l_values == (0.25, 0.125, 0.0625)
    with pytest.raises(InvalidArgumentError):
        RadiusSchedule((0.1, 0.2))
    with pytest.raises(InvalidArgumentError):
        RadiusSchedule((0.1, 1e-10))
    with pytest.raises(InvalidArgumentError):
        RadiusSchedule.geometric(0.1, 1.5, 3)


def test_censored_radius_is_dropped():
    l = np.array([0.5, 0.25, 0.125, 0.0625])
    taus = np.tile(l ** -2, (20, 1))
    cens = np.zeros_like(taus, dtype=bool)
    cens[:5, 3] = True
    fit = fit_hitting_exponent(l, taus, cens)
    assert fit.used == [True, True, True, False]
    assert fit.slope == pytest.approx(2)
    assert fit.n_censored[3] == 5 and any("censored" in w for w in fit.warnings)


def test_too_few_usable_radii():
    l = np.array([0.5, 0.25, 0.125])
    cens = np.zeros((10, 3), dtype=bool)
    cens[:, 2] = True
    with pytest.raises(InsufficientDataError):
        fit_hitting_exponent(l, np.ones((10, 3)), cens)
