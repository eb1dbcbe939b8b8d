import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slogs.errors import ParameterError
from slogs.stats import fit_loglog_slope, jackknife, mean_stderr


def test_identity_line():
    f = fit_loglog_slope([(x, x) for x in (0.1, 0.01, 0.001)])
    assert f.slope == pytest.approx(1.0, abs=1e-14)
    assert f.r_squared == pytest.approx(1.0)
    assert f.slope_stderr == pytest.approx(0.0, abs=1e-12)


def test_constant_gives_zero_slope():
    f = fit_loglog_slope([(x, 3.0) for x in (1, 2, 4, 8)])
    assert f.slope == pytest.approx(0.0, abs=1e-14)
    assert f.r_squared == 1.0


def test_noisy_square_root(rng):
    xs = np.logspace(-4, -1, 6)
    ys = np.sqrt(xs) * np.exp(rng.normal(0, 0.05, xs.size))
    f = fit_loglog_slope(list(zip(xs, ys, 0.05 * ys)))
    assert 0.45 <= f.slope <= 0.55
    lo, hi = f.ci()
    assert lo < f.slope < hi


@settings(max_examples=50, deadline=None)
@given(p=st.floats(-3, 3), c=st.floats(1e-3, 1e3))
def test_power_laws_recovered(p, c):
    xs = [1e-3, 1e-2, 1e-1, 1.0]
    f = fit_loglog_slope([(x, c * x ** p) for x in xs])
    assert f.slope == pytest.approx(p, abs=1e-9)
    assert f.intercept == pytest.approx(np.log(c), abs=1e-8)


def test_weights_favour_precise_points():
    pts = [(1.0, 1.0, 1e-3), (2.0, 2.0, 1e-3), (4.0, 4.0, 1e-3), (8.0, 100.0, 1e3)]
    assert fit_loglog_slope(pts).slope == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("pts", [
    [(1, 1), (2, 2)],
    [(1, 1), (2, 0), (3, 3)],
    [(0, 1), (2, 2), (3, 3)],
    [(1, 1), (3, 2), (2, 3)],
    [(1, 1), (2, 2), (3, 3, -1)],
])
def test_fit_errors(pts):
    with pytest.raises(ParameterError):
        fit_loglog_slope(pts)


def test_jackknife_of_mean_matches_closed_form(rng):
    v = rng.normal(size=50)
    m, se = jackknife(v)
    m2, se2 = mean_stderr(v)
    assert m == pytest.approx(m2) and se == pytest.approx(se2, rel=1e-12)
    assert jackknife(v[:1])[1] == 0.0
