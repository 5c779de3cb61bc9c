import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from seqgen.errors import InsufficientDataError
from seqgen.fitting import fit_exponent, fit_log_law, fit_power_law
from seqgen.seeding import derive_rng, derive_seed


def test_linear_exponent_exact():
    x = np.arange(1.0, 20.0)
    assert fit_exponent(x, x).exponent == pytest.approx(1.0, abs=1e-12)


def test_sqrt_exponent_noiseless():
    x = np.array([16, 32, 64, 128, 256], dtype=float)
    r = fit_exponent(x, np.sqrt(x))
    assert abs(r.exponent - 0.5) < 1e-12
    assert r.ci[0] <= 0.5 <= r.ci[1]


@given(p=st.floats(-2, 2), c=st.floats(0.1, 10))
@settings(max_examples=50, deadline=None)
def test_power_law_recovered(p, c):
    x = np.geomspace(1, 1000, 12)
    r = fit_exponent(x, c * x ** p)
    assert r.exponent == pytest.approx(p, abs=1e-9)
    assert r.intercept == pytest.approx(np.log(c), abs=1e-8)


def test_window_and_errors():
    x = np.arange(1, 11, dtype=float)
    r = fit_exponent(x, x ** 2, window=(3, 8))
    assert r.window == (3.0, 8.0) and r.n_points == 6
    with pytest.raises(InsufficientDataError):
        fit_exponent(x, x, window=(1, 3))
    with pytest.raises(InsufficientDataError):
        fit_exponent(x, x - 5)


def test_ensemble_bootstrap_interval_contains_truth():
    rng = np.random.default_rng(0)
    x = np.geomspace(10, 1000, 8)
    samples = x ** 0.5 * rng.exponential(size=(2000, x.size))
    r = fit_exponent(x, samples.mean(axis=0), samples=samples)
    assert r.ci[0] < r.ci[1]
    assert r.overlaps(0.5, 0.0)


def test_log_vs_power_law():
    x = np.geomspace(16, 256, 9)
    y = 0.3 + 0.5 * np.log(x)
    a, b, rss = fit_log_law(x, y)
    assert b == pytest.approx(0.5) and rss < 1e-20
    c, p, rss_p = fit_power_law(x, 2 * x ** 0.5)
    assert p == pytest.approx(0.5, abs=1e-6) and c == pytest.approx(2, rel=1e-6)


def test_seed_streams_reproducible_and_distinct():
    a = derive_rng(7, "pda", 3, 1).random(5)
    b = derive_rng(7, "pda", 3, 1).random(5)
    c = derive_rng(7, "pda", 3, 2).random(5)
    d = derive_rng(7, "traps", 3, 1).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c) and not np.allclose(a, d)
    assert derive_seed(2 ** 64 - 1, "x").entropy == 2 ** 64 - 1
