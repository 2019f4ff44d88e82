import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from subjump import PiecewisePower


def example():
    return PiecewisePower.continuous(2.0, (0.5, 3.0), (-0.5, 1.0, -2.5))


def test_continuity_fixes_coefficients():
    f = example()
    for b in f.edges:
        assert f(b * (1 - 1e-12)) == pytest.approx(f(b * (1 + 1e-12)), rel=1e-9)


@pytest.mark.parametrize("a,b", [(0.0, 0.2), (0.1, 0.5), (0.3, 2.0), (1.0, 10.0), (2.0, math.inf)])
def test_integral_matches_quad(a, b):
    f = example()
    pts = [p for p in f.edges if a < p < b] if math.isfinite(b) else None
    ref, _ = integrate.quad(f, a, b, points=pts, limit=200, epsabs=0, epsrel=1e-12)
    assert f.integral(a, b) == pytest.approx(ref, rel=1e-9)


def test_divergence_is_inf():
    assert PiecewisePower.monomial(1.0, -1.0).integral(0.0, 1.0) == math.inf
    assert PiecewisePower.monomial(1.0, -0.5).integral(1.0, math.inf) == math.inf
    assert PiecewisePower.monomial(1.0, -1.0).integral(1.0, math.e) == pytest.approx(1.0)


def test_cumulative_agrees_with_integral():
    f = example()
    x = np.logspace(-3, 2, 41)
    assert np.allclose(f.cumulative(x), [f.integral(0.0, v) for v in x], rtol=1e-12)


@given(st.floats(-0.9, 3.0), st.floats(-0.9, 3.0), st.floats(0.01, 100.0))
def test_product_is_pointwise(p, q, x):
    f = PiecewisePower.continuous(1.5, (1.0,), (p, q))
    g = PiecewisePower.continuous(0.7, (0.3, 4.0), (q, p, 1.0))
    assert (f * g)(x) == pytest.approx(f(x) * g(x), rel=1e-12)


def test_rejects_bad_edges():
    with pytest.raises(ValueError):
        PiecewisePower((1.0, 1.0), (1.0, 2.0, 3.0), (1.0, 1.0, 1.0))
    with pytest.raises(ValueError):
        PiecewisePower((1.0,), (1.0,), (1.0,))
