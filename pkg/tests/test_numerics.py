"""Numerical kernel contracts: inversion, optimization, quadrature, streams."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xvine.errors import BracketFailure, DomainError
from xvine.numerics import (
    ScalarProblem,
    invert_monotone,
    log_gamma,
    minimize_scalar,
    quad_1d,
    reg_beta_cdf,
    reg_beta_quantile,
    rng_stream,
    std_normal_cdf,
    std_normal_quantile,
)


def test_normal_round_trip():
    u = np.linspace(0.001, 0.999, 41)
    np.testing.assert_allclose(std_normal_cdf(std_normal_quantile(u)), u, atol=1e-12)


def test_normal_quantile_domain():
    with pytest.raises(DomainError):
        std_normal_quantile(1.5)
    with pytest.raises(DomainError):
        std_normal_quantile([0.2, np.nan])


def test_beta_round_trip():
    u = np.linspace(0.01, 0.99, 23)
    x = reg_beta_quantile(u, 2.5, 0.7)
    np.testing.assert_allclose(reg_beta_cdf(x, 2.5, 0.7), u, atol=1e-10)


def test_beta_rejects_bad_shapes():
    with pytest.raises(DomainError):
        reg_beta_cdf(0.5, -1.0, 2.0)
    with pytest.raises(DomainError):
        reg_beta_quantile(0.5, 1.0, 0.0)


def test_log_gamma_values():
    np.testing.assert_allclose(log_gamma([1.0, 2.0, 5.0]),
                               [0.0, 0.0, np.log(24.0)], atol=1e-12)
    with pytest.raises(DomainError):
        log_gamma(0.0)


@pytest.mark.parametrize("transform,box,truth", [
    ("identity", (-4.0, 7.0), 1.3),
    ("log", (1e-3, 50.0), 0.42),
    ("logm1", (1.0 + 1e-6, 30.0), 2.6),
    ("atanh", (-0.999, 0.999), -0.55),
])
def test_minimize_scalar_quadratic(transform, box, truth):
    prob = ScalarProblem(lambda x: (x - truth) ** 2, box, transform=transform)
    arg, val = minimize_scalar(prob, tol=1e-9)
    assert abs(arg - truth) < 1e-6
    assert val < 1e-10


def test_scalar_problem_validation():
    with pytest.raises(DomainError):
        ScalarProblem(lambda x: x, (2.0, 1.0))
    with pytest.raises(DomainError):
        ScalarProblem(lambda x: x, (0.0, 1.0), transform="cubic")


def test_minimize_scalar_survives_nonfinite():
    prob = ScalarProblem(lambda x: np.inf if x < 0.5 else (x - 2.0) ** 2,
                         (1e-3, 10.0), transform="log")
    arg, _ = minimize_scalar(prob, tol=1e-9)
    assert abs(arg - 2.0) < 1e-5


def test_invert_monotone_scalar_and_array():
    f = lambda x: x**3
    assert abs(invert_monotone(f, 8.0, (0.0, 10.0)) - 2.0) < 1e-9
    got = invert_monotone(f, np.array([1.0, 27.0]), (0.0, 10.0))
    np.testing.assert_allclose(got, [1.0, 3.0], atol=1e-9)


def test_invert_monotone_decreasing_and_expand():
    f = lambda x: -x
    assert abs(invert_monotone(f, -5.0, (0.0, 10.0)) - 5.0) < 1e-9
    # bracket too small without expansion
    with pytest.raises(BracketFailure):
        invert_monotone(lambda x: x, 100.0, (0.0, 1.0))
    assert abs(invert_monotone(lambda x: x, 100.0, (0.0, 1.0), expand=True) - 100.0) < 1e-7


def test_invert_monotone_rejects_empty_bracket():
    with pytest.raises(BracketFailure):
        invert_monotone(lambda x: x, 0.5, (1.0, 1.0))


@settings(deadline=None, max_examples=40)
@given(st.floats(0.05, 0.95), st.floats(0.3, 4.0))
def test_invert_monotone_beta_property(u, a):
    x = invert_monotone(lambda t: reg_beta_cdf(t, a, 1.7), u, (0.0, 1.0), tol=1e-12)
    assert abs(reg_beta_cdf(x, a, 1.7) - u) < 1e-10


def test_quad_1d_finite_and_improper():
    assert abs(quad_1d(lambda x: 2.0 * x, 0.0, 1.0) - 1.0) < 1e-10
    # integrand decaying like x^-2: truncation error ~ 1e-6 by design
    assert abs(quad_1d(lambda x: x**-2.0, 1.0, np.inf) - 1.0) < 2e-6


def test_rng_stream_reproducible_and_disjoint():
    a = rng_stream(7, 3).standard_normal(5)
    b = rng_stream(7, 3).standard_normal(5)
    c = rng_stream(7, 4).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    with pytest.raises(DomainError):
        rng_stream(-1)
