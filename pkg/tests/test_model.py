"""Assembled models: density identities, conditionals, summaries, JSON."""
from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as oc
from conftest import make_random_vine, random_spec, spec_grid_points
from xvine.errors import (
    DimensionTooLarge,
    DomainError,
    InvalidIndex,
    RecursionUnavailable,
)
from xvine.families import PairFamily, TailFamily, tail_chi
from xvine.model import (
    XVineSpec,
    _margin_density,
    conditional_cdf,
    conditional_copula_density,
    conditional_quantile,
    density,
    exponent_measure_density,
    log_density,
    model_chi,
    model_from_json,
    model_to_json,
    resolve_conditional,
)
from xvine.reference import (
    chain_vine,
    five_variable_spec,
    hr_vine_spec,
    hr_partial_rho,
    logistic_vine_spec,
    neglogistic_vine_spec,
)

GAMMA3 = np.array([[0.0, 1.4, 1.6], [1.4, 0.0, 1.2], [1.6, 1.2, 0.0]])


@pytest.fixture(scope="module")
def bench():
    return five_variable_spec()


# ---------------------------------------------------------------------------
# spec validation
# ---------------------------------------------------------------------------

def test_spec_requires_every_edge(bench):
    vine = bench.vine
    tails = dict(bench.tail)
    pairs = dict(bench.pairs)
    missing_tail = {e: f for e, f in tails.items() if e.key != (1, 2, ())}
    with pytest.raises(DomainError):
        XVineSpec(vine, missing_tail, pairs)
    missing_pair = {e: c for e, c in pairs.items() if e.key != (1, 5, (2, 3, 4))}
    with pytest.raises(DomainError):
        XVineSpec(vine, tails, missing_pair)


def test_spec_rejects_misplaced_families(bench):
    vine = bench.vine
    with pytest.raises(DomainError):
        XVineSpec(vine, {**bench.tail, (1, 3, (2,)): TailFamily("hr", 1.0)}, bench.pairs)
    with pytest.raises(DomainError):
        XVineSpec(vine, {**bench.tail, (1, 2): PairFamily("gaussian", 0.5)}, bench.pairs)


def test_family_of(bench):
    assert bench.family_of((2, 4)).kind == "logistic"
    assert bench.family_of((1, 5, (4, 3, 2))).theta == 0.1


# ---------------------------------------------------------------------------
# density identities against direct closed forms
# ---------------------------------------------------------------------------

def test_logistic_model_equals_direct_trivariate():
    th = 2.0
    spec = logistic_vine_spec(chain_vine(3), th)
    pts = spec_grid_points(np.random.default_rng(0), 3, 40)
    got = density(spec, pts)
    want = np.array([oc.tri_logistic(p, th) for p in pts])
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_neglogistic_model_equals_direct_trivariate():
    th = 1.5
    spec = neglogistic_vine_spec(chain_vine(3), th)
    pts = spec_grid_points(np.random.default_rng(1), 3, 40)
    got = density(spec, pts)
    want = np.array([oc.tri_neglogistic(p, th) for p in pts])
    np.testing.assert_allclose(got, want, rtol=1e-10)


def test_hr_model_equals_direct_trivariate():
    spec = hr_vine_spec(chain_vine(3), GAMMA3)
    pts = spec_grid_points(np.random.default_rng(2), 3, 40)
    got = density(spec, pts)
    want = np.array([oc.tri_hr(p, GAMMA3) for p in pts])
    np.testing.assert_allclose(got, want, rtol=1e-9)


def test_hr_partial_rho_frozen():
    g = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 1.5], [2.0, 1.5, 0.0]])
    want = (1.0 + 1.5 - 2.0) / (2.0 * np.sqrt(1.5))
    assert abs(hr_partial_rho(g, 1, 3, [2]) - want) < 1e-14


@settings(deadline=None, max_examples=25)
@given(st.integers(0, 10_000), st.integers(3, 6))
def test_density_homogeneity_random_specs(seed, d):
    # h-values are scale-invariant only up to float rounding (~1e-15), and the
    # pair-copula log density has unbounded corner derivatives in its uniform
    # arguments, so log-scale agreement degrades to ~1e-6 at extreme points.
    vine = make_random_vine(seed, d)
    spec = random_spec(vine, np.random.default_rng(seed + 13))
    x = spec_grid_points(np.random.default_rng(seed + 29), d, 6)
    base = log_density(spec, x)
    for t in (0.2, 5.0):
        shifted = log_density(spec, t * x)
        np.testing.assert_allclose(shifted, base + (1 - d) * np.log(t), atol=5e-5)


def test_density_zero_on_nonpositive_rows(bench):
    x = np.array([[1.0, 1.0, 1.0, 1.0, 1.0], [1.0, -2.0, 1.0, 1.0, 1.0]])
    out = density(bench, x)
    assert out[0] > 0.0 and out[1] == 0.0
    assert log_density(bench, [1, 1, 0, 1, 1]) == -np.inf


def test_density_input_validation(bench):
    with pytest.raises(DomainError):
        density(bench, [1.0, 2.0])
    with pytest.raises(DomainError):
        density(bench, [1.0, np.nan, 1.0, 1.0, 1.0])


def test_exponent_measure_change_of_variables(bench):
    y = spec_grid_points(np.random.default_rng(3), 5, 10)
    got = exponent_measure_density(bench, y)
    want = density(bench, 1.0 / y) * np.prod(y, axis=1) ** -2.0
    np.testing.assert_allclose(got, want, rtol=1e-12)
    assert exponent_measure_density(bench, [1, 1, 1, -1, 1]) == 0.0


def test_margin_normalization_small_models():
    spec = hr_vine_spec(chain_vine(3), GAMMA3)
    for node, val in ((1, 0.8), (2, 1.6), (3, 0.4)):
        assert abs(_margin_density(spec, {node: val}) - 1.0) < 1e-6
    with pytest.raises(DimensionTooLarge):
        _margin_density(five_variable_spec(), {1: 1.0})


# ---------------------------------------------------------------------------
# conditional recursion
# ---------------------------------------------------------------------------

def test_resolve_conditional_explicit(bench):
    e = resolve_conditional(bench, 1, (2, 3, 4))
    assert e.key == (1, 4, (2, 3))
    assert resolve_conditional(bench, 5, (2, 3, 4)).key == (3, 5, (2, 4))


def test_resolve_conditional_truncation_reduction():
    full = five_variable_spec()
    trunc = XVineSpec(
        full.vine.truncate(2),
        {e.key: f for e, f in full.tail.items()},
        {e.key: c for e, c in full.pairs.items() if e.level == 2},
    )
    e = resolve_conditional(trunc, 1, (2, 3, 4))
    assert e.level == 2 and e.key == (1, 3, (2,))


def test_resolve_conditional_ambiguous_after_truncation():
    spec = logistic_vine_spec(chain_vine(3, q=1), 2.0)
    with pytest.raises(InvalidIndex):
        resolve_conditional(spec, 2, (1, 3))


def test_resolve_conditional_errors(bench):
    with pytest.raises(RecursionUnavailable):
        resolve_conditional(bench, 1, (3,))
    with pytest.raises(InvalidIndex):
        resolve_conditional(bench, 1, (1, 2))
    with pytest.raises(InvalidIndex):
        resolve_conditional(bench, 1, ())
    with pytest.raises(InvalidIndex):
        resolve_conditional(bench, 9, (2,))


def test_conditional_cdf_quantile_round_trip(bench):
    x_given = {2: 0.9, 3: 1.4, 4: 0.6}
    x = np.array([0.2, 1.0, 3.5])
    u = conditional_cdf(bench, 1, (2, 3, 4), x, x_given)
    assert np.all((0 < u) & (u < 1)) and np.all(np.diff(u) > 0)
    back = conditional_quantile(bench, 1, (2, 3, 4), u, x_given)
    np.testing.assert_allclose(back, x, rtol=1e-8)


def test_conditional_cdf_tree1_is_tail_h(bench):
    from xvine.families import tail_h
    got = conditional_cdf(bench, 1, (2,), 0.7, [1.3])
    want = tail_h(bench.tail[bench.vine.find_edge((1, 2))], 0.7, 1.3)
    np.testing.assert_allclose(got, want, rtol=1e-13)


def test_conditional_cdf_matches_margin_ratio():
    # R_{1|2,3}(x | x2, x3) should equal int_0^x r(t, x2, x3) dt / r_{23}(x2, x3)
    spec = hr_vine_spec(chain_vine(3), GAMMA3)
    x2, x3 = 1.1, 0.7
    gx, gw = oc.log_panels(upper=0.9)
    pts = np.column_stack([gx, np.full_like(gx, x2), np.full_like(gx, x3)])
    num = float(density(spec, pts) @ gw)
    den = float(oc.biv_hr(x2, x3, GAMMA3[1, 2]))
    got = float(conditional_cdf(spec, 1, (2, 3), 0.9, [x2, x3]))
    assert abs(got - num / den) < 1e-8


def test_conditional_validation(bench):
    with pytest.raises(DomainError):
        conditional_cdf(bench, 1, (2, 3, 4), 0.5, [1.0, -1.0, 1.0])
    with pytest.raises(DomainError):
        conditional_quantile(bench, 1, (2, 3, 4), 1.5, [1.0, 1.0, 1.0])
    with pytest.raises(InvalidIndex):
        conditional_cdf(bench, 1, (2, 3, 4), 0.5, {2: 1.0, 3: 1.0, 5: 1.0})


# ---------------------------------------------------------------------------
# dependence summaries
# ---------------------------------------------------------------------------

def test_model_chi_matches_family_chi(bench):
    got = model_chi(bench, (1, 2), n_mc=200_000, seed=4)
    want = tail_chi(bench.tail[bench.vine.find_edge((1, 2))])
    assert abs(got - want) < 0.01
    assert model_chi(bench, (1, 2), n_mc=50_000, seed=9) == \
           model_chi(bench, (1, 2), n_mc=50_000, seed=9)


def test_model_chi_triple_bounded_by_pairs(bench):
    triple = model_chi(bench, (2, 4, 5), n_mc=100_000, seed=5)
    pair = model_chi(bench, (4, 5), n_mc=100_000, seed=5)
    assert 0.0 < triple <= pair + 0.01


def test_model_chi_validation(bench):
    with pytest.raises(DomainError):
        model_chi(bench, (1,))
    with pytest.raises(DomainError):
        model_chi(bench, (1, 1))
    with pytest.raises(DomainError):
        model_chi(bench, (1, 9))


# ---------------------------------------------------------------------------
# conditional copula extraction (quadrature route)
# ---------------------------------------------------------------------------

def test_extracted_copula_matches_partial_correlation():
    spec = hr_vine_spec(chain_vine(3), GAMMA3)
    rho = hr_partial_rho(GAMMA3, 1, 3, [2])
    for u, v, x2 in ((0.3, 0.7, 1.0), (0.6, 0.45, 0.5)):
        got = conditional_copula_density(spec, (1, 3), (2,), (u, v), (x2,))
        want = float(oc.gaussian_copula_density(u, v, rho))
        assert abs(got - want) < 1e-5, (u, v, x2)


def test_extraction_validation(bench):
    spec = hr_vine_spec(chain_vine(3), GAMMA3)
    with pytest.raises(DimensionTooLarge):
        conditional_copula_density(bench, (1, 3), (2,), (0.5, 0.5), (1.0,))
    with pytest.raises(DomainError):
        conditional_copula_density(spec, (1, 2), (2,), (0.5, 0.5), (1.0,))
    with pytest.raises(DomainError):
        conditional_copula_density(spec, (1,), (2,), (0.5,), (1.0,))
    with pytest.raises(DomainError):
        conditional_copula_density(spec, (1, 3), (2,), (0.5, 1.2), (1.0,))


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def test_model_json_round_trip(bench):
    blob = json.dumps(model_to_json(bench))
    back = model_from_json(json.loads(blob))
    assert back.d == bench.d and back.q == bench.q
    for t in bench.vine.trees:
        for e in t:
            orig = bench.family_of(e)
            new = back.family_of(e.key)
            assert (orig.kind, orig.theta) == (new.kind, new.theta)


def test_model_json_rejects_malformed(bench):
    with pytest.raises(DomainError):
        model_from_json([])
    with pytest.raises(DomainError):
        model_from_json({"structure": {"d": 2, "trunc": 1, "matrix": [[1, 1], [0, 2]]}})
    blob = model_to_json(bench)
    blob["edges"][0]["family"] = "gaussian"  # pair family on a tree-1 edge
    with pytest.raises(DomainError):
        model_from_json(blob)
