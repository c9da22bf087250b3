import math

import numpy as np
import pytest
from conftest import assert_within_nse, mean_and_stderr
from hypothesis import given, settings
from hypothesis import strategies as st

from shufflab import make_rng
from shufflab.hermite import (
    CoeffTable,
    PatternPair,
    expand_inner_product,
    hermite_multi,
    hermite_normalized,
    lambda_m1_closed,
    lambda_mc,
    lambda_mc_pairs,
    multiindex_enumerate,
    pattern_count,
    pattern_pairs,
    phi,
    phi_batch,
)
from shufflab.model import ModelParams, sample_null
from shufflab.randmat import uniform_sphere


def test_hermite_low_degrees():
    assert hermite_normalized(0, 3.7) == 1.0
    assert hermite_normalized(1, 2.0) == 2.0
    # degree 2: (z^2 - 1)/sqrt(2) at z = 2
    assert math.isclose(hermite_normalized(2, 2.0), 3 / math.sqrt(2), rel_tol=1e-15)


@given(st.integers(0, 20), st.floats(-8, 8))
@settings(max_examples=200)
def test_hermite_matches_numpy_hermite_e(degree, z):
    # independent oracle: numpy's probabilists' Hermite evaluated raw, then normalized
    coeffs = np.zeros(degree + 1)
    coeffs[degree] = 1.0
    expected = np.polynomial.hermite_e.hermeval(z, coeffs) / math.sqrt(math.factorial(degree))
    got = hermite_normalized(degree, z)
    assert math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-9)


@given(st.integers(1, 20), st.floats(-10, 10))
@settings(max_examples=100)
def test_three_term_recurrence_consistency(m, z):
    lhs = hermite_normalized(m + 1, z) * math.sqrt(m + 1)
    rhs = z * hermite_normalized(m, z) - math.sqrt(m) * hermite_normalized(m - 1, z)
    assert math.isclose(lhs, rhs, rel_tol=1e-9, abs_tol=1e-12)


def test_high_degree_stays_finite():
    for z in (-10.0, -1.0, 0.3, 10.0):
        assert math.isfinite(hermite_normalized(200, z))


def test_hermite_multi_basics():
    assert hermite_multi((0, 0, 0), (1.0, -2.0, 0.5)) == 1.0
    assert hermite_multi((1, 0), (3.0, 5.0)) == 3.0
    with pytest.raises(ValueError):
        hermite_multi((1, 0), (3.0, 5.0, 7.0))


def test_hermite_multi_orthonormality_small():
    # strict 3-sigma family: d = 2, weight <= 2 (21 distinct pairs)
    rng = make_rng(40)
    x = rng.standard_normal((400_000, 2))
    idxs = [a for a in multiindex_enumerate(2, 2)]
    from shufflab.hermite import _hermite_multi_batch

    vals = np.stack([_hermite_multi_batch(a, x) for a in idxs], axis=1)
    for i, a in enumerate(idxs):
        for j, b in enumerate(idxs):
            if j < i:
                continue
            m, se = mean_and_stderr(vals[:, i] * vals[:, j])
            target = 1.0 if a == b else 0.0
            if se == 0.0:
                assert m == target
            else:
                assert_within_nse(m, se, target, label=f"gram ({a},{b})")


def test_phi_empty_pattern_is_one():
    params = ModelParams(n=3, d=2, m=2, sigma=0.0)
    inst = sample_null(params, make_rng(41))
    pat = PatternPair(A=np.zeros((3, 2), int), B=np.zeros((3, 2), int))
    assert phi(pat, inst) == 1.0


def test_phi_shape_mismatch_rejected():
    params = ModelParams(n=3, d=2, m=2, sigma=0.0)
    inst = sample_null(params, make_rng(42))
    pat = PatternPair(A=np.zeros((2, 2), int), B=np.zeros((2, 2), int))
    with pytest.raises(ValueError):
        phi(pat, inst)


def test_phi_null_mean_zero_for_nonempty_patterns():
    rng = make_rng(43)
    X = rng.standard_normal((200_000, 2, 2))
    Y = rng.standard_normal((200_000, 2, 2))
    pats = [p for p in pattern_pairs(2, 2, 2, 2) if not p.is_empty][:10]
    vals = phi_batch(pats, X, Y)
    for j in range(vals.shape[1]):
        m, se = mean_and_stderr(vals[:, j])
        assert_within_nse(m, se, 0.0, label=f"E[phi_{j}]")


def test_phi_batch_agrees_with_scalar_phi():
    params = ModelParams(n=2, d=3, m=1, sigma=0.0)
    rng = make_rng(44)
    X = rng.standard_normal((7, 2, 3))
    Y = rng.standard_normal((7, 2, 1))
    pats = pattern_pairs(2, 3, 1, 3)
    vals = phi_batch(pats, X, Y)
    from shufflab.model import Instance

    for s in (0, 3, 6):
        inst = Instance(X=X[s], Y=Y[s], hypothesis="null")
        for j in (0, 5, len(pats) // 2, len(pats) - 1):
            assert math.isclose(vals[s, j], phi(pats[j], inst), rel_tol=1e-12, abs_tol=1e-12)


def test_expand_inner_product_coordinate_vector():
    table = expand_inner_product(np.array([1.0, 0.0]), 3)
    entries = {a: c for a, c in table.entries.items() if c != 0.0}
    assert entries == {(3, 0): 1.0}


def test_expand_inner_product_pointwise_identity():
    y = np.array([1.0, 1.0]) / math.sqrt(2)
    x = np.array([0.3, -1.7])
    table = expand_inner_product(y, 2)
    lhs = hermite_normalized(2, float(x @ y))
    rhs = table.evaluate(x)
    assert math.isclose(lhs, rhs, rel_tol=1e-10, abs_tol=1e-14)


def test_expand_inner_product_parseval():
    rng = make_rng(45)
    for d in (2, 3):
        for deg in range(1, 7):
            y = uniform_sphere(d, rng)
            assert math.isclose(expand_inner_product(y, deg).l2_norm(), 1.0, rel_tol=1e-12)


def test_expand_inner_product_identity_random_points():
    from shufflab.oracles import check_inner_expansion

    res = check_inner_expansion(seed=46)
    assert res.passed, res.detail


def test_expand_inner_product_rejects_non_unit():
    with pytest.raises(ValueError):
        expand_inner_product(np.array([1.0, 1.0]), 2)


def test_coeff_table_roundtrip():
    table = expand_inner_product(np.array([0.6, 0.8]), 2)
    parsed = CoeffTable.from_text(table.to_text())
    assert parsed.entries == pytest.approx(table.entries)


def test_lambda_mc_exact_cases():
    q = np.array([[0.6], [0.8]])
    est = lambda_mc((0, 0), (0,), q, 0.0, 10, make_rng(47))
    assert est.value == 1.0 and est.stderr == 0.0
    est = lambda_mc((0, 0), (2,), q, 0.0, 200_000, make_rng(48))
    assert_within_nse(est.value, est.stderr, 0.0, label="Lambda(0, beta)")


def test_lambda_mc_matches_m1_closed_form_example():
    q = np.array([[0.6], [0.8]])
    est = lambda_mc((2, 0), (2,), q, 0.0, 400_000, make_rng(49))
    assert_within_nse(est.value, est.stderr, 0.36, label="Lambda((2,0),(2))")


def test_lambda_m1_closed_values():
    assert lambda_m1_closed((1, 0), 2, (0.6, 0.8)) == 0.0  # |alpha| != beta
    assert lambda_m1_closed((1, 0), 1, (0.6, 0.8)) == 0.6
    got = lambda_m1_closed((1, 1), 2, (0.6, 0.8))
    assert math.isclose(got, math.sqrt(2) * 0.48, rel_tol=1e-14)
    with pytest.raises(ValueError):
        lambda_m1_closed((1, 0), 1, (0.6, 0.9))


def test_lambda_m1_closed_agrees_with_mc():
    rng = make_rng(50)
    draws = 0
    for trial in range(50):
        d = int(rng.integers(2, 5))
        alpha = tuple(int(a) for a in rng.integers(0, 3, size=d))
        if sum(alpha) == 0 or sum(alpha) > 4:
            alpha = (2,) + (0,) * (d - 1)
        beta = sum(alpha) if trial % 5 else sum(alpha) + 1
        qvec = uniform_sphere(d, rng)
        closed = lambda_m1_closed(alpha, beta, qvec)
        est = lambda_mc(alpha, (beta,), qvec[:, None], 0.0, 40_000, rng)
        assert_within_nse(est.value, est.stderr, closed, label=f"alpha={alpha} beta={beta}")
        draws += 1
    assert draws == 50


def test_multiindex_enumerate_small_cases():
    assert multiindex_enumerate(2, 1) == [(0, 0), (0, 1), (1, 0)]
    assert multiindex_enumerate(1, 3) == [(0,), (1,), (2,), (3,)]


@given(st.integers(1, 5), st.integers(0, 6))
def test_multiindex_count_and_order(d, w):
    idxs = multiindex_enumerate(d, w)
    assert len(idxs) == math.comb(d + w, w)
    assert len(set(idxs)) == len(idxs)
    keys = [(sum(a), a) for a in idxs]
    assert keys == sorted(keys)  # graded lexicographic


def test_pattern_count_formula():
    assert pattern_count(2, 2, 2, 4) == math.comb(8 + 4, 4) == 495
    assert len(pattern_pairs(2, 2, 2, 4)) == 495
