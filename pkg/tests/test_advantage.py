import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import assert_within_nse

from shufflab import make_rng
from shufflab.advantage import (
    advantage_bound_m1,
    advantage_bound_via_chisq,
    advantage_sq_with_patterns,
    estimate_advantage_sq,
    estimate_phi_mean_planted,
)
from shufflab.chisq import chisq_case1_closed, chisq_case2_closed, sphere_moment_exact
from shufflab.common import CapacityError, UnsupportedRegimeError
from shufflab.hermite import PatternPair, multiindex_enumerate, multinomial_exact
from shufflab.model import ModelParams


def _pattern(n, d, m, a_rows, b_rows):
    return PatternPair(A=np.array(a_rows).reshape(n, d), B=np.array(b_rows).reshape(n, m))


def test_phi_mean_empty_pattern_exact():
    params = ModelParams(n=2, d=2, m=1, sigma=0.3)
    pat = _pattern(2, 2, 1, [[0, 0], [0, 0]], [[0], [0]])
    est = estimate_phi_mean_planted(pat, params, 100, make_rng(80))
    assert est.value == 1.0 and est.stderr == 0.0


def test_phi_mean_odd_pattern_is_zero():
    params = ModelParams(n=2, d=2, m=1, sigma=0.5)
    pat = _pattern(2, 2, 1, [[1, 0], [0, 0]], [[0], [0]])
    est = estimate_phi_mean_planted(pat, params, 100_000, make_rng(81))
    assert_within_nse(est.value, est.stderr, 0.0, label="odd pattern mean")


def test_phi_mean_matches_sphere_moment():
    # n=1, sigma=0, m=1: the planted mean of the (alpha=(2,0), beta=2)
    # pattern is E[q_1^2] = 1/2 on the circle
    params = ModelParams(n=1, d=2, m=1, sigma=0.0)
    pat = _pattern(1, 2, 1, [[2, 0]], [[2]])
    est = estimate_phi_mean_planted(pat, params, 300_000, make_rng(82))
    assert_within_nse(est.value, est.stderr, 0.5, label="E[phi] for (2,0)/(2)")


def test_phi_mean_shape_mismatch():
    params = ModelParams(n=2, d=2, m=1, sigma=0.0)
    pat = _pattern(1, 2, 1, [[2, 0]], [[2]])
    with pytest.raises(ValueError):
        estimate_phi_mean_planted(pat, params, 100, make_rng(83))


def test_phi_mean_exact_perm_agrees_with_plain():
    params = ModelParams(n=3, d=2, m=2, sigma=0.4)
    pat = _pattern(3, 2, 2, [[1, 0], [1, 0], [0, 0]], [[1, 0], [1, 0], [0, 0]])
    plain = estimate_phi_mean_planted(pat, params, 150_000, make_rng(84))
    rb = estimate_phi_mean_planted(pat, params, 30_000, make_rng(85), exact_perm=True)
    z = (plain.value - rb.value) / math.hypot(plain.stderr, rb.stderr)
    assert abs(z) <= 3.0
    with pytest.raises(ValueError):
        estimate_phi_mean_planted(pat, ModelParams(n=8, d=2, m=2, sigma=0.4), 10,
                                  make_rng(86), exact_perm=True)


def test_pattern_row_permutation_symmetry():
    # exchangeability: permuting the rows of (A, B) jointly keeps the mean
    params = ModelParams(n=2, d=2, m=1, sigma=0.0)
    pat = _pattern(2, 2, 1, [[2, 0], [0, 0]], [[2], [0]])
    swapped = _pattern(2, 2, 1, [[0, 0], [2, 0]], [[0], [2]])
    e1 = estimate_phi_mean_planted(pat, params, 200_000, make_rng(87))
    e2 = estimate_phi_mean_planted(swapped, params, 200_000, make_rng(88))
    z = (e1.value - e2.value) / math.hypot(e1.stderr, e2.stderr)
    assert abs(z) <= 3.0


def _m1_exact_advantage_sq(n: int, d: int, D: int) -> float:
    """Exact squared advantage for n rows, one response column, zero noise.

    Direct enumeration of the closed-form basis means: a pattern's mean is
    nonzero only when the Y-side exponents are a permutation of the X-side
    row weights, and the mean splits uniformly across the matching row
    pairings.  Summing the squares over all Y-side assignments for a fixed
    (alpha_1, ..., alpha_n) yields the weight prod(multiplicities!)/n! on
    the squared identity-pairing mean.
    """
    alphas = [a for a in multiindex_enumerate(d, D)]
    n_fact = math.factorial(n)
    total = Fraction(0)
    for combo in itertools.product(alphas, repeat=n):
        degree = sum(2 * sum(a) for a in combo)  # beta rows mirror |alpha_i|
        if degree > D:
            continue
        gamma = tuple(sum(a[i] for a in combo) for i in range(d))
        coeff = Fraction(1)
        for a in combo:
            coeff *= multinomial_exact(sum(a), a)
        weights = [sum(a) for a in combo]
        mult = Fraction(1)
        for w in set(weights):
            mult *= math.factorial(weights.count(w))
        mom = sphere_moment_exact(gamma, d)
        total += coeff * mom * mom * mult / n_fact
    return float(total)


def test_m1_exact_oracle_values():
    assert _m1_exact_advantage_sq(1, 2, 3) == 1.0
    assert _m1_exact_advantage_sq(1, 2, 4) == 1.5
    # n=2, d=2, D=4 by hand: empty (1) + paired weight-1 rows (1/2)
    # + single weight-2 rows, halved across the two pairings (1/2)
    assert _m1_exact_advantage_sq(2, 2, 4) == 2.0


def test_estimate_advantage_sq_toy_cases():
    params = ModelParams(n=1, d=2, m=1, sigma=0.0)
    est0 = estimate_advantage_sq(params, 0, 10, make_rng(89))
    assert est0.value_sq == 1.0 and est0.pattern_count == 1

    est3 = estimate_advantage_sq(params, 3, 200_000, make_rng(90))
    assert_within_nse(est3.value_sq, est3.stderr, 1.0, label="adv^2 at D=3")

    est4 = estimate_advantage_sq(params, 4, 200_000, make_rng(91))
    assert_within_nse(est4.value_sq, est4.stderr, 1.5, label="adv^2 at D=4")


def test_estimate_matches_exact_enumeration():
    for n, d, D, seed in ((1, 3, 4, 92), (2, 2, 4, 93)):
        params = ModelParams(n=n, d=d, m=1, sigma=0.0)
        exact = _m1_exact_advantage_sq(n, d, D)
        est = estimate_advantage_sq(params, D, 150_000, make_rng(seed), exact_perm=(n > 1))
        assert_within_nse(est.value_sq, est.stderr, exact, label=f"n={n} d={d} D={D}")


def test_estimate_nondecreasing_in_degree():
    params = ModelParams(n=1, d=2, m=1, sigma=0.0)
    prev = None
    for D in (1, 2, 3, 4):
        est = estimate_advantage_sq(params, D, 100_000, make_rng(94))
        assert est.value_sq >= 1.0 - 3 * est.stderr
        if prev is not None:
            assert est.value_sq >= prev.value_sq - 3 * math.hypot(est.stderr, prev.stderr)
        prev = est


def test_pattern_cap_enforced():
    params = ModelParams(n=4, d=4, m=4, sigma=0.0)
    with pytest.raises(CapacityError) as err:
        estimate_advantage_sq(params, 6, 100, make_rng(95), pattern_cap=1000)
    assert "1000" in str(err.value)


def test_per_pattern_breakdown_sums_to_total():
    params = ModelParams(n=1, d=2, m=1, sigma=0.0)
    est, rows = advantage_sq_with_patterns(params, 4, 50_000, make_rng(96))
    assert len(rows) == est.pattern_count
    total = sum(r.squared_contribution for r in rows)
    assert math.isclose(total, est.value_sq, rel_tol=1e-12)
    assert rows[0].mean == 1.0 and rows[0].degree == 0


def test_bound_m1_base_cases_and_monotonicity():
    assert advantage_bound_m1(2, 0) == 1.0
    assert advantage_bound_m1(2, 1) == 1.0
    values = [advantage_bound_m1(2, D) for D in (1, 2, 3, 4)]
    assert values == sorted(values)


def test_bound_m1_matches_brute_force():
    # independent enumeration over ordered tuples, exact arithmetic
    for d, D in ((2, 2), (2, 3), (3, 2)):
        alphas = [a for a in multiindex_enumerate(d, D) if 0 < sum(a)]
        total = Fraction(1)
        for k in range(1, D + 1):
            for tup in itertools.product(alphas, repeat=k):
                gamma = tuple(sum(t[i] for t in tup) for i in range(d))
                w = Fraction(1)
                for a in tup:
                    w *= multinomial_exact(sum(a), a)
                mom = sphere_moment_exact(gamma, d)
                total += w * mom * mom
        assert math.isclose(advantage_bound_m1(d, D), float(total), rel_tol=1e-12)


def test_bound_m1_dominates_estimate():
    params = ModelParams(n=1, d=2, m=1, sigma=0.0)
    est = estimate_advantage_sq(params, 4, 100_000, make_rng(97))
    assert advantage_bound_m1(2, 4) >= est.value_sq - 3 * est.stderr


def test_bound_m1_caps():
    with pytest.raises(CapacityError):
        advantage_bound_m1(7, 2)
    with pytest.raises(CapacityError):
        advantage_bound_m1(2, 9)
    with pytest.raises(CapacityError):
        advantage_bound_m1(6, 8)  # inside the policy box but the lattice blows up


def test_bound_via_chisq_closed_route():
    got = advantage_bound_via_chisq(50, 2, 0.0, 2)
    want = 1.0 + (chisq_case1_closed(50, 2, 1).value - 1.0) + (
        chisq_case1_closed(50, 2, 2).value - 1.0
    )
    assert math.isclose(got, want, rel_tol=1e-12)
    assert math.isclose(chisq_case1_closed(50, 2, 1).value, 24 / 23, rel_tol=1e-12)

    mixed = advantage_bound_via_chisq(40, 1, 0.0, 2)  # k=1 case1, k=2 case2
    want = 1.0 + (chisq_case1_closed(40, 1, 1).value - 1.0) + (
        chisq_case2_closed(40, 1, 2).value - 1.0
    )
    assert math.isclose(mixed, want, rel_tol=1e-12)


def test_bound_via_chisq_mc_route():
    value = advantage_bound_via_chisq(40, 40, 10.0, 2, samples=20_000, rng=make_rng(98))
    assert 1.0 <= value <= 1.2


def test_bound_via_chisq_unsupported_regimes():
    with pytest.raises(UnsupportedRegimeError) as err:
        advantage_bound_via_chisq(40, 40, 0.0, 1)  # sigma=0 with m=d
    assert "d=40" in str(err.value) and "sigma=0" in str(err.value)
    with pytest.raises(UnsupportedRegimeError):
        advantage_bound_via_chisq(40, 20, 1.0, 1)  # sigma>0 with m != d
    with pytest.raises(ValueError):
        advantage_bound_via_chisq(40, 40, 1.0, 1)  # mc path without rng


def test_bound_via_chisq_dominates_estimate():
    params = ModelParams(n=2, d=12, m=1, sigma=0.0)
    est = estimate_advantage_sq(params, 2, 60_000, make_rng(99))
    bound = advantage_bound_via_chisq(12, 1, 0.0, 2)
    assert bound >= est.value_sq - 3 * est.stderr
