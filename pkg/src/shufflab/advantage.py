"""Estimators and enumerators for the degree-D advantage.

The squared advantage equals the sum over basis patterns of squared
planted-law means of the basis functions.  The Monte Carlo estimator here
is unbiased for that sum of squares: naive squaring of a Monte Carlo mean
inflates each term by its variance over the sample count, so the standard
(mean^2 - var/samples) correction is applied per pattern.  Standard errors
come from a batch jackknife.

Two upper bounds complete the picture: an exact enumeration for a single
response column at zero noise (rational arithmetic throughout), and the
chi-square route 1 + sum_k (chi^2_k - 1) over the reduced k-row models.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import chisq as chisq_mod
from . import randmat
from .common import CapacityError, MomentEstimate, UnsupportedRegimeError
from .hermite import (
    PatternPair,
    multiindex_enumerate,
    multinomial_exact,
    pattern_count,
    pattern_pairs,
    phi_batch,
)
from .model import ModelParams

DEFAULT_PATTERN_CAP = 1_000_000
EXACT_PERM_MAX_N = 7
BOUND_M1_MAX_D = 6
BOUND_M1_MAX_DEGREE = 8
BOUND_M1_WORK_CAP = 20_000_000

_JACKKNIFE_BATCHES = 20


@dataclass(frozen=True)
class AdvantageEstimate:
    """Unbiased estimate of the squared degree-D advantage."""

    degree: int
    value_sq: float
    stderr: float
    pattern_count: int
    samples: int


def _perm_averaged_phi(
    patterns: list[PatternPair], params: ModelParams, size: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-draw basis values averaged over every row permutation.

    Conditioning on (X, Q, Z) and averaging the permutation out exactly
    (Rao-Blackwellization) keeps the estimator unbiased while removing the
    permutation's contribution to the variance.  Only viable for small n.
    """
    n, d, m, sigma = params.n, params.d, params.m, params.sigma
    X = rng.standard_normal((size, n, d))
    Q = randmat.stiefel_batch(d, m, size, rng)
    Z = rng.standard_normal((size, n, m))
    scale = math.sqrt(1.0 + sigma**2)
    acc = np.zeros((size, len(patterns)))
    count = 0
    for perm in itertools.permutations(range(n)):
        Y = (X[:, perm, :] @ Q + sigma * Z) / scale
        acc += phi_batch(patterns, X, Y)
        count += 1
    return acc / count


def _planted_phi(
    patterns: list[PatternPair], params: ModelParams, size: int, rng: np.random.Generator
) -> np.ndarray:
    from .model import sample_planted_batch

    X, Y = sample_planted_batch(params, size, rng)
    return phi_batch(patterns, X, Y)


def estimate_phi_mean_planted(
    pattern: PatternPair,
    params: ModelParams,
    samples: int,
    rng: np.random.Generator,
    exact_perm: bool = False,
) -> MomentEstimate:
    """Unbiased Monte Carlo estimate of the planted-law mean of one basis function."""
    if pattern.A.shape != (params.n, params.d) or pattern.B.shape != (params.n, params.m):
        raise ValueError(
            f"pattern shapes {pattern.A.shape}/{pattern.B.shape} do not match params "
            f"(n={params.n}, d={params.d}, m={params.m})"
        )
    if pattern.is_empty:
        return MomentEstimate(value=1.0, stderr=0.0, samples=0)
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    if exact_perm and params.n > EXACT_PERM_MAX_N:
        raise ValueError(f"exact permutation averaging supports n <= {EXACT_PERM_MAX_N}")
    sampler = _perm_averaged_phi if exact_perm else _planted_phi
    vals = sampler([pattern], params, samples, rng)[:, 0]
    return MomentEstimate(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


@dataclass(frozen=True)
class PatternContribution:
    """Per-pattern line of the advantage sum, for the CSV report."""

    pattern_id: int
    degree: int
    mean: float
    stderr: float
    squared_contribution: float


def advantage_sq_with_patterns(
    params: ModelParams,
    D: int,
    samples: int,
    rng: np.random.Generator,
    pattern_cap: int = DEFAULT_PATTERN_CAP,
    exact_perm: bool = False,
) -> tuple[AdvantageEstimate, list[PatternContribution]]:
    """Estimate the squared advantage and return the per-pattern breakdown."""
    if D < 0:
        raise ValueError(f"need D >= 0, got {D}")
    count = pattern_count(params.n, params.d, params.m, D)
    if count > pattern_cap:
        raise CapacityError(
            f"pattern enumeration needs {count} patterns, above the cap {pattern_cap}"
        )
    patterns = pattern_pairs(params.n, params.d, params.m, D)
    if D == 0:
        est = AdvantageEstimate(degree=0, value_sq=1.0, stderr=0.0, pattern_count=1, samples=0)
        return est, [PatternContribution(0, 0, 1.0, 0.0, 1.0)]
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")
    if exact_perm and params.n > EXACT_PERM_MAX_N:
        raise ValueError(f"exact permutation averaging supports n <= {EXACT_PERM_MAX_N}")
    sampler = _perm_averaged_phi if exact_perm else _planted_phi

    n_batches = min(_JACKKNIFE_BATCHES, samples)
    sizes = [samples // n_batches + (1 if b < samples % n_batches else 0) for b in range(n_batches)]
    K = len(patterns)
    sum1 = np.zeros((n_batches, K))
    sum2 = np.zeros((n_batches, K))
    for b, size in enumerate(sizes):
        vals = sampler(patterns, params, size, rng)
        sum1[b] = vals.sum(axis=0)
        sum2[b] = (vals * vals).sum(axis=0)

    def sum_of_squares(s1: np.ndarray, s2: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray, float]:
        mean = s1 / n
        var = (s2 - n * mean**2) / (n - 1)
        contrib = mean**2 - var / n
        return mean, var, float(contrib.sum())

    mean, var, value = sum_of_squares(sum1.sum(axis=0), sum2.sum(axis=0), samples)

    # leave-one-batch-out jackknife for the standard error of the total
    loo = np.empty(n_batches)
    for b in range(n_batches):
        s1 = sum1.sum(axis=0) - sum1[b]
        s2 = sum2.sum(axis=0) - sum2[b]
        _, _, loo[b] = sum_of_squares(s1, s2, samples - sizes[b])
    stderr = math.sqrt((n_batches - 1) / n_batches * float(((loo - loo.mean()) ** 2).sum()))

    est = AdvantageEstimate(
        degree=D, value_sq=value, stderr=stderr, pattern_count=K, samples=samples
    )
    per_mean_stderr = np.sqrt(var / samples)
    rows = [
        PatternContribution(
            pattern_id=i,
            degree=p.degree,
            mean=float(mean[i]),
            stderr=float(per_mean_stderr[i]),
            squared_contribution=float(mean[i] ** 2 - var[i] / samples),
        )
        for i, p in enumerate(patterns)
    ]
    return est, rows


def estimate_advantage_sq(
    params: ModelParams,
    D: int,
    samples: int,
    rng: np.random.Generator,
    pattern_cap: int = DEFAULT_PATTERN_CAP,
    exact_perm: bool = False,
) -> AdvantageEstimate:
    """Unbiased estimate of the squared degree-D advantage (see module docstring)."""
    est, _ = advantage_sq_with_patterns(
        params, D, samples, rng, pattern_cap=pattern_cap, exact_perm=exact_perm
    )
    return est


# ---------------------------------------------------------------------------
# exact single-column bound at zero noise


def _nonzero_multiindices(d: int, max_weight: int) -> dict[tuple[int, ...], Fraction]:
    """alpha -> multinomial(|alpha|, alpha) for 0 < |alpha| <= max_weight."""
    out: dict[tuple[int, ...], Fraction] = {}
    for alpha in multiindex_enumerate(d, max_weight):
        w = sum(alpha)
        if w:
            out[alpha] = Fraction(multinomial_exact(w, alpha))
    return out


def advantage_bound_m1(d: int, D: int, work_cap: int = BOUND_M1_WORK_CAP) -> float:
    """Exact upper bound on the squared advantage for one response column, zero noise.

    Evaluates 1 + sum over tuple lengths k <= D and ordered tuples
    (alpha_1, ..., alpha_k) with 0 < |alpha_i| <= D of
    prod_i multinomial(|alpha_i|, alpha_i) times the squared sphere moment of
    q^(alpha_1 + ... + alpha_k), all in exact rational arithmetic.  The tuple
    sum is collapsed by dynamic programming over the summed exponent.
    """
    if d < 1 or D < 0:
        raise ValueError(f"need d >= 1 and D >= 0, got d={d}, D={D}")
    if d > BOUND_M1_MAX_D or D > BOUND_M1_MAX_DEGREE:
        raise CapacityError(
            f"enumeration capped at d <= {BOUND_M1_MAX_D}, D <= {BOUND_M1_MAX_DEGREE}; "
            f"got d={d}, D={D}"
        )
    if D <= 1:
        # each pair contributes degree |alpha_i| + beta_i = 2|alpha_i| >= 2
        return 1.0

    base = _nonzero_multiindices(d, D)
    # convolution work estimate: sum_k |support(W_{k-1})| * |base|
    work = 0
    support_bound = 1
    for k in range(1, D + 1):
        work += support_bound * len(base)
        support_bound = math.comb(d + k * D, d)
        if work > work_cap:
            raise CapacityError(
                f"dynamic program needs more than {work_cap} lattice operations "
                f"(estimated {work} at tuple length {k}) for d={d}, D={D}"
            )

    total = Fraction(1)
    weights = base.copy()  # tuple length k = 1
    for k in range(1, D + 1):
        for gamma, w in weights.items():
            if all(g % 2 == 0 for g in gamma):
                moment = chisq_mod.sphere_moment_exact(gamma, d)
                total += w * moment * moment
        if k == D:
            break
        nxt: dict[tuple[int, ...], Fraction] = {}
        for gamma, w in weights.items():
            for alpha, wa in base.items():
                key = tuple(g + a for g, a in zip(gamma, alpha))
                if key in nxt:
                    nxt[key] += w * wa
                else:
                    nxt[key] = w * wa
        weights = nxt
    return float(total)


def advantage_bound_via_chisq(
    d: int,
    m: int,
    sigma: float,
    D: int,
    samples: int = 100_000,
    rng: np.random.Generator | None = None,
) -> float:
    """Upper bound 1 + sum_{k<=D} (chi^2(reduced_k) - 1).

    Uses the noiseless closed forms when sigma = 0 and the Monte Carlo
    determinant integral when m = d with noise (the returned value then
    carries that estimate's Monte Carlo error).
    """
    if D < 0:
        raise ValueError(f"need D >= 0, got {D}")
    total = 1.0
    for k in range(1, D + 1):
        try:
            if sigma == 0:
                if k <= m:
                    report = chisq_mod.chisq_case1_closed(d, m, k)
                else:
                    report = chisq_mod.chisq_case2_closed(d, m, k)
            elif m == d:
                if rng is None:
                    raise ValueError("rng is required for the Monte Carlo m = d path")
                report = chisq_mod.chisq_m_eq_d_mc(d, k, sigma, samples, rng)
            else:
                raise UnsupportedRegimeError("no closed form and m != d")
        except UnsupportedRegimeError as exc:
            raise UnsupportedRegimeError(
                f"no chi-square oracle applies at d={d}, m={m}, sigma={sigma} (k={k}): {exc}"
            ) from exc
        total += report.value - 1.0
    return total
