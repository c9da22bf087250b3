"""Chi-square divergence between the reduced k-row planted and null laws.

Two noiseless closed forms (products of Wishart normalizing constants) and
one Monte Carlo evaluator for the square case m = d with noise cover the
regimes where the divergence is tractable.  The supporting analytic
moments (sphere monomials, Gaussian exponential moments, orthogonal
submatrix density, Haar determinant integrals) live here as well; they
double as oracles for the samplers.

All normalizing constants and determinants are handled in log space: the
raw constants overflow double precision once d reaches the low hundreds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .common import MomentEstimate, UnsupportedRegimeError
from .randmat import haar_orthogonal_batch

ZETA_SLACK = 1e-12
PSD_REL_TOL = 1e-10
SYMMETRY_TOL = 1e-10
HEAVY_TAIL_SIGMA = 1.0

REGIME_CASE1 = "case1_sigma0"
REGIME_CASE2 = "case2_sigma0"
REGIME_M_EQ_D = "m_eq_d"

_MC_CHUNK = 4096


@dataclass(frozen=True)
class WishartConstantQuery:
    """Arguments (s, t) of the Wishart normalizing constant."""

    s: int
    t: int

    def __post_init__(self) -> None:
        if not (self.s >= self.t >= 1):
            raise ValueError(f"need s >= t >= 1, got s={self.s}, t={self.t}")


@dataclass(frozen=True)
class ChiSquareReport:
    """One chi-square evaluation with its regime and method metadata."""

    regime: str
    value: float
    method: str  # "closed_form" | "monte_carlo"
    d: int
    m: int
    k: int
    sigma: float
    stderr: float | None = None
    samples: int | None = None
    warning: str = ""


def log_wishart_constant(s: int, t: int) -> float:
    """log of the Wishart normalizing constant omega(s, t).

    1/omega(s, t) = pi^{t(t-1)/4} * 2^{st/2} * prod_{j=1..t} Gamma((s-j+1)/2).
    """
    WishartConstantQuery(s, t)  # validates
    js = np.arange(1, t + 1)
    return -float(
        (t * (t - 1) / 4.0) * math.log(math.pi)
        + (s * t / 2.0) * math.log(2.0)
        + gammaln((s - js + 1) / 2.0).sum()
    )


def wishart_ratio_exact(d: int, k: int) -> float:
    """The 2k-step Wishart constant ratio as an exact telescoping product.

    Returns 2^{k^2} * prod_{j=1..k} prod_{i=1..k} ((d - j + 1)/2 - i),
    evaluated in log space.  Under this module's omega convention this is
    omega(d - 2k, k) / omega(d, k); it grows like d^{k^2}.
    """
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")
    if d <= 3 * k:
        raise ValueError(f"need d > 3k for positive factors, got d={d}, k={k}")
    log_val = k * k * math.log(2.0)
    for j in range(1, k + 1):
        for i in range(1, k + 1):
            factor = (d - j + 1) / 2.0 - i
            if factor <= 0:
                raise ValueError(f"nonpositive factor at (i={i}, j={j}) for d={d}, k={k}")
            log_val += math.log(factor)
    return math.exp(log_val)


def chisq_case1_closed(d: int, m: int, k: int) -> ChiSquareReport:
    """Noiseless closed form for k <= m (wide-response case).

    value = [omega(d-m, k)/omega(d, k)] * [omega(d-k-1, k)/omega(d-m-k-1, k)].

    Derivation sketch: condition on the row Gram A = X X^T, integrate the
    squared likelihood ratio over (A, Y) with the substitutions
    Y = A^{1/2} Z and A = (I - Z Z^T)^{-1/2} B (I - Z Z^T)^{-1/2}.  The
    second substitution acts on symmetric k x k matrices, whose Jacobian is
    det(I - Z Z^T)^{-(k+1)/2}; the two evaluators below (exact likelihood
    ratio Monte Carlo, and an exact quadrature identity at m = 1) pin this
    exponent down.  At k = 1 the formula coincides with the regrouped
    product [omega(d-m, 1)/omega(d-m-2, 1)] * [omega(d-2, 1)/omega(d, 1)].
    """
    if not 1 <= k <= m <= d:
        raise UnsupportedRegimeError(f"case1 needs 1 <= k <= m <= d, got d={d}, m={m}, k={k}")
    if d - m - 2 * k < k:
        raise UnsupportedRegimeError(
            f"case1 needs d - m - 2k >= k, got d={d}, m={m}, k={k}"
        )
    log_val = (
        log_wishart_constant(d - m, k)
        - log_wishart_constant(d, k)
        + log_wishart_constant(d - k - 1, k)
        - log_wishart_constant(d - m - k - 1, k)
    )
    return ChiSquareReport(
        regime=REGIME_CASE1, value=math.exp(log_val), method="closed_form",
        d=d, m=m, k=k, sigma=0.0,
    )


def chisq_case2_closed(d: int, m: int, k: int) -> ChiSquareReport:
    """Noiseless closed form for m <= k (tall-pattern case).

    value = [omega(d-k, m)^2/omega(d, m)^2] * [omega(d, k)/omega(d-m, k)]
            * [omega(d-k-1, m)/omega(d-2k-1, m)].

    Same derivation as case 1 with the roles of the Gram sides swapped; the
    final factor again carries the symmetric-space Jacobian exponent.  The
    two cases agree at their overlap k = m, and at m = 1 the value equals
    the exact sphere-overlap quadrature E[(1 - <q, q'>)^{-k}].
    """
    if not 1 <= m <= k:
        raise UnsupportedRegimeError(f"case2 needs 1 <= m <= k, got m={m}, k={k}")
    if d - 3 * k < m:
        raise UnsupportedRegimeError(f"case2 needs d - 3k >= m, got d={d}, m={m}, k={k}")
    log_val = (
        2.0 * (log_wishart_constant(d - k, m) - log_wishart_constant(d, m))
        + log_wishart_constant(d, k)
        - log_wishart_constant(d - m, k)
        + log_wishart_constant(d - k - 1, m)
        - log_wishart_constant(d - 2 * k - 1, m)
    )
    return ChiSquareReport(
        regime=REGIME_CASE2, value=math.exp(log_val), method="closed_form",
        d=d, m=m, k=k, sigma=0.0,
    )


# ---------------------------------------------------------------------------
# likelihood ratio for the k <= m noiseless case, and its Monte Carlo checks


def _reduced_log_likelihood(A: np.ndarray, Y: np.ndarray, d: int) -> np.ndarray:
    """log density ratio of the noiseless reduced planted law to the null.

    A: (..., k, k) symmetric positive definite, Y: (..., k, m).  Batched;
    -inf outside the support.  The normalizing constant is
    omega(d-m, k)/omega(d, k) for k <= m and omega(d-k, m)/omega(d, m)
    otherwise (the orthogonal-block density swaps its constant roles when
    the block is taller than wide); everything else is shared.
    """
    k = A.shape[-1]
    m = Y.shape[-1]
    w, v = np.linalg.eigh(A)
    inv_sqrt = (v * (w[..., None, :] ** -0.5)) @ np.swapaxes(v, -2, -1)
    M = inv_sqrt @ Y
    gram = M @ np.swapaxes(M, -2, -1)
    eigs = np.linalg.eigvalsh(gram)
    inside = eigs[..., -1] <= 1.0 + ZETA_SLACK
    clipped = np.clip(eigs, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logdet_gap = np.log1p(-clipped).sum(axis=-1)
    if k <= m:
        log_const = log_wishart_constant(d - m, k) - log_wishart_constant(d, k)
    else:
        log_const = log_wishart_constant(d - k, m) - log_wishart_constant(d, m)
    tr_yy = np.einsum("...ij,...ij->...", Y, Y)
    log_l = (
        log_const
        + 0.5 * tr_yy
        + 0.5 * (d - k - m - 1) * logdet_gap
        - 0.5 * m * np.log(w).sum(axis=-1)
    )
    return np.where(inside, log_l, -np.inf)


def likelihood_ratio_case1(A: np.ndarray, Y: np.ndarray, d: int) -> float:
    """Density ratio of the k-row planted law to the null at (A = X X^T, Y).

    Zero whenever some eigenvalue of (A^{-1/2} Y)(A^{-1/2} Y)^T exceeds 1.
    """
    A = np.asarray(A, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got {A.shape}")
    k = A.shape[0]
    if Y.shape[0] != k:
        raise ValueError(f"Y row count {Y.shape[0]} does not match A size {k}")
    if k > Y.shape[1]:
        raise ValueError(f"need k <= m, got k={k}, m={Y.shape[1]}")
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(A))):
        raise ValueError("A must be symmetric")
    if np.linalg.eigvalsh(A)[0] <= 0:
        raise ValueError("A must be positive definite")
    log_l = _reduced_log_likelihood(A[None], Y[None], d)[0]
    return float(np.exp(log_l))


def chisq_case1_mc(
    d: int, m: int, k: int, samples: int, rng: np.random.Generator
) -> ChiSquareReport:
    """Monte Carlo E[L^2] under the null, cross-checking the case-1 closed form."""
    if not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    vals = np.empty(samples)
    done = 0
    while done < samples:
        b = min(_MC_CHUNK, samples - done)
        X = rng.standard_normal((b, k, d))
        Y = rng.standard_normal((b, k, m))
        A = X @ np.swapaxes(X, -2, -1)
        log_l = _reduced_log_likelihood(A, Y, d)
        vals[done : done + b] = np.where(np.isneginf(log_l), 0.0, np.exp(2.0 * log_l))
        done += b
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("inf")
    return ChiSquareReport(
        regime=REGIME_CASE1, value=mean, method="monte_carlo",
        d=d, m=m, k=k, sigma=0.0, stderr=stderr, samples=samples,
    )


def likelihood_ratio_case1_mc_mean(
    d: int, m: int, k: int, samples: int, rng: np.random.Generator
) -> MomentEstimate:
    """Monte Carlo E[L] under the null; a likelihood ratio integrates to one."""
    vals = np.empty(samples)
    done = 0
    while done < samples:
        b = min(_MC_CHUNK, samples - done)
        X = rng.standard_normal((b, k, d))
        Y = rng.standard_normal((b, k, m))
        A = X @ np.swapaxes(X, -2, -1)
        log_l = _reduced_log_likelihood(A, Y, d)
        vals[done : done + b] = np.where(np.isneginf(log_l), 0.0, np.exp(log_l))
        done += b
    return MomentEstimate(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


def chisq_m_eq_d_mc(
    d: int, k: int, sigma: float, samples: int, rng: np.random.Generator
) -> ChiSquareReport:
    """Monte Carlo chi-square for the square case via the Haar determinant integral.

    Averages det(I - Q/(1+sigma^2))^{-k} over Haar orthogonal Q.  Refuses
    sigma = 0 (the integrand is unbounded as the contraction factor
    approaches 1) and flags sigma < 1 as heavy-tailed.
    """
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    if sigma == 0:
        raise UnsupportedRegimeError(
            "m = d Monte Carlo needs sigma > 0: the determinant integrand is unbounded"
        )
    if k == 0:
        return ChiSquareReport(
            regime=REGIME_M_EQ_D, value=1.0, method="closed_form",
            d=d, m=d, k=0, sigma=sigma,
        )
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    eps = 1.0 / (1.0 + sigma**2)
    eye = np.eye(d)
    vals = np.empty(samples)
    done = 0
    while done < samples:
        b = min(_MC_CHUNK, samples - done)
        q = haar_orthogonal_batch(d, b, rng)
        sign, logdet = np.linalg.slogdet(eye - eps * q)
        vals[done : done + b] = np.exp(-k * logdet)  # det > 0 for eps < 1
        done += b
    warning = ""
    if sigma < HEAVY_TAIL_SIGMA:
        warning = "heavy-tail: sigma < 1 makes the determinant integrand heavy-tailed"
    return ChiSquareReport(
        regime=REGIME_M_EQ_D, value=float(vals.mean()), method="monte_carlo",
        d=d, m=d, k=k, sigma=sigma,
        stderr=float(vals.std(ddof=1) / math.sqrt(samples)), samples=samples,
        warning=warning,
    )


# ---------------------------------------------------------------------------
# analytic moment oracles


def _log_double_factorial_odd(g: int) -> float:
    """log((g-1)!!) for even g >= 0, via (2s-1)!! = (2s)!/(2^s s!)."""
    s = g // 2
    return float(gammaln(2 * s + 1) - s * math.log(2.0) - gammaln(s + 1))


def sphere_moment(gamma: Sequence[int], d: int) -> float:
    """E[q^gamma] for q uniform on the unit sphere in R^d.

    Zero when any part is odd; otherwise
    Gamma(d/2) * prod (gamma_i - 1)!! / (Gamma((d+|gamma|)/2) * 2^{|gamma|/2}).
    """
    gamma = tuple(int(g) for g in gamma)
    if len(gamma) != d:
        raise ValueError(f"gamma has {len(gamma)} parts, expected d={d}")
    if any(g < 0 for g in gamma):
        raise ValueError("gamma parts must be nonnegative")
    if any(g % 2 for g in gamma):
        return 0.0
    w = sum(gamma)
    log_val = (
        gammaln(d / 2.0)
        - gammaln((d + w) / 2.0)
        - (w / 2.0) * math.log(2.0)
        + sum(_log_double_factorial_odd(g) for g in gamma)
    )
    return float(math.exp(log_val))


def sphere_moment_exact(gamma: Sequence[int], d: int) -> Fraction:
    """Exact rational value of sphere_moment: prod (g_i-1)!! / prod_{j<|g|/2} (d+2j)."""
    gamma = tuple(int(g) for g in gamma)
    if any(g % 2 for g in gamma):
        return Fraction(0)
    num = 1
    for g in gamma:
        for odd in range(1, g, 2):
            num *= odd
    den = 1
    for j in range(sum(gamma) // 2):
        den *= d + 2 * j
    return Fraction(num, den)


def det_integral_mc(
    d: int, eps: float, k: int, samples: int, rng: np.random.Generator
) -> MomentEstimate:
    """Monte Carlo E[det(I + eps Q)^k] over Haar orthogonal Q, via slogdet."""
    if not abs(eps) < 1:
        raise ValueError(f"need |eps| < 1, got {eps}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if eps == 0.0 or k == 0:
        return MomentEstimate(value=1.0, stderr=0.0, samples=0)
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")
    eye = np.eye(d)
    vals = np.empty(samples)
    done = 0
    while done < samples:
        b = min(_MC_CHUNK, samples - done)
        q = haar_orthogonal_batch(d, b, rng)
        _, logdet = np.linalg.slogdet(eye + eps * q)
        vals[done : done + b] = np.exp(k * logdet)
        done += b
    return MomentEstimate(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


def gaussian_exp_moment(lam: float, A: np.ndarray) -> float:
    """E[exp(-lam ||Z||_F^2 + <A, Z>)] for Z a Gaussian matrix shaped like A.

    Equals (1+2 lam)^{-dm/2} * exp(||A||_F^2 / (2 (1+2 lam))).
    """
    if not lam > 0:
        raise ValueError(f"need lam > 0, got {lam}")
    A = np.asarray(A, dtype=float)
    dm = A.size
    fro2 = float((A * A).sum())
    return float((1.0 + 2.0 * lam) ** (-dm / 2.0) * math.exp(fro2 / (2.0 * (1.0 + 2.0 * lam))))


def gaussian_quadform_moment(A: np.ndarray, k: int) -> float:
    """E[exp(-tr(Z^T A Z))] for Z d x k Gaussian and A symmetric PSD.

    Equals det(I + 2A)^{-k/2}, evaluated through the eigenvalues of A.
    """
    if k < 0:
        raise ValueError(f"need k >= 0, got {k}")
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"A must be square, got shape {A.shape}")
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * max(1.0, float(np.max(np.abs(A)))):
        raise ValueError("A must be symmetric")
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] < -PSD_REL_TOL * max(float(eigs[-1]), 0.0):
        raise ValueError(f"A must be PSD, smallest eigenvalue {eigs[0]}")
    eigs = np.clip(eigs, 0.0, None)
    return float(math.exp(-0.5 * k * np.log1p(2.0 * eigs).sum()))


def submatrix_density(Z: np.ndarray, d: int) -> float:
    """Density of the upper-left p x q block of a Haar d x d orthogonal matrix.

    For p >= q (roles are swapped internally otherwise):
    omega(d-p, q) / (omega(d, q) (2 pi)^{pq/2})
        * det(I_q - Z^T Z)^{(d-p-q-1)/2}
    on the set where every eigenvalue of Z^T Z lies in [0, 1]; zero outside.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise ValueError(f"Z must be 2-d, got shape {Z.shape}")
    p, q = Z.shape
    if p < q:
        Z = Z.T
        p, q = q, p
    if p + q > d:
        raise UnsupportedRegimeError(f"need p + q <= d, got p={p}, q={q}, d={d}")
    eigs = np.linalg.eigvalsh(Z.T @ Z)
    if eigs[-1] > 1.0 + ZETA_SLACK or eigs[0] < -ZETA_SLACK:
        return 0.0
    clipped = np.clip(eigs, 0.0, 1.0)
    with np.errstate(divide="ignore"):
        logdet_gap = float(np.log1p(-clipped).sum())
    log_dens = (
        log_wishart_constant(d - p, q)
        - log_wishart_constant(d, q)
        - (p * q / 2.0) * math.log(2.0 * math.pi)
        + 0.5 * (d - p - q - 1) * logdet_gap
    )
    return float(math.exp(log_dens))
