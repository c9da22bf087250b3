"""Self-test oracles: analytic identities checked against Monte Carlo.

Each check compares an implemented closed form against an independent
numerical route (Monte Carlo sampling, quadrature, or a pointwise
identity) and returns a CheckResult.  Scalar comparisons use the
3-standard-error rule.  Families of many simultaneous 3-sigma comparisons
cannot demand zero exceedances (a correct implementation of K comparisons
produces about 0.27% of them beyond 3 sigma), so families larger than
FAMILY_STRICT_LIMIT pass when the exceedance count stays within the
3-sigma binomial envelope of that rate and no single z-score exceeds
Z_HARD_CAP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from . import chisq as chisq_mod
from .hermite import expand_inner_product, hermite_normalized, pattern_pairs, phi_batch
from .randmat import haar_orthogonal_batch, uniform_sphere
from .rng import make_rng

FAMILY_STRICT_LIMIT = 100
FAMILY_P3 = 0.0027  # two-sided 3-sigma exceedance rate
FAMILY_RATE_CAP = 0.005
Z_HARD_CAP = 6.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    tolerance: float
    detail: str


def family_gate(z: np.ndarray) -> tuple[bool, str]:
    """Pass rule for a family of |z|-scores checked at the 3-sigma level.

    A correct implementation of K comparisons produces roughly 0.27% of
    them beyond 3 sigma, drifting mildly upward for heavy-tailed products
    and fluctuating between seeds well beyond binomial noise because the
    comparisons share samples.  Large families therefore pass when the
    exceedance rate stays under FAMILY_RATE_CAP (about twice the drifted
    nominal rate; any real normalization or law defect produces tens of
    percent) and no single score breaches Z_HARD_CAP.
    """
    z = np.abs(np.asarray(z, dtype=float))
    k = z.size
    viol = int((z > 3.0).sum())
    zmax = float(z.max(initial=0.0))
    if k <= FAMILY_STRICT_LIMIT:
        passed = viol == 0
        detail = f"{k} comparisons, {viol} beyond 3*stderr, max |z|={zmax:.2f}"
        return passed, detail
    allowed = math.floor(k * FAMILY_RATE_CAP)
    passed = viol <= allowed and zmax <= Z_HARD_CAP
    detail = (
        f"{k} comparisons, {viol} beyond 3*stderr "
        f"(nominal {k * FAMILY_P3:.0f}, cap {allowed}), "
        f"max |z|={zmax:.2f} (cap {Z_HARD_CAP})"
    )
    return passed, detail


def _zscore(mean: float, target: float, stderr: float) -> float:
    if stderr == 0.0:
        return 0.0 if mean == target else float("inf")
    return (mean - target) / stderr


# ---------------------------------------------------------------------------
# individual checks


def check_inner_expansion(seed: int = 0) -> CheckResult:
    """Pointwise identity: h_deg(<x, y>) equals its Hermite expansion in x."""
    rng = make_rng(seed, 0)
    tol = 1e-9
    worst = 0.0
    for d in (2, 3):
        for deg in range(1, 6):
            for _ in range(100):
                y = uniform_sphere(d, rng)
                x = rng.standard_normal(d)
                lhs = hermite_normalized(deg, float(x @ y))
                rhs = expand_inner_product(y, deg).evaluate(x)
                worst = max(worst, abs(lhs - rhs) / max(1.0, abs(lhs)))
    return CheckResult(
        name="inner-expansion",
        passed=worst <= tol,
        observed=worst,
        tolerance=tol,
        detail="max relative error over 100 points per (d, degree) in {2,3}x{1..5}",
    )


def check_sphere(seed: int = 0, draws: int = 100_000, max_weight: int = 6) -> CheckResult:
    """Uniform-sphere monomial moments vs the closed form, d in {2, 3, 8}."""
    from .hermite import multiindex_enumerate

    zs = []
    for stream, d in enumerate((2, 3, 8)):
        rng = make_rng(seed, stream)
        pts = rng.standard_normal((draws, d))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        powers = [np.ones((draws,))]
        pow_table = [
            np.stack([pts[:, c] ** e for e in range(max_weight + 1)], axis=1)
            for c in range(d)
        ]
        for gamma in multiindex_enumerate(d, max_weight):
            if sum(gamma) == 0:
                continue
            vals = powers[0]
            for c, e in enumerate(gamma):
                if e:
                    vals = vals * pow_table[c][:, e]
            target = chisq_mod.sphere_moment(gamma, d)
            stderr = float(vals.std(ddof=1) / math.sqrt(draws))
            zs.append(_zscore(float(vals.mean()), target, stderr))
    passed, detail = family_gate(np.asarray(zs))
    return CheckResult(
        name="sphere",
        passed=passed,
        observed=float(np.max(np.abs(zs))),
        tolerance=3.0,
        detail=detail,
    )


def _submatrix_density_1x1(d: int):
    def dens(z: float) -> float:
        return chisq_mod.submatrix_density(np.array([[z]]), d)

    return dens


def check_submatrix_density(seed: int = 0, draws: int = 5000) -> CheckResult:
    """Haar entry law vs the 1 x 1 submatrix density: KS and normalization."""
    d = 10
    # normalization by quadrature
    norm_err = 0.0
    for dd in (4, 10):
        integral, _ = quad(_submatrix_density_1x1(dd), -1.0, 1.0, limit=200)
        norm_err = max(norm_err, abs(integral - 1.0))
    # KS distance of sampled Q[0, 0] against the quadrature CDF
    rng = make_rng(seed, 0)
    samples = np.sort(haar_orthogonal_batch(d, draws, rng)[:, 0, 0])
    grid = np.linspace(-1.0, 1.0, 20001)
    pdf = np.array([_submatrix_density_1x1(d)(z) for z in grid])
    cdf = cumulative_trapezoid(pdf, grid, initial=0.0)
    cdf /= cdf[-1]
    f_at = np.interp(samples, grid, cdf)
    i = np.arange(1, draws + 1)
    ks = float(np.max(np.maximum(np.abs(i / draws - f_at), np.abs((i - 1) / draws - f_at))))
    ks_tol, norm_tol = 0.03, 1e-6
    passed = ks <= ks_tol and norm_err <= norm_tol
    return CheckResult(
        name="submatrix-density",
        passed=passed,
        observed=ks,
        tolerance=ks_tol,
        detail=f"KS({draws} draws, d={d})={ks:.4f}; normalization error={norm_err:.2e}",
    )


def check_gaussian_exp(seed: int = 0, draws: int = 200_000) -> CheckResult:
    """Gaussian exponential-moment closed form vs Monte Carlo."""
    rng = make_rng(seed, 0)
    d, m, lam = 2, 2, 0.3
    A = rng.standard_normal((d, m))
    target = chisq_mod.gaussian_exp_moment(lam, A)
    Z = rng.standard_normal((draws, d, m))
    vals = np.exp(-lam * np.einsum("sij,sij->s", Z, Z) + np.einsum("ij,sij->s", A, Z))
    stderr = float(vals.std(ddof=1) / math.sqrt(draws))
    z = _zscore(float(vals.mean()), target, stderr)
    return CheckResult(
        name="gauss-exp",
        passed=abs(z) <= 3.0,
        observed=abs(z),
        tolerance=3.0,
        detail=f"mc={vals.mean():.6f} closed={target:.6f} stderr={stderr:.2e}",
    )


def check_gaussian_quad(seed: int = 0, draws: int = 200_000) -> CheckResult:
    """Gaussian quadratic-form moment closed form vs Monte Carlo."""
    rng = make_rng(seed, 0)
    d, k = 3, 2
    G = rng.standard_normal((d, d))
    A = G @ G.T / d
    target = chisq_mod.gaussian_quadform_moment(A, k)
    Z = rng.standard_normal((draws, d, k))
    vals = np.exp(-np.einsum("sik,ij,sjk->s", Z, A, Z))
    stderr = float(vals.std(ddof=1) / math.sqrt(draws))
    z = _zscore(float(vals.mean()), target, stderr)
    return CheckResult(
        name="gauss-quad",
        passed=abs(z) <= 3.0,
        observed=abs(z),
        tolerance=3.0,
        detail=f"mc={vals.mean():.6f} closed={target:.6f} stderr={stderr:.2e}",
    )


def check_det_integral(seed: int = 0, draws: int = 100_000) -> CheckResult:
    """Haar determinant integral stays within the 2*eps*k envelope of 1."""
    d, eps, k = 50, 0.1, 2
    est = chisq_mod.det_integral_mc(d, eps, k, draws, make_rng(seed, 0))
    tol = 2.0 * eps * k
    dev = abs(est.value - 1.0)
    return CheckResult(
        name="det-integral",
        passed=dev <= tol,
        observed=dev,
        tolerance=tol,
        detail=f"estimate={est.value:.5f} stderr={est.stderr:.2e} at (d={d}, eps={eps}, k={k})",
    )


def orthonormality_gram(
    seed: int,
    n: int = 2,
    d: int = 2,
    m: int = 2,
    max_degree: int = 4,
    samples: int = 1_000_000,
    chunk: int = 20_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo Gram matrix of the basis under the null, with stderrs."""
    patterns = pattern_pairs(n, d, m, max_degree)
    K = len(patterns)
    rng = make_rng(seed, 0)
    G = np.zeros((K, K))
    M2 = np.zeros((K, K))
    done = 0
    while done < samples:
        b = min(chunk, samples - done)
        X = rng.standard_normal((b, n, d))
        Y = rng.standard_normal((b, n, m))
        vals = phi_batch(patterns, X, Y)
        G += vals.T @ vals
        sq = vals * vals
        M2 += sq.T @ sq
        done += b
    G /= samples
    M2 /= samples
    var = np.maximum(M2 - G * G, 0.0)
    stderr = np.sqrt(var / samples)
    return G, stderr


def check_orthonormality(seed: int = 0, samples: int = 1_000_000) -> CheckResult:
    """Null Gram matrix of the degree <= 4 basis at n=2, d=m=2 is the identity."""
    G, stderr = orthonormality_gram(seed, samples=samples)
    K = G.shape[0]
    dev = G - np.eye(K)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(stderr > 0, dev / stderr, np.where(dev == 0.0, 0.0, np.inf))
    passed, detail = family_gate(z.ravel())
    return CheckResult(
        name="orthonormality",
        passed=passed,
        observed=float(np.max(np.abs(z))),
        tolerance=3.0,
        detail=f"{K}x{K} Gram, max |G - I|={np.max(np.abs(dev)):.2e}; " + detail,
    )


ORACLE_CHECKS = {
    "inner-expansion": check_inner_expansion,
    "sphere": check_sphere,
    "submatrix-density": check_submatrix_density,
    "gauss-exp": check_gaussian_exp,
    "gauss-quad": check_gaussian_quad,
    "det-integral": check_det_integral,
    "orthonormality": check_orthonormality,
}


def run_checks(names: list[str], seed: int = 0) -> list[CheckResult]:
    results = []
    for name in names:
        if name not in ORACLE_CHECKS:
            raise KeyError(name)
        results.append(ORACLE_CHECKS[name](seed=seed))
    return results
