"""Constant-degree detection statistic and threshold testing.

The statistic is f(X, Y) = (||Y||_F^2 - ||X||_F^2)^2.  In the square case
m = d its null mean is exactly 4nd and its planted mean is
4 sigma^2 nd / (1 + sigma^2), so the default test thresholds f at the
midpoint of the two analytic means and declares "planted" when f falls
below it (the planted mean is the smaller one for sigma < 1; the decision
direction is fixed accordingly).

For m < d the statistic is still computable, but the mean formulas and the
test calibration only apply at m = d; a warning is issued.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import Instance, ModelParams, sample_null_batch, sample_planted_batch

_TRIAL_CHUNK = 512


@dataclass(frozen=True)
class SeparationReport:
    """Empirical mean/variance of f under both laws and the separation ratio.

    separation_ratio = sqrt(max variance) / |mean gap|; values well below 1
    indicate that thresholding f separates the two laws.
    """

    mean_null: float
    var_null: float
    mean_planted: float
    var_planted: float
    separation_ratio: float
    trials: int


@dataclass(frozen=True)
class ErrorRates:
    """Empirical type-I/II rates of the thresholded test."""

    type1: float
    type2: float
    threshold: float
    trials_per_hypothesis: int


def statistic_f(inst: Instance) -> float:
    """(||Y||_F^2 - ||X||_F^2)^2 for a single instance."""
    x2 = float((inst.X * inst.X).sum())
    y2 = float((inst.Y * inst.Y).sum())
    return (y2 - x2) ** 2


def _statistic_batch(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    diff = np.einsum("sij,sij->s", Y, Y) - np.einsum("sij,sij->s", X, X)
    return diff**2


def _sample_f(
    params: ModelParams, hypothesis: str, trials: int, rng: np.random.Generator
) -> np.ndarray:
    sampler = sample_null_batch if hypothesis == "null" else sample_planted_batch
    out = np.empty(trials)
    done = 0
    while done < trials:
        b = min(_TRIAL_CHUNK, trials - done)
        X, Y = sampler(params, b, rng)
        out[done : done + b] = _statistic_batch(X, Y)
        done += b
    return out


def null_mean(params: ModelParams) -> float:
    """Analytic null mean of f: 4 n d (exact for m = d)."""
    return 4.0 * params.n * params.d


def planted_mean(params: ModelParams) -> float:
    """Analytic planted mean of f at m = d: 4 sigma^2 n d / (1 + sigma^2)."""
    s2 = params.sigma**2
    return 4.0 * s2 * params.n * params.d / (1.0 + s2)


def default_threshold(params: ModelParams) -> float:
    """Midpoint of the analytic null and planted means."""
    return 0.5 * (null_mean(params) + planted_mean(params))


def _warn_if_rectangular(params: ModelParams) -> None:
    if params.m != params.d:
        warnings.warn(
            "the detection statistic's mean formulas hold at m = d; "
            f"got m={params.m}, d={params.d}",
            stacklevel=3,
        )


def run_test(
    params: ModelParams,
    threshold: float | None,
    trials: int,
    rng: np.random.Generator,
) -> ErrorRates:
    """Empirical error rates of the rule: declare planted when f < threshold."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    _warn_if_rectangular(params)
    tau = default_threshold(params) if threshold is None else float(threshold)
    f_null = _sample_f(params, "null", trials, rng)
    f_planted = _sample_f(params, "planted", trials, rng)
    type1 = float((f_null < tau).mean())
    type2 = float((f_planted >= tau).mean())
    return ErrorRates(type1=type1, type2=type2, threshold=tau, trials_per_hypothesis=trials)


def separation_report(
    params: ModelParams, trials: int, rng: np.random.Generator
) -> SeparationReport:
    """Empirical moments of f under both hypotheses and the separation ratio."""
    if trials < 2:
        raise ValueError(f"trials must be >= 2, got {trials}")
    _warn_if_rectangular(params)
    f_null = _sample_f(params, "null", trials, rng)
    f_planted = _sample_f(params, "planted", trials, rng)
    mean_null = float(f_null.mean())
    mean_planted = float(f_planted.mean())
    var_null = float(f_null.var(ddof=1))
    var_planted = float(f_planted.var(ddof=1))
    gap = abs(mean_null - mean_planted)
    spread = math.sqrt(max(var_null, var_planted))
    ratio = float("inf") if gap == 0.0 else spread / gap
    return SeparationReport(
        mean_null=mean_null,
        var_null=var_null,
        mean_planted=mean_planted,
        var_planted=var_planted,
        separation_ratio=ratio,
        trials=trials,
    )
