"""Numerical laboratory for low-degree detection in multivariate shuffled regression.

Library layout:

- ``randmat``: seedable samplers for Gaussian / Haar / Stiefel / permutation
  / sphere priors, with distributional self-tests.
- ``model``: null and planted generative models plus the reduced k-row laws.
- ``hermite``: the orthonormal Hermite engine, basis functions over (X, Y)
  pairs, and the joint-coefficient closed form for one response column.
- ``advantage``: unbiased estimators and exact enumerations for the squared
  low-degree advantage, plus its chi-square upper bound.
- ``chisq``: closed-form and Monte Carlo chi-square divergences between the
  reduced laws, with the analytic moment oracles they rest on.
- ``detect``: the constant-degree detection statistic, thresholded testing,
  and separation reporting.
- ``cli``: the batch experiment harness (``shufflab`` console script).
"""

__version__ = "0.1.0"

from .common import CapacityError, MomentEstimate, UnsupportedRegimeError
from .model import Instance, ModelParams, ReducedParams
from .rng import SeedSpec, make_rng

__all__ = [
    "CapacityError",
    "Instance",
    "ModelParams",
    "MomentEstimate",
    "ReducedParams",
    "SeedSpec",
    "UnsupportedRegimeError",
    "make_rng",
    "__version__",
]
