"""Shared value types and error classes used across the library."""

from __future__ import annotations

from dataclasses import dataclass


class CapacityError(Exception):
    """An enumeration or workload exceeds a configured cap."""


class UnsupportedRegimeError(Exception):
    """The requested (d, m, k, sigma) combination has no applicable evaluator."""


@dataclass(frozen=True)
class MomentEstimate:
    """A Monte Carlo estimate with its standard error.

    ``stderr`` is the standard error of ``value`` (0 for exact results);
    ``master_seed`` is filled by callers that own the seed plumbing and is
    None when the estimate was produced from a bare generator.
    """

    value: float
    stderr: float
    samples: int
    master_seed: int | None = None

    def within(self, target: float, n_sigma: float = 3.0) -> bool:
        return abs(self.value - target) <= n_sigma * self.stderr
