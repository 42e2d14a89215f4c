"""Bathtub-principle minimization and the quantile-area identity.

Given a nonnegative variable X on a conditioning event M of mass p0, the
cheapest set of prescribed mass s on which to integrate X concentrates
where X is smallest; its value is the partial integral of the conditional
quantile function,

    inf{ E[X 1_S] : S subset of M, P(S) = s } = p0 * int_0^{s/p0} Q(u) du.

On finite instances the infimum is attained exactly by taking whole atoms
in ascending X order and splitting the boundary atom fractionally.  These
two computations (greedy set construction and quantile-step integration)
are implemented independently and must agree to machine precision; this is
the workhorse behind every pivot-restricted mean bound in the package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BetaOutOfRange, InputError, MassOutOfRange, NegativeSupport
from .model import DiscreteInstance, StepDistribution

_ATOL = 1e-12


@dataclass(frozen=True)
class WeightedSubset:
    """A sub-selection of conditioning members with (possibly split) weights."""

    indices: np.ndarray   # positions into the member list
    subweights: np.ndarray
    value: float          # sum of X * subweight over the subset

    @property
    def mass(self) -> float:
        return float(self.subweights.sum())


class ConditionalLaw:
    """Nonnegative values X on a conditioning member set with raw weights."""

    __slots__ = ("member_indices", "member_weights", "values", "p0")

    def __init__(self, member_indices, member_weights, values):
        member_indices = np.asarray(member_indices, dtype=int)
        member_weights = np.asarray(member_weights, dtype=float)
        values = np.asarray(values, dtype=float)
        if not (member_indices.shape == member_weights.shape == values.shape):
            raise InputError("conditional law arrays must share one shape")
        if member_weights.size == 0 or member_weights.sum() <= 0.0:
            raise InputError("conditioning event must carry positive mass")
        if np.any(member_weights <= 0.0):
            raise InputError("member weights must be positive")
        if np.any(values < -_ATOL):
            raise NegativeSupport("conditional values must be nonnegative")
        values = np.maximum(values, 0.0)
        self.member_indices = member_indices
        self.member_weights = member_weights
        self.values = values
        self.p0 = float(member_weights.sum())

    @classmethod
    def from_instance(cls, instance: DiscreteInstance, member_mask, values) -> "ConditionalLaw":
        member_mask = np.asarray(member_mask, dtype=bool)
        idx = np.flatnonzero(member_mask)
        return cls(idx, instance.weight[idx], np.asarray(values, dtype=float)[idx])

    def distribution(self) -> StepDistribution:
        """Conditional law of X given the member set (masses renormalized)."""
        return StepDistribution.from_samples(self.values, self.member_weights / self.p0)


def sorted_partial_sum(values, weights, mass: float) -> float:
    """Cost of the cheapest sub-mass: fill ascending values up to ``mass``.

    Whole weights are taken in ascending value order (ties by position) and
    the boundary weight is split fractionally.  ``mass`` is clipped into
    [0, sum(weights)] within tolerance.
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    total = float(weights.sum())
    if mass < -_ATOL or mass > total + max(_ATOL, 1e-9 * total):
        raise MassOutOfRange(f"mass {mass} outside [0, {total}]")
    mass = min(max(mass, 0.0), total)
    if mass == 0.0:
        return 0.0
    order = np.lexsort((np.arange(values.size), values))
    w = weights[order]
    v = values[order]
    cum = np.cumsum(w)
    k = int(np.searchsorted(cum, mass, side="left"))
    if k >= w.size:
        k = w.size - 1
    full = float(np.dot(v[:k], w[:k]))
    frac = mass - (cum[k - 1] if k > 0 else 0.0)
    return full + float(v[k]) * max(frac, 0.0)


def least_x_set(cond: ConditionalLaw, s: float) -> WeightedSubset:
    """Least-X subset of the conditioning set with mass exactly ``s``.

    Returns the chosen members with their (possibly fractional) weights;
    ``value`` equals ``p0 * int_0^{s/p0} Q(u) du`` exactly on step laws.
    """
    if s < -_ATOL or s > cond.p0 + max(_ATOL, 1e-9 * cond.p0):
        raise MassOutOfRange(f"mass {s} outside [0, {cond.p0}]")
    s = min(max(s, 0.0), cond.p0)
    order = np.lexsort((np.arange(cond.values.size), cond.values))
    w = cond.member_weights[order]
    v = cond.values[order]
    cum = np.cumsum(w)
    k = int(np.searchsorted(cum, s, side="left"))
    if s == 0.0:
        return WeightedSubset(np.empty(0, dtype=int), np.empty(0), 0.0)
    k = min(k, w.size - 1)
    frac = s - (cum[k - 1] if k > 0 else 0.0)
    take_idx = order[: k + 1]
    take_w = np.concatenate([w[:k], [max(frac, 0.0)]])
    keep = take_w > 0.0
    value = float(np.dot(v[:k], w[:k])) + float(v[k]) * max(frac, 0.0)
    return WeightedSubset(cond.member_indices[take_idx[keep]], take_w[keep], value)


def conditional_quantile_integral(cond: ConditionalLaw, beta: float) -> float:
    """p0 * int_0^beta Q(u) du for the conditional quantile Q, exactly.

    Computed from the aggregated conditional step law, independently of the
    greedy path in :func:`least_x_set`; the two agree within 1e-12.
    """
    if beta < -_ATOL or beta > 1.0 + _ATOL:
        raise BetaOutOfRange(f"beta must lie in [0,1], got {beta}")
    beta = min(max(beta, 0.0), 1.0)
    if beta == 0.0:
        return 0.0
    dist = cond.distribution()
    cum = np.concatenate(([0.0], np.cumsum(dist.masses)))
    filled = np.clip(beta, cum[:-1], cum[1:]) - cum[:-1]
    return cond.p0 * float(np.dot(dist.values, filled))


def quantile_area(dist: StepDistribution, alpha: float) -> tuple[float, float]:
    """Both sides of the quantile-area identity for a nonnegative law.

    left  = int_0^alpha Q(u) du
    right = int_0^inf (alpha - F(t))_+ dt

    Returns the pair; on step laws they agree to machine precision, which
    the test suite enforces at 1e-12.
    """
    if not (0.0 < alpha < 1.0):
        raise BetaOutOfRange(f"alpha must lie in (0,1), got {alpha}")
    if dist.values[0] < -_ATOL:
        raise NegativeSupport("quantile-area identity requires nonnegative support")

    cum = np.concatenate(([0.0], np.cumsum(dist.masses)))
    filled = np.clip(alpha, cum[:-1], cum[1:]) - cum[:-1]
    left = float(np.dot(dist.values, filled))

    # right side: F is constant between atoms; integrate (alpha - F)_+ on
    # [0, v_1) and on each [v_k, v_{k+1}); beyond the last atom F >= alpha.
    v = np.maximum(dist.values, 0.0)
    ts = np.concatenate(([0.0], v))
    levels = np.concatenate(([0.0], cum[1:]))
    lengths = np.diff(ts)
    right = float(np.dot(lengths, np.maximum(alpha - levels[:-1], 0.0)))
    return left, right
