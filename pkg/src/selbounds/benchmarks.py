"""Unrestricted identification ranges and the selections that attain them.

Without side information, the mean of a latent point inside the random
interval ranges over [E lower, E upper], and its alpha-quantile ranges over
the interval between the hitting and containment quantiles.  Both ranges
are sharp: this module constructs, for any admissible target, an explicit
selection achieving it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    InputError,
    KappaInfeasible,
    MOutOfRange,
    SelectionMismatch,
)
from .model import ClosedInterval, DiscreteInstance, StepDistribution, marginal_law

_ATOL = 1e-12


@dataclass(frozen=True)
class Selection:
    """Per-scenario chosen values with optional weight splitting.

    ``scenario`` maps each choice row to its scenario index; a scenario may
    appear several times, carrying subweights that sum to its weight.  This
    is the finite-instance encoding of boundary randomization.
    """

    scenario: np.ndarray
    value: np.ndarray
    subweight: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.scenario, dtype=int)
        v = np.asarray(self.value, dtype=float)
        w = np.asarray(self.subweight, dtype=float)
        if not (s.shape == v.shape == w.shape) or s.ndim != 1:
            raise InputError("selection arrays must be equal-length 1-d")
        if np.any(w < -_ATOL):
            raise InputError("subweights must be nonnegative")
        keep = w > 0.0
        object.__setattr__(self, "scenario", s[keep])
        object.__setattr__(self, "value", v[keep])
        object.__setattr__(self, "subweight", w[keep])

    def mean(self) -> float:
        return float(np.dot(self.value, self.subweight))

    def law(self) -> StepDistribution:
        return StepDistribution.from_samples(self.value, self.subweight)

    def validate(self, instance: DiscreteInstance, tol: float = 1e-9) -> None:
        """Raise :class:`SelectionMismatch` unless this selects from ``instance``."""
        if np.any(self.scenario < 0) or np.any(self.scenario >= instance.n):
            raise SelectionMismatch("selection references unknown scenarios")
        lo = instance.lower[self.scenario]
        hi = instance.upper[self.scenario]
        if np.any(self.value < lo - tol) or np.any(self.value > hi + tol):
            raise SelectionMismatch("selection value escapes its scenario interval")
        sums = np.zeros(instance.n)
        np.add.at(sums, self.scenario, self.subweight)
        if np.max(np.abs(sums - instance.weight)) > max(_ATOL, tol * 1e-3):
            raise SelectionMismatch("per-scenario subweights do not match weights")

    def scaled(self, factor: float) -> "Selection":
        return Selection(self.scenario, self.value, self.subweight * factor)


def combine(parts: list[Selection]) -> Selection:
    return Selection(
        np.concatenate([p.scenario for p in parts]),
        np.concatenate([p.value for p in parts]),
        np.concatenate([p.subweight for p in parts]),
    )


@dataclass(frozen=True)
class SelectionStats:
    mean: float
    law: StepDistribution

    def quantile(self, alpha: float) -> float:
        return self.law.quantile(alpha)

    def cdf(self, t):
        return self.law.cdf(t)


def selection_stats(instance: DiscreteInstance, selection: Selection) -> SelectionStats:
    """Exact weighted statistics of a selection's step law."""
    selection.validate(instance)
    return SelectionStats(mean=selection.mean(), law=selection.law())


@dataclass(frozen=True)
class CapacityFunctionals:
    """Hitting and containment laws of the random interval on half-lines.

    ``hitting.cdf(t)`` is the probability the interval meets (-inf, t],
    i.e. the law of the lower endpoint; ``containment.cdf(t)`` is the
    probability it is contained there, i.e. the law of the upper endpoint.
    """

    hitting: StepDistribution
    containment: StepDistribution

    def __post_init__(self):
        ts = np.union1d(self.hitting.values, self.containment.values)
        if np.any(self.hitting.cdf(ts) < self.containment.cdf(ts) - _ATOL):
            raise InputError("hitting CDF must dominate containment CDF")

    @classmethod
    def from_instance(cls, instance: DiscreteInstance) -> "CapacityFunctionals":
        return cls(marginal_law(instance, "lower"), marginal_law(instance, "upper"))


def aumann_interval(instance: DiscreteInstance) -> ClosedInterval:
    """Identified mean range with no restriction: [E lower, E upper]."""
    return ClosedInterval(instance.mean_lower(), instance.mean_upper())


def median_benchmark(instance: DiscreteInstance) -> ClosedInterval:
    """Unrestricted range of attainable selection medians.

    Endpoints are the canonical (left-continuous 1/2-quantile) medians of
    the two marginal laws; every point in between is the 1/2-quantile of
    some selection, which is what makes the range sharp.
    """
    return quantile_attainability_range(instance, 0.5)


def quantile_attainability_range(instance: DiscreteInstance, alpha: float) -> ClosedInterval:
    """Attainable alpha-quantiles of selections: hitting to containment."""
    if not (0.0 < alpha < 1.0):
        raise AlphaOutOfRange(f"alpha must be in (0,1), got {alpha}")
    lo = marginal_law(instance, "lower").quantile(alpha)
    hi = marginal_law(instance, "upper").quantile(alpha)
    return ClosedInterval(lo, hi)


def mean_selection(instance: DiscreteInstance, kappa: float) -> Selection:
    """Selection with mean exactly ``kappa``: the affine endpoint blend.

    Uses y = (1-t) lower + t upper with t chosen from the mean equation;
    the blend degenerates to the lower endpoint when the interval has zero
    width in expectation.
    """
    box = aumann_interval(instance)
    if not box.contains(kappa, tol=1e-9 * max(1.0, abs(kappa))):
        raise KappaInfeasible(
            f"kappa={kappa} outside the mean range [{box.lo}, {box.hi}]"
        )
    kappa = box.clip(kappa)
    denom = box.width
    t = 0.0 if denom <= 0.0 else (kappa - box.lo) / denom
    values = (1.0 - t) * instance.lower + t * instance.upper
    return Selection(np.arange(instance.n), values, instance.weight.copy())


def quantile_selection(instance: DiscreteInstance, alpha: float, m: float) -> Selection:
    """Selection whose left-continuous alpha-quantile equals ``m`` exactly.

    Partition at m: scenarios entirely at or below take their upper
    endpoint, scenarios entirely above take their lower endpoint, and the
    contact scenarios sit at m itself.  A sub-mass delta of the contact
    set (first scenarios in instance order, one split if needed) is
    bookkept as routed below m; the remainder is routed above.  Routing
    does not change the law here, but it mirrors the mass accounting that
    certifies P(y <= m) >= alpha while P(y <= t) < alpha for t < m.
    """
    rng = quantile_attainability_range(instance, alpha)
    if not rng.contains(m):
        raise MOutOfRange(f"m={m} outside attainability range [{rng.lo}, {rng.hi}]")

    at_or_below = instance.upper <= m          # interval contained in (-inf, m]
    above = instance.lower > m                 # interval misses (-inf, m]
    contact = ~(at_or_below | above)

    p_below = float(instance.weight[at_or_below].sum())
    delta = max(alpha - p_below, 0.0)

    parts_s, parts_v, parts_w = [], [], []

    idx_below = np.flatnonzero(at_or_below)
    parts_s.append(idx_below)
    parts_v.append(instance.upper[idx_below])
    parts_w.append(instance.weight[idx_below])

    idx_above = np.flatnonzero(above)
    parts_s.append(idx_above)
    parts_v.append(instance.lower[idx_above])
    parts_w.append(instance.weight[idx_above])

    remaining = delta
    for i in np.flatnonzero(contact):
        w = float(instance.weight[i])
        routed = min(w, remaining) if remaining > _ATOL else 0.0
        remaining -= routed
        for part in (routed, w - routed):
            if part > 0.0:
                parts_s.append(np.array([i]))
                parts_v.append(np.array([m]))
                parts_w.append(np.array([part]))

    sel = Selection(
        np.concatenate(parts_s), np.concatenate(parts_v), np.concatenate(parts_w)
    )
    return sel
