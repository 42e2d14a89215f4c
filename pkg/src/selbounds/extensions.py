"""Mean bounds under higher-moment and general fixed-quantile restrictions.

Moment restrictions are handled through a scalar dual: for each multiplier
the per-scenario problem max/min of x + lam*x^r over the interval is solved
in closed form (endpoints plus interior stationary points), and the outer
envelope over the multiplier is a one-dimensional convex search.

Fixed-quantile restrictions at level alpha reuse the pivot machinery from
the median case with mass levels (alpha, 1-alpha): the upper endpoint caps
the cheapest contact gaps down to the quantile target, the lower endpoint
lifts them up.  This closed form is an implementation device validated
against the exhaustive oracle in the test suite; at alpha = 1/2 it
coincides with the median formulas bit for bit.  The reported endpoints
are closure values: the lower one need not be attained because the
quantile constraint pins P(y < q) strictly below alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AlphaOutOfRange,
    InfeasibleMoment,
    InfeasibleQuantile,
    InputError,
    InvalidPower,
    RestrictionViolated,
)
from .model import ClosedInterval, DiscreteInstance
from .benchmarks import Selection, aumann_interval, quantile_attainability_range
from .median import pivot_mean_interval
from .events import _minimize_convex

_ATOL = 1e-12


@dataclass(frozen=True)
class MomentRestriction:
    """Constraint E[y^r] = mu_r."""

    r: float
    mu_r: float

    def __post_init__(self):
        if not np.isfinite(self.r) or self.r == 0.0:
            raise InputError(f"moment order must be a nonzero real, got {self.r}")


@dataclass(frozen=True)
class QuantileRestriction:
    """Constraint F_y^{-1}(alpha) = q (left-continuous inverse)."""

    alpha: float
    q: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise AlphaOutOfRange(f"alpha must be in (0,1), got {self.alpha}")


def _is_odd_integer(r: float) -> bool:
    return float(r).is_integer() and int(r) % 2 == 1


def _power(x: np.ndarray, r: float) -> np.ndarray:
    """x**r, extended to negative x for odd integer r via sign symmetry."""
    if _is_odd_integer(r):
        return np.sign(x) * np.abs(x) ** int(r)
    return np.power(x, r)


def _check_power_validity(instance: DiscreteInstance, r: float) -> None:
    if _is_odd_integer(r):
        return
    if r > 0.0 and float(instance.lower.min()) >= -_ATOL:
        return
    raise InvalidPower(
        f"power r={r} needs an odd integer exponent or a nonnegative instance"
    )


def power_image_interval(instance: DiscreteInstance, r: float) -> ClosedInterval:
    """Mean range of y^r over all selections: [E lower^r, E upper^r].

    The power map is monotone on every scenario interval under the
    validity condition, so the image of the random interval is again an
    interval with transformed endpoints.
    """
    _check_power_validity(instance, r)
    lower, upper = instance.lower, instance.upper
    if not _is_odd_integer(r):
        # validity guarantees nonnegative lowers; clamp -1e-15 noise
        lower = np.maximum(lower, 0.0)
        upper = np.maximum(upper, 0.0)
    lo = float(np.dot(instance.weight, _power(lower, r)))
    hi = float(np.dot(instance.weight, _power(upper, r)))
    return ClosedInterval(min(lo, hi), max(lo, hi))


def _scenario_envelope(lower, upper, r: float, lam: float, maximize: bool):
    """Per-scenario extremum of x + lam * x^r over [lower, upper].

    Candidates: both endpoints plus real stationary points of the map,
    i.e. solutions of 1 + lam*r*x^(r-1) = 0 inside the interval.
    """
    cands = [lower, upper]
    if lam != 0.0 and r != 1.0:
        c = -1.0 / (lam * r)
        if _is_odd_integer(r) and int(r) >= 3:
            # r-1 even: real roots only when c > 0, symmetric pair
            if c > 0.0:
                root = c ** (1.0 / (r - 1.0))
                cands.extend([np.full_like(lower, root), np.full_like(lower, -root)])
        elif r == 2.0:
            cands.append(np.full_like(lower, -1.0 / (2.0 * lam)))
        elif r > 0.0:
            if c > 0.0:
                cands.append(np.full_like(lower, c ** (1.0 / (r - 1.0))))
    vals = None
    for cand in cands:
        x = np.clip(cand, lower, upper)
        v = x + lam * _power(x, r)
        vals = v if vals is None else (np.maximum(vals, v) if maximize else np.minimum(vals, v))
    return vals


def moment_restricted_mean_interval(
    instance: DiscreteInstance, restriction: MomentRestriction
) -> ClosedInterval:
    """Mean range over selections with E[y^r] = mu_r, by scalar duality.

    Upper endpoint: inf over the multiplier of E[sup_x(x + lam x^r)] - lam mu_r;
    lower endpoint mirrors with inf_x and sup over the multiplier.  Both
    envelopes are convex (resp. concave) in the multiplier, so an
    expanding-bracket golden-section search is exact up to refinement
    tolerance; results are clipped into the unrestricted mean interval.
    """
    r, mu = restriction.r, restriction.mu_r
    _check_power_validity(instance, r)
    image = power_image_interval(instance, r)
    tol = 1e-9 * max(1.0, abs(image.lo), abs(image.hi))
    if not image.contains(mu, tol=tol):
        raise InfeasibleMoment(
            f"mu_r={mu} outside the attainable moment range [{image.lo}, {image.hi}]"
        )
    mu = image.clip(mu)
    box = aumann_interval(instance)
    if r == 1.0:
        return ClosedInterval(mu, mu)

    w, lo, hi = instance.weight, instance.lower, instance.upper

    def upper_obj(lam):
        return float(np.dot(w, _scenario_envelope(lo, hi, r, lam, True))) - lam * mu

    def lower_obj_neg(lam):
        return -(float(np.dot(w, _scenario_envelope(lo, hi, r, lam, False))) - lam * mu)

    e_hi = _minimize_convex(upper_obj)
    e_lo = -_minimize_convex(lower_obj_neg)
    return ClosedInterval(box.clip(min(e_lo, e_hi)), box.clip(max(e_lo, e_hi)))


def quantile_restriction_feasible(
    instance: DiscreteInstance, restriction: QuantileRestriction
) -> bool:
    """True iff the target sits inside the attainability range."""
    rng = quantile_attainability_range(instance, restriction.alpha)
    return rng.contains(restriction.q)


def quantile_restricted_mean_interval(
    instance: DiscreteInstance, restriction: QuantileRestriction
) -> ClosedInterval:
    """Mean range over selections with alpha-quantile pinned at q."""
    if not quantile_restriction_feasible(instance, restriction):
        rng = quantile_attainability_range(instance, restriction.alpha)
        raise InfeasibleQuantile(
            f"q={restriction.q} outside the attainability range "
            f"[{rng.lo}, {rng.hi}] at alpha={restriction.alpha}"
        )
    return pivot_mean_interval(
        instance, restriction.q, restriction.alpha, 1.0 - restriction.alpha
    )


def _law_quantile_matches(selection: Selection, alpha: float, q: float) -> bool:
    law = selection.law()
    return abs(law.quantile(alpha) - q) <= _ATOL * max(1.0, abs(q))


def mixture_convexity_check(
    instance: DiscreteInstance,
    restriction: QuantileRestriction,
    y1: Selection,
    y2: Selection,
    theta: float,
) -> Selection:
    """Law-level mixture of two restricted selections.

    Splits every scenario's weight theta / (1-theta) between the two input
    selections; the mixture law is the convex combination of the input
    laws, so the pinned quantile survives and the mean interpolates
    linearly.  Raises :class:`RestrictionViolated` when either input fails
    the quantile restriction.
    """
    if not (0.0 <= theta <= 1.0):
        raise InputError(f"theta must lie in [0,1], got {theta}")
    for name, sel in (("y1", y1), ("y2", y2)):
        sel.validate(instance)
        if not _law_quantile_matches(sel, restriction.alpha, restriction.q):
            raise RestrictionViolated(
                f"{name} does not satisfy the quantile restriction "
                f"F^-1({restriction.alpha}) = {restriction.q}"
            )
    return Selection(
        np.concatenate([y1.scenario, y2.scenario]),
        np.concatenate([y1.value, y2.value]),
        np.concatenate([y1.subweight * theta, y2.subweight * (1.0 - theta)]),
    )


def mean_restricted_quantile_range(
    instance: DiscreteInstance, alpha: float, kappa: float
) -> ClosedInterval:
    """Attainable alpha-quantiles among selections with mean kappa.

    A target q is compatible with the mean pin iff kappa lies inside the
    quantile-restricted mean interval at q.  Both interval endpoints are
    nondecreasing in q, affine between scenario endpoints, but may jump
    upward at breakpoints (a zero-width scenario switches sides in one
    step), so each segment is handled from two interior samples and the
    breakpoints themselves are tested directly.  Returned endpoints are
    the closure of the feasible set; an endpoint at an upward jump may be
    a supremum rather than attained.
    """
    box = aumann_interval(instance)
    if not box.contains(kappa, tol=1e-9 * max(1.0, abs(kappa))):
        raise InfeasibleQuantile(f"kappa={kappa} outside [{box.lo}, {box.hi}]")
    kappa = box.clip(kappa)
    rng = quantile_attainability_range(instance, alpha)

    def endpoints(q):
        iv = pivot_mean_interval(instance, q, alpha, 1.0 - alpha)
        return iv.lo, iv.hi

    cuts = np.unique(np.concatenate([instance.lower, instance.upper]))
    cuts = cuts[(cuts > rng.lo) & (cuts < rng.hi)]
    grid = np.concatenate([[rng.lo], cuts, [rng.hi]])

    tol = _ATOL * max(1.0, abs(kappa))
    q_lo = None   # inf of {q : e_max(q) >= kappa}
    q_hi = None   # sup of {q : e_min(q) <= kappa}

    for g in grid:
        lo_g, hi_g = endpoints(float(g))
        if hi_g >= kappa - tol and q_lo is None:
            q_lo = float(g)
        if lo_g <= kappa + tol:
            q_hi = float(g)

    for a, b in zip(grid[:-1], grid[1:]):
        if b - a <= 0.0:
            continue
        # both endpoint maps are affine on the open segment; fit the line
        # from two interior samples (the breakpoint values themselves may
        # sit below an upward jump and are handled in the loop above)
        q1 = a + (b - a) / 3.0
        q2 = b - (b - a) / 3.0
        lo1, hi1 = endpoints(q1)
        lo2, hi2 = endpoints(q2)
        s_lo = (lo2 - lo1) / (q2 - q1)
        s_hi = (hi2 - hi1) / (q2 - q1)

        # e_max: inf of {q in (a,b) : line_hi(q) >= kappa}
        ra = hi1 + s_hi * (a - q1)
        rb = hi1 + s_hi * (b - q1)
        cand = None
        if ra >= kappa - tol:
            cand = a
        elif rb >= kappa - tol and s_hi > 0.0:
            cand = q1 + (kappa - hi1) / s_hi
        if cand is not None:
            cand = min(max(cand, a), b)
            if q_lo is None or cand < q_lo:
                q_lo = cand

        # e_min: sup of {q in (a,b) : line_lo(q) <= kappa}
        ra = lo1 + s_lo * (a - q1)
        rb = lo1 + s_lo * (b - q1)
        cand = None
        if rb <= kappa + tol:
            cand = b
        elif ra <= kappa + tol and s_lo > 0.0:
            cand = q1 + (kappa - lo1) / s_lo
        if cand is not None:
            cand = min(max(cand, a), b)
            if q_hi is None or cand > q_hi:
                q_hi = cand

    if q_lo is None or q_hi is None:
        raise InfeasibleQuantile(
            f"no quantile at level {alpha} is compatible with mean {kappa}"
        )
    return ClosedInterval(min(q_lo, q_hi), max(q_lo, q_hi))
