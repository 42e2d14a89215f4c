"""Bounds on P(y in A) for a target set A, with and without a mean pin.

Unrestricted, the probability ranges between the containment and hitting
probabilities of the random interval.  Pinning the mean at kappa tightens
both ends.  The workhorse is a per-scenario trade-off: moving a scenario's
value into (or out of) A costs a deterministic amount of mean, namely the
gap between the relevant interval endpoint and the nearest admissible
point of A (or of its complement).  The optimal selections are bang-bang
in that gap: every scenario whose gap clears a common threshold switches,
and the scenario exactly at the threshold splits its mass (boundary
randomization) so the mean constraint holds with equality.

The same values admit a dual description as envelopes over a scalar
multiplier; :func:`dual_envelope` evaluates it as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError, KappaInfeasible
from .model import ClosedInterval, DiscreteInstance
from .benchmarks import Selection, aumann_interval

_ATOL = 1e-12


@dataclass(frozen=True)
class TargetSet:
    """Finite union of disjoint closed intervals, sorted and maximal.

    Singletons are written as zero-length pieces [a, a].  The constructor
    normalizes: pieces are sorted and overlapping or touching pieces are
    merged, so the stored representation is canonical.
    """

    pieces: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.pieces:
            raise InputError("target set needs at least one piece")
        norm = []
        for a, b in sorted((float(a), float(b)) for a, b in self.pieces):
            if not (np.isfinite(a) and np.isfinite(b)):
                raise InputError("target pieces must be finite")
            if b < a:
                raise InputError(f"target piece [{a}, {b}] is inverted")
            if norm and a <= norm[-1][1]:
                norm[-1] = (norm[-1][0], max(norm[-1][1], b))
            else:
                norm.append((a, b))
        object.__setattr__(self, "pieces", tuple(norm))

    @classmethod
    def from_pairs(cls, pairs) -> "TargetSet":
        return cls(tuple((float(a), float(b)) for a, b in pairs))

    def contains(self, x: float) -> bool:
        return any(a <= x <= b for a, b in self.pieces)

    def reflected(self) -> "TargetSet":
        return TargetSet(tuple((-b, -a) for a, b in reversed(self.pieces)))

    def as_lists(self) -> list[list[float]]:
        return [[a, b] for a, b in self.pieces]


@dataclass(frozen=True)
class GapProfile:
    """Per-scenario geometry of the interval against the target set.

    a_plus / a_minus are the largest and smallest points of Y inter A
    (-inf / +inf when the intersection is empty); delta_plus / delta_minus
    are the distances from the interval endpoints to those points (+inf on
    miss scenarios).  out_low / out_high are the infimum and supremum of
    Y minus A (+inf / -inf on contained scenarios); they are closure
    points and need not belong to Y minus A itself.
    """

    a_plus: np.ndarray
    a_minus: np.ndarray
    delta_plus: np.ndarray
    delta_minus: np.ndarray
    hit: np.ndarray
    contain: np.ndarray
    out_low: np.ndarray
    out_high: np.ndarray


def gap_profile(instance: DiscreteInstance, target: TargetSet) -> GapProfile:
    """Exact interval-union intersection geometry, vectorized per piece."""
    lo, hi = instance.lower, instance.upper
    n = instance.n
    a_plus = np.full(n, -np.inf)
    a_minus = np.full(n, np.inf)
    hit = np.zeros(n, dtype=bool)
    contain = np.zeros(n, dtype=bool)
    for a, b in target.pieces:
        meets = (lo <= b) & (hi >= a)
        hit |= meets
        a_minus = np.where(meets, np.minimum(a_minus, np.maximum(a, lo)), a_minus)
        a_plus = np.where(meets, np.maximum(a_plus, np.minimum(b, hi)), a_plus)
        contain |= (a <= lo) & (hi <= b)

    delta_plus = np.where(hit, hi - a_plus, np.inf)
    delta_minus = np.where(hit, a_minus - lo, np.inf)

    # complement extremes: where the endpoint sits inside a piece, the
    # nearest exit is that piece's far edge (a closure point).
    out_low = lo.copy()
    out_high = hi.copy()
    for a, b in target.pieces:
        covers_lo = (a <= lo) & (lo <= b)
        covers_hi = (a <= hi) & (hi <= b)
        out_low = np.where(covers_lo, b, out_low)
        out_high = np.where(covers_hi, a, out_high)
    out_low = np.where(contain, np.inf, out_low)
    out_high = np.where(contain, -np.inf, out_high)
    return GapProfile(
        a_plus=a_plus,
        a_minus=a_minus,
        delta_plus=np.maximum(delta_plus, 0.0),
        delta_minus=np.maximum(delta_minus, 0.0),
        hit=hit,
        contain=contain,
        out_low=out_low,
        out_high=out_high,
    )


def unrestricted_prob_bounds(instance: DiscreteInstance, target: TargetSet) -> ClosedInterval:
    """[P(Y contained in A), P(Y hits A)]: the no-information bounds."""
    prof = gap_profile(instance, target)
    lo = float(instance.weight[prof.contain].sum())
    hi = float(instance.weight[prof.hit].sum())
    return ClosedInterval(lo, hi)


def threshold_selection(
    instance: DiscreteInstance, target: TargetSet, lam: float, tie_in: float = 1.0
) -> Selection:
    """Pointwise maximizer of 1{x in A} + lam*x over each scenario.

    For lam > 0 a hit scenario takes its upper endpoint when the gap
    delta_plus exceeds 1/lam, and the in-target point a_plus when it is
    smaller; ties split a fraction ``tie_in`` of the weight onto the
    in-target choice.  Miss scenarios take the endpoint favoured by the
    sign of lam.  lam = 0 returns the hit-maximizing selection (every hit
    scenario inside A), the lam -> 0+ limit.
    """
    if not (0.0 <= tie_in <= 1.0):
        raise InputError("tie_in must lie in [0,1]")
    prof = gap_profile(instance, target)
    n = instance.n
    idx = np.arange(n)

    if lam == 0.0:
        value = np.where(prof.hit, prof.a_plus, instance.upper)
        return Selection(idx, value, instance.weight.copy())

    if lam > 0.0:
        cutoff = 1.0 / lam if np.isfinite(lam) else 0.0
        gaps, inside, outside = prof.delta_plus, prof.a_plus, instance.upper
    else:
        cutoff = -1.0 / lam if np.isfinite(lam) else 0.0
        gaps, inside, outside = prof.delta_minus, prof.a_minus, instance.lower

    go_in = prof.hit & (gaps < cutoff)
    tie = prof.hit & (gaps == cutoff)
    stay = ~(go_in | tie)

    parts = [
        Selection(idx[go_in], inside[go_in], instance.weight[go_in]),
        Selection(idx[stay], outside[stay], instance.weight[stay]),
    ]
    if np.any(tie):
        parts.append(Selection(idx[tie], inside[tie], instance.weight[tie] * tie_in))
        parts.append(Selection(idx[tie], outside[tie], instance.weight[tie] * (1.0 - tie_in)))
    return Selection(
        np.concatenate([p.scenario for p in parts]),
        np.concatenate([p.value for p in parts]),
        np.concatenate([p.subweight for p in parts]),
    )


@dataclass(frozen=True)
class Calibration:
    """Result of mean calibration: multiplier, selection, probability."""

    lambda_star: float
    selection: Selection
    probability: float


def _engagement(gaps: np.ndarray, weights: np.ndarray, need: float, prefer_large: bool):
    """Solve the bang-bang mean equation on a family of switchable scenarios.

    Each scenario i can 'engage', shifting the mean by weights[i]*gaps[i];
    engagement proceeds through gaps in ascending order (or descending when
    prefer_large) until the total shift equals ``need``; the marginal gap
    class engages a common fraction theta.  Returns
    (threshold_gap, theta, fully_engaged_mask, tie_mask).
    """
    n = gaps.size
    if need <= _ATOL:
        # engage only the free (zero-gap) class, fully, when engaging is
        # costless; for prefer_large nothing needs to engage.
        if not prefer_large and n:
            tie = gaps == 0.0
            return 0.0, 1.0, np.zeros(n, dtype=bool), tie
        return 0.0, 0.0, np.zeros(n, dtype=bool), np.zeros(n, dtype=bool)
    total = float(np.dot(gaps, weights))
    if need > total + max(1e-9, 1e-9 * total):
        raise KappaInfeasible("mean target outside the reachable range")
    need = min(need, total)
    key = -gaps if prefer_large else gaps
    order = np.lexsort((np.arange(n), key))
    buy = gaps[order] * weights[order]
    cum = np.cumsum(buy)
    k = int(np.searchsorted(cum, need - 1e-15, side="left"))
    k = min(k, n - 1)
    t_star = float(gaps[order[k]])
    if prefer_large:
        full = gaps > t_star
    else:
        full = gaps < t_star
    tie = gaps == t_star
    buy_full = float(np.dot(gaps[full], weights[full]))
    tie_buy = t_star * float(weights[tie].sum())
    if tie_buy > 0.0:
        theta = (need - buy_full) / tie_buy
        theta = min(max(theta, 0.0), 1.0)
    else:
        theta = 1.0 if not prefer_large else 0.0
    return t_star, theta, full, tie


def _assemble(instance, engaged_value, base_value, full, tie, theta, rest_value):
    """Selection: engaged scenarios at engaged_value, tie split by theta."""
    idx = np.arange(instance.n)
    w = instance.weight
    rest = ~(full | tie)
    parts = [
        Selection(idx[full], engaged_value[full], w[full]),
        Selection(idx[rest], rest_value[rest], w[rest]),
    ]
    if np.any(tie):
        parts.append(Selection(idx[tie], engaged_value[tie], w[tie] * theta))
        parts.append(Selection(idx[tie], base_value[tie], w[tie] * (1.0 - theta)))
    return Selection(
        np.concatenate([p.scenario for p in parts]),
        np.concatenate([p.value for p in parts]),
        np.concatenate([p.subweight for p in parts]),
    )


def calibrate_mean(instance: DiscreteInstance, target: TargetSet, kappa: float) -> Calibration:
    """Probability-maximizing selection with mean exactly kappa.

    Solves the threshold mean equation by sorting the switch gaps and a
    single linear tie solve, which is exact on step laws; the tie class
    carries the boundary randomization.  lambda_star is +inf / -inf at the
    mean extremes (the corresponding selections are the pure endpoints).
    """
    box = aumann_interval(instance)
    if not box.contains(kappa, tol=1e-9 * max(1.0, abs(kappa))):
        raise KappaInfeasible(
            f"kappa={kappa} outside the mean range [{box.lo}, {box.hi}] "
            f"by {max(box.lo - kappa, kappa - box.hi):.3g}"
        )
    kappa = box.clip(kappa)
    prof = gap_profile(instance, target)
    w = instance.weight
    hit = prof.hit

    # mean span of fully hit-maximizing selections (mean constraint slack)
    k_lo = float(np.dot(w, np.where(hit, prof.a_minus, instance.lower)))
    k_hi = float(np.dot(w, np.where(hit, prof.a_plus, instance.upper)))

    if k_lo - _ATOL <= kappa <= k_hi + _ATOL:
        span = k_hi - k_lo
        tau = 0.0 if span <= 0.0 else min(max((kappa - k_lo) / span, 0.0), 1.0)
        hi_vals = np.where(hit, prof.a_plus, instance.upper)
        lo_vals = np.where(hit, prof.a_minus, instance.lower)
        sel = Selection(
            np.concatenate([np.arange(instance.n)] * 2),
            np.concatenate([hi_vals, lo_vals]),
            np.concatenate([w * tau, w * (1.0 - tau)]),
        )
        return Calibration(0.0, sel, float(w[hit].sum()))

    if kappa > k_hi:
        # high-mean regime: start from the upper endpoints and pull the
        # cheapest hit scenarios down onto their best in-target point.
        need = instance.mean_upper() - kappa
        gaps = np.where(hit, prof.delta_plus, np.inf)
        pool = hit
        engaged_value = prof.a_plus
        base_value = instance.upper
        sign = 1.0
    else:
        need = kappa - instance.mean_lower()
        gaps = np.where(hit, prof.delta_minus, np.inf)
        pool = hit
        engaged_value = prof.a_minus
        base_value = instance.lower
        sign = -1.0

    sub_gaps = gaps[pool]
    sub_w = w[pool]
    t_star, theta, full_sub, tie_sub = _engagement(sub_gaps, sub_w, need, prefer_large=False)
    full = np.zeros(instance.n, dtype=bool)
    tie = np.zeros(instance.n, dtype=bool)
    full[np.flatnonzero(pool)[full_sub]] = True
    tie[np.flatnonzero(pool)[tie_sub]] = True

    prob = float(w[full].sum() + theta * w[tie].sum())
    sel = _assemble(instance, engaged_value, base_value, full, tie, theta, base_value)
    lam = math.inf if t_star == 0.0 else 1.0 / t_star
    return Calibration(sign * lam, sel, prob)


def _min_probability(instance: DiscreteInstance, target: TargetSet, kappa: float) -> float:
    """inf P(y in A) subject to the mean pin (value only).

    Mirrors the calibration machinery: scenarios flee the target through
    the nearest complement point; when the mean forces some back inside,
    the cheapest per-probability re-entries are the LARGEST endpoint gaps,
    so engagement runs through gaps in descending order.  The infimum may
    be unattained (complement extremes are closure points); the value is
    still exact.
    """
    box = aumann_interval(instance)
    if not box.contains(kappa, tol=1e-9 * max(1.0, abs(kappa))):
        raise KappaInfeasible(f"kappa={kappa} outside [{box.lo}, {box.hi}]")
    kappa = box.clip(kappa)
    prof = gap_profile(instance, target)
    w = instance.weight
    partial = prof.hit & ~prof.contain

    base_low = np.where(partial, prof.out_low, instance.lower)
    base_high = np.where(partial, prof.out_high, instance.upper)
    j_lo = float(np.dot(w, base_low))
    j_hi = float(np.dot(w, base_high))
    p_contain = float(w[prof.contain].sum())

    if j_lo - _ATOL <= kappa <= j_hi + _ATOL:
        return p_contain

    if kappa < j_lo:
        # must dip below the avoidance floor: re-enter at a_minus
        gaps = np.where(partial, np.maximum(prof.out_low - prof.a_minus, 0.0), 0.0)
        need = j_lo - kappa
    else:
        gaps = np.where(partial, np.maximum(prof.a_plus - prof.out_high, 0.0), 0.0)
        need = kappa - j_hi

    pool = partial & (gaps > 0.0)
    t_star, theta, full_sub, tie_sub = _engagement(
        gaps[pool], w[pool], need, prefer_large=True
    )
    engaged = float(w[pool][full_sub].sum() + theta * w[pool][tie_sub].sum())
    return p_contain + engaged


def mean_restricted_prob_bounds(
    instance: DiscreteInstance, target: TargetSet, kappa: float
) -> ClosedInterval:
    """[L(kappa), U(kappa)]: probability range under the mean pin."""
    upper = calibrate_mean(instance, target, kappa).probability
    lower = _min_probability(instance, target, kappa)
    lower = min(lower, upper)  # guard float noise on degenerate instances
    return ClosedInterval(lower, upper)


# ---------------------------------------------------------------------------
# dual envelopes


def _psi_mean(instance: DiscreteInstance, prof: GapProfile, lam: float) -> float:
    """E of the per-scenario sup of 1{x in A} + lam*x over the interval."""
    if lam >= 0.0:
        out_side = lam * instance.upper
        anchor = np.where(prof.hit, prof.a_plus, 0.0)
    else:
        out_side = lam * instance.lower
        anchor = np.where(prof.hit, prof.a_minus, 0.0)
    in_side = np.where(prof.hit, 1.0 + lam * anchor, -np.inf)
    return float(np.dot(instance.weight, np.maximum(out_side, in_side)))


def _phi_mean(instance: DiscreteInstance, prof: GapProfile, lam: float) -> float:
    """E of the per-scenario inf of 1{x in A} + lam*x over the interval.

    Contained scenarios have no escape and pay the indicator at the cheap
    endpoint; partial scenarios compare the best escape (a complement
    closure point) with the cheapest in-target point.
    """
    partial = prof.hit & ~prof.contain
    if lam >= 0.0:
        esc = np.where(partial, prof.out_low, instance.lower)
        in_anchor = np.where(prof.hit, prof.a_minus, 0.0)
        contained = 1.0 + lam * instance.lower
    else:
        esc = np.where(partial, prof.out_high, instance.upper)
        in_anchor = np.where(prof.hit, prof.a_plus, 0.0)
        contained = 1.0 + lam * instance.upper
    inside = np.where(prof.hit, 1.0 + lam * in_anchor, np.inf)
    val = np.where(prof.contain, contained, np.minimum(lam * esc, inside))
    return float(np.dot(instance.weight, val))


def _refine_scalar(f, lo: float, hi: float, iters: int = 200) -> float:
    """Golden-section minimum of a convex scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if b - a < 1e-12 * max(1.0, abs(a), abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return min(fc, fd, f(0.5 * (a + b)))


def _minimize_convex(f) -> float:
    """Expanding-bracket + golden-section minimum over the real line.

    Doubles an edge only while the value strictly improves, then widens the
    final bracket one more doubling on each side: when f(2e) >= f(e) the
    convex minimum can still sit between e and 2e.
    """
    lo, hi = -1.0, 1.0
    f_lo, f_hi = f(lo), f(hi)
    best = min(f_lo, f_hi, f(0.0))
    for _ in range(60):
        grew = False
        if f(2.0 * lo) < f_lo - 1e-12 * max(1.0, abs(f_lo)):
            lo *= 2.0
            f_lo = f(lo)
            grew = True
        if f(2.0 * hi) < f_hi - 1e-12 * max(1.0, abs(f_hi)):
            hi *= 2.0
            f_hi = f(hi)
            grew = True
        best = min(best, f_lo, f_hi)
        if not grew:
            break
    return min(best, _refine_scalar(f, 2.0 * lo, 2.0 * hi))


@dataclass(frozen=True)
class DualEnvelope:
    upper: float
    lower: float


def dual_envelope(
    instance: DiscreteInstance,
    target: TargetSet,
    kappa: float,
    lambda_grid=None,
) -> DualEnvelope:
    """Envelope values inf/sup over the multiplier of the dual objective.

    ``lambda_grid`` optionally supplies extra multiplier samples to seed
    the search; refinement is golden-section on the convex envelope.
    Matches the primal bounds to about 1e-6 on step instances.
    """
    box = aumann_interval(instance)
    if not box.contains(kappa, tol=1e-9 * max(1.0, abs(kappa))):
        raise KappaInfeasible(f"kappa={kappa} outside [{box.lo}, {box.hi}]")
    kappa = box.clip(kappa)
    prof = gap_profile(instance, target)

    def upper_obj(lam):
        return _psi_mean(instance, prof, lam) - lam * kappa

    def lower_obj_neg(lam):
        return -(_phi_mean(instance, prof, lam) - lam * kappa)

    seed_best_u = math.inf
    seed_best_l = math.inf
    if lambda_grid is not None:
        for lam in lambda_grid:
            seed_best_u = min(seed_best_u, upper_obj(float(lam)))
            seed_best_l = min(seed_best_l, lower_obj_neg(float(lam)))

    upper = min(_minimize_convex(upper_obj), seed_best_u)
    lower = -min(_minimize_convex(lower_obj_neg), seed_best_l)
    return DualEnvelope(upper=upper, lower=lower)
