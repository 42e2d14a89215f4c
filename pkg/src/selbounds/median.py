"""Mean bounds under a known median, with attaining selections.

Knowing that some admissible selection has median m forces enough mass to
sit on each side of m; the cheapest way to comply reshapes the extreme
selections only on the contact set {lower <= m <= upper}, and the exact
price is a partial quantile integral of the gaps upper - m (for the upper
endpoint) and m - lower (for the lower endpoint).  The same machinery with
mass levels (alpha, 1 - alpha) instead of (1/2, 1/2) handles a general
fixed-quantile restriction; see :mod:`selbounds.extensions`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleMedian, InputError, MOutsideMedianSpan
from .laws import Law
from .model import ClosedInterval, DiscreteInstance, marginal_law
from .rearrange import ConditionalLaw, least_x_set, sorted_partial_sum
from .benchmarks import Selection, combine

_ATOL = 1e-12


@dataclass(frozen=True)
class MedianPartition:
    """Partition of an instance at pivot m, with the mass shortfalls.

    a_minus / a_plus / contact hold scenario indices for {upper < m},
    {lower > m} and the contact set {lower <= m <= upper}; the shortfalls
    are the extra masses the contact set must supply at or below m
    (alpha_minus) and at or above m (alpha_plus) for m to be a median.
    """

    m: float
    a_minus: np.ndarray
    a_plus: np.ndarray
    contact: np.ndarray
    p_minus: float
    p_plus: float
    p0: float
    alpha_minus: float
    alpha_plus: float
    u_gaps: np.ndarray   # upper - m on the contact set
    l_gaps: np.ndarray   # m - lower on the contact set
    feasible: bool


def partition(instance: DiscreteInstance, m: float) -> MedianPartition:
    """Exact partition at m (strict outer inequalities, weak contact)."""
    below = instance.upper < m
    above = instance.lower > m
    contact = ~(below | above)
    p_minus = float(instance.weight[below].sum())
    p_plus = float(instance.weight[above].sum())
    p0 = float(instance.weight[contact].sum())
    ci = np.flatnonzero(contact)
    return MedianPartition(
        m=m,
        a_minus=np.flatnonzero(below),
        a_plus=np.flatnonzero(above),
        contact=ci,
        p_minus=p_minus,
        p_plus=p_plus,
        p0=p0,
        alpha_minus=max(0.5 - p_minus, 0.0),
        alpha_plus=max(0.5 - p_plus, 0.0),
        u_gaps=instance.upper[ci] - m,
        l_gaps=m - instance.lower[ci],
        feasible=(p_minus <= 0.5 + _ATOL and p_plus <= 0.5 + _ATOL),
    )


def _require_feasible(part: MedianPartition) -> None:
    if not part.feasible:
        side = "p_minus" if part.p_minus > 0.5 + _ATOL else "p_plus"
        val = part.p_minus if side == "p_minus" else part.p_plus
        raise InfeasibleMedian(
            f"median m={part.m} infeasible: {side}={val:.12g} exceeds 1/2 "
            f"by {val - 0.5:.3g}",
        )


def pivot_mean_interval(
    instance: DiscreteInstance, pivot: float, below_need: float, above_need: float
) -> ClosedInterval:
    """Mean range when mass >= below_need must sit at or below the pivot
    and mass >= above_need at or above it.

    The upper endpoint caps the cheapest contact gaps upper - pivot; the
    lower endpoint raises the cheapest gaps pivot - lower.  Shared by the
    median case (1/2, 1/2) and the general quantile case (alpha, 1-alpha).
    """
    part = partition(instance, pivot)
    w = instance.weight[part.contact]
    cap = min(max(below_need - part.p_minus, 0.0), part.p0)
    lift = min(max(above_need - part.p_plus, 0.0), part.p0)
    cost_hi = sorted_partial_sum(part.u_gaps, w, cap) if cap > 0.0 else 0.0
    cost_lo = sorted_partial_sum(part.l_gaps, w, lift) if lift > 0.0 else 0.0
    e_hi = instance.mean_upper() - cost_hi
    e_lo = instance.mean_lower() + cost_lo
    return ClosedInterval(e_lo, e_hi)


def median_restricted_mean_interval(instance: DiscreteInstance, m: float) -> ClosedInterval:
    """[E_min(m), E_max(m)] over selections with median m.

    Infeasible when either outer region already carries more than half the
    mass.  When the contact set is empty but the restriction is feasible
    (both outer masses exactly 1/2), the range is the whole unrestricted
    mean interval.
    """
    part = partition(instance, m)
    _require_feasible(part)
    return pivot_mean_interval(instance, m, 0.5, 0.5)


def extremal_selection(instance: DiscreteInstance, m: float, side: str) -> Selection:
    """Selection attaining an endpoint of the median-restricted mean range.

    side="max": value m on the least-gap contact subset of mass
    alpha_minus, upper endpoint everywhere else.  side="min" mirrors with
    the lower endpoint.  The binding median inequality holds with mass
    exactly 1/2.
    """
    if side not in ("max", "min"):
        raise InputError(f"side must be 'max' or 'min', got {side!r}")
    part = partition(instance, m)
    _require_feasible(part)

    gaps = part.u_gaps if side == "max" else part.l_gaps
    shortfall = part.alpha_minus if side == "max" else part.alpha_plus
    base_values = instance.upper if side == "max" else instance.lower

    taken_w = np.zeros(0)
    taken_idx = np.zeros(0, dtype=int)
    if part.p0 > 0.0 and shortfall > 0.0:
        cond = ConditionalLaw(part.contact, instance.weight[part.contact], gaps)
        subset = least_x_set(cond, min(shortfall, part.p0))
        taken_idx = subset.indices
        taken_w = subset.subweights

    residual = instance.weight.copy().astype(float)
    np.subtract.at(residual, taken_idx, taken_w)
    residual = np.maximum(residual, 0.0)

    parts = [Selection(taken_idx, np.full(taken_idx.size, float(m)), taken_w)] if taken_idx.size else []
    keep = residual > 0.0
    parts.append(Selection(np.flatnonzero(keep), base_values[keep], residual[keep]))
    return combine(parts)


def mixed_selection(instance: DiscreteInstance, m: float, theta: float) -> Selection:
    """Pointwise convex combination of the two extremal selections.

    The two selections are aligned scenario by scenario on a common
    refinement of their weight splits (first fractions aligned), so the
    mix is again a valid selection; its mean interpolates the endpoint
    means linearly in theta and its median still contains m.
    """
    if not (0.0 <= theta <= 1.0):
        raise InputError(f"theta must lie in [0,1], got {theta}")
    hi = extremal_selection(instance, m, "max")
    lo = extremal_selection(instance, m, "min")

    def grouped(sel):
        order = np.argsort(sel.scenario, kind="stable")
        s = sel.scenario[order]
        starts = np.searchsorted(s, np.arange(instance.n), side="left")
        stops = np.searchsorted(s, np.arange(instance.n), side="right")
        return sel.value[order], sel.subweight[order], starts, stops

    hv, hw, hs0, hs1 = grouped(hi)
    lv, lw, ls0, ls1 = grouped(lo)

    out_s, out_v, out_w = [], [], []
    for i in range(instance.n):
        cells_hi = list(zip(hv[hs0[i]:hs1[i]], hw[hs0[i]:hs1[i]]))
        cells_lo = list(zip(lv[ls0[i]:ls1[i]], lw[ls0[i]:ls1[i]]))
        cuts = sorted(
            set(np.cumsum([w for _, w in cells_hi]).tolist())
            | set(np.cumsum([w for _, w in cells_lo]).tolist())
        )
        prev = 0.0

        def value_at(cells, pos):
            acc = 0.0
            for v, w in cells:
                acc += w
                if pos < acc + _ATOL:
                    return v
            return cells[-1][0]

        for cut in cuts:
            width = cut - prev
            if width <= _ATOL:
                prev = cut
                continue
            midpos = 0.5 * (prev + cut)
            v_hi = value_at(cells_hi, midpos)
            v_lo = value_at(cells_lo, midpos)
            # equal cell values (both at the pivot) must survive exactly
            v = v_hi if v_hi == v_lo else theta * v_hi + (1.0 - theta) * v_lo
            out_s.append(i)
            out_v.append(v)
            out_w.append(width)
            prev = cut
    return Selection(np.array(out_s), np.array(out_v), np.array(out_w))


@dataclass(frozen=True)
class CostTerms:
    """Marginal-CDF cost terms and the mean interval they imply."""

    s_lower: float
    s_upper: float
    implied: ClosedInterval


def marginal_cost_terms(instance: DiscreteInstance, m: float) -> CostTerms:
    """Cost terms from the marginal CDFs, by exact step integration.

    s_lower integrates (F_lower - 1/2) from the lower-marginal median to m;
    s_upper integrates (1/2 - F_upper) from m to the upper-marginal median.
    Valid when m lies between the two marginal medians.
    """
    low = marginal_law(instance, "lower")
    high = marginal_law(instance, "upper")
    m_l = low.quantile(0.5)
    m_u = high.quantile(0.5)
    _check_span(m, m_l, m_u)
    s_lower = low.integrate_cdf_offset(m_l, m, 0.5)
    s_upper = -high.integrate_cdf_offset(m, m_u, 0.5)
    implied = ClosedInterval(instance.mean_lower() + s_lower, instance.mean_upper() - s_upper)
    return CostTerms(s_lower, s_upper, implied)


def marginal_cost_terms_parametric(
    lower_law: Law, upper_law: Law, m: float, tol: float = 1e-8
) -> CostTerms:
    """Same cost terms for parametric marginals, by adaptive quadrature."""
    m_l = float(np.asarray(lower_law.ppf(np.array([0.5])))[0])
    m_u = float(np.asarray(upper_law.ppf(np.array([0.5])))[0])
    _check_span(m, m_l, m_u)
    s_lower = _adaptive_simpson(lambda t: float(lower_law.cdf(t)) - 0.5, m_l, m, tol)
    s_upper = _adaptive_simpson(lambda t: 0.5 - float(upper_law.cdf(t)), m, m_u, tol)
    implied = ClosedInterval(lower_law.mean() + s_lower, upper_law.mean() - s_upper)
    return CostTerms(s_lower, s_upper, implied)


def _check_span(m: float, m_l: float, m_u: float) -> None:
    tol = 1e-9 * max(1.0, abs(m_l), abs(m_u))
    if not (m_l - tol <= m <= m_u + tol):
        raise MOutsideMedianSpan(
            f"m={m} outside the marginal median span [{m_l}, {m_u}]"
        )


def _adaptive_simpson(f, a: float, b: float, tol: float) -> float:
    if b <= a:
        return 0.0

    def simpson(x0, x2, f0, f2):
        x1 = 0.5 * (x0 + x2)
        f1 = f(x1)
        return x1, f1, (x2 - x0) / 6.0 * (f0 + 4.0 * f1 + f2)

    def recurse(x0, x2, f0, f2, whole, eps, depth):
        x1, f1, _ = simpson(x0, x2, f0, f2)
        _, _, left = simpson(x0, x1, f0, f1)
        _, _, right = simpson(x1, x2, f1, f2)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(x0, x1, f0, f1, left, eps / 2.0, depth - 1) + recurse(
            x1, x2, f1, f2, right, eps / 2.0, depth - 1
        )

    f0, f2 = f(a), f(b)
    _, _, whole = simpson(a, b, f0, f2)
    return recurse(a, b, f0, f2, whole, tol, 48)
