"""Exhaustive ground truth on small instances.

Every closed-form bound in this package is validated against the functions
here, which never sort by gaps or solve dual problems: they enumerate raw
configurations.  The enumeration is exact because each extremal problem is
linear in the per-scenario law once supports are fixed, so some optimum
has at most one scenario splitting its weight between two candidate
values (a basic solution of a one-constraint program).  Enumeration is
over all full-candidate configurations plus all single-scenario fractional
relaxations, vectorized with numpy.

These functions are a test authority, not a production path; they refuse
instances beyond desk scale.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    InfeasibleMedian,
    InfeasibleQuantile,
    InstanceTooLarge,
    InvalidPower,
    KappaInfeasible,
    NoFeasibleSelection,
)
from .model import ClosedInterval, DiscreteInstance
from .events import TargetSet, gap_profile

_ATOL = 1e-12


def _subsets(k: int) -> np.ndarray:
    """All subsets of {0..k-1} as a (2^k, k) boolean matrix."""
    ids = np.arange(1 << k, dtype=np.uint32)
    return ((ids[:, None] >> np.arange(k)) & 1).astype(bool)


# ---------------------------------------------------------------------------
# pivot (median / quantile) restricted means


def _pivot_bounds(instance: DiscreteInstance, pivot: float, alpha: float, err):
    """Exhaustive mean bounds under: P(y <= pivot) >= alpha and
    P(y < pivot) <= alpha (the closure of the strict constraint).

    Max side: outer scenarios take their upper endpoint; every subset of
    the contact set may be capped at the pivot, plus one fractional cap.
    Min side mirrors with lower endpoints and lifted subsets.
    """
    if instance.n > 12:
        raise InstanceTooLarge("exhaustive pivot oracle limited to 12 scenarios")
    l, u, w = instance.lower, instance.upper, instance.weight
    below = u < pivot
    above = l > pivot
    contact = ~(below | above)
    p_minus = float(w[below].sum())
    p_plus = float(w[above].sum())
    ci = np.flatnonzero(contact)
    k = ci.size
    S = _subsets(k)
    wc = w[ci]

    # forced-mass necessary conditions: every selection puts at least
    # p_minus strictly below the pivot and at most 1 - p_plus at or below
    if p_minus > alpha + _ATOL or 1.0 - p_plus < alpha - _ATOL:
        raise err

    # ---- max side: capped contact scenarios carry their weight at the pivot
    at_most = p_minus + S @ wc
    cap_cost = S @ (wc * (u[ci] - pivot))
    best_max = -np.inf
    feasible_max = at_most >= alpha - _ATOL
    if np.any(feasible_max):
        best_max = float(np.max(instance.mean_upper() - cap_cost[feasible_max]))
    for j in range(k):
        free = ~S[:, j]
        need = alpha - at_most[free]
        phi = need / wc[j]
        ok = (phi > 0.0) & (phi <= 1.0 + _ATOL)
        if np.any(ok):
            cand = instance.mean_upper() - cap_cost[free][ok] - np.minimum(phi[ok], 1.0) * wc[j] * (
                u[ci][j] - pivot
            )
            best_max = max(best_max, float(np.max(cand)))

    # ---- min side: P(y < pivot) <= alpha; lifting a contact scenario to
    # the pivot removes its strictly-below mass (zero-cost when lower == pivot)
    strictly_below = wc * (l[ci] < pivot)
    lift_cost = S @ (wc * (pivot - l[ci]))
    below_mass = p_minus + strictly_below.sum() - S @ strictly_below
    best_min = np.inf
    feasible_min = below_mass <= alpha + _ATOL
    if np.any(feasible_min):
        best_min = float(np.min(instance.mean_lower() + lift_cost[feasible_min]))
    for j in range(k):
        free = ~S[:, j]
        if strictly_below[j] <= 0.0:
            continue
        phi = (below_mass[free] - alpha) / strictly_below[j]
        ok = (phi > 0.0) & (phi <= 1.0 + _ATOL)
        if np.any(ok):
            cand = instance.mean_lower() + lift_cost[free][ok] + np.minimum(phi[ok], 1.0) * wc[j] * (
                pivot - l[ci][j]
            )
            best_min = min(best_min, float(np.min(cand)))

    if not np.isfinite(best_max) or not np.isfinite(best_min):
        raise err
    return ClosedInterval(best_min, best_max)


def exact_median_mean_bounds(instance: DiscreteInstance, m: float) -> ClosedInterval:
    """Brute-force mean range over selections with median m (<= 12 scenarios)."""
    err = InfeasibleMedian(f"no selection has median {m}")
    return _pivot_bounds(instance, m, 0.5, err)


def exact_quantile_mean_bounds(
    instance: DiscreteInstance, alpha: float, q: float
) -> ClosedInterval:
    """Brute-force mean range over selections with alpha-quantile q."""
    err = InfeasibleQuantile(f"no selection attains quantile {q} at level {alpha}")
    return _pivot_bounds(instance, q, alpha, err)


# ---------------------------------------------------------------------------
# mean-restricted event probabilities


def _candidates_for_prob(instance, prof, target, mesh):
    """Per-scenario (value, hit) candidate pairs for the probability LP."""
    out = []
    for i in range(instance.n):
        cands = []
        lo, hi = instance.lower[i], instance.upper[i]
        if prof.hit[i]:
            cands.append((float(prof.a_minus[i]), 1.0))
            cands.append((float(prof.a_plus[i]), 1.0))
        if not prof.contain[i]:
            # complement candidates; closure points may lie inside the
            # target but carry probability 0 (limits of escaping values)
            cands.append((float(np.clip(prof.out_low[i], lo, hi)), 0.0))
            cands.append((float(np.clip(prof.out_high[i], lo, hi)), 0.0))
        if mesh > 0:
            for x in np.linspace(lo, hi, mesh + 2):
                cands.append((float(x), 1.0 if target.contains(float(x)) else 0.0))
        dedup = sorted(set(cands))
        out.append(dedup)
    return out


def exact_prob_bounds(
    instance: DiscreteInstance, target: TargetSet, kappa: float, mesh: int = 0
) -> ClosedInterval:
    """Brute-force range of P(y in A) under the mean pin (<= 8 scenarios).

    Candidates per scenario are the extreme points of its in-target and
    out-of-target value sets plus an optional uniform mesh; all full
    configurations and all one-scenario fractional relaxations are
    enumerated.
    """
    if instance.n > 8:
        raise InstanceTooLarge("exhaustive probability oracle limited to 8 scenarios")
    lo_mean = instance.mean_lower()
    hi_mean = instance.mean_upper()
    slack = 1e-9 * max(1.0, abs(kappa))
    if not (lo_mean - slack <= kappa <= hi_mean + slack):
        raise KappaInfeasible(f"kappa={kappa} outside [{lo_mean}, {hi_mean}]")
    kappa = min(max(kappa, lo_mean), hi_mean)

    prof = gap_profile(instance, target)
    cands = _candidates_for_prob(instance, prof, target, mesh)
    n = instance.n
    w = instance.weight

    shape = tuple(len(c) for c in cands)
    mean_grid = np.zeros(shape)
    prob_grid = np.zeros(shape)
    for i, ci in enumerate(cands):
        dims = [1] * n
        dims[i] = len(ci)
        vals = np.array([v for v, _ in ci]).reshape(dims)
        hits = np.array([h for _, h in ci]).reshape(dims)
        mean_grid = mean_grid + w[i] * vals
        prob_grid = prob_grid + w[i] * hits

    best_hi = -np.inf
    best_lo = np.inf
    exact = np.abs(mean_grid - kappa) <= 1e-9 * max(1.0, abs(kappa))
    if np.any(exact):
        best_hi = float(prob_grid[exact].max())
        best_lo = float(prob_grid[exact].min())

    for i, ci in enumerate(cands):
        # collapse scenario i: partial sums over the other scenarios
        sel = [slice(None)] * n
        sel[i] = 0
        v0, h0 = ci[0]
        mean_rest = mean_grid[tuple(sel)] - w[i] * v0
        prob_rest = prob_grid[tuple(sel)] - w[i] * h0
        for a in range(len(ci)):
            va, ha = ci[a]
            for b in range(a + 1, len(ci)):
                vb, hb = ci[b]
                if vb == va:
                    continue
                theta = (kappa - mean_rest - w[i] * vb) / (w[i] * (va - vb))
                ok = (theta >= -_ATOL) & (theta <= 1.0 + _ATOL)
                if np.any(ok):
                    th = np.clip(theta[ok], 0.0, 1.0)
                    p = prob_rest[ok] + w[i] * (th * ha + (1.0 - th) * hb)
                    best_hi = max(best_hi, float(p.max()))
                    best_lo = min(best_lo, float(p.min()))

    if not np.isfinite(best_hi):
        raise NoFeasibleSelection("no candidate configuration matches the mean")
    return ClosedInterval(max(best_lo, 0.0), min(best_hi, 1.0))


# ---------------------------------------------------------------------------
# moment-restricted means


def _hull_edges(xs: np.ndarray, ys: np.ndarray):
    """Edges of the 2-d convex hull of the points (xs[i], ys[i]).

    Monotone chain on points sorted by (x, y); returns index pairs.  The
    fractional scenario of a basic solution always mixes two points on one
    hull edge, so only these pairs need enumeration.
    """
    pts = sorted(range(len(xs)), key=lambda i: (xs[i], ys[i]))

    def chain(indices):
        out = []
        for i in indices:
            while len(out) >= 2:
                ox, oy = xs[out[-2]], ys[out[-2]]
                ax, ay = xs[out[-1]], ys[out[-1]]
                if (ax - ox) * (ys[i] - oy) - (ay - oy) * (xs[i] - ox) <= 0:
                    out.pop()
                else:
                    break
            out.append(i)
        return out

    lower = chain(pts)
    upper = chain(pts[::-1])
    hull = lower[:-1] + upper[:-1] if len(lower) > 1 else lower
    edges = {tuple(sorted((hull[i - 1], hull[i]))) for i in range(1, len(hull))}
    if len(hull) > 2:
        edges.add(tuple(sorted((hull[-1], hull[0]))))
    return [e for e in edges if e[0] != e[1]]


def exact_moment_mean_bounds(
    instance: DiscreteInstance, r: float, mu_r: float, mesh: int = 17
) -> ClosedInterval:
    """Brute-force mean range under E[y^r] = mu_r (<= 6 scenarios).

    Per-scenario value meshes start uniform and are refined locally around
    the values appearing in the incumbent optimal configurations until both
    endpoints move by less than 1e-6 (or the configuration budget is hit).
    Tightest on very small instances; the acceptance suite compares against
    the dual at 1e-4 on instances with at most 3 scenarios.
    """
    if instance.n > 6:
        raise InstanceTooLarge("exhaustive moment oracle limited to 6 scenarios")
    odd = float(r).is_integer() and int(r) % 2 == 1
    if not odd and not (r > 0 and float(instance.lower.min()) >= -_ATOL):
        raise InvalidPower(f"power r={r} invalid for this instance")

    def powr(x):
        if odd:
            return np.sign(x) * np.abs(x) ** int(r)
        return np.power(np.maximum(x, 0.0), r)

    n = instance.n
    k = max(int(mesh), 5)
    while (k ** n) > 500_000 and k > 5:
        k -= 2
    widths = instance.upper - instance.lower
    coarse = [
        np.unique(np.linspace(instance.lower[i], instance.upper[i], k))
        for i in range(n)
    ]
    fine_pts = 13 if n <= 3 else (7 if n == 4 else 0)

    def stationary_roots(slope):
        """Solutions of d/dx (x^r) = slope, the tangency candidates."""
        roots = []
        if r == 1.0 or slope == 0.0:
            return roots
        c = slope / r
        p = 1.0 / (r - 1.0)
        if odd and int(r) >= 3:
            if c > 0.0:
                roots.extend([c ** p, -(c ** p)])
        elif c > 0.0:
            roots.append(c ** p)
        return roots

    cands = coarse
    h = widths / max(k - 1, 1)
    prev = None
    for _ in range(12):
        result = _moment_pass(instance, mu_r, cands, powr)
        if result is None:
            if prev is not None:
                return prev
            raise NoFeasibleSelection("no mesh configuration matches the moment")
        bounds, anchors, pairs = result
        if prev is not None and (
            abs(bounds.lo - prev.lo) < 1e-7 and abs(bounds.hi - prev.hi) < 1e-7
        ):
            return bounds
        prev = bounds
        if fine_pts == 0:
            return bounds
        # tangency candidates from the incumbent fractional chords
        extra = []
        for va, vb in pairs:
            if va != vb:
                extra.extend(stationary_roots((powr(np.array(va)) - powr(np.array(vb))) / (va - vb)))
        cands = []
        for i in range(n):
            pts = [coarse[i]]
            anchor_list = list(anchors[i]) + [
                x for x in extra if instance.lower[i] <= x <= instance.upper[i]
            ]
            for anchor in anchor_list:
                pts.append(
                    np.clip(
                        np.linspace(anchor - 3.0 * h[i], anchor + 3.0 * h[i], fine_pts),
                        instance.lower[i],
                        instance.upper[i],
                    )
                )
                pts.append(np.array([anchor]))
            cands.append(np.unique(np.concatenate(pts)))
        h = h / 2.0
    return prev


def _moment_pass(instance, mu_r, cands, powr):
    """One enumeration pass over candidate grids.

    Returns the bounds plus, per scenario, the candidate values used by the
    best max/min configurations (the anchors for local refinement).
    """
    n = instance.n
    w = instance.weight

    shape = tuple(len(c) for c in cands)
    mean_grid = np.zeros(shape)
    mom_grid = np.zeros(shape)
    for i, ci in enumerate(cands):
        dims = [1] * n
        dims[i] = len(ci)
        mean_grid = mean_grid + w[i] * ci.reshape(dims)
        mom_grid = mom_grid + w[i] * powr(ci).reshape(dims)

    scale = max(1.0, abs(mu_r))
    best = {"hi": -np.inf, "lo": np.inf, "hi_vals": None, "lo_vals": None}

    def config_values(flat_idx, collapsed_axis=None, frac_pair=None):
        if collapsed_axis is None:
            idx = np.unravel_index(flat_idx, shape)
            return [(float(cands[i][idx[i]]),) for i in range(n)]
        sub_shape = tuple(len(c) for j, c in enumerate(cands) if j != collapsed_axis)
        idx = np.unravel_index(flat_idx, sub_shape) if sub_shape else ()
        vals, j = [], 0
        for i in range(n):
            if i == collapsed_axis:
                vals.append(frac_pair)
            else:
                vals.append((float(cands[i][idx[j]]),))
                j += 1
        return vals

    exact = np.abs(mom_grid - mu_r) <= 1e-9 * scale
    if np.any(exact):
        masked_hi = np.where(exact, mean_grid, -np.inf)
        masked_lo = np.where(exact, mean_grid, np.inf)
        fhi = int(masked_hi.argmax())
        flo = int(masked_lo.argmin())
        best["hi"] = float(masked_hi.flat[fhi])
        best["hi_vals"] = config_values(fhi)
        best["lo"] = float(masked_lo.flat[flo])
        best["lo_vals"] = config_values(flo)

    for i, ci in enumerate(cands):
        if len(ci) < 2:
            continue
        ys = powr(ci)
        sel = [slice(None)] * n
        sel[i] = 0
        mean_rest = (mean_grid[tuple(sel)] - w[i] * ci[0]).ravel()
        mom_rest = (mom_grid[tuple(sel)] - w[i] * ys[0]).ravel()
        for a, b in _hull_edges(ci, ys):
            ya, yb = ys[a], ys[b]
            if ya == yb:
                continue
            theta = ((mu_r - mom_rest) / w[i] - yb) / (ya - yb)
            ok = (theta >= -_ATOL) & (theta <= 1.0 + _ATOL)
            if not np.any(ok):
                continue
            th = np.clip(theta, 0.0, 1.0)
            means = mean_rest + w[i] * (th * ci[a] + (1.0 - th) * ci[b])
            means = np.where(ok, means, np.nan)
            fhi = int(np.nanargmax(means))
            flo = int(np.nanargmin(means))
            pair = (float(ci[a]), float(ci[b]))
            if means[fhi] > best["hi"]:
                best["hi"] = float(means[fhi])
                best["hi_vals"] = config_values(fhi, collapsed_axis=i, frac_pair=pair)
            if means[flo] < best["lo"]:
                best["lo"] = float(means[flo])
                best["lo_vals"] = config_values(flo, collapsed_axis=i, frac_pair=pair)

    if not np.isfinite(best["hi"]):
        return None
    anchors = []
    pairs = set()
    for i in range(n):
        pts = set()
        for key in ("hi_vals", "lo_vals"):
            if best[key] is not None:
                pts.update(best[key][i])
                if len(best[key][i]) == 2:
                    pairs.add(best[key][i])
        anchors.append(sorted(pts))
    return ClosedInterval(best["lo"], best["hi"]), anchors, sorted(pairs)
