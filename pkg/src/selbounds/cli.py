"""Command-line interface: CSV/parametric ingestion, reports, curve export.

Subcommands, one per restriction family:

  bounds              unrestricted benchmark ranges
  restrict-median     mean interval under a median restriction (--m)
  restrict-mean-prob  event-probability bounds under a mean pin (--kappa, --target)
  restrict-moment     mean interval under an r-th moment pin (--r, --mu)
  restrict-quantile   mean interval under a fixed quantile (--alpha, --q)
  verify              differential run of closed forms against the oracle
  example-chi2        the built-in chi-square comonotone worked example

Reports are JSON documents with a stable field order and a provenance
block (input hash, grid sizes, tolerances, tool version), so identical
requests produce identical bytes.  Exit code 0 on success, 2 when the
requested restriction is infeasible (the report then carries a diagnosis),
1 on any other error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    EmptyFile,
    InfeasibleRestriction,
    InputError,
    InvertedInterval,
    IoError,
    ParseError,
    SelBoundsError,
)
from .laws import parse_law
from .model import (
    ClosedInterval,
    ComonotoneSpec,
    DiscreteInstance,
    discretize,
    marginal_law,
)
from .benchmarks import aumann_interval, median_benchmark, quantile_attainability_range
from .median import (
    extremal_selection,
    marginal_cost_terms,
    marginal_cost_terms_parametric,
    median_restricted_mean_interval,
    partition,
)
from .events import (
    TargetSet,
    calibrate_mean,
    dual_envelope,
    mean_restricted_prob_bounds,
    unrestricted_prob_bounds,
)
from .extensions import (
    MomentRestriction,
    QuantileRestriction,
    moment_restricted_mean_interval,
    power_image_interval,
    quantile_restricted_mean_interval,
)
from . import oracle

TOLERANCES = {
    "mass": 1e-12,
    "mean_residual": 1e-10,
    "oracle_median": 1e-9,
    "oracle_prob": 1e-6,
    "dual_gap": 1e-4,
    "quadrature": 1e-8,
}


# ---------------------------------------------------------------------------
# ingestion


def load_csv(path) -> DiscreteInstance:
    """Read scenarios from a CSV with header lower,upper[,weight]."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_csv(text)


def parse_csv(text: str) -> DiscreteInstance:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise EmptyFile("no rows in CSV input")
    header = [h.strip().lower() for h in lines[0].split(",")]
    if header[:2] != ["lower", "upper"] or len(header) > 3 or (
        len(header) == 3 and header[2] != "weight"
    ):
        raise ParseError(f"expected header lower,upper[,weight], got {lines[0]!r}", line=1)
    rows = []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = [c.strip() for c in ln.split(",")]
        if len(cells) != len(header):
            raise ParseError(f"row has {len(cells)} cells, expected {len(header)}", line=lineno)
        try:
            vals = [float(c) for c in cells]
        except ValueError as exc:
            raise ParseError(f"non-numeric cell in row: {ln!r}", line=lineno) from exc
        if vals[0] > vals[1] + 1e-12:
            raise InvertedInterval(f"line {lineno}: lower={vals[0]} > upper={vals[1]}")
        rows.append(vals)
    if not rows:
        raise EmptyFile("CSV contains a header but no data rows")
    return DiscreteInstance.from_rows(rows)


def write_csv(instance: DiscreteInstance, path) -> None:
    """Round-trip partner of :func:`load_csv` (17 significant digits)."""
    out = ["lower,upper,weight"]
    for l, u, w in zip(instance.lower, instance.upper, instance.weight):
        out.append(f"{l:.17g},{u:.17g},{w:.17g}")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def parse_target(text: str) -> TargetSet:
    try:
        pairs = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"target must be JSON like [[0.8,1],[2,2]], got {text!r}") from exc
    if not isinstance(pairs, list) or not all(
        isinstance(p, list) and len(p) == 2 for p in pairs
    ):
        raise ParseError("target must be a list of [a,b] pairs")
    return TargetSet.from_pairs(pairs)


# ---------------------------------------------------------------------------
# request / report


@dataclass
class AnalysisRequest:
    """One analysis: a source, at most one restriction, optional extras."""

    csv_path: str | None = None
    csv_text: str | None = None
    spec: ComonotoneSpec | None = None
    restriction: tuple | None = None   # ("median", m) | ("mean", k) | ("moment", r, mu) | ("quantile", a, q)
    target: TargetSet | None = None
    run_oracle: bool = False
    export_path: str | None = None
    export_grid: int = 1001
    tolerance: float = 1e-9

    def build_instance(self) -> DiscreteInstance:
        sources = sum(x is not None for x in (self.csv_path, self.csv_text, self.spec))
        if sources != 1:
            raise InputError("exactly one of --input / --spec must be given")
        if self.csv_path is not None:
            return load_csv(self.csv_path)
        if self.csv_text is not None:
            return parse_csv(self.csv_text)
        return discretize(self.spec)

    def input_digest(self) -> str:
        if self.csv_path is not None:
            payload = Path(self.csv_path).read_bytes()
        elif self.csv_text is not None:
            payload = self.csv_text.encode()
        else:
            payload = self.spec.label().encode()
        return hashlib.sha256(payload).hexdigest()


def _interval(iv: ClosedInterval, method: str) -> dict:
    return {"lo": iv.lo, "hi": iv.hi, "method": method}


def run(request: AnalysisRequest) -> dict:
    """Execute a request and assemble the report dictionary.

    The report always carries the unrestricted benchmarks; restricted
    sections appear only when feasible, otherwise the feasibility block
    explains which inequality failed and by how much.
    """
    instance = request.build_instance()
    report: dict = {"schema_version": 1}
    report["request"] = {
        "source": (
            request.csv_path
            or ("inline-csv" if request.csv_text is not None else request.spec.label())
        ),
        "restriction": list(request.restriction) if request.restriction else None,
        "target": request.target.as_lists() if request.target else None,
    }
    report["instance"] = {"scenarios": int(instance.n), "total_mass": instance.total_mass}

    box = aumann_interval(instance)
    benchmark = {
        "mean": _interval(box, "closed-form"),
        "median": _interval(median_benchmark(instance), "closed-form"),
    }
    if request.target is not None:
        benchmark["probability"] = _interval(
            unrestricted_prob_bounds(instance, request.target), "closed-form"
        )
    report["benchmark"] = benchmark

    report["feasibility"] = {"status": "ok", "diagnosis": None}
    restricted: dict = {}
    try:
        _run_restriction(request, instance, restricted)
    except InfeasibleRestriction as exc:
        report["feasibility"] = {"status": "infeasible", "diagnosis": str(exc)}
    report["restricted"] = restricted or None

    if request.run_oracle and request.restriction is not None:
        report["oracle_check"] = _oracle_check(request, instance, restricted)

    report["provenance"] = {
        "tool_version": __version__,
        "input_sha256": request.input_digest(),
        "grid_size": request.spec.grid_size if request.spec else None,
        "tolerances": TOLERANCES,
    }
    return report


def _run_restriction(request, instance, restricted) -> None:
    kind = request.restriction[0] if request.restriction else None
    if kind == "median":
        m = request.restriction[1]
        part = partition(instance, m)
        iv = median_restricted_mean_interval(instance, m)
        restricted["median_mean"] = _interval(iv, "closed-form")
        restricted["partition"] = {
            "p_minus": part.p_minus,
            "p_plus": part.p_plus,
            "p0": part.p0,
            "alpha_minus": part.alpha_minus,
            "alpha_plus": part.alpha_plus,
        }
        if part.p0 == 0.0:
            restricted["note"] = (
                "contact set empty: restriction feasible but vacuous, "
                "interval equals the unrestricted mean range"
            )
        low = marginal_law(instance, "lower")
        high = marginal_law(instance, "upper")
        if low.quantile(0.5) <= m <= high.quantile(0.5):
            terms = marginal_cost_terms(instance, m)
            restricted["marginal_cost_terms"] = {
                "s_lower": terms.s_lower,
                "s_upper": terms.s_upper,
                "implied": _interval(terms.implied, "closed-form"),
            }
    elif kind == "mean":
        kappa = request.restriction[1]
        if request.target is None:
            raise InputError("mean restriction reporting needs --target")
        iv = mean_restricted_prob_bounds(instance, request.target, kappa)
        cal = calibrate_mean(instance, request.target, kappa)
        env = dual_envelope(instance, request.target, kappa)
        restricted["probability"] = _interval(iv, "closed-form")
        restricted["probability_dual"] = {
            "lo": env.lower,
            "hi": env.upper,
            "method": "dual",
        }
        restricted["lambda_star"] = cal.lambda_star
        restricted["selection_mean"] = cal.selection.mean()
    elif kind == "moment":
        r, mu = request.restriction[1], request.restriction[2]
        restricted["moment_image"] = _interval(power_image_interval(instance, r), "closed-form")
        iv = moment_restricted_mean_interval(instance, MomentRestriction(r, mu))
        restricted["moment_mean"] = _interval(iv, "dual")
    elif kind == "quantile":
        alpha, q = request.restriction[1], request.restriction[2]
        rng = quantile_attainability_range(instance, alpha)
        restricted["attainability"] = _interval(rng, "closed-form")
        iv = quantile_restricted_mean_interval(instance, QuantileRestriction(alpha, q))
        restricted["quantile_mean"] = _interval(iv, "closed-form")


def _oracle_check(request, instance, restricted) -> dict:
    kind = request.restriction[0]
    out = {"ran": False, "max_delta": None, "note": None}
    try:
        if kind == "median" and instance.n <= 12 and "median_mean" in restricted:
            ref = oracle.exact_median_mean_bounds(instance, request.restriction[1])
            mine = restricted["median_mean"]
        elif kind == "mean" and instance.n <= 8 and "probability" in restricted:
            ref = oracle.exact_prob_bounds(instance, request.target, request.restriction[1])
            mine = restricted["probability"]
        elif kind == "moment" and instance.n <= 6 and "moment_mean" in restricted:
            ref = oracle.exact_moment_mean_bounds(
                instance, request.restriction[1], request.restriction[2]
            )
            mine = restricted["moment_mean"]
        elif kind == "quantile" and instance.n <= 12 and "quantile_mean" in restricted:
            ref = oracle.exact_quantile_mean_bounds(
                instance, request.restriction[1], request.restriction[2]
            )
            mine = restricted["quantile_mean"]
        else:
            out["note"] = "no oracle for this restriction or instance too large"
            return out
    except SelBoundsError as exc:
        out["note"] = f"oracle raised: {exc}"
        return out
    out["ran"] = True
    out["oracle"] = {"lo": ref.lo, "hi": ref.hi}
    out["max_delta"] = max(abs(ref.lo - mine["lo"]), abs(ref.hi - mine["hi"]))
    return out


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=False) + "\n"


# ---------------------------------------------------------------------------
# curve export


def export_curves(request: AnalysisRequest, instance: DiscreteInstance, base_path) -> list[str]:
    """Write tab-separated curve files plus a sidecar schema description.

    Always: marginal CDFs on a value grid.  With a median restriction:
    extremal selection CDFs and the mean-bound curves over a pivot grid.
    With a mean restriction and target: probability bounds over a mean grid.
    CDF sampling uses the full requested resolution; the bound curves,
    which recompute an interval per grid point, are capped at 201 points.
    """
    base = Path(base_path)
    base.parent.mkdir(parents=True, exist_ok=True)
    written = []
    gridn = request.export_grid
    boundn = min(gridn, 201)
    schema = []

    def emit(name, header, rows, description):
        path = base.parent / f"{base.name}_{name}.tsv"
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("# " + "\t".join(header) + "\n")
                for row in rows:
                    fh.write("\t".join(f"{x:.12g}" for x in row) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
        written.append(str(path))
        schema.append(f"{path.name}: {description}; columns: {', '.join(header)}")

    lo_law = marginal_law(instance, "lower")
    hi_law = marginal_law(instance, "upper")
    tmin, tmax = float(instance.lower.min()), float(instance.upper.max())
    pad = 0.05 * max(tmax - tmin, 1.0)
    ts = np.linspace(tmin - pad, tmax + pad, gridn)
    emit(
        "cdf",
        ["t", "F_lower", "F_upper"],
        np.column_stack([ts, lo_law.cdf(ts), hi_law.cdf(ts)]),
        "marginal endpoint CDFs",
    )

    kind = request.restriction[0] if request.restriction else None
    if kind == "median":
        m = request.restriction[1]
        sel_hi = extremal_selection(instance, m, "max").law()
        sel_lo = extremal_selection(instance, m, "min").law()
        emit(
            "selection_cdf",
            ["t", "F_min_selection", "F_max_selection"],
            np.column_stack([ts, sel_lo.cdf(ts), sel_hi.cdf(ts)]),
            "CDFs of the extremal median-restricted selections",
        )
        lo_med = lo_law.quantile(0.5)
        hi_med = hi_law.quantile(0.5)
        ms = np.linspace(lo_med, hi_med, boundn)
        rows = []
        for mm in ms:
            iv = median_restricted_mean_interval(instance, float(mm))
            rows.append((mm, iv.lo, iv.hi))
        emit(
            "bounds",
            ["m", "E_min", "E_max"],
            rows,
            "restricted mean interval endpoints over the pivot grid",
        )
    elif kind == "mean" and request.target is not None:
        box = aumann_interval(instance)
        ks = np.linspace(box.lo, box.hi, boundn)
        rows = []
        for kk in ks:
            iv = mean_restricted_prob_bounds(instance, request.target, float(kk))
            rows.append((kk, iv.lo, iv.hi))
        emit(
            "bounds",
            ["kappa", "L", "U"],
            rows,
            "probability bounds over the mean grid",
        )

    schema_path = base.parent / f"{base.name}_schema.txt"
    schema_path.write_text("\n".join(schema) + "\n", encoding="utf-8")
    written.append(str(schema_path))
    return written


# ---------------------------------------------------------------------------
# the chi-square worked example


def chi2_example(grid_size: int = 200_001, weight_low: float = 0.3) -> dict:
    """End-to-end comonotone chi-square example report.

    Couples chi2(2) and chi2(5) through one uniform grid, restricts the
    median at the 30/70 blend of the marginal medians, and reports the
    restricted mean interval both from the conditional-quantile formula
    and from the marginal-CDF cost terms.
    """
    spec = ComonotoneSpec(parse_law("chi2(2)"), parse_law("chi2(5)"), grid_size)
    instance = discretize(spec)
    low = marginal_law(instance, "lower")
    high = marginal_law(instance, "upper")
    m_l = low.quantile(0.5)
    m_u = high.quantile(0.5)
    m = weight_low * m_l + (1.0 - weight_low) * m_u
    interval = median_restricted_mean_interval(instance, m)
    terms_discrete = marginal_cost_terms(instance, m)
    terms_param = marginal_cost_terms_parametric(spec.lower_law, spec.upper_law, m)
    return {
        "grid_size": grid_size,
        "median_lower": m_l,
        "median_upper": m_u,
        "m": m,
        "mean_interval": _interval(aumann_interval(instance), "closed-form"),
        "restricted_interval": _interval(interval, "closed-form"),
        "cost_terms_discrete": {
            "s_lower": terms_discrete.s_lower,
            "s_upper": terms_discrete.s_upper,
            "implied": _interval(terms_discrete.implied, "closed-form"),
        },
        "cost_terms_parametric": {
            "s_lower": terms_param.s_lower,
            "s_upper": terms_param.s_upper,
            "implied": _interval(terms_param.implied, "quadrature"),
        },
    }


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # keep exit code 1 for usage errors; 2 is reserved for infeasibility
        self.print_usage(sys.stderr)
        raise SystemExit(_fail(message))


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _add_source_args(p):
    p.add_argument("--input", help="CSV file with header lower,upper[,weight]")
    p.add_argument("--spec", help="parametric pair like 'chi2(2)/chi2(5)'")
    p.add_argument("--grid", type=int, default=1000, help="grid size for --spec")
    p.add_argument("--target", help="target set as JSON [[a,b],...]")
    p.add_argument("--export", help="base path for curve export files")
    p.add_argument("--oracle", action="store_true", help="run the oracle cross-check")
    p.add_argument("--tolerance", type=float, default=1e-9, help="report tolerance")
    p.add_argument("--out", help="write the JSON report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="selbounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="unrestricted benchmark ranges")
    _add_source_args(p)
    p.add_argument("--alpha", type=float, help="also report this quantile attainability range")

    p = sub.add_parser("restrict-median", help="mean interval under a median restriction")
    _add_source_args(p)
    p.add_argument("--m", type=float, required=True)

    p = sub.add_parser("restrict-mean-prob", help="event probability under a mean pin")
    _add_source_args(p)
    p.add_argument("--kappa", type=float, required=True)

    p = sub.add_parser("restrict-moment", help="mean interval under a moment pin")
    _add_source_args(p)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--mu", type=float, required=True)

    p = sub.add_parser("restrict-quantile", help="mean interval under a fixed quantile")
    _add_source_args(p)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--q", type=float, required=True)

    p = sub.add_parser("verify", help="differential oracle run for a restriction")
    _add_source_args(p)
    p.add_argument("--m", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--r", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--q", type=float)

    p = sub.add_parser("example-chi2", help="built-in chi-square worked example")
    p.add_argument("--grid", type=int, default=200_001)
    p.add_argument("--export", help="base path for curve export files")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    return parser


def _request_from_args(args) -> AnalysisRequest:
    spec = None
    if args.spec:
        parts = args.spec.split("/")
        if len(parts) != 2:
            raise InputError("--spec must look like 'chi2(2)/chi2(5)'")
        spec = ComonotoneSpec(parse_law(parts[0]), parse_law(parts[1]), args.grid)
    target = parse_target(args.target) if getattr(args, "target", None) else None
    return AnalysisRequest(
        csv_path=args.input,
        spec=spec,
        target=target,
        run_oracle=getattr(args, "oracle", False),
        export_path=getattr(args, "export", None),
        tolerance=getattr(args, "tolerance", 1e-9),
    )


def _restriction_from_args(args, command: str) -> tuple | None:
    if command == "restrict-median":
        return ("median", args.m)
    if command == "restrict-mean-prob":
        return ("mean", args.kappa)
    if command == "restrict-moment":
        return ("moment", args.r, args.mu)
    if command == "restrict-quantile":
        return ("quantile", args.alpha, args.q)
    if command == "verify":
        if args.m is not None:
            return ("median", args.m)
        if args.kappa is not None:
            return ("mean", args.kappa)
        if args.r is not None and args.mu is not None:
            return ("moment", args.r, args.mu)
        if args.alpha is not None and args.q is not None:
            return ("quantile", args.alpha, args.q)
        raise InputError("verify needs one restriction (--m | --kappa | --r/--mu | --alpha/--q)")
    return None


def _emit(report: dict, out_path) -> None:
    text = report_to_json(report)
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        if args.command == "example-chi2":
            report = chi2_example(args.grid)
            if args.export:
                spec = ComonotoneSpec(parse_law("chi2(2)"), parse_law("chi2(5)"), args.grid)
                req = AnalysisRequest(spec=spec, restriction=("median", report["m"]))
                report["exported"] = export_curves(req, discretize(spec), args.export)
            _emit(report, args.out)
            return 0

        request = _request_from_args(args)
        request.restriction = _restriction_from_args(args, args.command)
        if args.command == "verify":
            request.run_oracle = True
        report = run(request)

        if args.command == "bounds" and getattr(args, "alpha", None):
            instance = request.build_instance()
            rng = quantile_attainability_range(instance, args.alpha)
            report["benchmark"]["quantile_attainability"] = _interval(rng, "closed-form")

        if request.export_path:
            instance = request.build_instance()
            report["exported"] = export_curves(request, instance, request.export_path)

        _emit(report, getattr(args, "out", None))
        if report["feasibility"]["status"] == "infeasible":
            return 2
        if args.command == "verify":
            check = report.get("oracle_check") or {}
            if check.get("ran") and check["max_delta"] > request.tolerance:
                print(
                    f"verify: oracle delta {check['max_delta']:.3g} exceeds "
                    f"tolerance {request.tolerance:.3g}",
                    file=sys.stderr,
                )
                return 1
        return 0
    except InfeasibleRestriction as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except SelBoundsError as exc:
        return _fail(str(exc))
    except OSError as exc:
        return _fail(str(exc))


if __name__ == "__main__":
    raise SystemExit(main())
