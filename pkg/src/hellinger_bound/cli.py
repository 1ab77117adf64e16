"""Command-line interface.

Subcommands::

    bound     tight bound, Bhattacharyya bound, comparison bound, beta factors, attainer
    compare   bounds next to Gaussian and shifted-exponential distances
    verify    sample feasible pairs and run the multi-start minimizer
    sequence  equal-means four-point pairs with vanishing distance

Exit codes: 0 success, 2 input error, 3 convergence failure,
4 bound violation found.
"""

from __future__ import annotations

import argparse
import csv
import enum
import io
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Optional

from .closed_forms import (
    gaussian_h2,
    match_moments_exponential,
    match_moments_gaussian,
    shifted_exponential_h2,
)
from .core_types import MomentSpec
from .errors import HellingerBoundError
from .tight_bounds import binary_attainer, bound_report
from .verifier import (
    VerificationConfig,
    iter_verification,
    sequence_record,
    sequence_value,
    summarize,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_VIOLATION = 4

REFERENCE_SPECS = [(10.0, 100.0, 3.0, 9.0), (20.0, 30.0, 10.0, 20.0)]

log = logging.getLogger("hellinger_bound")


class Command(str, enum.Enum):
    BOUND = "bound"
    COMPARE = "compare"
    VERIFY = "verify"
    SEQUENCE = "sequence"


@dataclass(frozen=True)
class RunManifest:
    command: Command
    spec: Optional[MomentSpec]
    variance_input_mode: str
    config: Optional[VerificationConfig]
    output_format: str
    output_path: Optional[str]


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------------
# argument parsing


def _common_flags(defaults: bool) -> argparse.ArgumentParser:
    sup = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv", "table"], default=sup("table"))
    common.add_argument("--out", metavar="PATH", default=sup(None))
    common.add_argument("--seed", type=int, default=sup(0))
    common.add_argument("--tol-moments", type=float, default=sup(1e-8))
    common.add_argument("--tol-gap", type=float, default=sup(1e-4))
    common.add_argument("-v", "--verbose", action="store_true", default=sup(False))
    return common


def _marginal_flags(parser, require_means: bool = True):
    for side in ("p", "q"):
        if require_means:
            parser.add_argument(f"--mean-{side}", type=float)
        group = parser.add_mutually_exclusive_group()
        group.add_argument(f"--var-{side}", type=float, help="variance")
        group.add_argument(f"--sd-{side}", type=float, help="standard deviation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hellinger-bound",
        description="Tight lower bound on the squared Hellinger distance "
        "between laws with given means and variances.",
        parents=[_common_flags(defaults=True)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    local = _common_flags(defaults=False)

    p_bound = sub.add_parser("bound", parents=[local], help="compute all bounds for one spec")
    _marginal_flags(p_bound)

    p_cmp = sub.add_parser(
        "compare", parents=[local],
        help="bounds vs. Gaussian and exponential distances "
        "(no spec flags: the two built-in reference specs)",
    )
    _marginal_flags(p_cmp)

    p_ver = sub.add_parser("verify", parents=[local], help="numerical tightness check")
    _marginal_flags(p_ver)
    p_ver.add_argument("--trials", type=int, default=100)
    p_ver.add_argument("--restarts", type=int, default=20)
    p_ver.add_argument("--n-points", type=int, default=6)
    p_ver.add_argument("--radius", type=float, default=None,
                       help="support box |u| <= R (default: 100 x spec scale)")

    p_seq = sub.add_parser("sequence", parents=[local], help="equal-means vanishing sequence")
    _marginal_flags(p_seq, require_means=False)
    p_seq.add_argument("--j", type=int, nargs="+", default=[10, 100, 1000, 10000])
    return parser


def _sd_from_args(args, side: str) -> tuple[Optional[float], Optional[str]]:
    var = getattr(args, f"var_{side}")
    sd = getattr(args, f"sd_{side}")
    if var is not None:
        if var < 0:
            raise UsageError(f"--var-{side} must be non-negative")
        return math.sqrt(var), "variance"
    if sd is not None:
        return sd, "sd"
    return None, None


def _spec_from_args(args, require: bool = True, means: bool = True):
    sd_p, mode_p = _sd_from_args(args, "p")
    sd_q, mode_q = _sd_from_args(args, "q")
    mean_p = getattr(args, "mean_p", 0.0) if means else 0.0
    mean_q = getattr(args, "mean_q", 0.0) if means else 0.0
    given = [mean_p, mean_q, sd_p, sd_q]
    if not require and all(v is None for v in given):
        return None, "variance"
    missing = []
    if mean_p is None:
        missing.append("--mean-p")
    if mean_q is None:
        missing.append("--mean-q")
    if sd_p is None:
        missing.append("--var-p or --sd-p")
    if sd_q is None:
        missing.append("--var-q or --sd-q")
    if missing:
        raise UsageError("missing " + ", ".join(missing))
    mode = mode_p if mode_p == mode_q else "mixed"
    return MomentSpec(mean_p, sd_p, mean_q, sd_q), mode


def default_radius(spec: MomentSpec) -> float:
    scale = max(abs(spec.mean_p) + spec.sigma_p, abs(spec.mean_q) + spec.sigma_q)
    if spec.mean_gap != 0:
        att = binary_attainer(spec)
        scale = max(scale, abs(att.u1), abs(att.u2))
    return 100.0 * (scale or 1.0)


def manifest_from_args(args) -> RunManifest:
    command = Command(args.command)
    config = None
    if command is Command.SEQUENCE:
        spec, mode = _spec_from_args(args, means=False)
        config = VerificationConfig(seed=args.seed, tol_moments=args.tol_moments,
                                    tol_gap=args.tol_gap)
    else:
        spec, mode = _spec_from_args(args, require=command is not Command.COMPARE)
    if command is Command.VERIFY:
        config = VerificationConfig(
            n_points=args.n_points,
            radius=args.radius if args.radius is not None else default_radius(spec),
            n_trials=args.trials,
            n_restarts=args.restarts,
            seed=args.seed,
            tol_moments=args.tol_moments,
            tol_gap=args.tol_gap,
        )
    return RunManifest(command, spec, mode, config, args.format, args.out)


# ----------------------------------------------------------------------------
# commands: each returns (payload, table_lines, exit_code)


def cmd_bound(manifest: RunManifest):
    spec = manifest.spec
    report = bound_report(spec)
    result = report.to_dict()
    note = "infimum, not attained" if report.attainer is None else "attained by the binary pair"
    result["note"] = note
    # 3 decimals for display, more digits alongside; JSON keeps full precision
    lines = [
        f"hellinger_lb      {report.hellinger_lb:.3f}  [{report.hellinger_lb:.10g}]  ({note})",
        f"bhattacharyya_ub  {report.bhattacharyya_ub:.3f}  [{report.bhattacharyya_ub:.10g}]",
        f"comparison_lb     {report.comparison_lb:.3f}  [{report.comparison_lb:.10g}]",
    ]
    if report.beta_min is not None:
        lines.append(f"beta_min, beta_max {report.beta_min:.6g}, {report.beta_max:.6g}")
    if report.attainer is not None:
        att = report.attainer
        lines.append(f"attainer r={att.r:.6g} s={att.s:.6g} u1={att.u1:.6g} u2={att.u2:.6g}")
    payload = _payload(manifest, [result], {"attained": report.attainer is not None})
    return payload, lines, EXIT_OK


def compare_row(spec: MomentSpec) -> dict:
    report = bound_report(spec)
    row = {
        "mean_p": spec.mean_p, "var_p": spec.sigma_p**2,
        "mean_q": spec.mean_q, "var_q": spec.sigma_q**2,
        "tight_lb": report.hellinger_lb,
        "comparison_lb": report.comparison_lb,
        "gaussian_h2": None,
        "exponential_h2": None,
    }
    try:
        row["gaussian_h2"] = gaussian_h2(*match_moments_gaussian(spec))
        row["exponential_h2"] = shifted_exponential_h2(*match_moments_exponential(spec))
    except HellingerBoundError:
        pass
    distances = [row[k] for k in ("gaussian_h2", "exponential_h2") if row[k] is not None]
    row["distances_above_bounds"] = all(
        d >= row["tight_lb"] and d >= row["comparison_lb"] for d in distances
    )
    if report.beta_min is None:
        row["sandwich_ok"] = None
    else:
        l_bound = report.comparison_lb
        tol = 1e-12 * max(report.hellinger_lb, 1e-300)
        row["sandwich_ok"] = (report.beta_min * l_bound <= report.hellinger_lb + tol
                              and report.hellinger_lb <= report.beta_max * l_bound + tol)
    return row


def _fmt3(value) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def cmd_compare(manifest: RunManifest):
    if manifest.spec is None:
        specs = [MomentSpec.from_variances(*args) for args in REFERENCE_SPECS]
    else:
        specs = [manifest.spec]
    rows = [compare_row(spec) for spec in specs]
    lines = [f"{'(m_P, var_P, m_Q, var_Q)':<28}{'tight':>8}{'l':>8}{'gauss':>8}{'exp':>8}  checks"]
    for row in rows:
        label = "({:g}, {:g}, {:g}, {:g})".format(row["mean_p"], row["var_p"],
                                                  row["mean_q"], row["var_q"])
        lines.append(
            f"{label:<28}{_fmt3(row['tight_lb']):>8}{_fmt3(row['comparison_lb']):>8}"
            f"{_fmt3(row['gaussian_h2']):>8}{_fmt3(row['exponential_h2']):>8}"
            f"  above={row['distances_above_bounds']} sandwich={row['sandwich_ok']}"
        )
    degenerate = any(row["exponential_h2"] is None for row in rows)
    summary = {"rows": len(rows), "degenerate_sd": degenerate}
    payload = _payload(manifest, rows, summary)
    payload["spec"] = None if manifest.spec is None else manifest.spec.to_dict()
    return payload, lines, EXIT_INPUT if degenerate else EXIT_OK


def _record_line(index: int, rec) -> str:
    if rec.error is not None:
        return f"{index:>6} {rec.kind.value:<9} error: {rec.error}"
    extra = "" if rec.off_top2_mass is None else f" off_top2={rec.off_top2_mass:.2e}"
    return (f"{index:>6} {rec.kind.value:<9} h2={rec.achieved_h2:.10f} "
            f"bound={rec.bound:.10f} gap={rec.gap:+.3e} resid={rec.moment_residual:.1e}{extra}")


def cmd_verify(manifest: RunManifest, stream=None):
    spec, config = manifest.spec, manifest.config
    records = []
    for index, rec in enumerate(iter_verification(spec, config)):
        records.append(rec)
        if stream is not None:
            print(_record_line(index, rec), file=stream, flush=True)
    summary = summarize(records)
    sdict = summary.to_dict()
    sdict["config"] = config.to_dict()
    lines = [
        f"records: {summary.n_records} (feasible {summary.n_feasible}, errors {summary.n_errors})",
        f"violations: {summary.violations}",
        f"min gap: {summary.min_gap}",
        f"optimizer gap: {summary.optimizer_gap} (tol {config.tol_gap:g})",
        f"two-point concentration: {summary.two_point}",
    ]
    if summary.optimizer_error:
        lines.append(f"optimizer: {summary.optimizer_error}")
    if summary.violations:
        code = EXIT_VIOLATION
    elif summary.optimizer_error and summary.optimizer_error.startswith("ConvergenceFailure"):
        code = EXIT_CONVERGENCE
    else:
        code = EXIT_OK
    payload = _payload(manifest, [rec.to_dict() for rec in records], sdict)
    return payload, lines, code


def cmd_sequence(manifest: RunManifest, j_list):
    spec = manifest.spec
    rows = []
    for j in j_list:
        rec = sequence_record(spec.sigma_p, spec.sigma_q, j, manifest.config.tol_moments)
        expected = sequence_value(spec.sigma_p, spec.sigma_q, j)
        rows.append({
            "j": j,
            "h2": rec.achieved_h2,
            "binary_h2": expected,
            "abs_diff": abs(rec.achieved_h2 - expected),
            "moment_residual": rec.moment_residual,
        })
    decreasing = all(b["h2"] < a["h2"] for a, b in zip(rows, rows[1:]))
    agree = all(row["abs_diff"] <= 1e-10 for row in rows)
    lines = [f"{'j':>10} {'H^2':>22} {'h^2(xi/j, 1/j)':>22}"]
    lines += [f"{row['j']:>10} {row['h2']:>22.15e} {row['binary_h2']:>22.15e}" for row in rows]
    lines.append(f"agree within 1e-10: {agree}; strictly decreasing: {decreasing}")
    payload = _payload(manifest, rows, {"agree": agree, "strictly_decreasing": decreasing})
    return payload, lines, EXIT_OK


# ----------------------------------------------------------------------------
# rendering


def _payload(manifest: RunManifest, results, summary) -> dict:
    return {
        "command": manifest.command.value,
        "spec": None if manifest.spec is None else manifest.spec.to_dict(),
        "results": results,
        "summary": summary,
    }


def _jsonable(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def _flatten(obj, prefix="") -> dict:
    flat = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, name + "."))
        elif isinstance(value, list):
            flat[name] = " ".join(repr(v) for v in value)
        else:
            flat[name] = "" if value is None else (repr(value) if isinstance(value, float) else value)
    return flat


def render(payload: dict, lines, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_jsonable(payload), indent=2) + "\n"
    if fmt == "csv":
        rows = [_flatten(row) for row in payload["results"]]
        header = []
        for row in rows:
            header += [key for key in row if key not in header]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    return "\n".join(lines) + "\n"


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        manifest = manifest_from_args(args)
        if manifest.command is Command.BOUND:
            payload, lines, code = cmd_bound(manifest)
        elif manifest.command is Command.COMPARE:
            payload, lines, code = cmd_compare(manifest)
        elif manifest.command is Command.VERIFY:
            stream = sys.stdout if manifest.output_format == "table" and not manifest.output_path else None
            payload, lines, code = cmd_verify(manifest, stream)
        else:
            payload, lines, code = cmd_sequence(manifest, args.j)
    except (UsageError, HellingerBoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    text = render(payload, lines, manifest.output_format)
    if manifest.output_path:
        with open(manifest.output_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
