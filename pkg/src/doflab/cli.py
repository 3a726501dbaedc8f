"""Command-line front end.

Subcommands: formula | scheme | verify | oracle | simulate | table.

Exit codes are a stable API: 0 means accepted/ok, 1 means a structural
problem (bad flags, malformed files, out-of-range indices, undersized
instances, search limits), 2 means a well-formed plan was semantically
rejected by a checker. All randomness enters through explicit seeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import numeric, oracle, schemes
from .association import dump_association, load_association
from .errors import (
    ContractViolationError,
    FormulaDomainError,
    InstanceTooSmallError,
    SearchLimitExceededError,
    StructuralError,
)
from .topology import DOWNLINK, UPLINK
from .verify import check_downlink, check_uplink, dump_plan, load_plan

EXIT_OK = 0
EXIT_STRUCTURAL = 1
EXIT_REJECTED = 2

FORMULA_SESSIONS = ("downlink-zf", "uplink-zf", "avg-lower", "gamma-d", "wyner")

ENV_ORACLE_LIMIT = "DOFLAB_ORACLE_LIMIT"


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped onto the structural exit code."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_STRUCTURAL)


def _fmt(value: Fraction) -> str:
    if value.denominator == 1:
        return f"{value.numerator} ({float(value):.4f})"
    return f"{value.numerator}/{value.denominator} ({float(value):.4f})"


def _rational(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def load_config(path: str | None) -> dict[str, float]:
    """Flat key=value config; blank lines and #-comments ignored."""
    if path is None:
        return {}
    out: dict[str, float] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StructuralError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise StructuralError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        try:
            out[key] = float(val)
        except ValueError as exc:
            raise StructuralError(f"{path}:{lineno}: non-numeric value {val!r}") from exc
    return out


def _oracle_limit(args, config: dict[str, float], default: int) -> int:
    limit = default
    if "oracle_limit" in config:
        limit = int(config["oracle_limit"])
    env = os.environ.get(ENV_ORACLE_LIMIT)
    if env is not None:
        try:
            limit = int(env)
        except ValueError as exc:
            raise StructuralError(f"{ENV_ORACLE_LIMIT} must be an integer, got {env!r}") from exc
    if getattr(args, "limit", None) is not None:
        limit = args.limit
    return limit


# ---------------------------------------------------------------------------
# formula


def cmd_formula(args) -> int:
    session, L, Nc = args.session, args.L, args.nc
    if session == "downlink-zf":
        value = schemes.tau_d_zf(L, Nc)
    elif session == "uplink-zf":
        value = schemes.tau_u_zf(L, Nc)
    elif session == "avg-lower":
        value = schemes.tau_avg_lower(L, Nc)
    elif session == "gamma-d":
        value = schemes.gamma_d(L, Nc)
    else:
        value = schemes.tau_wyner(Nc)
    print(_fmt(value))
    return EXIT_OK


# ---------------------------------------------------------------------------
# scheme


def _build(session: str, K: int, L: int, Nc: int) -> schemes.SchemeBundle:
    if session == "downlink":
        return schemes.build_downlink_scheme(K, L, Nc)
    if session == "uplink":
        return schemes.build_uplink_scheme(K, L, Nc)
    return schemes.build_joint_scheme(K, L, Nc)


def cmd_scheme(args) -> int:
    bundle = _build(args.session, args.K, args.L, args.nc)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    assoc_path = outdir / "association.json"
    assoc_path.write_text(dump_association(bundle.association, bundle.topology))
    written = [str(assoc_path)]
    for name, plan in (("uplink", bundle.uplink_plan), ("downlink", bundle.downlink_plan)):
        if plan is None:
            continue
        path = outdir / f"{name}_plan.json"
        path.write_text(dump_plan(plan))
        written.append(str(path))
    for session in sorted(bundle.declared):
        d = bundle.declared[session]
        print(
            f"{session}: {d.finite_dof} DoF at K={args.K} "
            f"(asymptotic {_rational(d.asymptotic)} per user, subnetworks of {d.subnetwork_size})"
        )
    if len(bundle.declared) == 2:
        total = sum(d.finite_dof for d in bundle.declared.values())
        print(f"average: {_rational(Fraction(total, 2))} DoF, per user {_rational(Fraction(total, 2 * args.K))}")
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify


def _load_pair(plan_path: str, assoc_path: str):
    try:
        plan_text = Path(plan_path).read_text()
        assoc_text = Path(assoc_path).read_text()
    except OSError as exc:
        raise StructuralError(f"cannot read input: {exc}") from exc
    plan = load_plan(plan_text)
    topology, assoc = load_association(assoc_text)
    return plan, assoc, topology


def cmd_verify(args) -> int:
    plan, assoc, topology = _load_pair(args.plan, args.assoc)
    from .verify import DownlinkPlan, UplinkPlan

    if isinstance(plan, UplinkPlan):
        report = check_uplink(plan, assoc, topology, args.subnetwork_size)
    else:
        report = check_downlink(plan, assoc, topology, args.subnetwork_size)
    print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK if report.accepted else EXIT_REJECTED


# ---------------------------------------------------------------------------
# oracle


def cmd_oracle(args) -> int:
    config = load_config(args.config)
    session = args.session
    prune = not args.no_prune
    if session == "avg":
        limit = _oracle_limit(args, config, oracle.DEFAULT_AVG_LIMIT)
        result = oracle.brute_force_average(
            args.K, args.L, args.nc, window=args.window, limit=limit, prune=prune
        )
        formula_value = schemes.tau_avg_lower(args.L, args.nc)
        predicted = formula_value * args.K
    elif session == "uplink":
        limit = _oracle_limit(args, config, oracle.DEFAULT_LIMIT)
        result = oracle.brute_force_uplink(args.K, args.L, args.nc, limit=limit, prune=prune)
        formula_value = schemes.tau_u_zf(args.L, args.nc)
        predicted = formula_value * args.K
    else:
        limit = _oracle_limit(args, config, oracle.DEFAULT_LIMIT)
        result = oracle.brute_force_downlink(
            args.K, args.L, args.nc, window=args.window, limit=limit, prune=prune
        )
        formula_value = schemes.tau_d_zf(args.L, args.nc)
        predicted = formula_value * args.K

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    bundle = result.witness
    assoc_path = outdir / "witness_association.json"
    assoc_path.write_text(dump_association(bundle.association, bundle.topology))
    witness_paths = [str(assoc_path)]
    for name, plan in (("uplink", bundle.uplink_plan), ("downlink", bundle.downlink_plan)):
        if plan is not None:
            path = outdir / f"witness_{name}_plan.json"
            path.write_text(dump_plan(plan))
            witness_paths.append(str(path))
    result_path = outdir / "oracle_result.json"
    result_path.write_text(json.dumps(result.to_json_dict(), indent=2, sort_keys=True) + "\n")

    achieved = Fraction(result.optimal_dof, 2) if session == "avg" else Fraction(result.optimal_dof)
    print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    verdict = "matches" if achieved == predicted else "differs from"
    print(
        f"optimal {_rational(achieved)} {verdict} formula x K = {_rational(predicted)} "
        "(finite-K boundary terms can push the exact optimum above the asymptotic value)"
    )
    for path in witness_paths + [str(result_path)]:
        print(f"wrote {path}")

    scheme_value = _scheme_value(session, args.K, args.L, args.nc)
    _append_ledger(
        args.ledger,
        [
            args.K,
            args.L,
            args.nc,
            session,
            _rational(achieved),
            "" if scheme_value is None else _rational(scheme_value),
            "" if scheme_value is None else str(int(achieved == scheme_value)),
        ],
    )
    return EXIT_OK


def _scheme_value(session: str, K: int, L: int, Nc: int) -> Fraction | None:
    try:
        if session == "uplink":
            bundle = schemes.build_uplink_scheme(K, L, Nc)
            return Fraction(bundle.declared[UPLINK].finite_dof)
        if session == "downlink":
            bundle = schemes.build_downlink_scheme(K, L, Nc)
            return Fraction(bundle.declared[DOWNLINK].finite_dof)
        bundle = schemes.build_joint_scheme(K, L, Nc)
        total = sum(d.finite_dof for d in bundle.declared.values())
        return Fraction(total, 2)
    except (InstanceTooSmallError, FormulaDomainError):
        return None


def _append_ledger(path: str, row: list) -> None:
    ledger = Path(path)
    new = not ledger.exists()
    with ledger.open("a", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(["K", "L", "Nc", "session", "optimal", "scheme_value", "match_flag"])
        writer.writerow(row)


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    if args.p_max_exp < args.p_min_exp:
        raise StructuralError(
            f"p-max-exp ({args.p_max_exp}) must be >= p-min-exp ({args.p_min_exp})"
        )
    plan, assoc, topology = _load_pair(args.plan, args.assoc)
    from .verify import UplinkPlan

    if isinstance(plan, UplinkPlan):
        report = check_uplink(plan, assoc, topology)
    else:
        report = check_downlink(plan, assoc, topology)
    if not report.accepted:
        print("plan rejected by checker; refusing to simulate", file=sys.stderr)
        for v in report.violations:
            print(f"  condition {v.condition}: {v.detail}", file=sys.stderr)
        return EXIT_REJECTED

    powers = numeric.power_grid(args.p_min_exp, args.p_max_exp, args.points)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    seeds = list(range(args.seed, args.seed + args.seeds))

    def run_seed(seed: int):
        channels = numeric.sample_channels(topology, seed)
        if isinstance(plan, UplinkPlan):
            curve = numeric.simulate_uplink(plan, channels, powers)
            residual = 0.0
        else:
            curve = numeric.simulate_downlink(plan, channels, powers)
            residual = numeric.solve_downlink_precoders(plan, channels).max_residual
        return seed, curve, residual

    workers = args.threads if args.threads else (os.cpu_count() or 1)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run_seed, seeds))

    max_residual = 0.0
    sum_slopes = []
    per_user_acc = None
    for seed, curve, residual in results:
        (outdir / f"rates_seed{seed}.csv").write_text(curve.to_csv())
        est = numeric.estimate_dof(curve)
        sum_slopes.append(est.total)
        per_user_acc = (
            list(est.per_user)
            if per_user_acc is None
            else [a + b for a, b in zip(per_user_acc, est.per_user)]
        )
        max_residual = max(max_residual, residual)
    per_user_mean = [v / len(results) for v in per_user_acc]
    summary = {
        "session": report.session,
        "achieved_dof": report.achieved_dof,
        "seeds": len(results),
        "max_nulling_residual": max_residual,
        "sum_slope_mean": sum(sum_slopes) / len(sum_slopes),
        "sum_slope_min": min(sum_slopes),
        "sum_slope_max": max(sum_slopes),
        "per_user_slope_mean": [round(v, 6) for v in per_user_mean],
    }
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


# ---------------------------------------------------------------------------
# table


def _formula_cell(session: str, L: int, Nc: int) -> Fraction | None:
    try:
        if session == "downlink-zf":
            return schemes.tau_d_zf(L, Nc)
        if session == "uplink-zf":
            return schemes.tau_u_zf(L, Nc)
        if session == "avg-lower":
            return schemes.tau_avg_lower(L, Nc)
        if session == "gamma-d":
            return schemes.gamma_d(L, Nc)
        return schemes.tau_wyner(Nc)
    except FormulaDomainError:
        return None


def cmd_table(args) -> int:
    if args.to < args.frm:
        raise StructuralError(f"--to ({args.to}) must be >= --from ({args.frm})")
    sessions = args.sessions.split(",") if args.sessions != "all" else list(FORMULA_SESSIONS)
    for s in sessions:
        if s not in FORMULA_SESSIONS:
            raise StructuralError(f"unknown session {s!r}, expected one of {FORMULA_SESSIONS}")
    rows = []
    for value in range(args.frm, args.to + 1):
        L, Nc = (value, args.nc) if args.vary == "L" else (args.L, value)
        if Nc is None or L is None:
            raise StructuralError("fixed parameter missing: set --nc when varying L, -L when varying Nc")
        if Nc < 1 or L < 0:
            raise StructuralError(f"parameters out of domain: L={L}, Nc={Nc}")
        cells = {s: _formula_cell(s, L, Nc) for s in sessions}
        rows.append((value, cells))

    buf = io.StringIO()
    writer = csv.writer(buf)
    header = [args.vary]
    for s in sessions:
        header += [s, f"{s}_decimal"]
    writer.writerow(header)
    for value, cells in rows:
        row = [value]
        for s in sessions:
            cell = cells[s]
            row += ["", ""] if cell is None else [_rational(cell), f"{float(cell):.6f}"]
        writer.writerow(row)
    Path(args.out).write_text(buf.getvalue())
    print(f"wrote {args.out}")
    if args.svg:
        svg = _render_svg(args.vary, rows, sessions)
        Path(args.svg).write_text(svg)
        print(f"wrote {args.svg}")
    return EXIT_OK


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _render_svg(xlabel: str, rows, sessions: list[str]) -> str:
    """Minimal line plot: axes plus one polyline per session."""
    width, height, margin = 640, 420, 56
    xs = [value for value, _ in rows]
    x0, x1 = min(xs), max(xs)
    span = (x1 - x0) or 1

    def px(x: float) -> float:
        return margin + (x - x0) / span * (width - 2 * margin)

    def py(y: float) -> float:
        return height - margin - y * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="13">{xlabel}</text>',
        f'<text x="14" y="{height / 2:.0f}" font-size="13" '
        f'transform="rotate(-90 14 {height / 2:.0f})" text-anchor="middle">per-user DoF</text>',
    ]
    for x in xs:
        parts.append(
            f'<text x="{px(x):.1f}" y="{height - margin + 16}" text-anchor="middle" '
            f'font-size="11">{x}</text>'
        )
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{margin - 6}" y="{py(tick) + 4:.1f}" text-anchor="end" '
            f'font-size="11">{tick:g}</text>'
        )
    for idx, s in enumerate(sessions):
        color = _SVG_COLORS[idx % len(_SVG_COLORS)]
        points = [
            f"{px(value):.1f},{py(float(cells[s])):.1f}"
            for value, cells in rows
            if cells[s] is not None
        ]
        if points:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="2" '
                f'points="{" ".join(points)}"/>'
            )
        parts.append(
            f'<text x="{width - margin + 4}" y="{margin + 16 * idx}" font-size="11" '
            f'fill="{color}">{s}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# parser wiring


def build_parser() -> _Parser:
    parser = _Parser(prog="doflab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("formula", help="evaluate a closed-form per-user DoF value")
    p.add_argument("--session", required=True, choices=FORMULA_SESSIONS)
    p.add_argument("-L", type=int, default=1, help="connectivity parameter (default 1)")
    p.add_argument("--nc", type=int, required=True, help="association budget")
    p.set_defaults(func=cmd_formula)

    p = sub.add_parser("scheme", help="generate an association and plan files")
    p.add_argument("--session", required=True, choices=("downlink", "uplink", "joint"))
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--nc", type=int, required=True)
    p.add_argument("--out", default="scheme_out", help="output directory")
    p.set_defaults(func=cmd_scheme)

    p = sub.add_parser("verify", help="check a plan file against an association file")
    p.add_argument("plan")
    p.add_argument("assoc")
    p.add_argument("--subnetwork-size", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="exhaustive search for the optimal plan")
    p.add_argument("--session", required=True, choices=("uplink", "downlink", "avg"))
    p.add_argument("-K", type=int, required=True)
    p.add_argument("-L", type=int, required=True)
    p.add_argument("--nc", type=int, required=True)
    p.add_argument("--window", type=int, default=None, help="downlink transmit window (default Nc)")
    p.add_argument("--no-prune", action="store_true", help="disable admissible pruning")
    p.add_argument("--limit", type=int, default=None, help="max K the search accepts")
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--out", default="oracle_out", help="output directory")
    p.add_argument("--ledger", default="oracle_ledger.csv", help="CSV ledger to append to")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="rate curves and DoF slopes for a verified plan")
    p.add_argument("plan")
    p.add_argument("assoc")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--seed", type=int, default=0, help="first seed (default 0)")
    p.add_argument("--p-min-exp", type=float, default=10.0)
    p.add_argument("--p-max-exp", type=float, default=40.0)
    p.add_argument("--points", type=int, default=7)
    p.add_argument("--threads", type=int, default=None, help="seed-level parallelism")
    p.add_argument("--out", default="simulate_out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("table", help="sweep a parameter and emit CSV (optionally SVG)")
    p.add_argument("--vary", required=True, choices=("L", "nc"))
    p.add_argument("--from", dest="frm", type=int, required=True)
    p.add_argument("--to", dest="to", type=int, required=True)
    p.add_argument("-L", type=int, default=None, help="fixed L when varying nc")
    p.add_argument("--nc", type=int, default=None, help="fixed Nc when varying L")
    p.add_argument("--sessions", default="all", help="comma list or 'all'")
    p.add_argument("--out", default="table.csv")
    p.add_argument("--svg", default=None)
    p.set_defaults(func=cmd_table)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_STRUCTURAL
    try:
        return args.func(args)
    except (StructuralError, InstanceTooSmallError, FormulaDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except SearchLimitExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except ContractViolationError as exc:
        print(f"internal contract violation: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL


if __name__ == "__main__":
    sys.exit(main())
