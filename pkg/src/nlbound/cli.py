"""Command-line front end: ``nlbound {bound,scan,threshold,chsh}``.

Exit codes: 0 success, 2 input/validation error, 3 computation-domain error.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .bounds import (
    SearchConfig,
    chsh_bound,
    detect_nonlocality,
    finite_n_value,
    worker_count,
)
from .errors import DomainError, ValidationError
from .quadrature import QuadratureConfig
from .states import (
    DensityMatrix,
    bell_diagonal,
    gamma_correlation,
    isotropic,
    load_state,
    pauli_correlation,
    sigma_mixture,
    werner,
)

log = logging.getLogger("nlbound")

FAMILIES = ("werner", "bell-diagonal", "isotropic", "sigma-mixture")

SCAN_COLUMNS = {
    "werner": ["x", "bound_t1", "bound_chsh", "nonlocal", "status"],
    "bell-diagonal": ["p1", "p2", "p3", "bound_t1", "bound_chsh", "nonlocal", "status"],
    "isotropic": ["d", "x", "bound_t2", "kernel_variant", "nonlocal", "status"],
    "sigma-mixture": ["alpha", "beta", "bound_t2", "kernel_variant", "nonlocal", "status"],
    "file": ["file", "d", "bound", "bound_chsh", "kernel_variant", "nonlocal", "status"],
}

# free parameter and default bracket for `threshold`
THRESHOLD_PARAM = {
    "werner": ("x", (0.6, 0.8)),
    "isotropic": ("x", (0.7, 0.85)),
    "sigma-mixture": ("beta", (0.0, 1.0)),
    "bell-diagonal": ("p", (0.0, 1.0)),
}


def family_state(family: str, **p) -> DensityMatrix:
    if family == "werner":
        return werner(p["x"])
    if family == "bell-diagonal":
        return bell_diagonal(p["p1"], p["p2"], p["p3"])
    if family == "isotropic":
        return isotropic(p["d"], p["x"])
    if family == "sigma-mixture":
        return sigma_mixture(p["alpha"], p["beta"])
    raise ValidationError(f"unknown family {family!r}")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


# --- argument handling -----------------------------------------------------------------


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("numerics")
    g.add_argument("--quad-phi", type=int, help="polar Gauss-Legendre nodes (default 24)")
    g.add_argument("--quad-theta", type=int, help="azimuthal nodes (default 48)")
    g.add_argument("--coarse-steps", type=int, help="region grid steps per angle (default 12)")
    g.add_argument("--refine-tol", type=float, help="refinement step tolerance in radians (default 1e-4)")
    g.add_argument("--refine-iters", type=int, help="refinement sweep cap (default 60)")
    g.add_argument("--kernel", choices=["as-written", "affine", "both"], default="both",
                   help="chord kernel for d >= 3 states")
    g.add_argument("--seed", type=int, default=0, help="seed for the finite-n oracle")
    g.add_argument("--fast", action="store_true", help="coarse preset: 8 steps, 16x32 quadrature")
    g.add_argument("--format", choices=["csv", "json"], default=None)
    g.add_argument("--out", type=Path, help="output path (default stdout)")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _state_args(p: argparse.ArgumentParser, with_values: bool = True) -> None:
    g = p.add_argument_group("state")
    g.add_argument("--state", type=Path, nargs="+" if not with_values else None,
                   help="density-matrix JSON file")
    g.add_argument("--family", choices=FAMILIES)
    g.add_argument("--d", type=int, default=3, help="local dimension (isotropic)")
    if with_values:
        g.add_argument("--x", type=float, help="mixing weight (werner, isotropic)")
        g.add_argument("--p1", type=float, default=0.0)
        g.add_argument("--p2", type=float, default=0.0)
        g.add_argument("--p3", type=float, default=0.0)
        g.add_argument("--alpha", type=float, default=0.0)
        g.add_argument("--beta", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="nlbound", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", parents=[common], help="lower bound on Q for one state")
    _state_args(p)
    p.add_argument("--finite-n", type=int, metavar="N",
                   help="also report the N-setting discrete value at the best region")

    p = sub.add_parser("chsh", parents=[common], help="CHSH value of a two-qubit state")
    _state_args(p)

    p = sub.add_parser("scan", parents=[common], help="parameter scan emitting plot-ready rows")
    _state_args(p, with_values=False)
    p.add_argument("--x-min", type=float, default=0.0)
    p.add_argument("--x-max", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=101, help="points along x (werner, isotropic)")
    p.add_argument("--p-min", type=float, default=-1.0)
    p.add_argument("--p-max", type=float, default=1.0)
    p.add_argument("--p-steps", type=int, default=11, help="points per p axis (bell-diagonal)")
    for k in (1, 2, 3):
        p.add_argument(f"--fix-p{k}", type=float, help=f"hold p{k} fixed (cross-section)")
    p.add_argument("--alpha-min", type=float, default=-1.0)
    p.add_argument("--alpha-max", type=float, default=1.0)
    p.add_argument("--alpha-steps", type=int, default=21)
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float, default=1.0)
    p.add_argument("--beta-steps", type=int, default=21)

    p = sub.add_parser("threshold", parents=[common],
                       help="bisect the free parameter where the bound crosses 1")
    _state_args(p)
    p.add_argument("--bracket", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--tol", type=float, default=5e-4)
    p.add_argument("--free", choices=["p1", "p2", "p3", "diag"], default="diag",
                   help="bell-diagonal: which coordinate varies (diag sets p1=p2=p3)")
    return parser


def search_config(args) -> SearchConfig:
    base = SearchConfig.fast() if args.fast else SearchConfig()
    quad = QuadratureConfig(
        args.quad_phi if args.quad_phi is not None else base.quad.n_phi,
        args.quad_theta if args.quad_theta is not None else base.quad.n_theta,
    )
    return SearchConfig(
        coarse_steps=args.coarse_steps if args.coarse_steps is not None else base.coarse_steps,
        refine_iters=args.refine_iters if args.refine_iters is not None else base.refine_iters,
        refine_tol=args.refine_tol if args.refine_tol is not None else base.refine_tol,
        quad=quad,
    )


def _single_state(args) -> tuple[DensityMatrix, dict]:
    if args.state is not None and args.family is not None:
        raise ValidationError("give either --state or --family, not both")
    if args.state is not None:
        return load_state(args.state), {"state": str(args.state)}
    if args.family is None:
        raise ValidationError("one of --state or --family is required")
    params = {"werner": ["x"], "bell-diagonal": ["p1", "p2", "p3"], "isotropic": ["d", "x"],
              "sigma-mixture": ["alpha", "beta"]}[args.family]
    values = {k: getattr(args, k) for k in params}
    if any(v is None for v in values.values()):
        raise ValidationError(f"--family {args.family} requires " + ", ".join(f"--{k}" for k in params))
    return family_state(args.family, **values), {"family": args.family, **values}


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.write_text(text)
    except OSError as exc:
        raise ValidationError(f"{out}: cannot write output ({exc.strerror})") from None


# --- subcommands -----------------------------------------------------------------------


def cmd_bound(args) -> int:
    rho, source = _single_state(args)
    cfg = search_config(args)
    report = detect_nonlocality(rho, cfg, kernel=args.kernel)
    out = {"input": source, "d": rho.d, **report.to_dict()}
    if args.finite_n:
        corr = pauli_correlation(rho) if rho.d == 2 else gamma_correlation(rho)
        variant = report.kernel_variant or "as-written"
        out["finite_n"] = {
            "n": args.finite_n, "seed": args.seed,
            "value": finite_n_value(corr, args.finite_n, report.best_region, args.seed, variant),
        }
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def cmd_chsh(args) -> int:
    rho, source = _single_state(args)
    if rho.d != 2:
        raise ValidationError(f"chsh needs a two-qubit state, got d={rho.d}")
    corr = pauli_correlation(rho)
    value = chsh_bound(corr)
    tau = np.linalg.svd(4 * corr.t, compute_uv=False)
    out = {"input": source, "chsh": value, "singular_values": tau.tolist(), "nonlocal": value > 1}
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


def _scan_points(args) -> tuple[str, list[dict]]:
    if args.state is not None:
        return "file", [{"file": str(p)} for p in args.state]
    fam = args.family
    if fam is None:
        raise ValidationError("scan needs --family or --state")
    if fam in ("werner", "isotropic"):
        if args.steps < 1 or args.x_min > args.x_max:
            raise ValidationError("x range must be nonempty with --steps >= 1")
        xs = np.linspace(args.x_min, args.x_max, args.steps)
        pts = [{"x": float(x)} for x in xs]
        if fam == "isotropic":
            pts = [{"d": args.d, **p} for p in pts]
        return fam, pts
    if fam == "bell-diagonal":
        if args.p_steps < 1 or args.p_min > args.p_max:
            raise ValidationError("p range must be nonempty with --p-steps >= 1")
        axis = [float(v) for v in np.linspace(args.p_min, args.p_max, args.p_steps)]
        axes = [[fix] if fix is not None else axis
                for fix in (args.fix_p1, args.fix_p2, args.fix_p3)]
        return fam, [{"p1": a, "p2": b, "p3": c} for a, b, c in itertools.product(*axes)]
    if fam == "sigma-mixture":
        if (args.alpha_steps < 1 or args.beta_steps < 1
                or args.alpha_min > args.alpha_max or args.beta_min > args.beta_max):
            raise ValidationError("alpha/beta ranges must be nonempty with steps >= 1")
        al = np.linspace(args.alpha_min, args.alpha_max, args.alpha_steps)
        be = np.linspace(args.beta_min, args.beta_max, args.beta_steps)
        return fam, [{"alpha": float(a), "beta": float(b)} for a in al for b in be]
    raise ValidationError(f"unknown family {fam!r}")


def _scan_row(family: str, point: dict, cfg: SearchConfig, kernel: str) -> dict:
    row = dict(point)
    try:
        rho = load_state(point["file"]) if family == "file" else family_state(family, **point)
    except ValidationError as exc:
        log.debug("skipping %s: %s", point, exc)
        row["status"] = f"skipped: {exc}"
        return row
    report = detect_nonlocality(rho, cfg, kernel=kernel, workers=1)
    key = {"werner": "bound_t1", "bell-diagonal": "bound_t1", "file": "bound"}.get(family, "bound_t2")
    row[key] = report.bound
    if report.chsh is not None:
        row["bound_chsh"] = report.chsh
    if report.kernel_variant is not None:
        row["kernel_variant"] = report.kernel_variant
    if family == "file":
        row["d"] = rho.d
    row["nonlocal"] = report.is_nonlocal
    row["status"] = "ok"
    return row


def run_scan(family: str, points: list[dict], cfg: SearchConfig, kernel: str = "both") -> list[dict]:
    workers = min(worker_count(), max(1, len(points)))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            # map yields in submission order, so rows stay in grid order
            return list(pool.map(lambda pt: _scan_row(family, pt, cfg, kernel), points))
    return [_scan_row(family, pt, cfg, kernel) for pt in points]


def format_rows(family: str, rows: list[dict], fmt: str) -> str:
    cols = SCAN_COLUMNS[family]
    if fmt == "json":
        return json.dumps([{c: row.get(c) for c in cols} for row in rows], indent=1) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in cols])
    return buf.getvalue()


def cmd_scan(args) -> int:
    family, points = _scan_points(args)
    cfg = search_config(args)
    if args.out is not None and not args.out.parent.exists():
        raise ValidationError(f"{args.out}: parent directory does not exist")
    rows = run_scan(family, points, cfg, args.kernel)
    _emit(format_rows(family, rows, args.format or "csv"), args.out)
    return 0


def bisect_threshold(f, lo: float, hi: float, tol: float) -> tuple[float, int]:
    """Locate the crossing of ``f(x) - 1`` on ``[lo, hi]`` by bisection."""
    flo, fhi = f(lo) - 1, f(hi) - 1
    evals = 2
    if flo == 0:
        return lo, evals
    if fhi == 0:
        return hi, evals
    if (flo > 0) == (fhi > 0):
        raise DomainError(
            f"no sign change of bound - 1 on [{lo}, {hi}]: values {flo + 1:.6g}, {fhi + 1:.6g}"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid) - 1
        evals += 1
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi), evals


def cmd_threshold(args) -> int:
    fam = args.family
    if fam is None:
        raise ValidationError("threshold needs --family")
    name, default = THRESHOLD_PARAM[fam]
    lo, hi = args.bracket if args.bracket else default
    if not lo < hi:
        raise ValidationError(f"bracket must satisfy LO < HI, got [{lo}, {hi}]")
    if not args.tol > 0:
        raise ValidationError(f"--tol must be > 0, got {args.tol}")
    cfg = search_config(args)
    variants_seen = {}

    def state_at(v: float) -> DensityMatrix:
        if fam == "werner":
            return werner(v)
        if fam == "isotropic":
            return isotropic(args.d, v)
        if fam == "sigma-mixture":
            return sigma_mixture(args.alpha, v)
        p = {"p1": args.p1, "p2": args.p2, "p3": args.p3}
        if args.free == "diag":
            p = {k: v for k in p}
        else:
            p[args.free] = v
        return bell_diagonal(**p)

    def bound_at(v: float) -> float:
        report = detect_nonlocality(state_at(v), cfg, kernel=args.kernel)
        variants_seen[v] = report.kernel_variant
        log.info("%s=%.6f bound=%.9f", name, v, report.bound)
        return report.bound

    threshold, evals = bisect_threshold(bound_at, lo, hi, args.tol)
    out = {"family": fam, "parameter": name if fam != "bell-diagonal" else args.free,
           "threshold": threshold, "bracket": [lo, hi], "tol": args.tol, "evaluations": evals}
    if fam == "isotropic":
        out["d"] = args.d
    if fam in ("isotropic", "sigma-mixture"):
        out["kernel"] = args.kernel
        # variant that carried the bound at the nearest evaluated point above the crossing
        above = min((v for v in variants_seen if v >= threshold), default=None)
        out["kernel_variant"] = variants_seen.get(above)
    if fam == "sigma-mixture":
        out["alpha"] = args.alpha
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return 0


COMMANDS = {"bound": cmd_bound, "scan": cmd_scan, "threshold": cmd_threshold, "chsh": cmd_chsh}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
