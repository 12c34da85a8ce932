"""Command-line front end: ``irrsobol <command> [options]``.

Commands: polys, matrix, points, assess, propa, search, integrate.
Exit codes: 0 success, 2 invalid input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

from . import io as fmt
from .construct import SequenceSpec, build_sequence, default_rows
from .experiments import F1Integrand, QueueIntegrand, QueueModel, RqmcConfig, mc_estimate, rqmc_estimate
from .galois import enumerate_irreducibles, field_for_base
from .points import PointGenerator
from .quality import ProjectionFamily, property_report, t_profile
from .search import SearchConfig, search_one_row, search_two_step

log = logging.getLogger("irrsobol")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3
THREADS_ENV = "IRRSOBOL_THREADS"

ORDERINGS = {"dec": "decimal", "alt": "alternative"}


class UsageError(ValueError):
    pass


def _int_range(text: str) -> tuple[int, int, int]:
    """``a:b`` or ``a:b:step`` (inclusive) or a single integer."""
    try:
        parts = [int(x) for x in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if len(parts) == 1:
        parts = parts * 2
    if len(parts) == 2:
        parts.append(1)
    if len(parts) != 3 or parts[2] < 1 or parts[0] > parts[1]:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return parts[0], parts[1], parts[2]


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}") from None


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("sequence and output")
    g.add_argument("--base", type=int, default=2, help="prime-power base b (default 2)")
    g.add_argument("--dim", type=int, default=None, help="number of dimensions s")
    g.add_argument("--ordering", choices=sorted(ORDERINGS), default="dec")
    g.add_argument("--construction", choices=["is", "isn", "sobol", "nied"], default="isn")
    g.add_argument("--directions", type=Path, help="direction-table JSON (construction 'is')")
    g.add_argument("--joe-kuo", type=Path, help="Joe-Kuo direction-number file (construction 'sobol')")
    g.add_argument("--rows", type=int, help="stored output digits (default: double precision)")
    g.add_argument("--cols", type=int, help="stored index digits (default: rows)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", choices=["json", "csv", "text"], default=None,
                   help="output format (default: text on a terminal, json otherwise)")
    g.add_argument("--output", "-o", type=Path, help="write to this file instead of stdout")
    g.add_argument("--threads", type=int, default=None, help=f"worker threads (env {THREADS_ENV})")
    g.add_argument("--deterministic", action="store_true", help="single-threaded ordered reductions")
    g.add_argument("--verbose", "-v", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="irrsobol", description="Irreducible Sobol' sequences and their quality.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("polys", parents=[common], help="list monic irreducible polynomials")
    p.add_argument("--count", type=int, default=None, help="how many (default --dim or 10)")

    p = sub.add_parser("matrix", parents=[common], help="export generating matrices")
    p.add_argument("--index", type=int, default=None, help="only this dimension (1-based)")

    p = sub.add_parser("points", parents=[common], help="generate points")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--m", type=int, default=None, help="emit the first b^m points")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--shift-seed", type=int, default=None, help="apply a random digital shift")
    p.add_argument("--replication", type=int, default=0)
    p.add_argument("--binary", action="store_true", help="raw little-endian float64 output")

    p = sub.add_parser("assess", parents=[common], help="t-value profile over a projection family")
    p.add_argument("--D", type=int, default=2)
    p.add_argument("--d", type=int, default=None, help="max dimension (default --dim)")
    p.add_argument("--w2", type=int, default=None, help="window for pairs (default d)")
    p.add_argument("--w", type=_int_list, default=None, help="windows w_2,...,w_D")
    p.add_argument("--m", type=_int_range, default=(4, 20, 2), help="m range a:b[:step] (default 4:20:2)")
    p.add_argument("--tau-convention", choices=["zero", "skip"], default="zero")
    p.add_argument("--tau-normalization", choices=["m1", "count"], default="m1")

    p = sub.add_parser("propa", parents=[common], help="Property A / A' rank report")
    p.add_argument("--d", type=_int_list, default=None, help="max dimension(s), comma separated")
    p.add_argument("--k", type=_int_list, default=[10], help="window size(s)")

    p = sub.add_parser("search", parents=[common], help="search direction numbers")
    p.add_argument("--method", choices=["two-step", "one-row"], default="two-step")
    p.add_argument("--d", type=int, default=None, help="dimensions to search (default --dim or 100)")
    p.add_argument("--candidates", type=int, default=10_000)
    p.add_argument("--omega", type=float, default=0.5)
    p.add_argument("--k1", type=int, default=8)
    p.add_argument("--k2", type=int, default=9)
    p.add_argument("--q", type=float, default=6.0)
    p.add_argument("--m-range", type=_int_range, default=(10, 17, 1))
    p.add_argument("--l2", type=int, default=20)
    p.add_argument("--weight", type=float, default=0.9999)

    p = sub.add_parser("integrate", parents=[common], help="RQMC experiments")
    p.add_argument("--problem", choices=["f1", "queue"], default="f1")
    p.add_argument("--variant", choices=["i", "ii"], default="ii")
    p.add_argument("--T", type=float, default=1000.0, help="queue horizon in minutes")
    p.add_argument("--quantity", choices=["wait", "L"], default="wait")
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--m", type=_int_range, default=(8, 16, 1))
    p.add_argument("--mc", action="store_true", help="also run the Monte Carlo baseline")
    return parser


# --- helpers -------------------------------------------------------------------------------------


def _threads(args) -> int:
    if args.deterministic:
        return 1
    if args.threads is not None:
        n = args.threads
    else:
        try:
            n = int(os.environ.get(THREADS_ENV, "1"))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer") from None
    if n < 1:
        raise UsageError("--threads must be >= 1")
    return n


def _spec(args, dim: int) -> SequenceSpec:
    directions = None
    if args.construction == "is":
        if args.directions is None:
            raise UsageError("construction 'is' needs --directions")
        directions = fmt.direction_table_from_json(args.directions.read_text())
        if directions and directions[0].poly.field.order != args.base:
            raise UsageError(f"direction table is for base {directions[0].poly.field.order}, not {args.base}")
    elif args.construction == "sobol":
        if args.joe_kuo is None:
            raise UsageError("construction 'sobol' needs --joe-kuo")
        if args.base != 2:
            raise UsageError("construction 'sobol' is base 2 only")
        directions = fmt.parse_joe_kuo(args.joe_kuo.read_text())
    elif args.directions is not None or args.joe_kuo is not None:
        raise UsageError(f"construction {args.construction!r} takes no direction file")
    return SequenceSpec(args.base, dim, args.construction, ORDERINGS[args.ordering], directions)


def _matrices(args, dim: int, min_cols: int = 0):
    F = field_for_base(args.base)
    rows = args.rows if args.rows is not None else default_rows(F.order)
    cols = args.cols if args.cols is not None else max(rows, min_cols)
    return build_sequence(_spec(args, dim), rows, cols)


def _format_rows(rows: list[dict], out: str, extra: dict | None = None) -> str:
    if out == "json":
        payload = {"rows": rows, **(extra or {})}
        return json.dumps(payload, indent=1) + "\n"
    if out == "csv":
        return fmt.rows_to_csv(rows)
    text = fmt.rows_to_text(rows)
    if extra:
        text += "".join(f"{k}: {v}\n" for k, v in extra.items() if not isinstance(v, (dict, list)))
    return text


# --- commands -------------------------------------------------------------------------------------


def cmd_polys(args, out: str) -> str:
    count = args.count or args.dim or 10
    F = field_for_base(args.base)
    polys = enumerate_irreducibles(F, count, ORDERINGS[args.ordering])
    rows = [{"dim": j, "degree": p.degree, "code": p.code, "poly": repr(p)} for j, p in enumerate(polys, 1)]
    return _format_rows(rows, out)


def cmd_matrix(args, out: str) -> str:
    dim = args.dim or args.index or 1
    if args.index is not None and not 1 <= args.index <= dim:
        raise UsageError("--index outside 1..--dim")
    mats = _matrices(args, dim)
    if args.index is not None:
        mats = [mats[args.index - 1]]
    if out == "json":
        return fmt.matrices_to_json(mats) + "\n"
    if out == "csv":
        return "\n".join(fmt.matrix_to_csv(C) for C in mats)
    return "\n".join(
        f"# dim {j} poly {C.poly!r}\n" + "\n".join(" ".join(str(x) for x in row) for row in C.digits)
        for j, C in zip(range(args.index or 1, dim + 1), mats)
    ) + "\n"


def cmd_points(args, out: str):
    dim = args.dim or 1
    mats = _matrices(args, dim)
    gen = PointGenerator(mats)
    if args.shift_seed is not None:
        gen = gen.apply_shift(args.shift_seed, args.replication)
    if args.m is not None:
        if args.count is not None:
            raise UsageError("give --count or --m, not both")
        count = gen.base**args.m
    else:
        count = args.count if args.count is not None else 16
    if count < 0 or args.start < 0:
        raise UsageError("--count and --start must be non-negative")
    pts = gen.points(args.start, count)
    if args.binary:
        return pts.astype("<f8").tobytes()
    if out == "json":
        return json.dumps({"start": args.start, "points": pts.tolist()}) + "\n"
    buf = io.StringIO()
    fmt.write_points(pts, buf, "csv")
    return buf.getvalue()


def cmd_assess(args, out: str) -> str:
    d = args.d or args.dim
    if d is None:
        raise UsageError("assess needs --d or --dim")
    if args.w is not None:
        windows = tuple(args.w)
    else:
        windows = (args.w2 or d,) + tuple(d for _ in range(args.D - 2))
    family = ProjectionFamily(args.D, d, windows)
    m0, m1, step = args.m
    # aggregate measures run over every m in range; the table rows show the requested step
    mats = _matrices(args, d, min_cols=m1)
    rep = t_profile(mats, family, m0, m1, 1, args.tau_convention, args.tau_normalization, threads=_threads(args))
    shown = list(range(m0, m1 + 1, step))
    rows = [{"m": m, "tbar": round(rep.tbar[m], 4), "T": rep.tmax[m]} for m in shown]
    extra = {
        "sequence": f"{args.construction}-{args.ordering}",
        "P": rep.n_projections,
        "T_tilde": rep.T_tilde,
        "tau_tilde": round(rep.tau_tilde, 6),
        "tau_tilde_mean": round(rep.tau_tilde_mean, 6),
        "tau_convention": rep.tau_convention,
        "tau_normalization": rep.tau_normalization,
        "zero_alpha_projections": rep.n_zero_alpha,
    }
    if out == "json":
        extra["frequency"] = {str(m): rep.frequency[m] for m in shown}
    return _format_rows(rows, out, extra)


def cmd_propa(args, out: str) -> str:
    ds = args.d or ([args.dim] if args.dim else None)
    if not ds:
        raise UsageError("propa needs --d or --dim")
    mats = _matrices(args, max(ds), min_cols=2 * max(args.k))
    rows = []
    for d in ds:
        for k in args.k:
            r = property_report(mats, d, k)
            rows.append({"d": d, "k": k, "Pi": round(r.Pi, 4), "m": r.m,
                         "Pi_prime": round(r.Pi_prime, 4), "m_prime": r.m_prime})
    return _format_rows(rows, out, {"sequence": f"{args.construction}-{args.ordering}"})


def cmd_search(args, out: str) -> str:
    if args.base != 2:
        raise UsageError("searches are implemented for base 2")
    m_min, m_max, _ = args.m_range
    cfg = SearchConfig(
        d=args.d or args.dim or 100, ordering=ORDERINGS[args.ordering], n_candidates=args.candidates,
        omega=args.omega, k1=args.k1, k2=args.k2, q=args.q, m_min=m_min, m_max=m_max, l2=args.l2,
        w=args.weight, seed=args.seed, threads=_threads(args),
    )
    run = search_two_step if args.method == "two-step" else search_one_row
    entries = run(cfg, args.rows, args.cols)
    if out == "json":
        return fmt.direction_table_to_json(entries) + "\n"
    rows = [{"dim": j, "poly": e.poly.code, "degree": e.poly.degree, "d": " ".join(map(str, e.direction.numbers))}
            for j, e in enumerate(entries, 1)]
    return _format_rows(rows, out)


def cmd_integrate(args, out: str) -> str:
    m0, m1, _ = args.m
    cfg = RqmcConfig(replications=args.reps, m_min=m0, m_max=m1, seed=args.seed, threads=_threads(args))
    if args.problem == "f1":
        dim = args.dim or 20
        make = lambda: F1Integrand(args.variant)  # noqa: E731
    else:
        model = QueueModel(T=args.T)
        dim = args.dim or model.default_dim()
        make = lambda: QueueIntegrand(model, args.seed, args.quantity)  # noqa: E731
    mats = _matrices(args, dim, min_cols=m1)
    res = rqmc_estimate(make(), PointGenerator(mats), cfg)
    rows = [r.to_dict() for r in res.rows]
    extra = {"sequence": f"{args.construction}-{args.ordering}", "dim": dim, "problem": args.problem}
    if args.mc:
        mc = mc_estimate(make(), dim, cfg, base=args.base)
        rows += [r.to_dict() for r in mc.rows]
    return _format_rows(rows, out, extra)


COMMANDS = {
    "polys": cmd_polys,
    "matrix": cmd_matrix,
    "points": cmd_points,
    "assess": cmd_assess,
    "propa": cmd_propa,
    "search": cmd_search,
    "integrate": cmd_integrate,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    out = args.out or ("text" if sys.stdout.isatty() and args.output is None else "json")
    try:
        result = COMMANDS[args.command](args, out)
    except (ValueError, IndexError, OverflowError) as exc:
        print(f"irrsobol: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"irrsobol: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        if args.output is not None:
            if isinstance(result, bytes):
                args.output.write_bytes(result)
            else:
                args.output.write_text(result, newline="\n")
        elif isinstance(result, bytes):
            sys.stdout.buffer.write(result)
        else:
            sys.stdout.write(result)
    except OSError as exc:
        print(f"irrsobol: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
