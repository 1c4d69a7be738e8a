"""Command-line interface: ``qec5 {run,sweep,threshold,graph,audit-flag-table,selftest}``.

Results go to stdout or, with ``--out``, to a file written atomically
(temporary file + rename).  Invalid input exits with status 2, runtime
failures with status 1.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import experiments as ex
from .field import DimensionError, check_dim
from .noise import CIRCUIT, SDEP

SYNTHETIC_WEIGHT = 1 / 0.05**2
MODELS = {"circuit-level": CIRCUIT, "circuit": CIRCUIT, "sdep": SDEP, "standard": SDEP}


class UsageError(Exception):
    """Invalid flags or input data (exit status 2)."""


# -- helpers ---------------------------------------------------------------------

def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".qec5-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _dim(value: str) -> int:
    try:
        q = int(value)
    except ValueError:
        raise UsageError(f"dimension must be prime, got {value!r}") from None
    try:
        return check_dim(q)
    except DimensionError as err:
        raise UsageError(str(err)) from None


def _prob(value: str) -> float:
    try:
        p = float(value)
    except ValueError:
        raise UsageError(f"invalid probability {value!r}") from None
    if not 0 <= p <= 1:
        raise UsageError(f"probability must lie in [0, 1], got {value}")
    return p


def _seed(value) -> int:
    if value is None:
        value = os.environ.get("QEC5_SEED", "0")
    try:
        seed = int(value)
    except ValueError:
        raise UsageError(f"seed must be an integer, got {value!r}") from None
    if seed < 0:
        raise UsageError("seed must be non-negative")
    return seed


def _config(args, p: float) -> ex.RunConfig:
    if args.cycles < 1:
        raise UsageError("--cycles must be at least 1")
    model = MODELS[args.model]
    if model == CIRCUIT and args.cycles < 2:
        raise UsageError("circuit-level noise needs --cycles >= 2 (the last cycle is error-free)")
    if args.A is not None and p == 0:
        raise UsageError("--A needs p > 0")
    if args.shots < 1:
        raise UsageError("--shots must be at least 1")
    if not 0 < args.confidence < 1:
        raise UsageError("--confidence must lie in (0, 1)")
    return ex.RunConfig(
        q=_dim(args.dim), p=p, model=model, decoder=args.decoder, flagged=args.flag == "on",
        cycles=args.cycles, shots=args.shots, seed=_seed(args.seed), A=args.A,
        confidence=args.confidence,
    )


def _add_run_flags(sp, multi: bool) -> None:
    sp.add_argument("--dim", required=True, help="prime qudit dimension q")
    if multi:
        sp.add_argument("--p", required=True, help="comma-separated physical error rates")
    else:
        sp.add_argument("--p", required=True, help="physical error rate")
    sp.add_argument("--decoder", required=True, choices=ex.DECODERS)
    sp.add_argument("--cycles", type=int, default=3)
    sp.add_argument("--model", choices=sorted(MODELS), default="circuit-level")
    sp.add_argument("--flag", choices=("on", "off"), default="on")
    sp.add_argument("--shots", type=int, default=10_000)
    sp.add_argument("--A", type=float, default=None, help="use ceil(A / p) shots per point")
    sp.add_argument("--seed", default=None, help="RNG seed (default: $QEC5_SEED or 0)")
    sp.add_argument("--threads", type=int, default=None, help="worker threads")
    sp.add_argument("--confidence", type=float, default=0.99)
    sp.add_argument("--out", default=None, help="write the CSV here instead of stdout")


# -- commands --------------------------------------------------------------------

def cmd_run(args) -> int:
    cfg = _config(args, _prob(args.p))
    result = ex.run_experiment(cfg, threads=args.threads)
    emit(ex.results_csv([result]), args.out)
    return 0


def cmd_sweep(args) -> int:
    ps = [_prob(v) for v in args.p.split(",") if v.strip()]
    if not ps:
        raise UsageError("--p needs at least one value")
    results = [ex.run_experiment(_config(args, p), threads=args.threads) for p in ps]
    emit(ex.results_csv(results), args.out)
    return 0


def _points_from_args(args) -> list[tuple[float, float, float]]:
    sources = [args.results is not None, args.points is not None, args.a is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --results, --points or --a/--b")
    if args.results is not None:
        try:
            with open(args.results, encoding="utf-8") as fh:
                rows = ex.read_results_csv(fh.read())
        except OSError as err:
            raise UsageError(f"cannot read {args.results}: {err}") from None
        except ValueError as err:
            raise UsageError(str(err)) from None
        if args.dim is not None:
            rows = [r for r in rows if int(r["q"]) == _dim(args.dim)]
        return ex.fit_points(rows)
    if args.points is not None:
        pts = []
        for item in args.points.split(","):
            parts = item.split(":")
            if len(parts) not in (2, 3):
                raise UsageError(f"bad point {item!r}; use p:p_l[:weight]")
            try:
                vals = [float(v) for v in parts] + ([1.0] if len(parts) == 2 else [])
            except ValueError:
                raise UsageError(f"bad point {item!r}") from None
            pts.append(tuple(vals))
        return pts
    if args.b is None:
        raise UsageError("--a needs --b")
    if args.a <= 0:
        raise UsageError("--a must be positive")
    # exact synthetic points on the published curve around its fixed point,
    # weighted as if each carried a 5% relative uncertainty
    centre = args.a ** (-1 / (args.b - 1)) if args.b > 1 else 1e-3
    ps = centre * np.array([0.3, 1.0, 3.0])
    return [(float(p), float(args.a * p**args.b), SYNTHETIC_WEIGHT) for p in ps]


def cmd_threshold(args) -> int:
    pts = _points_from_args(args)
    if len(pts) < 3:
        raise UsageError(f"need at least 3 points with failures, got {len(pts)}")
    try:
        fit = ex.fit_power_law(pts)
    except ValueError as err:
        raise UsageError(str(err)) from None
    if fit.b <= 1:
        raise UsageError(f"no finite threshold (fitted b = {fit.b:.4g} <= 1)")
    report = ex.fit_report(fit, levels=args.levels)
    if args.emit_curves:
        lines = ["level,p,p_l"]
        for curve in report["level_curves"]:
            lines += [f"{curve['level']},{p:.10g},{v:.10g}" for p, v in zip(curve["p"], curve["p_l"])]
        write_atomic(args.emit_curves, "\n".join(lines) + "\n")
    emit(ex.dumps_report(report) + "\n", args.out)
    print(f"threshold {report['threshold']:.4g} +- {report['threshold_sigma']:.2g}", file=sys.stderr)
    return 0


def cmd_graph(args) -> int:
    from .code5 import build_check_matrix
    from .graph import build_graph

    q = _dim(args.dim)
    if args.cycles < 1:
        raise UsageError("--cycles must be at least 1")
    graph = build_graph(build_check_matrix(q), args.cycles)
    emit(graph.to_dot(), args.out)
    print(
        f"nodes {len(graph.nodes)} edges {len(graph.edges)} hyperedges {len(graph.hyperedges)} "
        f"components {len(graph.components())}",
        file=sys.stderr,
    )
    return 0


def cmd_audit(args) -> int:
    from .decoders.flags import build_flag_table

    q = _dim(args.dim)
    table = build_flag_table(q)
    audit = ex.single_fault_audit(q, args.decoder)
    if args.out:
        write_atomic(args.out, table.to_json() + "\n")
    print(f"q={q} entries={len(table.entries)} ambiguous={len(table.ambiguous)} "
          f"faults={audit.faults} failures={len(audit.failures)}")
    for f in audit.failures[:20]:
        print(f"  failed: location {f[0]} {f[1]} on {f[2]} x={f[3]} z={f[4]}")
    return 0 if audit.ok else 1


def cmd_selftest(args) -> int:
    from .code5 import build_check_matrix
    from .graph import build_graph

    checks = []
    checks.append(("p_m1(0.1)", abs(ex.p_m1(0.1) - 0.08146) < 1e-5))
    checks.append(("fixed point a=766 b=1.873", abs(ex.fixed_point(766, 1.873) / 4.95e-4 - 1) < 0.1))
    for q, comps in ((2, 1), (3, 1), (5, 2), (7, 3)):
        g = build_graph(build_check_matrix(q), 1)
        checks.append((f"graph q={q}", len(g.nodes) == 4 * (q - 1) and len(g.components()) == comps))
    audit = ex.single_fault_audit(2, "bm")
    checks.append(("flag audit q=2", audit.ok))
    res = ex.run_experiment(ex.RunConfig(2, 0.0, SDEP, "bm", False, 3, 10))
    checks.append(("p=0 run", res.failures == 0))
    for name, ok in checks:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
    return 0 if all(ok for _, ok in checks) else 1


# -- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qec5", description="5-qudit code simulation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("run", help="one Monte Carlo point (CSV row)")
    _add_run_flags(sp, multi=False)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="several Monte Carlo points (CSV rows)")
    _add_run_flags(sp, multi=True)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("threshold", help="power-law fit, threshold and concatenation curves")
    sp.add_argument("--results", default=None, help="CSV written by run/sweep")
    sp.add_argument("--dim", default=None, help="restrict --results rows to this dimension")
    sp.add_argument("--points", default=None, help="p:p_l[:weight],... triples")
    sp.add_argument("--a", type=float, default=None, help="published fit parameter a")
    sp.add_argument("--b", type=float, default=None, help="published fit parameter b")
    sp.add_argument("--levels", type=int, default=3)
    sp.add_argument("--emit-curves", default=None, help="write sampled level curves (CSV)")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("graph", help="matching graph as DOT")
    sp.add_argument("--dim", required=True)
    sp.add_argument("--cycles", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_graph)

    sp = sub.add_parser("audit-flag-table", help="build the flag table and audit single faults")
    sp.add_argument("--dim", required=True)
    sp.add_argument("--decoder", choices=ex.DECODERS, default="bm")
    sp.add_argument("--out", default=None, help="write the table (JSON)")
    sp.set_defaults(func=cmd_audit)

    sp = sub.add_parser("selftest", help="quick consistency checks")
    sp.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "levels", 1) < 1:
        parser.exit(2, "qec5: error: --levels must be at least 1\n")
    try:
        return args.func(args)
    except UsageError as err:
        print(f"qec5: error: {err}", file=sys.stderr)
        return 2
    except ex.NoThresholdError as err:
        print(f"qec5: error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        print(f"qec5: runtime error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
