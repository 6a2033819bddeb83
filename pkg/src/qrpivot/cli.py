"""Command-line interface: generate, factor, check, sweep, compare, report.

Every command prints a machine-readable JSON summary (including the fully
resolved configuration) to stdout and optionally writes it to --json;
progress and human-readable verdicts go to stderr.  The exit code of
`check` is the sole pass/fail channel for structure verification.  CSV
artifacts depend only on the inputs and flags, never on time or host, so
identical invocations produce byte-identical files.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .core import eps, working_dtype
from .diagnostics import check_structure, compare_pivots, structure_csv
from .downdating import Strategy, StrategyConfig
from .genmat import KahanParams, kahan, random_gaussian, symmetrized_kahan
from .gridsim import GridTopology
from .mmio import read_matrix, write_matrix
from .qrcp import extract_r, factorize


@dataclass(frozen=True)
class RunConfig:
    """Resolved parameters of one CLI run, as echoed in every summary."""

    command: str
    params: dict

    def as_dict(self) -> dict:
        return {"command": self.command, **self.params}


def _emit(cfg: RunConfig, payload: dict, json_path: Optional[str]) -> dict:
    summary = {"config": cfg.as_dict(), **payload}
    text = json.dumps(summary, indent=2, sort_keys=True)
    if json_path:
        Path(json_path).write_text(text + "\n")
    print(text)
    return summary


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def _parse_injections(parser, values):
    excess = False
    wrong = None
    for v in values or []:
        if v == "none":
            excess, wrong = False, None
        elif v == "excess-control":
            excess = True
        elif v == "wrong-column":
            wrong = -1
        elif v.startswith("wrong-column:"):
            try:
                wrong = int(v.split(":", 1)[1])
            except ValueError:
                parser.error(f"bad wrong-column offset in {v!r}")
        else:
            parser.error(f"unknown injection {v!r} "
                         "(use excess-control, wrong-column[:offset], or "
                         "none to clear)")
    return excess, wrong


def _parse_grid(parser, grid: Optional[str], mb: int, nb: int
                ) -> Optional[GridTopology]:
    if grid is None:
        return None
    try:
        return GridTopology.parse(grid, mb=mb, nb=nb)
    except ValueError as e:
        parser.error(str(e))


def _strategy_config(parser, strategy, tol, injections, grid, mb, nb,
                     precision) -> StrategyConfig:
    excess, wrong = _parse_injections(parser, injections)
    if excess and precision != "single":
        parser.error("--inject excess-control requires --precision single")
    topo = _parse_grid(parser, grid, mb, nb)
    try:
        return StrategyConfig(kind=Strategy(strategy), tol=tol,
                              excess_precision_control=excess,
                              wrong_column_offset=wrong, topology=topo)
    except ValueError as e:
        parser.error(str(e))


def _strategy_params(cfg: StrategyConfig, precision: str) -> dict:
    wd = working_dtype(precision, "real")
    injections = []
    if cfg.excess_precision_control:
        injections.append("excess-control")
    if cfg.wrong_column_offset is not None:
        injections.append(f"wrong-column:{cfg.wrong_column_offset}")
    return {
        "strategy": cfg.kind.value,
        "tol": cfg.resolve_tol(wd),
        "injections": injections,
        "grid": str(cfg.topology) if cfg.topology else None,
        "mb": cfg.topology.mb if cfg.topology else None,
        "nb": cfg.topology.nb if cfg.topology else None,
        "precision": precision,
    }


def _load_working(path: str, precision: str) -> np.ndarray:
    arr = read_matrix(path)
    field = "complex" if arr.dtype.kind == "c" else "real"
    return np.asfortranarray(arr.astype(working_dtype(precision, field)))


def cmd_gen(args, parser) -> int:
    if args.family in ("kahan", "symkahan"):
        if args.c is None:
            parser.error(f"--c is required for {args.family}")
        try:
            p = KahanParams(args.n, args.c, precision=args.precision)
        except ValueError as e:
            parser.error(str(e))
        a = kahan(p) if args.family == "kahan" else symmetrized_kahan(p)
        desc = {"family": args.family, "n": args.n, "c": args.c,
                "c_text": f"{args.c:.17g}"}
    else:
        m = args.m if args.m is not None else args.n
        a = random_gaussian(m, args.n, field=args.field, seed=args.seed,
                            precision=args.precision)
        desc = {"family": "random", "m": m, "n": args.n,
                "field": args.field, "seed": args.seed}
    write_matrix(a, args.output)
    cfg = RunConfig("gen", {**desc, "precision": args.precision,
                            "output": args.output})
    _emit(cfg, {"shape": list(a.shape)}, args.json)
    _say(f"wrote {a.shape[0]}x{a.shape[1]} matrix to {args.output}")
    return 0


def cmd_factor(args, parser) -> int:
    scfg = _strategy_config(parser, args.strategy, args.tol, args.inject,
                            args.grid, args.mb, args.nb, args.precision)
    a = _load_working(args.input, args.precision)
    res = factorize(a, scfg)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    write_matrix(extract_r(res), outdir / "r.mtx")
    with open(outdir / "perm.csv", "w", newline="") as fh:
        fh.write("k,column\n")
        for k, col in enumerate(res.perm):
            fh.write(f"{k},{col}\n")
    with open(outdir / "taus.csv", "w", newline="") as fh:
        fh.write("k,tau_re,tau_im\n")
        for k, tau in enumerate(res.taus):
            t = complex(tau)
            fh.write(f"{k},{t.real!r},{t.imag!r}\n")
    res.tracker.events.to_csv(outdir / "events.csv")

    cfg = RunConfig("factor", {
        "input": args.input, "outdir": str(outdir),
        **_strategy_params(scfg, args.precision),
    })
    payload = {
        "shape": list(a.shape),
        "events": len(res.tracker.events),
        "decisions": res.tracker.events.decision_counts(),
        "artifacts": ["r.mtx", "perm.csv", "taus.csv", "events.csv"],
    }
    summary = _emit(cfg, payload, args.json)
    (outdir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    _say(f"factored {a.shape[0]}x{a.shape[1]} "
         f"({args.strategy}, {args.precision}) into {outdir}")
    return 0


def _checked_report(args, parser):
    r = _load_working(args.input, args.precision)
    try:
        return check_structure(r, slack=args.slack, rank_tau=args.tau)
    except ValueError as e:
        parser.error(str(e))


def cmd_check(args, parser) -> int:
    rep = _checked_report(args, parser)
    if args.csv:
        structure_csv(rep, args.csv)
    cfg = RunConfig("check", {
        "input": args.input, "precision": args.precision,
        "slack": rep.slack,
        "tau": args.tau if args.tau is not None
               else float(np.sqrt(eps(working_dtype(args.precision, "real")))),
    })
    _emit(cfg, {"structure": rep.summary()}, args.json)
    _say("structure OK" if rep.ok else "structure FAILED")
    return 0 if rep.ok else 1


def _render_profile(report, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    idx = np.arange(report.red_line.shape[0])
    fig, ax = plt.subplots(figsize=(8.0, 5.0))
    red_ok = report.red_line > 0
    blue_ok = report.blue_line > 0
    ax.semilogy(idx[red_ok], report.red_line[red_ok], color="red",
                label="|R(i,i)|")
    ax.semilogy(idx[blue_ok], report.blue_line[blue_ok], color="blue",
                linestyle="--", label="max_j ||R(i:j, j)||")
    ax.set_xlabel("column index i")
    ax.set_ylabel("magnitude")
    ax.set_title("pivot structure profile "
                 + ("(ok)" if report.ok else "(VIOLATED)"))
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def cmd_report(args, parser) -> int:
    rep = _checked_report(args, parser)
    structure_csv(rep, args.csv)
    _render_profile(rep, args.png)
    cfg = RunConfig("report", {
        "input": args.input, "precision": args.precision,
        "slack": rep.slack, "csv": args.csv, "png": args.png,
    })
    _emit(cfg, {"structure": rep.summary()}, args.json)
    _say(f"wrote {args.csv} and {args.png}")
    return 0


def _c_grid(cmin: float, cmax: float, cstep: float):
    count = int(round((cmax - cmin) / cstep)) + 1
    return [float(np.round(cmin + i * cstep, 10)) for i in range(count)]


def cmd_sweep(args, parser) -> int:
    scfg_base = _strategy_config(parser, args.strategy, args.tol, args.inject,
                                 None, args.mb, args.nb, args.precision)
    grids = args.grid or [None]
    topos = [_parse_grid(parser, g, args.mb, args.nb) for g in grids]
    cs = _c_grid(args.c_min, args.c_max, args.c_step)

    rows = []
    failures = []
    for c in cs:
        try:
            p = KahanParams(args.n, c, precision=args.precision)
        except ValueError as e:
            parser.error(str(e))
        a = kahan(p) if args.family == "kahan" else symmetrized_kahan(p)
        for topo in topos:
            scfg = StrategyConfig(
                kind=scfg_base.kind, tol=scfg_base.tol,
                excess_precision_control=scfg_base.excess_precision_control,
                wrong_column_offset=scfg_base.wrong_column_offset,
                topology=topo)
            res = factorize(a, scfg)
            rep = check_structure(extract_r(res), slack=args.slack,
                                  rank_tau=args.tau)
            grid_name = str(topo) if topo else "none"
            rows.append((c, grid_name, rep))
            if not rep.ok:
                failures.append({"c": c, "c_text": f"{c:.17g}",
                                 "grid": grid_name})
            _say(f"c={c:.17g} grid={grid_name}: "
                 + ("ok" if rep.ok else "STRUCTURE FAILED"))

    with open(args.csv, "w", newline="") as fh:
        fh.write("family,n,c,precision,strategy,grid,ok,monotone_ok,"
                 "dominance_ok,worst_monotone_ratio,worst_dominance_ratio,"
                 "violation_count,numerical_rank\n")
        for c, grid_name, rep in rows:
            fh.write(f"{args.family},{args.n},{c:.17g},{args.precision},"
                     f"{args.strategy},{grid_name},{rep.ok},"
                     f"{rep.monotone_ok},{rep.dominance_ok},"
                     f"{rep.worst_monotone_ratio!r},"
                     f"{rep.worst_dominance_ratio!r},"
                     f"{len(rep.violations)},{rep.numerical_rank}\n")

    cfg = RunConfig("sweep", {
        "family": args.family, "n": args.n,
        "c_min": args.c_min, "c_max": args.c_max, "c_step": args.c_step,
        "grids": [str(t) if t else "none" for t in topos],
        "slack": args.slack, "tau": args.tau, "csv": args.csv,
        **_strategy_params(scfg_base, args.precision),
    })
    _emit(cfg, {"cases": len(rows), "failures": failures,
                "failure_count": len(failures)}, args.json)
    _say(f"{len(rows)} cases, {len(failures)} structure failures "
         f"-> {args.csv}")
    return 0


def cmd_compare(args, parser) -> int:
    cfg_a = _strategy_config(parser, args.strategy, args.tol, args.inject,
                             args.grid, args.mb, args.nb, args.precision)
    cfg_b = _strategy_config(
        parser,
        args.strategy2 if args.strategy2 is not None else args.strategy,
        args.tol2 if args.tol2 is not None else args.tol,
        args.inject2 if args.inject2 is not None else args.inject,
        args.grid2 if args.grid2 is not None else args.grid,
        args.mb, args.nb, args.precision)
    a = _load_working(args.input, args.precision)
    res_a = factorize(a, cfg_a)
    res_b = factorize(a, cfg_b)
    div = compare_pivots(res_a, res_b, a)
    rep_a = check_structure(extract_r(res_a), slack=args.slack)
    rep_b = check_structure(extract_r(res_b), slack=args.slack)

    cfg = RunConfig("compare", {
        "input": args.input,
        "first": _strategy_params(cfg_a, args.precision),
        "second": _strategy_params(cfg_b, args.precision),
        "slack": args.slack,
    })
    payload = {
        "divergence": {
            "diverged": div.diverged,
            "step": div.step,
            "col_first": div.col_a, "col_second": div.col_b,
            "norm_first": div.norm_a, "norm_second": div.norm_b,
            "gap": div.gap,
        },
        "structure_first": rep_a.summary(),
        "structure_second": rep_b.summary(),
    }
    _emit(cfg, payload, args.json)
    if div.diverged:
        _say(f"pivot sequences diverge at step {div.step} "
             f"(gap {div.gap:.3e})")
    else:
        _say("no divergence")
    return 0


def _add_strategy_flags(p: argparse.ArgumentParser, repeat_grid=False):
    p.add_argument("--strategy", choices=["classic", "robust", "exact"],
                   default="robust")
    p.add_argument("--tol", type=float, default=None,
                   help="robust recompute threshold (default sqrt(eps))")
    p.add_argument("--inject", action="append", metavar="INJECTION",
                   help="excess-control or wrong-column[:offset]; repeatable")
    if repeat_grid:
        p.add_argument("--grid", action="append", metavar="RxC",
                       help="process grid; repeatable for several topologies")
    else:
        p.add_argument("--grid", metavar="RxC", default=None,
                       help="simulate this process grid topology")
    p.add_argument("--mb", type=int, default=32, help="row block size")
    p.add_argument("--nb", type=int, default=32, help="column block size")
    p.add_argument("--precision", choices=["single", "double"],
                   default="double")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qrpivot",
        description="Column-pivoted QR with switchable norm-downdating "
                    "strategies, failure injections, and structure checks.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a test matrix file")
    g.add_argument("family", choices=["kahan", "symkahan", "random"])
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--c", type=float, default=None,
                   help="Kahan cosine parameter (parsed as a double)")
    g.add_argument("--m", type=int, default=None,
                   help="rows for random (default: --n)")
    g.add_argument("--field", choices=["real", "complex"], default="real")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--precision", choices=["single", "double"],
                   default="double")
    g.add_argument("-o", "--output", required=True)
    g.add_argument("--json", default=None)
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("factor", help="run one pivoted factorization")
    f.add_argument("-i", "--input", required=True)
    f.add_argument("--outdir", default=".")
    _add_strategy_flags(f)
    f.add_argument("--json", default=None)
    f.set_defaults(func=cmd_factor)

    c = sub.add_parser("check",
                       help="verify rank-revealing structure of an R file; "
                            "exit 1 on violation")
    c.add_argument("-i", "--input", required=True)
    c.add_argument("--precision", choices=["single", "double"],
                   default="double",
                   help="working precision the R came from (sets default "
                        "slack)")
    c.add_argument("--slack", type=float, default=None,
                   help="multiplicative tolerance (default 100*n*eps)")
    c.add_argument("--tau", type=float, default=None,
                   help="numerical-rank drop threshold")
    c.add_argument("--csv", default=None, help="write i,red,blue profile")
    c.add_argument("--json", default=None)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sweep",
                       help="factor a Kahan family over a c grid and "
                            "tabulate structure verdicts")
    s.add_argument("--family", choices=["kahan", "symkahan"],
                   default="kahan")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--c-min", type=float, default=0.10)
    s.add_argument("--c-max", type=float, default=0.90)
    s.add_argument("--c-step", type=float, default=0.01)
    _add_strategy_flags(s, repeat_grid=True)
    s.add_argument("--slack", type=float, default=None)
    s.add_argument("--tau", type=float, default=None)
    s.add_argument("--csv", default="sweep.csv")
    s.add_argument("--json", default=None)
    s.set_defaults(func=cmd_sweep)

    k = sub.add_parser("compare",
                       help="run two configurations on one matrix and "
                            "report pivot divergence")
    k.add_argument("-i", "--input", required=True)
    _add_strategy_flags(k)
    k.add_argument("--strategy2", choices=["classic", "robust", "exact"],
                   default=None)
    k.add_argument("--tol2", type=float, default=None)
    k.add_argument("--inject2", action="append", default=None,
                   help="injections for the second run; 'none' clears "
                        "anything inherited from --inject")
    k.add_argument("--grid2", metavar="RxC", default=None)
    k.add_argument("--slack", type=float, default=None)
    k.add_argument("--json", default=None)
    k.set_defaults(func=cmd_compare)

    r = sub.add_parser("report",
                       help="write the red/blue profile CSV and figure "
                            "for an R file")
    r.add_argument("-i", "--input", required=True)
    r.add_argument("--precision", choices=["single", "double"],
                   default="double")
    r.add_argument("--slack", type=float, default=None)
    r.add_argument("--tau", type=float, default=None)
    r.add_argument("--csv", default="profile.csv")
    r.add_argument("--png", default="profile.png")
    r.add_argument("--json", default=None)
    r.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, parser)


if __name__ == "__main__":
    sys.exit(main())
