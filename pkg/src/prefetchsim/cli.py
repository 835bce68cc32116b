"""Command-line surface: run one experiment, generate traces, sweep, report.

Exit codes: 0 success, 1 user error (bad arguments, config, or trace),
2 budget/resource error (a sweep larger than its experiment budget).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .experiment import CSV_COLUMNS, run_experiment, stats_row, write_stats_csv
from .trace import (
    ConstantStride,
    FormatError,
    PagePair,
    RandomInPage,
    SpecError,
    TraceSpec,
    generate_trace,
    write_trace,
)
from .tuning import GridTooLarge, action_prune, feature_sweep, grid_search


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; remap to 1 (user error)
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="prefetchsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_run = sub.add_parser("run", help="run one trace under one config")
    p_run.add_argument("--trace", required=True, help="trace file path")
    p_run.add_argument("--config", default="basic",
                       help="config file path or preset name (basic, strict, bw-oblivious)")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override one config key")
    p_run.add_argument("--prefetcher", choices=("pythia", "stride", "nextline", "none"),
                       help="shorthand for --set run.prefetcher=...")
    p_run.add_argument("--seed", type=int, help="shorthand for --set run.seed=...")
    p_run.add_argument("--output", help="stats CSV path (default: stdout)")
    p_run.add_argument("--q-snapshot", help="dump the final Q tables to this CSV")

    p_gen = sub.add_parser("gen", help="generate a synthetic trace file")
    p_gen.add_argument("--pattern", required=True, choices=("stride", "pagepair", "random"))
    p_gen.add_argument("--out", required=True, help="output trace path")
    p_gen.add_argument("--length", type=int, default=10000)
    p_gen.add_argument("--pages", type=int, default=64)
    p_gen.add_argument("--stride", type=int, default=1, help="stride in cachelines (stride pattern)")
    p_gen.add_argument("--first-offset", type=int, default=0, help="first offset (pagepair pattern)")
    p_gen.add_argument("--delta", type=int, default=23,
                       help="second-access delta in cachelines (pagepair pattern)")
    p_gen.add_argument("--accesses-per-page", type=int, default=16, help="random pattern")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--pcs", default="0x401000", help="comma-separated hex PCs to rotate through")

    p_sweep = sub.add_parser("sweep", help="run a design-space sweep")
    p_sweep.add_argument("--suite", required=True,
                         help="text file listing trace paths, one per line")
    p_sweep.add_argument("--sweep-config", required=True, help="sweep description file")
    p_sweep.add_argument("--out-dir", required=True)
    p_sweep.add_argument("--config", default="basic", help="base experiment config")
    p_sweep.add_argument("--set", dest="overrides", action="append", default=[],
                         metavar="SECTION.KEY=VALUE")
    p_sweep.add_argument("--workers", type=int, default=1)

    p_rep = sub.add_parser("report", help="render figures and a summary from stats CSVs")
    p_rep.add_argument("--stats", required=True, nargs="+", help="stats CSV files from run/sweep")
    p_rep.add_argument("--q-snapshot", help="Q table snapshot CSV from run --q-snapshot")
    p_rep.add_argument("--out-dir", required=True)

    return parser


def _cmd_run(args) -> int:
    overrides = list(args.overrides)
    if args.prefetcher:
        overrides.append(f"run.prefetcher={args.prefetcher}")
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    cfg = load_config(args.config, overrides)
    result = run_experiment(args.trace, cfg)
    row = stats_row(Path(args.trace).name, cfg, result)
    if args.output:
        write_stats_csv(args.output, [row])
    else:
        writer = csv.DictWriter(sys.stdout, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerow(row)
    if args.q_snapshot:
        if result.qvstore is None:
            print("no Q tables to snapshot (prefetcher is not the RL agent)", file=sys.stderr)
            return 1
        with open(args.q_snapshot, "w", newline="\n") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["vault", "plane", "bin", "action_index", "offset", "q_value"])
            offsets = cfg.get("actions", "offsets")
            for vault, plane, b, a, q in result.qvstore.snapshot_rows():
                writer.writerow([vault, plane, b, a, offsets[a], q])
    return 0


def _cmd_gen(args) -> int:
    pcs = tuple(int(p, 16) for p in args.pcs.split(","))
    if args.pattern == "stride":
        pattern = ConstantStride(stride_lines=args.stride, pages=args.pages)
    elif args.pattern == "pagepair":
        pattern = PagePair(first_offset=args.first_offset,
                           second_offset_delta=args.delta, pages=args.pages)
    else:
        pattern = RandomInPage(accesses_per_page=args.accesses_per_page,
                               pages=args.pages, seed=args.seed)
    spec = TraceSpec(pattern=pattern, pcs=pcs, length=args.length)
    n = write_trace(generate_trace(spec, seed=args.seed), args.out)
    print(f"wrote {n} requests to {args.out}")
    return 0


def _read_suite(path) -> list:
    suite_path = Path(path)
    if not suite_path.exists():
        raise ConfigError(f"suite file not found: {suite_path}")
    traces = []
    for line in suite_path.read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            candidate = Path(line)
            if not candidate.is_absolute():
                candidate = suite_path.parent / candidate
            if not candidate.exists():
                raise ConfigError(f"trace not found: {candidate}")
            traces.append(candidate)
    if not traces:
        raise ConfigError(f"suite file {suite_path} lists no traces")
    return traces


def _read_sweep_config(path) -> dict:
    import configparser

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not Path(path).exists():
        raise ConfigError(f"sweep config not found: {path}")
    parser.read(path)
    if not parser.has_section("sweep"):
        raise ConfigError("sweep config needs a [sweep] section with a 'kind' key")
    kind = parser.get("sweep", "kind", fallback=None)
    if kind not in ("features", "actions", "grid"):
        raise ConfigError(f"unknown sweep kind {kind!r}; expected features, actions, or grid")
    out = {"kind": kind}
    out["max_combo"] = parser.getint("sweep", "max_combo", fallback=1)
    out["threshold"] = parser.getfloat("sweep", "threshold", fallback=0.005)
    out["top_k"] = parser.getint("sweep", "top_k", fallback=25)
    out["budget"] = parser.getint("sweep", "budget", fallback=2000)
    out["test_traces"] = parser.getint("sweep", "test_traces", fallback=0)
    if parser.has_option("sweep", "offsets"):
        out["offsets"] = tuple(int(v.strip()) for v in parser.get("sweep", "offsets").split(","))
    else:
        out["offsets"] = None
    grids = {}
    if parser.has_section("grid"):
        for name, text in parser.items("grid"):
            grids[name] = [float(v.strip()) for v in text.split(",") if v.strip()]
    out["grids"] = grids
    return out


def _write_sweep_csv(path, rows, extra_columns) -> None:
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["rank", "key", *extra_columns, "mean_score", "valid", "per_trace_scores"])
        for rank, row in enumerate(rows, start=1):
            per_trace = ";".join(str(s) for s in row.per_trace)
            extras = [row.detail.get(c, "") for c in extra_columns]
            writer.writerow([rank, row.key, *extras,
                             row.mean_score if row.valid else "", row.valid, per_trace])


def _cmd_sweep(args) -> int:
    traces = _read_suite(args.suite)
    base = load_config(args.config, args.overrides)
    sweep = _read_sweep_config(args.sweep_config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if sweep["kind"] == "features":
        rows = feature_sweep(traces, base, max_combo=sweep["max_combo"], workers=args.workers)
        _write_sweep_csv(out_dir / "feature_sweep.csv", rows, ["features"])
        print(f"feature sweep: {len(rows)} experiments -> {out_dir / 'feature_sweep.csv'}")
    elif sweep["kind"] == "actions":
        kept, rows = action_prune(traces, base, full_range=sweep["offsets"],
                                  threshold=sweep["threshold"], workers=args.workers)
        _write_sweep_csv(out_dir / "action_prune.csv", rows, ["offset", "impact", "kept"])
        (out_dir / "pruned_actions.txt").write_text(",".join(str(o) for o in kept) + "\n")
        print(f"action prune: kept {kept} -> {out_dir / 'action_prune.csv'}")
    else:
        if not sweep["grids"]:
            raise ConfigError("grid sweep needs a [grid] section with parameter value lists")
        n_test = sweep["test_traces"]
        test = traces[:n_test] if n_test else None
        result = grid_search(traces, base, sweep["grids"], test_traces=test,
                             top_k=sweep["top_k"], budget=sweep["budget"], workers=args.workers)
        params = list(sweep["grids"])
        _write_sweep_csv(out_dir / "grid_stage1.csv", result.stage1, params)
        _write_sweep_csv(out_dir / "grid_stage2.csv", result.stage2, params)
        print(f"grid search: {result.n_enumerated} configs enumerated, "
              f"{result.n_evaluated} evaluated, top {len(result.stage2)} re-evaluated")
        print(f"winner: {result.winner.key} (score {result.winner.mean_score:g})")
    return 0


def _cmd_report(args) -> int:
    from .report import render_report

    written = render_report(args.stats, args.out_dir, q_snapshot=args.q_snapshot)
    for path in written:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "report":
            return _cmd_report(args)
    except GridTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, SpecError, FormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
