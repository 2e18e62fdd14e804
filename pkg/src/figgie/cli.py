"""Command line: ``figgie run``, ``figgie report``, ``figgie replay``."""

import argparse
import os
import sys

from .config import ConfigError, load_config
from . import harness

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_VALIDATION = 2
EXIT_MISMATCH = 3


def _pair(text):
    parts = text.split(",")
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected A,B but got {text!r}")
    return parts[0], parts[1]


def _period(text):
    if text.lower() in ("none", "trades", "0"):
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sampling period {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError("sampling period must be > 0")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="figgie", description="Agent-based Figgie market simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every game of an experiment config")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="results file (default: <experiment_id>.results.json)")
    r.add_argument("-j", "--workers", type=int, default=1)
    r.add_argument("--games", type=int, help="override the number of games")
    r.add_argument("-q", "--quiet", action="store_true")

    rep = sub.add_parser("report", help="summary, bootstrap and autocorrelation tables")
    rep.add_argument("results")
    rep.add_argument("--summaries", action="store_true")
    rep.add_argument("--bootstrap", type=_pair, action="append", default=[], metavar="A,B",
                     help="mean difference B - A with a percentile interval; repeatable")
    rep.add_argument("--acf", type=_period, nargs="*", action="append", metavar="DT",
                     help="sampling periods; 'trades' (or no value) for trade-by-trade returns")
    rep.add_argument("--max-lag", type=int)
    rep.add_argument("--out", help="report directory (default: <results>.report)")
    rep.add_argument("--from-config", action="store_true",
                     help="also run the analysis directives stored in the config")

    rp = sub.add_parser("replay", help="re-simulate one game and check it against the results")
    rp.add_argument("results")
    rp.add_argument("--game", type=int, required=True)
    rp.add_argument("--log-expectations", action="store_true")
    rp.add_argument("--out", help="directory for trades.tsv / expectations.tsv")
    return p


def cmd_run(args, out):
    cfg = load_config(args.config)
    if args.games is not None:
        if args.games < 1:
            raise ConfigError([("--games", "must be >= 1")])
        cfg.games = args.games

    def progress(done, total):
        if not args.quiet and (done == total or done % 10 == 0):
            print(f"\r{cfg.experiment_id}: {done}/{total} games", end="", file=sys.stderr)
            if done == total:
                print(file=sys.stderr)

    res = harness.run_experiment(cfg, workers=args.workers, progress=progress)
    path = args.output or f"{cfg.experiment_id}.results.json"
    res.write(path)
    print(path, file=out)
    return EXIT_OK


def cmd_report(args, out):
    res = harness.ResultsFile.read(args.results)
    a = res.config.analysis
    summaries = args.summaries
    pairs = list(args.bootstrap)
    periods = []
    for group in args.acf or []:
        for p in group or [None]:
            if p not in periods:
                periods.append(p)
    if args.from_config:
        summaries = summaries or a.summaries
        pairs += [tuple(p) for p in a.bootstrap if tuple(p) not in pairs]
        periods += [p for p in a.acf_periods if p not in periods]
    if not (summaries or pairs or periods):
        summaries = True
    names = res.config.agent_names
    bad = [(f"--bootstrap {x},{y}", "unknown agent") for x, y in pairs if x not in names or y not in names]
    if bad:
        raise ConfigError(bad + [("agents", ", ".join(names))])
    out_dir = args.out or os.path.splitext(args.results)[0] + ".report"
    files = harness.write_report(res, out_dir, summaries, pairs, periods, args.max_lag)
    for name, text in files.items():
        if name.startswith("acf_") and not name.endswith("_summary.tsv"):
            continue
        print(f"# {name}", file=out)
        print(text, file=out)
    print(f"# written to {out_dir}", file=out)
    return EXIT_OK


def cmd_replay(args, out):
    res = harness.ResultsFile.read(args.results)
    try:
        result, mismatches = harness.replay(res, args.game, args.log_expectations)
    except IndexError as e:
        raise ConfigError([("--game", str(e))]) from None
    exp = result.expectations
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "trades.tsv"), "w") as fh:
            fh.write(harness.tsv(harness.TRADE_COLUMNS, harness.trades_to_rows(result.trades)))
        if exp is not None:
            rows = [list(r) for r in zip(*(exp[c].tolist() for c in harness.EXPECTATION_COLUMNS))]
            with open(os.path.join(args.out, "expectations.tsv"), "w") as fh:
                fh.write(harness.tsv(harness.EXPECTATION_COLUMNS, rows))
    elif exp is not None:
        rows = [list(r) for r in zip(*(exp[c].tolist() for c in harness.EXPECTATION_COLUMNS))]
        out.write(harness.tsv(harness.EXPECTATION_COLUMNS, rows))
    print(f"game {args.game}: seed {result.seed}, deck {result.deck}, {result.trade_count} trades, "
          f"wealth {[round(w, 2) for w in result.wealth]}", file=sys.stderr)
    if mismatches:
        print(f"replay mismatch in fields: {', '.join(mismatches)}", file=sys.stderr)
        return EXIT_MISMATCH
    print("replay matches stored record", file=sys.stderr)
    return EXIT_OK


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return {"run": cmd_run, "report": cmd_report, "replay": cmd_replay}[args.command](args, out)
    except ConfigError as e:
        for path, msg in e.problems:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
