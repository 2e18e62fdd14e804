"""Experiment batches, results files, reports and replay."""

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import analytics
from .agents import AgentSpec
from .config import ExperimentConfig, ConfigError, parse_config
from .decks import STARTING_CASH
from .game import run_game, GameResult
from .rng import game_seed

RESULTS_FORMAT = "figgie-results"
RESULTS_VERSION = 1
TRADE_COLUMNS = ("time", "asset", "buyer", "seller", "price", "volume")
EXPECTATION_COLUMNS = ("time", "agent", "asset", "p_b", "p_s")
# reference levels printed next to mean wealth: starting cash and the
# equal-share level when the pot is funded on top of starting cash
REFERENCE_CASH = float(STARTING_CASH)
REFERENCE_WEALTH = 400.0


class ReplayMismatch(RuntimeError):
    pass


def trades_to_rows(trades):
    cols = [trades[c] for c in TRADE_COLUMNS]
    return [[float(t), int(a), int(b), int(s), float(p), int(v)] for t, a, b, s, p, v in zip(*cols)]


def rows_to_trades(rows):
    arr = list(zip(*rows)) if rows else [()] * 6
    dtypes = (np.float64, np.int64, np.int64, np.int64, np.float64, np.int64)
    return {c: np.array(col, dtype=dt) for c, col, dt in zip(TRADE_COLUMNS, arr, dtypes)}


@dataclass
class ResultsFile:
    config: ExperimentConfig
    games: List[dict]  # per-game rows, optionally with "trades" as row lists
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "format": RESULTS_FORMAT,
            "schema_version": RESULTS_VERSION,
            "config": self.config.to_dict(),
            "games": self.games,
        }

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([("<results>", str(e))]) from None
        if not isinstance(d, dict) or d.get("format") != RESULTS_FORMAT:
            raise ConfigError([("format", f"not a {RESULTS_FORMAT} file")])
        if d.get("schema_version") != RESULTS_VERSION:
            raise ConfigError([("schema_version", f"unsupported results version {d.get('schema_version')!r}")])
        cfg = parse_config(d.get("config"))
        games = d.get("games")
        if not isinstance(games, list):
            raise ConfigError([("games", "must be a list")])
        return cls(cfg, games)

    @classmethod
    def read(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())

    def result_set(self):
        games = []
        for g in self.games:
            g = dict(g)
            g["trades"] = rows_to_trades(g["trades"]) if "trades" in g else None
            games.append(g)
        return analytics.ResultSet(
            self.config.experiment_id, self.config.agent_names, games,
            self.config.master_seed, self.config.to_dict(),
        )


def _game_row(index, result: GameResult, keep_trades):
    row = {"index": index}
    row.update(result.row())
    if keep_trades:
        row["trades"] = trades_to_rows(result.trades)
    return row


def _run_one(args):
    agent_dicts, seed, events, keep_trades, index = args
    agents = [AgentSpec(**a) for a in agent_dicts]
    res = run_game(agents, seed, events=events, keep_trades=keep_trades)
    return _game_row(index, res, keep_trades)


def run_experiment(config: ExperimentConfig, workers=1, progress=None) -> ResultsFile:
    """Run every game of ``config``.  Output does not depend on ``workers``."""
    agent_dicts = [a.to_dict() for a in config.agents]
    jobs = [
        (agent_dicts, game_seed(config.master_seed, i), config.events, config.keep_trades, i)
        for i in range(config.games)
    ]
    rows = []
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for row in ex.map(_run_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))):
                rows.append(row)
                if progress:
                    progress(len(rows), len(jobs))
    else:
        for job in jobs:
            rows.append(_run_one(job))
            if progress:
                progress(len(rows), len(jobs))
    return ResultsFile(config, rows)


def replay(results: ResultsFile, index, log_expectations=False):
    """Re-simulate game ``index`` and check it against the stored record.

    Returns ``(result, mismatches)``; ``mismatches`` lists the differing fields.
    """
    if not 0 <= index < len(results.games):
        raise IndexError(f"game {index} out of range (results hold {len(results.games)} games)")
    stored = results.games[index]
    cfg = results.config
    seed = game_seed(cfg.master_seed, index)
    res = run_game(cfg.agents, seed, events=cfg.events, keep_trades=True, log_expectations=log_expectations)
    fresh = _game_row(index, res, "trades" in stored)
    fresh = json.loads(json.dumps(fresh))
    mismatches = sorted(k for k in set(stored) | set(fresh) if stored.get(k) != fresh.get(k))
    return res, mismatches


# -- reports ---------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def tsv(header, rows):
    lines = ["\t".join(header)]
    lines += ["\t".join(_fmt(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def summary_table(rs: analytics.ResultSet):
    s = analytics.summarize(rs)
    kinds = [a["kind"] for a in rs.config["agents"]] if rs.config else [""] * len(rs.agent_names)
    rows = []
    for name, kind in zip(rs.agent_names, kinds):
        for m in analytics.METRICS:
            st = s[name][m]
            rows.append([name, kind, m, st["mean"], st["sd"], st["se"], st["n"], REFERENCE_CASH, REFERENCE_WEALTH])
    return tsv(["agent", "kind", "metric", "mean", "sd", "se", "n", "ref_cash", "ref_wealth"], rows)


def bootstrap_table(rs: analytics.ResultSet, pairs, n_resamples=analytics.DEFAULT_RESAMPLES, alpha=0.05, seed=None):
    """For each pair ``(A, B)``: mean difference B - A per metric with its percentile interval."""
    seed = rs.master_seed if seed is None else seed
    rows = []
    for a, b in pairs:
        ia, ib = rs.agent_index(a), rs.agent_index(b)
        for m in analytics.METRICS:
            x = rs.metric(m)
            d = x[:, ib] - x[:, ia]
            lo, hi = analytics.bootstrap_diff_ci(x[:, ib], x[:, ia], n_resamples, alpha, seed)
            rows.append([a, b, f"delta_{m}", float(d.mean()), lo, hi, n_resamples, alpha])
    return tsv(["reference", "competitor", "metric", "mean_diff", "lo", "hi", "resamples", "alpha"], rows)


def acf_tables(rs: analytics.ResultSet, period, max_lag=20, asset="goal"):
    """Per-game ACF rows and a per-lag median/quartile summary for one sampling period."""
    acfs = analytics.per_game_acf(rs.games, max_lag, period, asset)
    per_game = []
    for g, row in enumerate(acfs):
        for h, v in enumerate(row):
            if np.isfinite(v):
                per_game.append([g, h, float(v)])
    summary = []
    for h in range(max_lag + 1):
        col = acfs[:, h]
        col = col[np.isfinite(col)]
        if col.size:
            q25, med, q75 = np.percentile(col, [25, 50, 75])
            summary.append([h, col.size, float(med), float(q25), float(q75), float(col.std(ddof=1)) if col.size > 1 else 0.0])
    return (
        tsv(["game", "lag", "acf"], per_game),
        tsv(["lag", "games", "median", "q25", "q75", "sd"], summary),
        acfs,
    )


def period_label(period):
    return "trades" if period is None else f"dt{period:g}"


def write_report(results: ResultsFile, out_dir, summaries=True, bootstrap=(), acf_periods=(), max_lag=None,
                 asset=None):
    """Write TSV reports into ``out_dir``; returns ``{filename: text}``."""
    rs = results.result_set()
    a = results.config.analysis
    max_lag = a.acf_max_lag if max_lag is None else max_lag
    asset = a.acf_asset if asset is None else asset
    files = {}
    if summaries:
        files["summary.tsv"] = summary_table(rs)
    if bootstrap:
        files["bootstrap.tsv"] = bootstrap_table(rs, bootstrap, a.bootstrap_resamples, a.alpha)
    if acf_periods:
        if not all(g.get("trades") is not None for g in rs.games):
            raise ConfigError([("keep_trades", "ACF reports need trade logs; rerun with keep_trades true")])
        for p in acf_periods:
            per_game, summ, _ = acf_tables(rs, p, max_lag, asset)
            files[f"acf_{period_label(p)}.tsv"] = per_game
            files[f"acf_{period_label(p)}_summary.tsv"] = summ
    os.makedirs(out_dir, exist_ok=True)
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
    return files
