"""Batch statistics: summaries, paired bootstrap intervals, return series, autocorrelation."""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._jit import njit
from . import rng as _rng

METRICS = ("cash", "payout", "wealth")
DEFAULT_RESAMPLES = 10_000
DEFAULT_PERIODS = (1.0, 10.0, 50.0, 200.0)


@dataclass
class ResultSet:
    experiment_id: str
    agent_names: List[str]
    games: list  # GameResult-like objects or row dicts
    master_seed: int = 0
    config: Optional[dict] = None

    def metric(self, name):
        """``(n_games, n_agents)`` array of one per-agent metric."""
        if name not in METRICS:
            raise KeyError(f"unknown metric {name!r}")
        return np.array([_get(g, name) for g in self.games], dtype=np.float64)

    def agent_index(self, name):
        if isinstance(name, int):
            if not 0 <= name < len(self.agent_names):
                raise KeyError(f"agent index {name} out of range")
            return name
        try:
            return self.agent_names.index(name)
        except ValueError:
            raise KeyError(f"unknown agent {name!r}; known: {', '.join(self.agent_names)}") from None


def _get(g, key):
    return g[key] if isinstance(g, dict) else getattr(g, key)


def mean_sd_se(values):
    x = np.asarray(values, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        raise ValueError("need at least 2 values")
    mean = float(x.mean())
    sd = float(x.std(ddof=1))
    return {"mean": mean, "sd": sd, "se": sd / math.sqrt(n), "n": n}


def summarize(results: ResultSet):
    """``{agent: {metric: {mean, sd, se, n}}}`` over games."""
    if len(results.games) < 2:
        raise ValueError("summaries need at least 2 games")
    out = {}
    arrays = {m: results.metric(m) for m in METRICS}
    for i, name in enumerate(results.agent_names):
        out[name] = {m: mean_sd_se(arrays[m][:, i]) for m in METRICS}
    return out


@njit
def bootstrap_means(d, n_resamples, state):
    """Means of ``n_resamples`` with-replacement resamples of ``d``."""
    n = d.shape[0]
    out = np.empty(n_resamples, np.float64)
    for b in range(n_resamples):
        s = 0.0
        for _ in range(n):
            s += d[_rng.randint(state, 0, n)]
        out[b] = s / n
    return out


def bootstrap_diff_ci(a, b, n_resamples=DEFAULT_RESAMPLES, alpha=0.05, seed=0):
    """Percentile interval for mean(a) - mean(b), resampling games (pairs) jointly."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"paired samples must be 1-d and equal length, got {a.shape} and {b.shape}")
    if a.shape[0] < 1:
        raise ValueError("empty samples")
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    d = a - b
    state = _rng.stream_state(seed, (7,)).reshape(1, 4).copy()
    with np.errstate(over="ignore"):
        means = bootstrap_means(d, int(n_resamples), state)
    lo, hi = np.percentile(means, [100 * alpha / 2, 100 * (1 - alpha / 2)])
    return float(lo), float(hi)


@dataclass
class ReturnSeries:
    values: np.ndarray
    period_length: Optional[float] = None

    def __len__(self):
        return self.values.shape[0]


def closing_prices(times, prices, period, duration):
    """Last trade price in each period ``[k*period, (k+1)*period)``, carried through empty periods.

    Periods before the first trade are dropped.
    """
    n_periods = int(math.floor(duration / period))
    out = []
    j = 0
    last = None
    for k in range(n_periods):
        end = (k + 1) * period
        while j < len(times) and times[j] < end:
            last = prices[j]
            j += 1
        if last is not None:
            out.append(last)
    return np.array(out, dtype=np.float64)


def build_returns(prices, times=None, period=None, duration=None):
    """Log returns of a chronological price series.

    Non-positive prices are dropped first.  With ``period`` the series is
    first reduced to per-period closing prices over ``[0, duration)``.
    """
    prices = np.asarray(prices, dtype=np.float64)
    if period is not None:
        if times is None or duration is None:
            raise ValueError("periodic returns need trade times and the game duration")
        times = np.asarray(times, dtype=np.float64)
        keep = prices > 0
        prices = closing_prices(times[keep], prices[keep], float(period), float(duration))
    else:
        prices = prices[prices > 0]
    if prices.shape[0] < 2:
        raise ValueError("need at least 2 positive prices")
    return ReturnSeries(np.log(prices[1:] / prices[:-1]), None if period is None else float(period))


@njit
def acf_kernel(x, max_lag):
    n = x.shape[0]
    mean = 0.0
    for t in range(n):
        mean += x[t]
    mean /= n
    denom = 0.0
    for t in range(n):
        denom += (x[t] - mean) ** 2
    out = np.full(max_lag + 1, np.nan)
    if denom == 0.0:
        return out, denom
    for h in range(max_lag + 1):
        s = 0.0
        for t in range(n - h):
            s += (x[t] - mean) * (x[t + h] - mean)
        out[h] = s / denom
    return out, denom


def acf(series, max_lag):
    """Sample autocorrelation at lags ``0..max_lag``."""
    x = np.asarray(series.values if isinstance(series, ReturnSeries) else series, dtype=np.float64)
    if max_lag < 0 or x.shape[0] <= max_lag:
        raise ValueError(f"series of length {x.shape[0]} too short for max_lag {max_lag}")
    out, denom = acf_kernel(x, int(max_lag))
    if not denom > 0:
        raise ValueError("zero-variance series has no autocorrelation")
    return out


def game_price_series(trades, asset):
    sel = np.asarray(trades["asset"]) == asset
    return np.asarray(trades["time"], np.float64)[sel], np.asarray(trades["price"], np.float64)[sel]


def per_game_acf(games, max_lag, period=None, asset="goal"):
    """ACF per game for one asset's trade prices.

    Returns a ``(n_games, max_lag + 1)`` array.  A series of n returns gives
    lags up to n - 2; longer lags and degenerate series are NaN.
    """
    rows = []
    for g in games:
        trades = _get(g, "trades")
        a = _get(g, "goal_suit") if asset == "goal" else int(asset)
        row = np.full(max_lag + 1, np.nan)
        if trades is not None:
            times, prices = game_price_series(trades, a)
            try:
                r = build_returns(prices, times, period, _get(g, "end_time"))
                # at least two pairs behind every lag
                lag = min(max_lag, len(r) - 2)
                if lag >= 1:
                    row[: lag + 1] = acf(r, lag)
            except ValueError:
                pass
        rows.append(row)
    return np.array(rows).reshape(len(rows), max_lag + 1)
