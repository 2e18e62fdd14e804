"""Valuation rules for the four trader types and the shared order-sending rule.

Kernels here take plain scalars/arrays and are called from the jitted game
loop; the wrappers at the bottom give each rule a small Python interface.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._jit import njit
from .decks import (
    CARD_PAYOUT, DECK_COUNTS, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, N_DECKS, N_SUITS,
)
from .exchange import BUY, SELL, Order

NOISE = 0
FUNDAMENTALIST = 1
BOTTOM_FEEDER = 2
CHARTIST = 3
KIND_NAMES = ("noise", "fundamentalist", "bottom_feeder", "chartist")

TELESCOPED = 0
REGRESSION = 1
VARIANT_NAMES = ("telescoped", "regression")
PRICE_SOURCES = ("trades", "orders")

NOISE_FALLBACK_PRICE = CARD_PAYOUT
DIVERGENCE_CAP = 1e100


def _binomial_table(n):
    table = np.zeros((n + 1, n + 1), np.float64)
    for a in range(n + 1):
        for b in range(a + 1):
            table[a, b] = math.comb(a, b)
    return table


BINOM = _binomial_table(12)


# -- order sending -------------------------------------------------------------------

@njit
def order_price(buy, u, p_b, p_s, best_bid, best_ask):
    """Limit price for one order given a uniform draw ``u`` in [0, 1).

    Buys are drawn from U(0, p_b) and never placed above the best ask; sells
    from U(p_s, 2 p_s) and never below the best bid.  NaN marks an empty side.
    """
    if buy:
        p = u * p_b
        if not np.isnan(best_ask) and best_ask < p:
            p = best_ask
    else:
        p = p_s + u * p_s
        if not np.isnan(best_bid) and best_bid > p:
            p = best_bid
    return p


# -- noise trader ------------------------------------------------------------------------

@njit
def noise_anchor(best_bid, last_price):
    if not np.isnan(best_bid):
        return best_bid
    if not np.isnan(last_price):
        return last_price
    return NOISE_FALLBACK_PRICE


@njit
def noise_value(anchor, sigma, z):
    return anchor * math.exp(sigma * z)


# -- fundamentalist -------------------------------------------------------------------

@njit
def update_known(known, t_asset, t_buyer, t_seller, t_volume, start, stop):
    """Card counting over trades ``start:stop``; ``known[asset, agent]`` is updated in place."""
    for k in range(start, stop):
        a = t_asset[k]
        v = t_volume[k]
        s = t_seller[k]
        known[a, t_buyer[k]] += v
        if known[a, s] < v:
            known[a, s] = 0
        else:
            known[a, s] -= v


@njit
def posterior_into(seen, deck_counts, binom, out):
    """Deck probabilities proportional to prod_j C(count_ij, seen_j).  Returns the likelihood sum."""
    total = 0.0
    for i in range(deck_counts.shape[0]):
        w = 1.0
        for j in range(deck_counts.shape[1]):
            c = deck_counts[i, j]
            s = seen[j]
            if s > c:
                w = 0.0
                break
            w *= binom[c, s]
        out[i] = w
        total += w
    if total > 0.0:
        for i in range(out.shape[0]):
            out[i] /= total
    return total


@njit
def majority_value(payout, threshold, held, r):
    if held >= threshold or held < 0:
        return 0.0
    a = payout * (1.0 - r) / (1.0 - r ** threshold)
    return a * r ** held


@njit
def expected_buy_value(suit, held, m, goal, payout, threshold, r):
    """Posterior-weighted value of one more card of ``suit`` when holding ``held``."""
    e = 0.0
    for i in range(m.shape[0]):
        if goal[i] == suit and m[i] > 0.0:
            e += m[i] * (CARD_PAYOUT + majority_value(payout[i], threshold[i], held, r))
    return e


@njit
def sweep_own_orders(o_price, o_deleted, o_live, own, own_n, agent, asset, side, limit, deleted_out, n_out):
    """Lazily delete this agent's resting orders on one side that violate ``limit``.

    Buys priced above ``limit`` or sells priced below it are flagged deleted.
    Dead entries are compacted out of the per-agent list.  Returns the new
    count of ids written to ``deleted_out``.
    """
    lst = own[agent, asset, side]
    n = own_n[agent, asset, side]
    w = 0
    for i in range(n):
        oid = lst[i]
        if not o_live[oid] or o_deleted[oid]:
            continue
        p = o_price[oid]
        stale = p > limit if side == BUY else p < limit
        if stale:
            o_deleted[oid] = True
            if n_out < deleted_out.shape[0]:
                deleted_out[n_out] = oid
            n_out += 1
        else:
            lst[w] = oid
            w += 1
    own_n[agent, asset, side] = w
    return n_out


# -- bottom-feeder ----------------------------------------------------------------------

@njit
def bottom_feeder_value(hist, hist_n, prey, asset, k):
    """Mean over qualifying prey of the midpoint of their last-k buy and sell means.

    ``hist[agent, asset, side, :]`` is a ring buffer of order prices and
    ``hist_n`` the total count ever written.  NaN when no prey qualifies.
    """
    width = hist.shape[3]
    total = 0.0
    n_prey = 0
    for a in range(prey.shape[0]):
        if not prey[a]:
            continue
        nb = hist_n[a, asset, BUY]
        ns = hist_n[a, asset, SELL]
        if nb < k or ns < k:
            continue
        sb = 0.0
        ss = 0.0
        for q in range(k):
            sb += hist[a, asset, BUY, (nb - 1 - q) % width]
            ss += hist[a, asset, SELL, (ns - 1 - q) % width]
        total += 0.5 * (sb / k + ss / k)
        n_prey += 1
    if n_prey == 0:
        return np.nan
    return total / n_prey


# -- chartist ----------------------------------------------------------------------------

@njit
def mean_log_return(prices, n, tau):
    """Average of the tau log returns ending one step before the latest price, telescoped."""
    return math.log(prices[n - 2] / prices[n - 2 - tau]) / tau


@njit
def fit_log_linear(x, prices):
    """Least-squares fit of log(price) = b0 + b1 * x.  Returns (b0, b1)."""
    n = x.shape[0]
    mx = 0.0
    my = 0.0
    for i in range(n):
        mx += x[i]
        my += math.log(prices[i])
    mx /= n
    my /= n
    sxx = 0.0
    sxy = 0.0
    for i in range(n):
        dx = x[i] - mx
        sxx += dx * dx
        sxy += dx * (math.log(prices[i]) - my)
    b1 = sxy / sxx
    return my - b1 * mx, b1


@njit
def chartist_value(prices, n, variant, tau):
    """Trend-extrapolated value from the first ``n`` entries of ``prices``.

    Returns ``(estimate, status)`` with status 0 = ok, 1 = not enough
    history, 2 = non-positive price in the window.  The estimate may be inf.
    """
    if variant == TELESCOPED:
        if n < tau + 2:
            return np.nan, 1
        p_now = prices[n - 1]
        # every return in the window must be defined
        for i in range(n - 2 - tau, n):
            if prices[i] <= 0.0:
                return np.nan, 2
        rbar = mean_log_return(prices, n, tau)
        return p_now * math.exp(rbar * tau), 0
    w = min(n, tau)
    if w < 2:
        return np.nan, 1
    x = np.empty(w, np.float64)
    for i in range(w):
        x[i] = n - w + i
        if prices[n - w + i] <= 0.0:
            return np.nan, 2
    b0, b1 = fit_log_linear(x, prices[n - w:n])
    # one step past the latest trade
    return math.exp(b0 + b1 * n), 0


@njit
def clamp_value(value, cap):
    """Clamp a valuation into [0, cap].  Returns (value, clamped)."""
    if value > cap or np.isnan(value):
        return cap, True
    if value < 0.0:
        return 0.0, True
    return value, False


# -- Python interface -------------------------------------------------------------

@dataclass(frozen=True)
class ExpectationPair:
    p_b: float
    p_s: float


@dataclass
class MarketView:
    """Read-only snapshot an agent decides on.  Prices are None for an empty side."""

    best_bid: Sequence[Optional[float]] = (None, None, None, None)
    best_ask: Sequence[Optional[float]] = (None, None, None, None)
    last_price: Sequence[Optional[float]] = (None, None, None, None)
    hand: Sequence[int] = (0, 0, 0, 0)
    cash: float = 0.0
    clock: float = 0.0
    trades: list = field(default_factory=list)
    # order_history[agent][asset] = (buy prices, sell prices), chronological
    order_history: dict = field(default_factory=dict)


def _nan(x):
    return np.nan if x is None else float(x)


def send_order(pair, view, asset, stream, agent=0, volume=1, can_sell=True) -> Optional[Order]:
    buy = stream.uniform() < 0.5
    u = stream.uniform()
    if not buy and not can_sell:
        return None
    price = order_price(buy, u, pair.p_b, pair.p_s, _nan(view.best_bid[asset]), _nan(view.best_ask[asset]))
    return Order(agent=agent, side=BUY if buy else SELL, asset=asset, price=float(price), volume=volume)


def noise_expectation(view, asset, sigma, stream):
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    anchor = noise_anchor(_nan(view.best_bid[asset]), _nan(view.last_price[asset]))
    p = float(noise_value(anchor, sigma, stream.normal()))
    return ExpectationPair(p, p)


class KnownCards:
    """Per-asset tallies of cards each agent is known to hold, updated incrementally."""

    def __init__(self, own_hand, me, n_agents=4):
        self.me = me
        self.known = np.zeros((N_SUITS, n_agents), np.int64)
        self.known[:, me] = own_hand
        self.cursor = 0

    def seen(self):
        return self.known.sum(axis=1)

    def __getitem__(self, asset):
        return [int(x) for x in self.known[asset]]


def update_known_cards(state, trades):
    """Fold ``trades`` (everything since the last call) into ``state``."""
    if trades:
        update_known(
            state.known,
            np.array([t.asset for t in trades], np.int64),
            np.array([t.buyer for t in trades], np.int64),
            np.array([t.seller for t in trades], np.int64),
            np.array([t.volume for t in trades], np.int64),
            0, len(trades),
        )
        state.cursor += len(trades)
    return state


def deck_posterior(seen):
    seen = np.asarray(seen, dtype=np.int64)
    if seen.shape != (N_SUITS,) or (seen < 0).any():
        raise ValueError(f"seen must be 4 non-negative counts, got {seen}")
    out = np.zeros(N_DECKS, np.float64)
    total = posterior_into(seen, DECK_COUNTS, BINOM, out)
    if total == 0.0:
        raise ValueError(f"no deck is consistent with seen counts {seen.tolist()}")
    return out


def deck_majority_value(deck, held, r=2.0):
    if not r > 1:
        raise ValueError(f"r must be > 1, got {r}")
    return float(majority_value(MAJORITY_PAYOUT[deck], MAJORITY_THRESHOLD[deck], held, r))


def expected_values(suit, held, m, r=2.0):
    """``ExpectationPair(e_b, e_s)``; ``p_s`` is NaN when holding no cards of ``suit``."""
    m = np.asarray(m, dtype=np.float64)
    e_b = float(expected_buy_value(suit, held, m, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, r))
    if held < 1:
        return ExpectationPair(e_b, float("nan"))
    e_s = float(expected_buy_value(suit, held - 1, m, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, r))
    return ExpectationPair(e_b, e_s)


def fundamentalist_step(hand, state, own_orders, r=2.0):
    """Values for every suit and the ids of own resting orders they make stale.

    ``own_orders`` is a list of :class:`Order` still resting for this agent.
    Returns ``(pairs, deleted_ids)``; stale orders get ``deleted = True``.
    """
    m = deck_posterior(state.seen())
    pairs = [expected_values(j, int(hand[j]), m, r) for j in range(N_SUITS)]
    deleted = []
    for o in own_orders:
        if o.deleted:
            continue
        pair = pairs[o.asset]
        if o.side == BUY and o.price > pair.p_b:
            o.deleted = True
        elif o.side == SELL and not np.isnan(pair.p_s) and o.price < pair.p_s:
            o.deleted = True
        if o.deleted:
            deleted.append(o.id)
    return pairs, deleted


def bottom_feeder_expectation(order_history, asset, prey, k=4):
    """``order_history[agent][asset] = (buy_prices, sell_prices)``.  None when no prey qualifies."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    values = []
    for a in prey:
        buys, sells = order_history.get(a, {}).get(asset, ((), ()))
        if len(buys) < k or len(sells) < k:
            continue
        values.append(0.5 * (sum(buys[-k:]) / k + sum(sells[-k:]) / k))
    if not values:
        return None
    p = sum(values) / len(values)
    return ExpectationPair(p, p)


@dataclass(frozen=True)
class ChartistResult:
    pair: Optional[ExpectationPair]
    clamped: bool = False
    nonpositive: bool = False


def chartist_expectation(prices, tau=5, variant="telescoped", cap=DIVERGENCE_CAP):
    """Extrapolate a chronological trade-price series.  ``pair`` is None when abstaining."""
    v = VARIANT_NAMES.index(variant) if isinstance(variant, str) else int(variant)
    if tau < 2:
        raise ValueError(f"tau must be >= 2, got {tau}")
    prices = np.asarray(prices, dtype=np.float64)
    est, status = chartist_value(prices, prices.shape[0], v, tau)
    if status == 1:
        return ChartistResult(None)
    if status == 2:
        return ChartistResult(None, nonpositive=True)
    est, clamped = clamp_value(est, cap)
    return ChartistResult(ExpectationPair(float(est), float(est)), clamped=bool(clamped))
