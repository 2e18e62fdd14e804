"""One game of Figgie: antes, deal, the event loop, settlement.

The event loop (:func:`run_events`) is a single jitted kernel; everything it
touches is preallocated here and passed in as arrays.
"""

import math
from collections import namedtuple
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._jit import njit
from . import rng as _rng
from .agents import AgentSpec, default_names, pack_agents
from .decks import (
    ANTE, DECK_COUNTS, DECKS, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, N_SUITS, POT,
    STARTING_CASH, deal_into, settle_into,
)
from .exchange import (
    BUY, SELL, best_price, book_top, new_market, new_order, place_order, set_cash, void_all,
)
from .kernel import ADD_ORDER, CONSIDERATION, ev_pop, ev_push, new_event_heap, order_arrival_time
from .strategies import (
    BINOM, BOTTOM_FEEDER, CHARTIST, FUNDAMENTALIST, NOISE, bottom_feeder_value, chartist_value,
    clamp_value, expected_buy_value, noise_anchor, noise_value, order_price, posterior_into,
    sweep_own_orders, update_known,
)

N_PLAYERS = 4
DEFAULT_EVENTS = 10_000

AgentState = namedtuple(
    "AgentState",
    [
        "known", "cursor",          # card counting, per observing agent
        "hist", "hist_n",           # order-price ring buffers, per (agent, asset, side)
        "own", "own_n",             # own resting order ids, per (agent, asset, side)
        "ap", "ap_n",               # trade prices per asset, chronological
        "op", "op_n",               # order prices per asset, in arrival order
        "clamped", "nonpositive",   # divergence counters per agent
        "x_time", "x_agent", "x_asset", "x_pb", "x_ps", "x_n",  # expectation log
        "scratch_m", "scratch_del", "violations",
    ],
)


def new_agent_state(n_agents, capacity, hist_width, log_capacity):
    return AgentState(
        np.zeros((n_agents, N_SUITS, n_agents), np.int64),
        np.zeros(n_agents, np.int64),
        np.zeros((n_agents, N_SUITS, 2, max(hist_width, 1)), np.float64),
        np.zeros((n_agents, N_SUITS, 2), np.int64),
        np.zeros((n_agents, N_SUITS, 2, capacity), np.int64),
        np.zeros((n_agents, N_SUITS, 2), np.int64),
        np.zeros((N_SUITS, capacity), np.float64),
        np.zeros(N_SUITS, np.int64),
        np.zeros((N_SUITS, capacity), np.float64),
        np.zeros(N_SUITS, np.int64),
        np.zeros(n_agents, np.int64),
        np.zeros(n_agents, np.int64),
        np.zeros(log_capacity, np.float64),
        np.zeros(log_capacity, np.int64),
        np.zeros(log_capacity, np.int64),
        np.zeros(log_capacity, np.float64),
        np.zeros(log_capacity, np.float64),
        np.zeros(1, np.int64),
        np.zeros(DECK_COUNTS.shape[0], np.float64),
        np.zeros(capacity, np.int64),
        np.zeros(1, np.int64),
    )


@njit
def _log_expectation(st, time, agent, asset, pb, ps):
    k = st.x_n[0]
    if k < st.x_time.shape[0]:
        st.x_time[k] = time
        st.x_agent[k] = agent
        st.x_asset[k] = asset
        st.x_pb[k] = pb
        st.x_ps[k] = ps
        st.x_n[0] = k + 1


@njit
def consider(m, ag, st, rstate, agent, n_agents, time, log):
    """One consideration.  Returns the id of a new (in-flight) order, or -1."""
    s = 1 + n_agents + agent
    asset = _rng.randint(rstate, s, N_SUITS)
    kind = ag.kind[agent]
    can_sell = True
    p_b = np.nan
    p_s = np.nan
    if kind == NOISE:
        n_ap = st.ap_n[asset]
        last = st.ap[asset, n_ap - 1] if n_ap > 0 else np.nan
        anchor = noise_anchor(best_price(m, asset, BUY), last)
        v, c = clamp_value(noise_value(anchor, ag.sigma[agent], _rng.standard_normal(rstate, s)), ag.cap[agent])
        if c:
            st.clamped[agent] += 1
        p_b = v
        p_s = v
    elif kind == FUNDAMENTALIST:
        n_tr = m.counts[1]
        update_known(st.known[agent], m.t_asset, m.t_buyer, m.t_seller, m.t_volume, st.cursor[agent], n_tr)
        st.cursor[agent] = n_tr
        seen = np.zeros(N_SUITS, np.int64)
        for j in range(N_SUITS):
            for a in range(n_agents):
                seen[j] += st.known[agent, j, a]
        post = st.scratch_m
        if posterior_into(seen, DECK_COUNTS, BINOM, post) == 0.0:
            raise ValueError("card counting contradicts every deck")
        r = ag.r[agent]
        for j in range(N_SUITS):
            held = m.hands[agent, j]
            eb = expected_buy_value(j, held, post, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, r)
            es = np.nan
            sweep_own_orders(m.o_price, m.o_deleted, m.o_live, st.own, st.own_n, agent, j, BUY, eb, st.scratch_del, 0)
            if held >= 1:
                es = expected_buy_value(j, held - 1, post, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD, r)
                sweep_own_orders(m.o_price, m.o_deleted, m.o_live, st.own, st.own_n, agent, j, SELL, es, st.scratch_del, 0)
            if log:
                _log_expectation(st, time, agent, j, eb, es)
            if j == asset:
                p_b = eb
                p_s = es
        can_sell = m.hands[agent, asset] >= 1
    elif kind == BOTTOM_FEEDER:
        v = bottom_feeder_value(st.hist, st.hist_n, ag.prey[agent], asset, ag.k[agent])
        if np.isnan(v):
            return -1
        v, c = clamp_value(v, ag.cap[agent])
        if c:
            st.clamped[agent] += 1
        p_b = v
        p_s = v
    else:
        if ag.source[agent] == 0:
            v, status = chartist_value(st.ap[asset], st.ap_n[asset], ag.variant[agent], ag.tau[agent])
        else:
            v, status = chartist_value(st.op[asset], st.op_n[asset], ag.variant[agent], ag.tau[agent])
        if status == 2:
            st.nonpositive[agent] += 1
        if status != 0:
            return -1
        v, c = clamp_value(v, ag.cap[agent])
        if c:
            st.clamped[agent] += 1
        p_b = v
        p_s = v
    if log and kind != FUNDAMENTALIST:
        _log_expectation(st, time, agent, asset, p_b, p_s)

    buy = _rng.uniform(rstate, s) < 0.5
    u = _rng.uniform(rstate, s)
    if not buy and not can_sell:
        return -1
    price = order_price(buy, u, p_b, p_s, best_price(m, asset, BUY), best_price(m, asset, SELL))
    side = BUY if buy else SELL
    return new_order(m, agent, side, asset, price, ag.volume[agent])


@njit
def _check_invariants(m, q, st, n_agents, deck_counts, deck):
    pending = np.zeros(n_agents, np.int64)
    for i in range(q.meta[0]):
        pending[q.agent[i]] += 1
    for a in range(n_agents):
        if pending[a] != 1:
            st.violations[0] += 1
    for j in range(N_SUITS):
        total = 0
        for a in range(n_agents):
            if m.hands[a, j] < 0:
                st.violations[0] += 1
            total += m.hands[a, j]
        if total != deck_counts[deck, j]:
            st.violations[0] += 1


@njit
def run_events(m, q, ag, st, rstate, n_agents, max_events, log, check, deck):
    """Process ``max_events`` events.  Returns the number processed."""
    for a in range(n_agents):
        ev_push(q, _rng.exponential(rstate, 1 + a, ag.rate[a]), CONSIDERATION, a, -1)
    width = st.hist.shape[3]
    count = 0
    while count < max_events:
        time, seq, kind, agent, oid = ev_pop(q)
        count += 1
        if kind == CONSIDERATION:
            oid = consider(m, ag, st, rstate, agent, n_agents, time, log)
            if oid >= 0:
                ev_push(q, order_arrival_time(time, ag.latency[agent]), ADD_ORDER, agent, oid)
            else:
                ev_push(q, time + _rng.exponential(rstate, 1 + agent, ag.rate[agent]), CONSIDERATION, agent, -1)
        else:
            asset = m.o_asset[oid]
            side = m.o_side[oid]
            t0 = m.counts[1]
            place_order(m, oid, time)
            st.op[asset, st.op_n[asset]] = m.o_price[oid]
            st.op_n[asset] += 1
            hn = st.hist_n[agent, asset, side]
            st.hist[agent, asset, side, hn % width] = m.o_price[oid]
            st.hist_n[agent, asset, side] = hn + 1
            if m.o_live[oid]:
                n_own = st.own_n[agent, asset, side]
                st.own[agent, asset, side, n_own] = oid
                st.own_n[agent, asset, side] = n_own + 1
            for k in range(t0, m.counts[1]):
                a = m.t_asset[k]
                st.ap[a, st.ap_n[a]] = m.t_price[k]
                st.ap_n[a] += 1
            ev_push(q, time + _rng.exponential(rstate, 1 + agent, ag.rate[agent]), CONSIDERATION, agent, -1)
        if check:
            _check_invariants(m, q, st, n_agents, DECK_COUNTS, deck)
    return count


@dataclass
class GameResult:
    deck: int
    goal_suit: int
    cash: List[float]
    payout: List[float]
    wealth: List[float]
    holdings: List[List[int]]
    trade_count: int
    diverged: List[bool]
    clamp_count: List[int]
    event_count: int
    end_time: float
    voided: int
    total_wealth: float
    seed: Optional[int] = None
    nonpositive_count: List[int] = field(default_factory=list)
    invariant_violations: int = 0
    trades: Optional[dict] = None
    expectations: Optional[dict] = None

    def row(self):
        """Flat, serializable summary (no logs)."""
        return {
            "seed": self.seed,
            "deck": self.deck,
            "goal_suit": self.goal_suit,
            "cash": self.cash,
            "payout": self.payout,
            "wealth": self.wealth,
            "holdings": self.holdings,
            "trade_count": self.trade_count,
            "diverged": self.diverged,
            "clamp_count": self.clamp_count,
            "event_count": self.event_count,
            "end_time": self.end_time,
            "voided": self.voided,
            "total_wealth": self.total_wealth,
            "nonpositive_count": self.nonpositive_count,
        }


def _trade_log(m):
    n = int(m.counts[1])
    return {
        "time": m.t_time[:n].copy(),
        "asset": m.t_asset[:n].copy(),
        "buyer": m.t_buyer[:n].copy(),
        "seller": m.t_seller[:n].copy(),
        "price": m.t_price[:n].copy(),
        "volume": m.t_volume[:n].copy(),
    }


def run_game(agents: List[AgentSpec], seed, events=DEFAULT_EVENTS, keep_trades=False,
             log_expectations=False, check_invariants=False) -> GameResult:
    """Simulate one game from ``seed`` (an integer) with four agents."""
    if len(agents) != N_PLAYERS:
        raise ValueError(f"Figgie needs exactly {N_PLAYERS} agents, got {len(agents)}")
    for a in agents:
        errs = a.validate()
        if errs:
            raise ValueError(f"agent {a.name or a.kind}: " + "; ".join(f"{f}: {msg}" for f, msg in errs))
    if events < 1:
        raise ValueError("events must be >= 1")
    agents = default_names([AgentSpec(**_spec_kwargs(a)) for a in agents])
    n = N_PLAYERS
    ag = pack_agents(agents)
    rstate = _rng.game_streams(seed, n)
    capacity = events + 1
    m = new_market(n, capacity)
    q = new_event_heap(n + 1)
    hist_width = int(max(ag.k.max(), 1))
    st = new_agent_state(n, capacity, hist_width, 4 * events + 4 if log_expectations else 1)

    with np.errstate(over="ignore"):
        deck = int(deal_into(rstate, _rng.DEAL_STREAM, DECK_COUNTS, m.hands))
        for a in range(n):
            set_cash(m, a, STARTING_CASH - ANTE)
            st.known[a, :, a] = m.hands[a]
        count = run_events(m, q, ag, st, rstate, n, events, log_expectations, check_invariants, deck)
    void_all(m)

    payout = np.zeros(n, np.float64)
    held = np.ascontiguousarray(m.hands[:, GOAL_SUIT[deck]])
    settle_into(held, MAJORITY_PAYOUT[deck], POT, payout)
    cash = [math.fsum(m.ledger[a, : m.ledger_n[a]]) for a in range(n)]
    partials = [float(x) for a in range(n) for x in m.ledger[a, : m.ledger_n[a]]]
    total = math.fsum(partials + [float(p) for p in payout])

    result = GameResult(
        deck=deck,
        goal_suit=int(GOAL_SUIT[deck]),
        cash=[float(c) for c in cash],
        payout=[float(p) for p in payout],
        wealth=[float(c + p) for c, p in zip(cash, payout)],
        holdings=m.hands.tolist(),
        trade_count=int(m.counts[1]),
        diverged=[bool(c > 0) for c in st.clamped],
        clamp_count=[int(c) for c in st.clamped],
        event_count=int(count),
        end_time=float(q.clock[0]),
        voided=int(m.counts[2]),
        total_wealth=total,
        seed=int(seed),
        nonpositive_count=[int(c) for c in st.nonpositive],
        invariant_violations=int(st.violations[0]),
    )
    if keep_trades:
        result.trades = _trade_log(m)
    if log_expectations:
        k = int(st.x_n[0])
        result.expectations = {
            "time": st.x_time[:k].copy(),
            "agent": st.x_agent[:k].copy(),
            "asset": st.x_asset[:k].copy(),
            "p_b": st.x_pb[:k].copy(),
            "p_s": st.x_ps[:k].copy(),
        }
    return result


def _spec_kwargs(a):
    return {k: (list(v) if isinstance(v, list) else v) for k, v in a.__dict__.items()}
