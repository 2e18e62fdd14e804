"""Limit order books for the four suits, with lazy deletion and inventory-aware matching.

State is a :class:`Market` namedtuple of flat arrays.  Each (asset, side) pair
has a binary heap of order ids: bids ordered by (highest price, earliest
placement), asks by (lowest price, earliest placement).  Deleted orders stay in
their heap until they surface at the top.
"""

from collections import namedtuple
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ._jit import njit

BUY = 0
SELL = 1
N_ASSETS = 4
LEDGER_WIDTH = 64

Market = namedtuple(
    "Market",
    [
        # orders
        "o_price", "o_placed", "o_agent", "o_side", "o_asset", "o_volume",
        "o_deleted", "o_live",
        # books: heap[asset * 2 + side, :]
        "heap", "heap_size",
        # accounts
        "hands", "cash", "ledger", "ledger_n",
        # trade log
        "t_time", "t_price", "t_asset", "t_buyer", "t_seller", "t_volume",
        # counters: [n_orders, n_trades, n_voided]
        "counts",
    ],
)


def new_market(n_agents, order_capacity, trade_capacity=None, hands=None, cash=None):
    if trade_capacity is None:
        trade_capacity = order_capacity
    m = Market(
        np.zeros(order_capacity, np.float64),
        np.zeros(order_capacity, np.float64),
        np.zeros(order_capacity, np.int64),
        np.zeros(order_capacity, np.int64),
        np.zeros(order_capacity, np.int64),
        np.zeros(order_capacity, np.int64),
        np.zeros(order_capacity, np.bool_),
        np.zeros(order_capacity, np.bool_),
        np.zeros((2 * N_ASSETS, order_capacity), np.int64),
        np.zeros(2 * N_ASSETS, np.int64),
        np.zeros((n_agents, N_ASSETS), np.int64),
        np.zeros(n_agents, np.float64),
        np.zeros((n_agents, LEDGER_WIDTH), np.float64),
        np.zeros(n_agents, np.int64),
        np.zeros(trade_capacity, np.float64),
        np.zeros(trade_capacity, np.float64),
        np.zeros(trade_capacity, np.int64),
        np.zeros(trade_capacity, np.int64),
        np.zeros(trade_capacity, np.int64),
        np.zeros(trade_capacity, np.int64),
        np.zeros(3, np.int64),
    )
    if hands is not None:
        m.hands[:] = hands
    if cash is not None:
        for a in range(n_agents):
            set_cash(m, a, float(cash[a]))
    return m


# -- exact cash ledger -------------------------------------------------------
# Each agent's cash is also kept as a non-overlapping expansion of doubles
# (Shewchuk's grow-expansion, as used by math.fsum), so cash conservation can
# be checked exactly even when prices reach 1e100.

@njit
def ledger_add(m, agent, x):
    p = m.ledger[agent]
    n = m.ledger_n[agent]
    i = 0
    for j in range(n):
        y = p[j]
        if abs(x) < abs(y):
            t = x
            x = y
            y = t
        hi = x + y
        lo = y - (hi - x)
        if lo != 0.0:
            p[i] = lo
            i += 1
        x = hi
    if i >= p.shape[0]:
        raise ValueError("ledger expansion overflow")
    p[i] = x
    m.ledger_n[agent] = i + 1


@njit
def set_cash(m, agent, value):
    m.ledger_n[agent] = 0
    ledger_add(m, agent, value)
    m.cash[agent] = value


@njit
def transfer_cash(m, payer, payee, amount):
    m.cash[payer] -= amount
    m.cash[payee] += amount
    ledger_add(m, payer, -amount)
    ledger_add(m, payee, amount)


def ledger_partials(m, agent):
    return [float(x) for x in m.ledger[agent, : m.ledger_n[agent]]]


# -- heaps ---------------------------------------------------------------------

@njit
def _before(m, side, a, b):
    pa = m.o_price[a]
    pb = m.o_price[b]
    if pa != pb:
        if side == BUY:
            return pa > pb
        return pa < pb
    ta = m.o_placed[a]
    tb = m.o_placed[b]
    if ta != tb:
        return ta < tb
    return a < b


@njit
def _heap_push(m, h, oid):
    side = h % 2
    heap = m.heap[h]
    i = m.heap_size[h]
    heap[i] = oid
    m.heap_size[h] = i + 1
    while i > 0:
        parent = (i - 1) // 2
        if _before(m, side, heap[i], heap[parent]):
            t = heap[i]
            heap[i] = heap[parent]
            heap[parent] = t
            i = parent
        else:
            break


@njit
def _heap_pop(m, h):
    side = h % 2
    heap = m.heap[h]
    n = m.heap_size[h] - 1
    top = heap[0]
    heap[0] = heap[n]
    m.heap_size[h] = n
    i = 0
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        child = left
        if left + 1 < n and _before(m, side, heap[left + 1], heap[left]):
            child = left + 1
        if _before(m, side, heap[child], heap[i]):
            t = heap[i]
            heap[i] = heap[child]
            heap[child] = t
            i = child
        else:
            break
    return top


@njit
def book_top(m, asset, side):
    """Id of the best live order on one side, or -1.  Drops deleted orders found on top."""
    h = asset * 2 + side
    while m.heap_size[h] > 0:
        oid = m.heap[h, 0]
        if m.o_deleted[oid]:
            _heap_pop(m, h)
            m.o_live[oid] = False
        else:
            return oid
    return -1


@njit
def best_price(m, asset, side):
    oid = book_top(m, asset, side)
    if oid < 0:
        return np.nan
    return m.o_price[oid]


@njit
def new_order(m, agent, side, asset, price, volume):
    """Allocate an order (not yet in the book) and return its id."""
    oid = m.counts[0]
    if oid >= m.o_price.shape[0]:
        raise ValueError("order capacity exceeded")
    m.counts[0] = oid + 1
    m.o_agent[oid] = agent
    m.o_side[oid] = side
    m.o_asset[oid] = asset
    m.o_price[oid] = price
    m.o_volume[oid] = volume
    m.o_placed[oid] = np.inf
    m.o_deleted[oid] = False
    m.o_live[oid] = False
    return oid


@njit
def mark_deleted(m, oid):
    if oid < 0 or oid >= m.counts[0]:
        raise ValueError("unknown order id")
    m.o_deleted[oid] = True


@njit
def place_order(m, oid, now):
    """Add an order to its book and run the matching loop.  Returns the number of trades."""
    asset = m.o_asset[oid]
    m.o_placed[oid] = now
    m.o_live[oid] = True
    _heap_push(m, asset * 2 + m.o_side[oid], oid)
    hb = asset * 2 + BUY
    hs = asset * 2 + SELL
    n_new = 0
    while True:
        b = book_top(m, asset, BUY)
        if b < 0:
            break
        s = book_top(m, asset, SELL)
        if s < 0:
            break
        bp = m.o_price[b]
        if bp < m.o_price[s]:
            break
        _heap_pop(m, hb)
        _heap_pop(m, hs)
        buyer = m.o_agent[b]
        seller = m.o_agent[s]
        v = min(m.o_volume[b], m.o_volume[s], m.hands[seller, asset])
        if v > 0:
            m.hands[seller, asset] -= v
            m.hands[buyer, asset] += v
            transfer_cash(m, buyer, seller, v * bp)
            k = m.counts[1]
            if k >= m.t_time.shape[0]:
                raise ValueError("trade capacity exceeded")
            m.t_time[k] = now
            m.t_price[k] = bp
            m.t_asset[k] = asset
            m.t_buyer[k] = buyer
            m.t_seller[k] = seller
            m.t_volume[k] = v
            m.counts[1] = k + 1
            n_new += 1
            m.o_volume[b] -= v
            m.o_volume[s] -= v
            if m.o_volume[b] > 0:
                _heap_push(m, hb, b)
            else:
                m.o_live[b] = False
            if m.o_volume[s] > 0:
                _heap_push(m, hs, s)
            else:
                m.o_live[s] = False
        else:
            # seller holds none of the asset: void the ask, the bid keeps matching
            m.o_live[s] = False
            m.counts[2] += 1
            _heap_push(m, hb, b)
    return n_new


@njit
def void_all(m):
    """End of game: every resting order is dropped."""
    for h in range(m.heap_size.shape[0]):
        for i in range(m.heap_size[h]):
            m.o_live[m.heap[h, i]] = False
        m.heap_size[h] = 0


# -- Python-facing objects ----------------------------------------------------------

@dataclass
class Order:
    agent: int
    side: int
    asset: int
    price: float
    volume: int = 1
    id: int = -1
    placed_at: float = float("nan")
    deleted: bool = False

    def __post_init__(self):
        if self.side not in (BUY, SELL):
            raise ValueError(f"side must be BUY (0) or SELL (1), got {self.side}")
        if not 0 <= self.asset < N_ASSETS:
            raise ValueError(f"asset must be in 0..3, got {self.asset}")
        if not self.price >= 0:
            raise ValueError(f"price must be >= 0, got {self.price}")
        if self.volume < 1:
            raise ValueError(f"volume must be >= 1, got {self.volume}")


@dataclass(frozen=True)
class Trade:
    time: float
    asset: int
    buyer: int
    seller: int
    price: float
    volume: int


def trades_from_market(m, start=0, stop=None):
    if stop is None:
        stop = int(m.counts[1])
    return [
        Trade(float(m.t_time[k]), int(m.t_asset[k]), int(m.t_buyer[k]), int(m.t_seller[k]),
              float(m.t_price[k]), int(m.t_volume[k]))
        for k in range(start, stop)
    ]


class Exchange:
    """Four order books plus the participants' hands and cash.

    >>> ex = Exchange(hands=[[0, 0, 0, 0], [1, 0, 0, 0]], cash=[100.0, 100.0])
    >>> ex.add_order(Order(agent=1, side=SELL, asset=0, price=8.0))
    []
    >>> [t.price for t in ex.add_order(Order(agent=0, side=BUY, asset=0, price=10.0))]
    [10.0]
    """

    def __init__(self, hands, cash, capacity=1024):
        hands = np.asarray(hands, dtype=np.int64)
        self.n_agents = hands.shape[0]
        self.market = new_market(self.n_agents, capacity, hands=hands, cash=cash)
        self.orders: List[Order] = []
        self.clock = 0.0

    @property
    def hands(self):
        return self.market.hands

    @property
    def cash(self):
        return self.market.cash

    @property
    def voided(self):
        return int(self.market.counts[2])

    def add_order(self, order: Order, now: Optional[float] = None) -> List[Trade]:
        if now is None:
            now = self.clock
            self.clock += 1.0
        m = self.market
        oid = new_order(m, order.agent, order.side, order.asset, float(order.price), order.volume)
        order.id = int(oid)
        order.placed_at = float(now)
        self.orders.append(order)
        start = int(m.counts[1])
        place_order(m, oid, float(now))
        return trades_from_market(m, start)

    def best_bid(self, asset) -> Optional[float]:
        p = best_price(self.market, asset, BUY)
        return None if np.isnan(p) else float(p)

    def best_ask(self, asset) -> Optional[float]:
        p = best_price(self.market, asset, SELL)
        return None if np.isnan(p) else float(p)

    def mark_deleted(self, order_id):
        if not 0 <= order_id < len(self.orders):
            raise KeyError(f"unknown order id {order_id}")
        mark_deleted(self.market, order_id)
        self.orders[order_id].deleted = True

    def remaining_volume(self, order_id):
        return int(self.market.o_volume[order_id])

    def resting(self, asset, side):
        """Live, non-deleted orders on one side, best first."""
        m = self.market
        h = asset * 2 + side
        ids = [int(i) for i in m.heap[h, : m.heap_size[h]] if not m.o_deleted[i]]
        sign = -1.0 if side == BUY else 1.0
        return sorted(ids, key=lambda i: (sign * m.o_price[i], m.o_placed[i], i))
