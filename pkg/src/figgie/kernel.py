"""Discrete-event core: a binary min-heap of events keyed by ``(time, seq)``.

Events live in parallel arrays bundled in an :class:`EventHeap` namedtuple so
the same functions run inside the jitted game loop and from plain Python.
"""

from collections import namedtuple
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._jit import njit
from . import rng as _rng

CONSIDERATION = 0
ADD_ORDER = 1

# meta[0] = size, meta[1] = next insertion counter
EventHeap = namedtuple("EventHeap", ["time", "seq", "kind", "agent", "order", "meta", "clock"])


def new_event_heap(capacity):
    return EventHeap(
        np.zeros(capacity, np.float64),
        np.zeros(capacity, np.int64),
        np.zeros(capacity, np.int64),
        np.zeros(capacity, np.int64),
        np.zeros(capacity, np.int64),
        np.zeros(2, np.int64),
        np.zeros(1, np.float64),
    )


@njit
def _ev_less(q, a, b):
    if q.time[a] < q.time[b]:
        return True
    if q.time[a] > q.time[b]:
        return False
    return q.seq[a] < q.seq[b]


@njit
def _ev_swap(q, a, b):
    t = q.time[a]
    q.time[a] = q.time[b]
    q.time[b] = t
    s = q.seq[a]
    q.seq[a] = q.seq[b]
    q.seq[b] = s
    k = q.kind[a]
    q.kind[a] = q.kind[b]
    q.kind[b] = k
    g = q.agent[a]
    q.agent[a] = q.agent[b]
    q.agent[b] = g
    o = q.order[a]
    q.order[a] = q.order[b]
    q.order[b] = o


@njit
def ev_push(q, time, kind, agent, order):
    """Insert an event; returns its insertion counter."""
    if time < q.clock[0]:
        raise ValueError("event scheduled before the current clock")
    n = q.meta[0]
    if n >= q.time.shape[0]:
        raise ValueError("event heap capacity exceeded")
    seq = q.meta[1]
    q.meta[1] = seq + 1
    q.time[n] = time
    q.seq[n] = seq
    q.kind[n] = kind
    q.agent[n] = agent
    q.order[n] = order
    q.meta[0] = n + 1
    i = n
    while i > 0:
        parent = (i - 1) // 2
        if _ev_less(q, i, parent):
            _ev_swap(q, i, parent)
            i = parent
        else:
            break
    return seq


@njit
def ev_pop(q):
    """Remove the minimum event, advance the clock, return its fields."""
    n = q.meta[0]
    if n == 0:
        raise ValueError("pop from empty event heap")
    time = q.time[0]
    seq = q.seq[0]
    kind = q.kind[0]
    agent = q.agent[0]
    order = q.order[0]
    n -= 1
    q.meta[0] = n
    if n > 0:
        _ev_swap(q, 0, n)
        i = 0
        while True:
            left = 2 * i + 1
            if left >= n:
                break
            child = left
            right = left + 1
            if right < n and _ev_less(q, right, left):
                child = right
            if _ev_less(q, child, i):
                _ev_swap(q, child, i)
                i = child
            else:
                break
    q.clock[0] = time
    return time, seq, kind, agent, order


@njit
def order_arrival_time(now, latency):
    # Decision at `now` stands for a view of the market at t0 - latency;
    # the order reaches the book at t0 + latency.
    return now + 2.0 * latency


@dataclass(frozen=True)
class AgentTiming:
    consideration_rate: float = 1.0
    latency: float = 0.0

    def __post_init__(self):
        if not self.consideration_rate > 0:
            raise ValueError(f"consideration_rate must be > 0, got {self.consideration_rate}")
        if not self.latency >= 0:
            raise ValueError(f"latency must be >= 0, got {self.latency}")


@dataclass(frozen=True)
class Event:
    time: float
    kind: int
    agent: int
    order: Optional[object] = None
    seq: int = -1


class EventQueue:
    """Time-ordered event queue with FIFO tie-breaking."""

    def __init__(self, capacity=64):
        self._heap = new_event_heap(capacity)
        self._orders = {}

    def __len__(self):
        return int(self._heap.meta[0])

    @property
    def clock(self):
        return float(self._heap.clock[0])

    def push(self, event):
        if len(self) == self._heap.time.shape[0]:
            self._grow()
        seq = ev_push(self._heap, float(event.time), event.kind, event.agent, 0)
        self._orders[seq] = event.order
        return seq

    def pop(self):
        time, seq, kind, agent, _ = ev_pop(self._heap)
        return Event(float(time), int(kind), int(agent), self._orders.pop(int(seq)), int(seq))

    def pending(self):
        """Snapshot of pending events (unordered)."""
        n = len(self)
        h = self._heap
        return [
            Event(float(h.time[i]), int(h.kind[i]), int(h.agent[i]), self._orders[int(h.seq[i])], int(h.seq[i]))
            for i in range(n)
        ]

    def _grow(self):
        old = self._heap
        new = new_event_heap(2 * old.time.shape[0])
        n = int(old.meta[0])
        for a, b in zip(old[:5], new[:5]):
            b[:n] = a[:n]
        new.meta[:] = old.meta
        new.clock[:] = old.clock
        self._heap = new


def schedule(queue, event):
    """Insert ``event``; rejects events earlier than the queue clock."""
    queue.push(event)
    return queue


def next_consideration_delay(rate, stream):
    """Exponential waiting time with mean ``1/rate`` drawn from ``stream``."""
    if not rate > 0:
        raise ValueError(f"rate must be > 0, got {rate}")
    return stream.exponential(rate)


def schedule_order_arrival(agent, now, order, agent_id=0):
    """AddOrder event for an order decided at ``now`` by an agent with ``agent.latency``."""
    return Event(order_arrival_time(float(now), float(agent.latency)), ADD_ORDER, agent_id, order)


def reschedule_consideration(agent_id, completion_time, stream, rate=1.0):
    return Event(completion_time + next_consideration_delay(rate, stream), CONSIDERATION, agent_id)


def make_stream(seed, key=(0,)):
    return _rng.Stream(seed, key)
