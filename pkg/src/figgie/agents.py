"""Declarative agent descriptions and their packing into kernel arrays."""

from collections import namedtuple
from dataclasses import dataclass, field, asdict
from typing import List, Optional

import numpy as np

from .kernel import AgentTiming
from .strategies import DIVERGENCE_CAP, PRICE_SOURCES, KIND_NAMES, VARIANT_NAMES

AgentArrays = namedtuple(
    "AgentArrays",
    ["kind", "rate", "latency", "sigma", "r", "k", "prey", "variant", "tau", "cap", "volume", "source"],
)

KIND_ALIASES = {
    "noise": "noise",
    "n": "noise",
    "fundamentalist": "fundamentalist",
    "f": "fundamentalist",
    "bottom_feeder": "bottom_feeder",
    "bottom-feeder": "bottom_feeder",
    "b": "bottom_feeder",
    "chartist": "chartist",
    "c": "chartist",
}


@dataclass
class AgentSpec:
    kind: str
    name: str = ""
    consideration_rate: float = 1.0
    latency: float = 0.0
    volume: int = 1
    # noise
    sigma: float = 1.0
    # fundamentalist
    r: float = 2.0
    # bottom-feeder; prey are agent names or indices
    prey: List = field(default_factory=list)
    k: int = 4
    # chartist
    variant: str = "telescoped"
    tau: int = 5
    cap: float = DIVERGENCE_CAP
    price_source: str = "orders"

    def __post_init__(self):
        kind = KIND_ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        self.kind = kind

    def validate(self):
        """List of ``(field, message)`` problems; empty when valid."""
        errs = []
        try:
            AgentTiming(self.consideration_rate, self.latency)
        except ValueError as e:
            errs.append(("consideration_rate" if "rate" in str(e) else "latency", str(e)))
        if int(self.volume) < 1:
            errs.append(("volume", "must be >= 1"))
        if self.kind == "noise" and not self.sigma >= 0:
            errs.append(("sigma", "must be >= 0"))
        if self.kind == "fundamentalist" and not self.r > 1:
            errs.append(("r", "must be > 1"))
        if self.kind == "bottom_feeder":
            if int(self.k) < 1:
                errs.append(("k", "must be >= 1"))
            if not self.prey:
                errs.append(("prey", "bottom-feeder needs at least one prey"))
        if self.kind == "chartist":
            if self.variant not in VARIANT_NAMES:
                errs.append(("variant", f"must be one of {VARIANT_NAMES}"))
            if int(self.tau) < 2:
                errs.append(("tau", "must be >= 2"))
            if self.price_source not in PRICE_SOURCES:
                errs.append(("price_source", f"must be one of {PRICE_SOURCES}"))
            if not (np.isfinite(self.cap) and self.cap > 0):
                errs.append(("cap", "must be finite and > 0"))
        return errs

    def to_dict(self):
        """Only the fields relevant to this kind, plus timing."""
        d = asdict(self)
        keep = {"kind", "name", "consideration_rate", "latency", "volume"}
        keep |= {
            "noise": {"sigma"},
            "fundamentalist": {"r"},
            "bottom_feeder": {"prey", "k"},
            "chartist": {"variant", "tau", "cap", "price_source"},
        }[self.kind]
        return {k: v for k, v in d.items() if k in keep}


def default_names(agents):
    """Fill empty names as f0, n0, n1, ... per kind."""
    counts = {}
    for a in agents:
        if a.name:
            continue
        letter = {"noise": "n", "fundamentalist": "f", "bottom_feeder": "b", "chartist": "c"}[a.kind]
        i = counts.get(letter, 0)
        counts[letter] = i + 1
        a.name = f"{letter}{i}"
    return agents


def resolve_prey(agents, spec):
    names = [a.name for a in agents]
    out = []
    for p in spec.prey:
        if isinstance(p, (int, np.integer)) and not isinstance(p, bool):
            if not 0 <= p < len(agents):
                raise ValueError(f"prey index {p} out of range")
            out.append(int(p))
        elif p in names:
            out.append(names.index(p))
        else:
            raise ValueError(f"unknown prey {p!r}")
    return out


def pack_agents(agents: List[AgentSpec]) -> AgentArrays:
    n = len(agents)
    prey = np.zeros((n, n), np.bool_)
    for i, a in enumerate(agents):
        if a.kind == "bottom_feeder":
            for p in resolve_prey(agents, a):
                prey[i, p] = True
    return AgentArrays(
        np.array([KIND_NAMES.index(a.kind) for a in agents], np.int64),
        np.array([a.consideration_rate for a in agents], np.float64),
        np.array([a.latency for a in agents], np.float64),
        np.array([a.sigma for a in agents], np.float64),
        np.array([a.r for a in agents], np.float64),
        np.array([a.k for a in agents], np.int64),
        prey,
        np.array([VARIANT_NAMES.index(a.variant) if a.variant in VARIANT_NAMES else 0 for a in agents], np.int64),
        np.array([a.tau for a in agents], np.int64),
        np.array([a.cap for a in agents], np.float64),
        np.array([a.volume for a in agents], np.int64),
        np.array([PRICE_SOURCES.index(a.price_source) for a in agents], np.int64),
    )
