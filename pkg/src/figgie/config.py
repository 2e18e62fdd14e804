"""Experiment configuration: JSON parsing with field-level diagnostics."""

import json
import math
from dataclasses import dataclass, field
from typing import List, Optional

from .agents import AgentSpec, KIND_ALIASES, default_names, resolve_prey
from .game import N_PLAYERS, DEFAULT_EVENTS

SCHEMA_VERSION = 1

AGENT_FIELDS = {
    "common": {"kind", "name", "consideration_rate", "latency", "volume"},
    "noise": {"sigma"},
    "fundamentalist": {"r"},
    "bottom_feeder": {"prey", "k"},
    "chartist": {"variant", "tau", "cap", "price_source"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists ``(path, message)`` pairs."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("\n".join(f"{p}: {m}" for p, m in self.problems))


@dataclass
class AnalysisDirectives:
    summaries: bool = True
    bootstrap: List[List[str]] = field(default_factory=list)
    # None means trade-by-trade returns
    acf_periods: List[Optional[float]] = field(default_factory=list)
    acf_max_lag: int = 20
    acf_asset: object = "goal"
    bootstrap_resamples: int = 10_000
    alpha: float = 0.05

    def to_dict(self):
        return {
            "summaries": self.summaries,
            "bootstrap": [list(p) for p in self.bootstrap],
            "acf_periods": list(self.acf_periods),
            "acf_max_lag": self.acf_max_lag,
            "acf_asset": self.acf_asset,
            "bootstrap_resamples": self.bootstrap_resamples,
            "alpha": self.alpha,
        }


@dataclass
class ExperimentConfig:
    experiment_id: str
    agents: List[AgentSpec]
    games: int = 100
    events: int = DEFAULT_EVENTS
    master_seed: int = 0
    keep_trades: bool = True
    analysis: AnalysisDirectives = field(default_factory=AnalysisDirectives)
    schema_version: int = SCHEMA_VERSION

    @property
    def agent_names(self):
        return [a.name for a in self.agents]

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "experiment_id": self.experiment_id,
            "games": self.games,
            "events": self.events,
            "master_seed": self.master_seed,
            "keep_trades": self.keep_trades,
            "agents": [a.to_dict() for a in self.agents],
            "analysis": self.analysis.to_dict(),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        return parse_config(d)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError([("<json>", str(e))]) from None
        return parse_config(d)


def load_config(path):
    with open(path) as fh:
        return ExperimentConfig.from_json(fh.read())


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check(problems, path, ok, msg):
    if not ok:
        problems.append((path, msg))
    return ok


def _parse_agent(d, path, problems):
    if not _check(problems, path, isinstance(d, dict), "must be an object"):
        return None
    kind = KIND_ALIASES.get(str(d.get("kind", "")).lower())
    if kind is None:
        problems.append((f"{path}.kind", f"unknown or missing strategy kind {d.get('kind')!r}"))
        return None
    allowed = AGENT_FIELDS["common"] | AGENT_FIELDS[kind]
    for k in d:
        if k not in allowed:
            problems.append((f"{path}.{k}", f"unknown field for a {kind} agent"))
    kwargs = {k: v for k, v in d.items() if k in allowed}
    kwargs["kind"] = kind
    types = {
        "name": (lambda v: isinstance(v, str), "must be a string"),
        "consideration_rate": (_is_num, "must be a number"),
        "latency": (_is_num, "must be a number"),
        "volume": (_is_int, "must be an integer"),
        "sigma": (_is_num, "must be a number"),
        "r": (_is_num, "must be a number"),
        "k": (_is_int, "must be an integer"),
        "tau": (_is_int, "must be an integer"),
        "cap": (_is_num, "must be a number"),
        "variant": (lambda v: isinstance(v, str), "must be a string"),
        "price_source": (lambda v: isinstance(v, str), "must be a string"),
        "prey": (lambda v: isinstance(v, list) and all(isinstance(p, str) or _is_int(p) for p in v),
                 "must be a list of agent names or indices"),
    }
    bad = False
    for k, v in kwargs.items():
        if k in types and not types[k][0](v):
            problems.append((f"{path}.{k}", types[k][1]))
            bad = True
    if bad:
        return None
    if "cap" in kwargs:
        kwargs["cap"] = float(kwargs["cap"])
    for k in ("consideration_rate", "latency", "sigma", "r"):
        if k in kwargs:
            kwargs[k] = float(kwargs[k])
    spec = AgentSpec(**kwargs)
    for f, msg in spec.validate():
        problems.append((f"{path}.{f}", msg))
    return spec


def _parse_analysis(d, problems, names):
    path = "analysis"
    out = AnalysisDirectives()
    if d is None:
        return out
    if not _check(problems, path, isinstance(d, dict), "must be an object"):
        return out
    known = set(out.to_dict())
    for k in d:
        if k not in known:
            problems.append((f"{path}.{k}", "unknown field"))
    if "summaries" in d:
        if _check(problems, f"{path}.summaries", isinstance(d["summaries"], bool), "must be true or false"):
            out.summaries = d["summaries"]
    if "bootstrap" in d:
        pairs = d["bootstrap"]
        if _check(problems, f"{path}.bootstrap", isinstance(pairs, list), "must be a list of [A, B] pairs"):
            for i, p in enumerate(pairs):
                pp = f"{path}.bootstrap[{i}]"
                if not (isinstance(p, list) and len(p) == 2 and all(isinstance(x, str) for x in p)):
                    problems.append((pp, "must be a pair of agent names"))
                    continue
                for x in p:
                    _check(problems, pp, x in names, f"unknown agent {x!r}")
                _check(problems, pp, p[0] != p[1], "pair must name two different agents")
                out.bootstrap.append(list(p))
    if "acf_periods" in d:
        per = d["acf_periods"]
        if _check(problems, f"{path}.acf_periods", isinstance(per, list), "must be a list"):
            for i, p in enumerate(per):
                ok = p is None or (_is_num(p) and p > 0)
                if _check(problems, f"{path}.acf_periods[{i}]", ok, "must be null or a positive number"):
                    out.acf_periods.append(None if p is None else float(p))
    if "acf_max_lag" in d:
        v = d["acf_max_lag"]
        if _check(problems, f"{path}.acf_max_lag", _is_int(v) and v >= 1, "must be an integer >= 1"):
            out.acf_max_lag = v
    if "acf_asset" in d:
        v = d["acf_asset"]
        if _check(problems, f"{path}.acf_asset", v == "goal" or (_is_int(v) and 0 <= v < 4),
                  'must be "goal" or a suit index 0..3'):
            out.acf_asset = v
    if "bootstrap_resamples" in d:
        v = d["bootstrap_resamples"]
        if _check(problems, f"{path}.bootstrap_resamples", _is_int(v) and v >= 1, "must be an integer >= 1"):
            out.bootstrap_resamples = v
    if "alpha" in d:
        v = d["alpha"]
        if _check(problems, f"{path}.alpha", _is_num(v) and 0 < v < 1, "must be in (0, 1)"):
            out.alpha = float(v)
    return out


def parse_config(d) -> ExperimentConfig:
    """Validate a decoded JSON object; raises ConfigError listing every problem found."""
    problems = []
    if not isinstance(d, dict):
        raise ConfigError([("<root>", "must be an object")])
    known = {"schema_version", "experiment_id", "games", "events", "master_seed", "keep_trades", "agents", "analysis"}
    for k in d:
        if k not in known:
            problems.append((k, "unknown field"))
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        problems.append(("schema_version", f"must be {SCHEMA_VERSION}, got {version!r}"))
    exp_id = d.get("experiment_id")
    _check(problems, "experiment_id", isinstance(exp_id, str) and exp_id != "", "must be a non-empty string")
    games = d.get("games", 100)
    _check(problems, "games", _is_int(games) and games >= 1, "must be an integer >= 1")
    events = d.get("events", DEFAULT_EVENTS)
    _check(problems, "events", _is_int(events) and events >= 1, "must be an integer >= 1")
    seed = d.get("master_seed", 0)
    _check(problems, "master_seed", _is_int(seed) and seed >= 0, "must be a non-negative integer")
    keep = d.get("keep_trades", True)
    _check(problems, "keep_trades", isinstance(keep, bool), "must be true or false")

    agents = []
    raw = d.get("agents")
    if _check(problems, "agents", isinstance(raw, list), "must be a list of agent objects"):
        _check(problems, "agents", len(raw) == N_PLAYERS,
               f"Figgie is played by exactly {N_PLAYERS} agents, got {len(raw)}")
        for i, a in enumerate(raw):
            spec = _parse_agent(a, f"agents[{i}]", problems)
            if spec is not None:
                agents.append(spec)
    names = []
    if len(agents) == len(raw or []):
        default_names(agents)
        names = [a.name for a in agents]
        for i, n in enumerate(names):
            if names.index(n) != i:
                problems.append((f"agents[{i}].name", f"duplicate agent name {n!r}"))
        for i, a in enumerate(agents):
            try:
                idx = resolve_prey(agents, a)
            except ValueError as e:
                problems.append((f"agents[{i}].prey", str(e)))
                continue
            if i in idx:
                problems.append((f"agents[{i}].prey", "an agent cannot prey on itself"))
    analysis = _parse_analysis(d.get("analysis"), problems, names)
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        experiment_id=exp_id, agents=agents, games=games, events=events, master_seed=seed,
        keep_trades=keep, analysis=analysis,
    )
