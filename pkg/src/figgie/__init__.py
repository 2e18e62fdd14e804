"""Deterministic agent-based simulator of the Figgie card-trading game."""

from .agents import AgentSpec
from .config import ExperimentConfig, ConfigError, parse_config, load_config
from .exchange import Exchange, Order, Trade, BUY, SELL
from .game import run_game, GameResult
from .harness import ResultsFile, run_experiment, replay
from ._jit import JIT_ENABLED

__all__ = [
    "AgentSpec", "ExperimentConfig", "ConfigError", "parse_config", "load_config",
    "Exchange", "Order", "Trade", "BUY", "SELL", "run_game", "GameResult",
    "ResultsFile", "run_experiment", "replay", "JIT_ENABLED",
]
