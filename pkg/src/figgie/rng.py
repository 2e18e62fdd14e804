"""Counter-free xoshiro256** streams usable from inside jitted kernels.

A game owns one ``(n_streams, 4)`` uint64 state array.  Row 0 is the dealing
stream; agent ``i`` owns row ``1 + i`` for consideration delays and row
``1 + n_agents + i`` for strategy randomness.  Each row is seeded from its own
``SeedSequence`` spawn key, so adding an agent never changes another agent's
draws.
"""

import math

import numpy as np

from ._jit import njit

DEAL_STREAM = 0

_KEY_DEAL = 0
_KEY_DELAY = 1
_KEY_STRATEGY = 2

_U53 = 1.0 / 9007199254740992.0


@njit
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit
def next_u64(state, s):
    s0 = state[s, 0]
    s1 = state[s, 1]
    s2 = state[s, 2]
    s3 = state[s, 3]
    result = _rotl(s1 * np.uint64(5), 7) * np.uint64(9)
    t = s1 << np.uint64(17)
    s2 ^= s0
    s3 ^= s1
    s1 ^= s2
    s0 ^= s3
    s2 ^= t
    s3 = _rotl(s3, 45)
    state[s, 0] = s0
    state[s, 1] = s1
    state[s, 2] = s2
    state[s, 3] = s3
    return result


@njit
def uniform(state, s):
    """Float in [0, 1) with 53 random bits."""
    return float(next_u64(state, s) >> np.uint64(11)) * _U53


@njit
def randint(state, s, n):
    """Integer in [0, n)."""
    k = int(uniform(state, s) * n)
    return k if k < n else n - 1


@njit
def exponential(state, s, rate):
    """Exp(rate) sample, mean 1/rate."""
    return -math.log(1.0 - uniform(state, s)) / rate


@njit
def standard_normal(state, s):
    # Box-Muller, cosine branch only: one normal per two uniforms keeps the
    # stream position independent of call history.
    u1 = 1.0 - uniform(state, s)
    u2 = uniform(state, s)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def stream_state(seed, key):
    """Seed a single stream from ``(seed, key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    words = ss.generate_state(4, np.uint64)
    if not words.any():  # xoshiro's only forbidden state
        words[0] = np.uint64(0x9E3779B97F4A7C15)
    return words


def game_streams(seed, n_agents):
    """State array for one game: deal stream, then per-agent delay and strategy streams."""
    state = np.empty((1 + 2 * n_agents, 4), dtype=np.uint64)
    state[DEAL_STREAM] = stream_state(seed, (_KEY_DEAL,))
    for i in range(n_agents):
        state[1 + i] = stream_state(seed, (_KEY_DELAY, i))
        state[1 + n_agents + i] = stream_state(seed, (_KEY_STRATEGY, i))
    return state


def delay_stream(agent):
    return 1 + agent


def strategy_stream(agent, n_agents):
    return 1 + n_agents + agent


def game_seed(master_seed, game_index):
    """Stable per-game seed: first 64-bit word of ``SeedSequence([master_seed, game_index])``."""
    ss = np.random.SeedSequence([int(master_seed), int(game_index)])
    return int(ss.generate_state(1, np.uint64)[0])


class Stream:
    """Single stream wrapper for use outside kernels (tests, helpers)."""

    def __init__(self, seed, key=(0,)):
        self.state = stream_state(seed, key).reshape(1, 4).copy()

    def uniform(self):
        with np.errstate(over="ignore"):
            return uniform(self.state, 0)

    def exponential(self, rate):
        with np.errstate(over="ignore"):
            return exponential(self.state, 0, rate)

    def normal(self):
        with np.errstate(over="ignore"):
            return standard_normal(self.state, 0)
