"""The twelve Figgie deck compositions, dealing, and end-of-game settlement."""

from dataclasses import dataclass

import numpy as np

from ._jit import njit
from . import rng as _rng

SPADES, CLUBS, HEARTS, DIAMONDS = range(4)
SUIT_NAMES = ("spades", "clubs", "hearts", "diamonds")
N_DECKS = 12
N_SUITS = 4
HAND_SIZE = 10
DECK_SIZE = 40
CARD_PAYOUT = 10.0
POT = 200.0
STARTING_CASH = 350.0
ANTE = 50.0

# rows: spades, clubs, hearts, diamonds
DECK_COUNTS = np.array(
    [
        [12, 8, 10, 10],
        [12, 10, 8, 10],
        [12, 10, 10, 8],
        [8, 12, 10, 10],
        [10, 12, 8, 10],
        [10, 12, 10, 8],
        [8, 10, 12, 10],
        [10, 8, 12, 10],
        [10, 10, 12, 8],
        [8, 10, 10, 12],
        [10, 8, 10, 12],
        [10, 10, 8, 12],
    ],
    dtype=np.int64,
)

# same-colour partner: spades<->clubs, hearts<->diamonds
PARTNER = np.array([CLUBS, SPADES, DIAMONDS, HEARTS], dtype=np.int64)
COMMON_SUIT = np.argmax(DECK_COUNTS, axis=1).astype(np.int64)
GOAL_SUIT = PARTNER[COMMON_SUIT]
GOAL_COUNT = DECK_COUNTS[np.arange(N_DECKS), GOAL_SUIT]
MAJORITY_THRESHOLD = np.where(GOAL_COUNT == 8, 5, 6).astype(np.int64)
MAJORITY_PAYOUT = np.where(GOAL_COUNT == 8, 120.0, 100.0)


@dataclass(frozen=True)
class DeckSpec:
    index: int
    counts: tuple
    common_suit: int
    goal_suit: int
    majority_threshold: int
    majority_payout: float


DECKS = tuple(
    DeckSpec(
        i,
        tuple(int(c) for c in DECK_COUNTS[i]),
        int(COMMON_SUIT[i]),
        int(GOAL_SUIT[i]),
        int(MAJORITY_THRESHOLD[i]),
        float(MAJORITY_PAYOUT[i]),
    )
    for i in range(N_DECKS)
)


@njit
def deal_into(state, stream, deck_counts, hands):
    """Pick a deck uniformly, shuffle its 40 cards and deal 10 to each of 4 hands."""
    deck = _rng.randint(state, stream, deck_counts.shape[0])
    cards = np.empty(DECK_SIZE, np.int64)
    k = 0
    for suit in range(N_SUITS):
        for _ in range(deck_counts[deck, suit]):
            cards[k] = suit
            k += 1
    for i in range(DECK_SIZE - 1, 0, -1):
        j = _rng.randint(state, stream, i + 1)
        t = cards[i]
        cards[i] = cards[j]
        cards[j] = t
    hands[:, :] = 0
    for k in range(DECK_SIZE):
        hands[k // HAND_SIZE, cards[k]] += 1
    return deck


@njit
def settle_into(goal_count_held, majority_payout, pot, out):
    """Per-card payout plus the majority remainder split among strict leaders."""
    n = goal_count_held.shape[0]
    paid = 0.0
    best = -1
    for a in range(n):
        out[a] = CARD_PAYOUT * goal_count_held[a]
        paid += out[a]
        if goal_count_held[a] > best:
            best = goal_count_held[a]
    n_lead = 0
    for a in range(n):
        if goal_count_held[a] == best:
            n_lead += 1
    share = (pot - paid) / n_lead
    for a in range(n):
        if goal_count_held[a] == best:
            out[a] += share


def select_and_deal(stream):
    """Returns ``(DeckSpec, hands)`` using a :class:`figgie.rng.Stream`."""
    hands = np.zeros((4, N_SUITS), np.int64)
    with np.errstate(over="ignore"):
        deck = deal_into(stream.state, 0, DECK_COUNTS, hands)
    return DECKS[int(deck)], hands


def settle(deck, hands, pot=POT):
    """Payouts from the pot for a finished game."""
    if isinstance(deck, int):
        deck = DECKS[deck]
    hands = np.asarray(hands, dtype=np.int64)
    held = np.ascontiguousarray(hands[:, deck.goal_suit])
    out = np.zeros(hands.shape[0], np.float64)
    settle_into(held, deck.majority_payout, float(pot), out)
    return out
