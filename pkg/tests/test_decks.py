import numpy as np
import pytest

from figgie.decks import DECK_COUNTS, DECKS, GOAL_SUIT, SPADES, CLUBS, HEARTS, DIAMONDS, select_and_deal, settle
from figgie.rng import Stream


def test_deck_table_shape():
    assert DECK_COUNTS.shape == (12, 4)
    assert (DECK_COUNTS.sum(axis=1) == 40).all()
    for row in DECK_COUNTS:
        assert sorted(row.tolist()) == [8, 10, 10, 12]


def test_goal_is_partner_of_twelve_card_suit():
    partner = {SPADES: CLUBS, CLUBS: SPADES, HEARTS: DIAMONDS, DIAMONDS: HEARTS}
    for d in DECKS:
        assert d.counts[d.common_suit] == 12
        assert d.goal_suit == partner[d.common_suit]
        goal_n = d.counts[d.goal_suit]
        assert (d.majority_threshold, d.majority_payout) == ((5, 120.0) if goal_n == 8 else (6, 100.0))


def test_deck_zero_has_twelve_spades():
    assert DECK_COUNTS[0, SPADES] == 12


def test_deal_hands():
    s = Stream(1)
    for _ in range(200):
        deck, hands = select_and_deal(s)
        assert (hands.sum(axis=1) == 10).all()
        assert hands.sum(axis=0).tolist() == list(deck.counts)


def test_deck_frequencies_uniform():
    s = Stream(2)
    n = 100_000
    counts = np.bincount([select_and_deal(s)[0].index for _ in range(n)], minlength=12)
    sd = np.sqrt(n * (1 / 12) * (11 / 12))
    assert (np.abs(counts - n / 12) < 3 * sd + 1).all()


def test_card_positions_exchangeable():
    # every player is equally likely to get each card: compare mean hands to 10 * counts / 40
    s = Stream(3)
    sums = np.zeros((4, 4))
    n = 4000
    for _ in range(n):
        deck, hands = select_and_deal(s)
        sums += hands
    expected = 10 * DECK_COUNTS.sum(axis=0) / 40 / 12 * n
    assert np.allclose(sums / expected[None, :], 1.0, atol=0.05)


def _deck_with_goal_count(n):
    return next(d for d in DECKS if d.counts[d.goal_suit] == n)


def _hands_with_goal(deck, held):
    hands = np.zeros((4, 4), np.int64)
    hands[:, deck.goal_suit] = held
    return hands


@pytest.mark.parametrize("goal_n,held,expected", [
    (10, (6, 2, 1, 1), (160, 20, 10, 10)),
    (8, (4, 4, 0, 0), (100, 100, 0, 0)),
    (10, (10, 0, 0, 0), (200, 0, 0, 0)),
    (10, (5, 5, 0, 0), (100, 100, 0, 0)),
    (8, (2, 2, 2, 2), (50, 50, 50, 50)),
])
def test_settlement(goal_n, held, expected):
    d = _deck_with_goal_count(goal_n)
    assert settle(d, _hands_with_goal(d, held)).tolist() == list(expected)


def test_settlement_pays_out_whole_pot():
    s = Stream(4)
    for _ in range(500):
        deck, hands = select_and_deal(s)
        assert settle(deck, hands).sum() == pytest.approx(200.0, abs=1e-9)
