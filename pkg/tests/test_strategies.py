import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from figgie.decks import DECK_COUNTS, DECKS, GOAL_SUIT, MAJORITY_PAYOUT, MAJORITY_THRESHOLD
from figgie.exchange import BUY, SELL, Order, Trade
from figgie.rng import Stream
from figgie.strategies import (
    ExpectationPair, KnownCards, MarketView, bottom_feeder_expectation, chartist_expectation,
    chartist_value, clamp_value, deck_majority_value, deck_posterior, expected_values,
    fit_log_linear, fundamentalist_step, majority_value, noise_expectation, order_price,
    send_order, sweep_own_orders, update_known_cards, REGRESSION, TELESCOPED,
)
from reference import posterior_monte_carlo

NAN = float("nan")


# -- order sending ---------------------------------------------------------------------

def test_buy_capped_at_best_ask():
    # p_b = 10 and a draw of 6 would bid 6, but the best ask is 4
    assert order_price(True, 0.6, 10.0, 10.0, NAN, 4.0) == 4.0


def test_sell_floored_at_best_bid():
    assert order_price(False, 0.3, 10.0, 10.0, 20.0, NAN) == 20.0


def test_degenerate_buy_value():
    assert order_price(True, 0.7, 0.0, 5.0, NAN, NAN) == 0.0


def test_prices_in_ranges_without_book():
    assert order_price(True, 0.25, 8.0, 8.0, NAN, NAN) == 2.0
    assert order_price(False, 0.25, 8.0, 8.0, NAN, NAN) == 10.0


class _Scripted:
    def __init__(self, values):
        self.values = list(values)

    def uniform(self):
        return self.values.pop(0)


def test_send_order_sides():
    view = MarketView()
    o = send_order(ExpectationPair(10, 10), view, 2, _Scripted([0.1, 0.5]), agent=3)
    assert (o.side, o.asset, o.price, o.agent, o.volume) == (BUY, 2, 5.0, 3, 1)
    o = send_order(ExpectationPair(10, 10), view, 2, _Scripted([0.9, 0.5]))
    assert (o.side, o.price) == (SELL, 15.0)
    assert send_order(ExpectationPair(10, 10), view, 2, _Scripted([0.9, 0.5]), can_sell=False) is None


# -- noise --------------------------------------------------------------------------------

def test_noise_zero_sigma_uses_best_bid():
    view = MarketView(best_bid=(7.0, None, None, None))
    assert noise_expectation(view, 0, 0.0, Stream(1)) == ExpectationPair(7.0, 7.0)


def test_noise_fallbacks():
    assert noise_expectation(MarketView(), 0, 0.0, Stream(1)).p_b == 10.0
    view = MarketView(last_price=(None, 3.0, None, None))
    assert noise_expectation(view, 1, 0.0, Stream(1)).p_b == 3.0


def test_noise_lognormal():
    view = MarketView(best_bid=(1.0, None, None, None))
    s = Stream(5)
    logs = np.log([noise_expectation(view, 0, 1.0, s).p_b for _ in range(100_000)])
    assert abs(logs.mean()) < 0.02
    assert abs(logs.std() - 1.0) < 0.02


# -- card counting --------------------------------------------------------------------

def test_card_counting_transfer():
    state = KnownCards([3, 0, 0, 0], me=0)
    update_known_cards(state, [Trade(0.0, 0, 1, 0, 5.0, 1)])
    assert state[0] == [2, 1, 0, 0]


def test_card_counting_unknown_seller_floors_at_zero():
    state = KnownCards([0, 0, 0, 0], me=0)
    update_known_cards(state, [Trade(0.0, 2, 1, 3, 5.0, 1)])
    assert state[2] == [0, 1, 0, 0]
    update_known_cards(state, [])
    assert state[2] == [0, 1, 0, 0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3), st.integers(1, 2)), max_size=50))
def test_card_counting_never_negative(trades):
    state = KnownCards([2, 3, 4, 1], me=0)
    update_known_cards(state, [Trade(0.0, a, b, s, 1.0, v) for a, b, s, v in trades])
    assert (state.known >= 0).all()


# -- posterior -------------------------------------------------------------------------

def test_posterior_no_information_uniform():
    assert np.allclose(deck_posterior([0, 0, 0, 0]), 1 / 12)


def test_posterior_twelve_spades():
    m = deck_posterior([12, 0, 0, 0])
    assert np.allclose(m[DECK_COUNTS[:, 0] == 12], 1 / 3)
    assert (m[DECK_COUNTS[:, 0] != 12] == 0).all()


def test_posterior_nine_spades():
    m = deck_posterior([9, 0, 0, 0])
    weights = np.array([{12: 220, 10: 10, 8: 0}[c] for c in DECK_COUNTS[:, 0]], float)
    assert np.allclose(m, weights / weights.sum())
    assert (m[DECK_COUNTS[:, 0] == 8] == 0).all()


def test_posterior_rejects_impossible_observation():
    with pytest.raises(ValueError):
        deck_posterior([13, 0, 0, 0])
    with pytest.raises(ValueError):
        deck_posterior([12, 12, 0, 0])


def test_posterior_matches_dealing():
    vectors = [(3, 3, 2, 2), (5, 1, 2, 2), (1, 4, 4, 1), (2, 2, 2, 2)]
    mc = posterior_monte_carlo(vectors, DECK_COUNTS, 100_000, seed=8)
    for v in vectors:
        tv = 0.5 * np.abs(deck_posterior(v) - mc[v]).sum()
        assert tv < 0.02, (v, tv)


@given(st.tuples(*[st.integers(0, 12)] * 4))
def test_posterior_is_distribution(seen):
    consistent = (DECK_COUNTS >= np.array(seen)).all(axis=1)
    if not consistent.any():
        with pytest.raises(ValueError):
            deck_posterior(seen)
        return
    m = deck_posterior(seen)
    assert m.sum() == pytest.approx(1.0)
    assert (m[~consistent] == 0).all() and (m[consistent] > 0).all()


# -- majority values --------------------------------------------------------------------

def test_majority_value_closed_form():
    assert majority_value(120.0, 5, 0, 2.0) == pytest.approx(120 / 31)


def test_majority_value_zero_once_secured():
    for d in DECKS:
        assert deck_majority_value(d.index, d.majority_threshold, 2.0) == 0.0


@pytest.mark.parametrize("r", [1.2, 2.0, 5.0])
def test_majority_values_sum_to_remainder(r):
    for d in DECKS:
        total = sum(deck_majority_value(d.index, n, r) for n in range(d.majority_threshold))
        assert abs(total - d.majority_payout) < 1e-9


def test_majority_value_rejects_r_at_most_one():
    with pytest.raises(ValueError):
        deck_majority_value(0, 0, 1.0)


def _point_mass_on_goal(suit, goal_n):
    i = next(d.index for d in DECKS if d.goal_suit == suit and d.counts[suit] == goal_n)
    m = np.zeros(12)
    m[i] = 1.0
    return m


def test_expected_buy_value_wrong_suit_is_zero():
    m = _point_mass_on_goal(1, 10)
    assert expected_values(0, 2, m).p_b == 0.0


def test_expected_buy_value_after_majority():
    m = _point_mass_on_goal(1, 10)
    assert expected_values(1, 6, m).p_b == 10.0


def test_expected_sell_value_is_value_of_last_card():
    m = deck_posterior([3, 2, 3, 2])
    for suit in range(4):
        for held in range(1, 8):
            pair = expected_values(suit, held, m)
            assert pair.p_s == expected_values(suit, held - 1, m).p_b
    assert math.isnan(expected_values(0, 0, m).p_s)


def test_expected_value_mixture():
    m = deck_posterior([2, 2, 3, 3])
    e = expected_values(0, 1, m, r=2.0).p_b
    want = sum(m[i] * (10 + deck_majority_value(i, 1, 2.0)) for i in range(12) if GOAL_SUIT[i] == 0)
    assert e == pytest.approx(want, rel=1e-12)


# -- lazy deletion ----------------------------------------------------------------------

def _sweep(prices, side, limit):
    n = len(prices)
    o_price = np.array(prices, float)
    o_deleted = np.zeros(n, bool)
    o_live = np.ones(n, bool)
    own = np.zeros((1, 4, 2, n), np.int64)
    own[0, 0, side, :] = np.arange(n)
    own_n = np.zeros((1, 4, 2), np.int64)
    own_n[0, 0, side] = n
    out = np.zeros(n, np.int64)
    k = sweep_own_orders(o_price, o_deleted, o_live, own, own_n, 0, 0, side, limit, out, 0)
    return out[:k].tolist(), own_n[0, 0, side]


def test_stale_bid_deleted():
    assert _sweep([15.0], BUY, 12.0) == ([0], 0)


def test_stale_ask_deleted():
    assert _sweep([8.0], SELL, 11.0) == ([0], 0)


def test_no_stale_orders():
    assert _sweep([5.0, 9.0], BUY, 12.0) == ([], 2)
    assert _sweep([12.0, 20.0], SELL, 11.0) == ([], 2)


def test_fundamentalist_step_flags_stale_orders():
    hand = [3, 3, 2, 2]
    state = KnownCards(hand, me=0)
    orders = [Order(0, BUY, 0, 1000.0, id=0), Order(0, BUY, 0, 0.0, id=1), Order(0, SELL, 1, 0.0, id=2)]
    pairs, deleted = fundamentalist_step(hand, state, orders)
    assert deleted == [0, 2]
    assert orders[0].deleted and not orders[1].deleted
    assert len(pairs) == 4


# -- bottom-feeder -----------------------------------------------------------------------

def test_bottom_feeder_average():
    hist = {1: {0: ([9, 5, 5, 5, 5], [15, 15, 15, 15])}}
    assert bottom_feeder_expectation(hist, 0, [1], k=4) == ExpectationPair(10.0, 10.0)


def test_bottom_feeder_excludes_short_history():
    hist = {1: {0: ([5, 5, 5], [15, 15, 15, 15])}, 2: {0: ([1] * 4, [3] * 4)}}
    assert bottom_feeder_expectation(hist, 0, [1, 2], k=4).p_b == 2.0
    assert bottom_feeder_expectation(hist, 0, [1], k=4) is None
    assert bottom_feeder_expectation({}, 0, [1], k=4) is None


# -- chartist ---------------------------------------------------------------------------

def test_chartist_constant_series():
    res = chartist_expectation([4.0] * 8, tau=5)
    assert res.pair.p_b == 4.0 and not res.clamped


def test_chartist_telescoped_doubling():
    # p_{t-tau-1} = 1, p_{t-1} = 2, tau = 4: mean return ln2/4, four steps ahead
    prices = [1.0, 1.3, 1.1, 1.7, 2.0, 3.0]
    assert chartist_expectation(prices, tau=4).pair.p_b == pytest.approx(6.0, rel=1e-12)


def test_chartist_telescoping_identity():
    rng = np.random.default_rng(0)
    for _ in range(100):
        tau = int(rng.integers(2, 10))
        p = np.exp(rng.normal(size=tau + 2))
        r = np.diff(np.log(p[:-1]))
        direct = p[-1] * math.exp(r.mean() * tau)
        est, status = chartist_value(p, p.shape[0], TELESCOPED, tau)
        assert status == 0 and est == pytest.approx(direct, rel=1e-12)


def test_log_linear_fit_exact():
    x = np.arange(10.0)
    b0, b1 = fit_log_linear(x, np.exp(1 + 0.1 * x))
    assert abs(b0 - 1) < 1e-9 and abs(b1 - 0.1) < 1e-9


def test_chartist_regression_extrapolates_one_step():
    p = np.exp(1 + 0.1 * np.arange(12))
    res = chartist_expectation(p, tau=5, variant="regression")
    assert res.pair.p_b == pytest.approx(math.exp(1 + 0.1 * 12), rel=1e-9)


def test_chartist_insufficient_history():
    assert chartist_expectation([1.0] * 6, tau=5).pair is None
    assert chartist_expectation([1.0], tau=5, variant="regression").pair is None


def test_chartist_nonpositive_flag():
    res = chartist_expectation([1.0, 2.0, 0.0, 2.0, 3.0, 4.0, 5.0], tau=5)
    assert res.pair is None and res.nonpositive


def test_chartist_clamps_runaway():
    p = [1.0, 1e30, 1e60, 1e90, 1e120, 1e150, 1e180, 1e210]
    res = chartist_expectation(p, tau=5)
    assert res.clamped and res.pair.p_b == 1e100
    assert clamp_value(float("inf"), 1e100) == (1e100, True)
    assert clamp_value(-1.0, 1e100) == (0.0, True)
    assert clamp_value(3.0, 1e100) == (3.0, False)
