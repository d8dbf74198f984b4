import io
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multibracket import picksix as ps
from multibracket.errors import ConfigError, DomainError, ResourceError

SOLE = ps.RaceCard(([1.0],))
TWO = ps.RaceCard(([0.7, 0.3], [0.7, 0.3]))


def race_entropy(v):
    v = np.asarray(v)
    v = v[v > 0]
    return float(-(v * np.log2(v)).sum())


class TestCard:
    def test_belmont_loads(self):
        card = ps.RaceCard.belmont()
        assert card.s == 6
        for r in card.races:
            assert abs(r.sum() - 1) <= 1e-9
            assert np.all(np.diff(r) <= 0)

    def test_unsorted_rejected(self):
        with pytest.raises(DomainError):
            ps.RaceCard(([0.3, 0.7],))

    def test_bad_sum_rejected(self):
        with pytest.raises(DomainError):
            ps.TicketStrategy(([0.5, 0.4],))

    def test_rows_are_sorted(self):
        card = ps.RaceCard.from_rows([(1, 1, 0.2), (1, 2, 0.8), (2, 1, 1.0)])
        assert card.races[0].tolist() == [0.8, 0.2]

    def test_csv_errors_name_the_line(self):
        text = "race_index,horse_index,win_prob\n1,1,0.5\n1,2,abc\n"
        with pytest.raises(ConfigError) as err:
            ps.RaceCard._read(io.StringIO(text))
        assert err.value.line == 3

    def test_csv_missing_column(self):
        with pytest.raises(ConfigError):
            ps.RaceCard._read(io.StringIO("race_index,win_prob\n1,1.0\n"))

    def test_csv_prob_out_of_range(self):
        text = "race_index,horse_index,win_prob\n1,1,1.5\n"
        with pytest.raises(ConfigError) as err:
            ps.RaceCard._read(io.StringIO(text))
        assert err.value.field == "win_prob"


class TestTilt:
    card = ps.RaceCard.belmont()

    @pytest.mark.parametrize("phi", [0.0, 0.125, 0.5, 1.0])
    def test_unit_lambda_is_identity(self, phi):
        Q = ps.tilt(self.card, ps.TiltParams(1.0, phi))
        for a, b in zip(Q.races, self.card.races):
            assert np.allclose(a, b, rtol=0, atol=1e-15)

    def test_tiny_lambda_is_uniform(self):
        Q = ps.tilt(self.card, ps.TiltParams(1e-9, 0.5))
        for r in Q.races:
            assert np.allclose(r, 1.0 / r.size, atol=1e-6)

    def test_hand_example(self):
        Q = ps.tilt(ps.RaceCard(([0.5, 0.3, 0.2],)), ps.TiltParams(2.0, 1 / 3))
        assert np.allclose(Q.races[0], [0.8, 0.12, 0.08], atol=1e-15)

    def test_compat_zeroes_the_field(self):
        Q = ps.tilt(ps.RaceCard(([0.5, 0.3, 0.2],)), ps.TiltParams(2.0, 1 / 3), compat=True)
        assert Q.races[0].tolist() == [1.0, 0.0, 0.0]

    def test_phi_ignored_below_one(self):
        a = ps.tilt(self.card, ps.TiltParams(0.4, 0.0))
        for phi in (0.3, 0.77, 1.0):
            b = ps.tilt(self.card, ps.TiltParams(0.4, phi))
            for x, y in zip(a.races, b.races):
                assert np.array_equal(x, y)

    @pytest.mark.parametrize("lam", [0.0, -1.0])
    def test_bad_lambda(self, lam):
        with pytest.raises(DomainError):
            ps.TiltParams(lam, 0.5)

    def test_rounding(self):
        assert ps.cutoff(3 / 8, 8) == 3
        assert ps.cutoff(0.0, 8) == 1
        assert ps.cutoff(1.0, 8) == 8
        assert ps.cutoff(0.5, 5) == 3       # 2.5 rounds away from zero
        assert ps.round_half_away(-2.5) == -3

    @settings(max_examples=60, deadline=None)
    @given(st.floats(1e-6, 50.0), st.floats(0.0, 1.0))
    def test_always_valid(self, lam, phi):
        Q = ps.tilt(self.card, ps.TiltParams(lam, phi))
        for r in Q.races:
            assert np.all(r >= 0)
            assert abs(r.sum() - 1.0) <= 1e-9

    @pytest.mark.parametrize("phi", [0.125, 0.25, 0.5, 0.75, 1.0])
    def test_entropy_falls_with_lambda(self, phi):
        H = np.array([ps.tilt(self.card, ps.TiltParams(l, phi)).entropy()
                      for l in (0.25, 0.5, 1, 2, 4)])
        assert np.all(np.diff(H, axis=0) <= 1e-12)


class TestOpponents:
    def test_unit(self):
        R = ps.opponent_strategy(TWO, 1.0)
        assert np.allclose(R.races[0], [0.7, 0.3])

    def test_near_uniform(self):
        R = ps.opponent_strategy(TWO, 1e-9)
        assert np.allclose(R.races[1], 0.5, atol=1e-6)

    def test_eight_horse_race(self):
        P = np.array([0.3, 0.2, 0.15, 0.1, 0.1, 0.07, 0.05, 0.03])
        R = ps.opponent_strategy(ps.RaceCard((P,)), 3.0).races[0]
        w = P * np.r_[3.0, np.full(7, 1 / 3)]
        assert np.allclose(R, w / w.sum(), atol=1e-15)


def closed_form(card, Q, R, C, take, n, k, price=1.0):
    """The bound summed tuple by tuple with plain Python floats."""
    T = C + price * (n + k) * (1 - take)
    acc = 0.0
    for tau in product(*(range(len(r)) for r in card)):
        p = q = r = 1.0
        for j, i in enumerate(tau):
            p *= card[j][i]
            q *= Q[j][i]
            r *= R[j][i]
        acc += p * (1 - (1 - q) ** n) / (1 + k * r)
    return -price * n + T * acc


class TestBound:
    def test_sole_certain_winner(self):
        econ = ps.PoolEconomics(0.0, 0.0, 1, 0)
        assert ps.expected_profit_lower_bound(SOLE, SOLE, SOLE, econ) == 0.0

    def test_no_opponents(self):
        card = ps.RaceCard.belmont()
        q = ps.tilt(card, ps.TiltParams(2.0, 0.25))
        econ = ps.PoolEconomics(1000.0, 0.1, 50, 0)
        P = ps._outer(card.races)
        Q = ps._outer(q.races)
        want = -50 + econ.total_pool * float(np.sum(P * (1 - (1 - Q) ** 50)))
        got = ps.expected_profit_lower_bound(card, q, q, econ)
        assert got == pytest.approx(want, rel=1e-10)

    def test_two_race_example(self):
        uniform = ps.TicketStrategy(([0.5, 0.5], [0.5, 0.5]))
        econ = ps.PoolEconomics(10.0, 0.05, 2, 3)
        want = closed_form([[0.7, 0.3]] * 2, [[0.7, 0.3]] * 2, [[0.5, 0.5]] * 2, 10.0, 0.05, 2, 3)
        got = ps.expected_profit_lower_bound(TWO, TWO, uniform, econ)
        assert got == pytest.approx(want, abs=1e-12)

    def test_disjoint_support(self):
        card = ps.RaceCard(([0.6, 0.4, 0.0], [1.0, 0.0]))
        q = ps.TicketStrategy(([0.0, 0.0, 1.0], [0.0, 1.0]))
        econ = ps.PoolEconomics(100.0, 0.1, 7, 5, price=2.0)
        assert ps.expected_profit_lower_bound(card, q, card, econ) == -14.0

    def test_nondecreasing_in_carryover(self):
        card = ps.RaceCard.belmont()
        q = ps.tilt(card, ps.TiltParams(2, 0.375))
        r = ps.opponent_strategy(card, 1.0)
        vals = [ps.expected_profit_lower_bound(card, q, r, ps.PoolEconomics(C, 0.05, 1000, 25000))
                for C in (0, 1e4, 1e5, 5e5, 1e6)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_cap(self):
        card = ps.RaceCard.belmont()
        with pytest.raises(ResourceError):
            ps.expected_profit_lower_bound(card, card, card, ps.PoolEconomics(0, 0, 1, 1), cap=1000)

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            ps.expected_profit_lower_bound(TWO, SOLE, TWO, ps.PoolEconomics(0, 0, 1, 1))

    def test_belmont_matches_tuple_sum(self):
        card = ps.RaceCard.belmont()
        small = ps.RaceCard(card.races[:3])
        q = ps.tilt(small, ps.TiltParams(1.5, 0.25))
        r = ps.opponent_strategy(small, 0.5)
        want = closed_form([list(x) for x in small.races], [list(x) for x in q.races],
                           [list(x) for x in r.races], 5000.0, 0.05, 30, 400)
        got = ps.expected_profit_lower_bound(small, q, r, ps.PoolEconomics(5000.0, 0.05, 30, 400))
        assert got == pytest.approx(want, rel=1e-11)


class TestMonteCarlo:
    def test_sole_certain_winner(self):
        econ = ps.PoolEconomics(0.0, 0.0, 1, 0)
        assert ps.expected_profit_monte_carlo(SOLE, SOLE, SOLE, econ, 1000, 1) == (0.0, 0.0)

    def test_no_stake(self):
        econ = ps.PoolEconomics(100.0, 0.1, 0, 10)
        assert ps.expected_profit_monte_carlo(TWO, TWO, TWO, econ, 1000, 1) == (0.0, 0.0)

    def test_seeded(self):
        econ = ps.PoolEconomics(10.0, 0.05, 2, 3)
        a = ps.expected_profit_monte_carlo(TWO, TWO, TWO, econ, 5000, 9)
        assert a == ps.expected_profit_monte_carlo(TWO, TWO, TWO, econ, 5000, 9)

    def test_bound_below_two_race_estimate(self):
        uniform = ps.TicketStrategy(([0.5, 0.5], [0.5, 0.5]))
        econ = ps.PoolEconomics(10.0, 0.05, 2, 3)
        bound = ps.expected_profit_lower_bound(TWO, TWO, uniform, econ)
        mean, se = ps.expected_profit_monte_carlo(TWO, TWO, uniform, econ, 10**6, 2)
        assert bound <= mean + 4 * se

    @pytest.mark.parametrize("lam,phi,lam_opp,n", [(0.5, 0.25, 1.0, 100), (2.0, 0.375, 0.5, 1000),
                                                   (4.0, 0.125, 2.0, 10)])
    def test_bound_below_belmont_estimate(self, lam, phi, lam_opp, n):
        card = ps.RaceCard.belmont()
        q = ps.tilt(card, ps.TiltParams(lam, phi))
        r = ps.opponent_strategy(card, lam_opp)
        econ = ps.PoolEconomics(500000.0, 0.05, n, 25000)
        bound = ps.expected_profit_lower_bound(card, q, r, econ)
        mean, se = ps.expected_profit_monte_carlo(card, q, r, econ, 50_000, 3)
        assert bound <= mean + 4 * se


class TestOptimize:
    def test_single_point(self):
        econ = ps.PoolEconomics(10.0, 0.05, 2, 3)
        best, value, surf = ps.optimize_tilt(TWO, econ, 1.0, [1.5], [0.5])
        assert (best.lam, best.phi) == (1.5, 0.5)
        assert surf.values.shape == (1, 1)
        assert value == surf.values[0, 0]

    def test_ties_pick_first(self):
        econ = ps.PoolEconomics(0.0, 0.0, 1, 0)
        best, _, surf = ps.optimize_tilt(SOLE, econ, 1.0, [3.0, 1.0, 0.5], [0.25, 0.75])
        assert np.all(surf.values == surf.values[0, 0])
        assert (best.lam, best.phi) == (3.0, 0.25)

    def test_surface_order(self):
        econ = ps.PoolEconomics(10.0, 0.05, 2, 3)
        _, _, surf = ps.optimize_tilt(TWO, econ, 1.0, [0.5, 2.0], [0.0, 1.0])
        rows = list(surf.rows())
        assert [(a, b) for a, b, _ in rows] == [(0.5, 0.0), (0.5, 1.0), (2.0, 0.0), (2.0, 1.0)]

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            ps.optimize_tilt(TWO, ps.PoolEconomics(1, 0, 1, 1), 1.0, [], [0.5])
