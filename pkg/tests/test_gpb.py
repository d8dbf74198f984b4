import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multibracket.errors import DomainError
from multibracket.gpb import (BernoulliTerm, ScoreDistribution, gpb_binomial, gpb_build,
                              gpb_cdf, gpb_convolve, point_mass)

from oracles import enumerate_weighted_sum

probs = st.floats(0.0, 1.0, allow_nan=False)
terms_st = st.lists(st.tuples(st.integers(0, 6), probs), max_size=12)


def as_dict(d):
    return {int(k): v for k, v in zip(d.support, d.pmf)}


def close_dicts(a, b, tol=1e-12):
    keys = set(a) | set(b)
    return all(abs(a.get(x, 0.0) - b.get(x, 0.0)) <= tol for x in keys)


class TestBuild:
    def test_certain_success(self):
        assert gpb_build([BernoulliTerm(1, 1.0)]).to_dict() == {1: 1.0}

    def test_two_fair_coins(self):
        d = gpb_build([(1, 0.5), (1, 0.5)])
        assert close_dicts(as_dict(d), {0: 0.25, 1: 0.5, 2: 0.25})

    def test_unequal_weights(self):
        d = gpb_build([(2, 0.5), (3, 0.5)])
        assert close_dicts(d.to_dict(), {0: 0.25, 2: 0.25, 3: 0.25, 5: 0.25})

    def test_empty_is_point_mass(self):
        assert gpb_build([]).to_dict() == {0: 1.0}

    def test_lattice_reduction(self):
        d = gpb_build([(10, 0.5), (20, 0.5), (40, 0.3)])
        assert d.scale == 10
        assert d.pmf.size == 1 + 1 + 2 + 4

    @pytest.mark.parametrize("bad", [(1, -0.1), (1, 1.5), (-1, 0.5)])
    def test_domain_errors(self, bad):
        with pytest.raises(DomainError):
            gpb_build([bad])

    def test_float_weight_rejected(self):
        with pytest.raises(DomainError):
            gpb_build([(2.0, 0.5)])

    @settings(max_examples=60, deadline=None)
    @given(terms_st)
    def test_matches_enumeration(self, terms):
        d = gpb_build(terms)
        assert close_dicts(d.to_dict(), enumerate_weighted_sum(terms))

    @settings(max_examples=60, deadline=None)
    @given(terms_st)
    def test_mass_and_support(self, terms):
        d = gpb_build(terms)
        assert np.all(d.pmf >= 0)
        assert abs(d.pmf.sum() - 1.0) <= 1e-12
        weights = [w for w, _ in terms if w > 0]
        if weights:
            assert d.max_score == sum(weights)


class TestBinomial:
    def test_empty(self):
        assert gpb_binomial(0, 5, 0.3).to_dict() == {0: 1.0}

    def test_fair(self):
        assert close_dicts(gpb_binomial(2, 1, 0.5).to_dict(), {0: 0.25, 1: 0.5, 2: 0.25})

    def test_weighted(self):
        want = {0: 0.25**3, 2: 3 * 0.75 * 0.25**2, 4: 3 * 0.75**2 * 0.25, 6: 0.75**3}
        assert close_dicts(gpb_binomial(3, 2, 0.75).to_dict(), want)

    def test_bad_prob(self):
        with pytest.raises(DomainError):
            gpb_binomial(3, 1, 1.2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 12), st.integers(1, 5), probs)
    def test_equals_identical_terms(self, c, w, p):
        a = gpb_binomial(c, w, p).to_dict()
        b = gpb_build([(w, p)] * c).to_dict()
        assert close_dicts(a, b)


def small_dist():
    return st.builds(
        lambda off, scale, raw: ScoreDistribution(off, np.array(raw) / sum(raw), scale),
        st.integers(-3, 3), st.integers(1, 3),
        st.lists(st.floats(0.01, 1.0), min_size=1, max_size=5))


class TestConvolve:
    def test_identity(self):
        x = gpb_build([(1, 0.3), (2, 0.6)])
        assert close_dicts(gpb_convolve(point_mass(0), x).to_dict(), x.to_dict())

    def test_two_coins(self):
        c = gpb_build([(1, 0.5)])
        assert close_dicts(gpb_convolve(c, c).to_dict(), {0: 0.25, 1: 0.5, 2: 0.25})

    def test_against_double_loop(self):
        a = ScoreDistribution(1, np.array([0.2, 0.5, 0.3]))
        b = ScoreDistribution(-1, np.array([0.6, 0.1, 0.3]))
        want = {}
        for i, pa in enumerate(a.pmf):
            for j, pb in enumerate(b.pmf):
                x = a.offset + b.offset + i + j
                want[x] = want.get(x, 0.0) + pa * pb
        got = gpb_convolve(a, b)
        assert got.offset == 0
        assert got.pmf.size == a.pmf.size + b.pmf.size - 1
        assert close_dicts(got.to_dict(), want)

    @settings(max_examples=60, deadline=None)
    @given(small_dist(), small_dist())
    def test_commutative(self, a, b):
        assert close_dicts(gpb_convolve(a, b).to_dict(), gpb_convolve(b, a).to_dict())

    @settings(max_examples=60, deadline=None)
    @given(small_dist(), small_dist(), small_dist())
    def test_associative(self, a, b, c):
        left = gpb_convolve(gpb_convolve(a, b), c).to_dict()
        right = gpb_convolve(a, gpb_convolve(b, c)).to_dict()
        assert close_dicts(left, right)

    def test_mixed_scales(self):
        a = gpb_binomial(2, 4, 0.5)
        b = gpb_binomial(1, 6, 0.5)
        got = gpb_convolve(a, b)
        assert got.scale == 2
        assert close_dicts(got.to_dict(), enumerate_weighted_sum([(4, 0.5), (4, 0.5), (6, 0.5)]))


class TestCdf:
    d = ScoreDistribution(0, np.array([0.25, 0.5, 0.25]))

    def test_point_mass(self):
        assert gpb_cdf(point_mass(0), 0) == 1.0

    def test_middle(self):
        assert gpb_cdf(self.d, 1) == 0.75

    def test_below_support(self):
        assert gpb_cdf(self.d, -1) == 0.0

    def test_lattice_gaps(self):
        d = gpb_build([(10, 0.5)])
        assert gpb_cdf(d, 9) == 0.5
        assert gpb_cdf(d, 10) == 1.0

    @settings(max_examples=60, deadline=None)
    @given(terms_st)
    def test_monotone_and_complete(self, terms):
        d = gpb_build(terms)
        lo, hi = d.offset - 1, d.max_score + 1
        vals = [gpb_cdf(d, a) for a in range(lo, hi + 1)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))
        assert abs(gpb_cdf(d, d.max_score) - 1.0) <= 1e-12
