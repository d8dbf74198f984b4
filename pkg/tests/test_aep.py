from math import log2

import pytest
from hypothesis import given, settings, strategies as st

from multibracket import aep
from multibracket.errors import DomainError, ResourceError

from oracles import bitstring_classes


class TestBracketEntropy:
    def test_certain(self):
        assert aep.bracket_entropy(1.0, 5) == 0.0

    def test_uniform(self):
        assert aep.bracket_entropy(2.0**-4, 4) == 1.0

    def test_three_ones(self):
        want = -log2(0.75**3 * 0.25) / 4
        assert aep.bracket_entropy(0.75**3 * 0.25, 4) == pytest.approx(want, abs=1e-15)

    @pytest.mark.parametrize("prob", [0.0, -0.2])
    def test_nonpositive(self, prob):
        with pytest.raises(DomainError):
            aep.bracket_entropy(prob, 3)


class TestPartition:
    def test_fair_coin_all_typical(self):
        part = aep.partition_bitstrings(0.5, 8, 0.1)
        assert part.counts == {"chalky": 0, "typical": 256, "rare": 0}
        assert part.masses["typical"] == pytest.approx(1.0, abs=1e-15)

    def test_certain_coin(self):
        # H = 0: the chalky threshold 2^(0.4) exceeds 1, so the all-ones string is typical
        part = aep.partition_bitstrings(1.0, 4, 0.1)
        assert part.H == 0.0
        assert part.counts == {"chalky": 0, "typical": 1, "rare": 15}
        assert part.masses == {"chalky": 0.0, "typical": 1.0, "rare": 0.0}

    def test_against_enumeration(self):
        part = aep.partition_bitstrings(0.75, 16, 0.05)
        counts, masses = bitstring_classes(0.75, 16, 0.05)
        assert part.counts == counts
        for k in counts:
            assert part.masses[k] == pytest.approx(masses[k], abs=1e-12)

    def test_cap(self):
        with pytest.raises(ResourceError):
            aep.partition_bitstrings(0.75, 25, 0.1)

    @pytest.mark.parametrize("p,eps", [(0.4, 0.1), (0.75, 0.0)])
    def test_domain(self, p, eps):
        with pytest.raises(DomainError):
            aep.partition_bitstrings(p, 8, eps)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.5, 1.0), st.integers(1, 24), st.floats(0.001, 0.5))
    def test_exhaustive_classes(self, p, m, eps):
        part = aep.partition_bitstrings(p, m, eps)
        assert sum(part.counts.values()) == 2**m
        assert sum(part.masses.values()) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from([0.55, 0.6, 0.7, 0.8, 0.9]), st.integers(1, 12),
           st.sampled_from([0.03, 0.1, 0.2]))
    def test_matches_string_listing(self, p, m, eps):
        counts, _ = bitstring_classes(p, m, eps)
        assert aep.partition_bitstrings(p, m, eps).counts == counts

    def test_typical_share_strictly_decreasing(self):
        shares = [aep.partition_bitstrings(0.75, m, 0.1).counts["typical"] / 2**m
                  for m in (8, 12, 16, 20)]
        assert all(b < a for a, b in zip(shares, shares[1:])), shares


class TestBounds:
    def test_bounds_hold(self):
        rep = aep.check_typical_bounds(0.75, [4, 8, 12, 16, 20], 0.1)
        assert rep.all_hold
        assert len(rep.checks) == 15
        assert rep.mass_increases

    def test_fair_coin_is_trivial(self):
        rep = aep.check_typical_bounds(0.5, [4, 8], 0.1)
        assert rep.all_hold
        assert rep.typical_mass == [1.0, 1.0]
        # with all mass typical, the lower bound is checked too
        assert sum(c.name.startswith("typical >") for c in rep.checks) == 2

    def test_report_lines(self):
        lines = aep.check_typical_bounds(0.75, [4, 8], 0.1).lines()
        assert lines[0] == "p=0.75 epsilon=0.1"
        assert all("pass" in l for l in lines[1:7])

    def test_share_shrinks_overall(self):
        a = aep.partition_bitstrings(0.75, 4, 0.1).counts["typical"] / 2**4
        b = aep.partition_bitstrings(0.75, 20, 0.1).counts["typical"] / 2**20
        assert b < a
