"""Guessing a randomly drawn bitstring.

The reference bitstring has independent Bernoulli(p_rd) bits in round rd;
we submit ``n`` bitstrings with Bernoulli(q_rd) bits and ``k`` opponents
submit bitstrings with Bernoulli(r_rd) bits.  Conditioning on the number of
zeros ``u_rd`` of the reference in each round makes every submitted score a
conditionally i.i.d. generalized Poisson binomial, which turns the expected
maximum score and the win probability into exact finite sums over ``u``.
"""

from dataclasses import dataclass
from functools import reduce
from math import comb, gcd
import itertools
import logging

import numpy as np

from . import kernels
from .errors import DomainError
from .gpb import ScoreDistribution, binomial_pmf, gpb_binomial, gpb_convolve, point_mass

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RoundStructure:
    m: tuple

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        if not m:
            raise DomainError("need at least one round")
        if any(x < 1 for x in m):
            raise DomainError(f"every round needs at least one bit, got {m}")
        object.__setattr__(self, "m", m)

    @classmethod
    def default(cls, R=6):
        """``2**(R - rd)`` bits in round rd: 32, 16, ..., 1 for R = 6."""
        return cls(tuple(2 ** (R - rd) for rd in range(1, R + 1)))

    @property
    def R(self):
        return len(self.m)

    @property
    def total(self):
        return sum(self.m)


@dataclass(frozen=True)
class ScoringWeights:
    w: tuple

    def __post_init__(self):
        w = tuple(self.w)
        for x in w:
            if isinstance(x, bool) or not isinstance(x, (int, np.integer)):
                raise DomainError(f"weights must be integers, got {x!r}")
            if x < 1:
                raise DomainError(f"weights must be >= 1, got {x}")
        object.__setattr__(self, "w", tuple(int(x) for x in w))

    @classmethod
    def hamming(cls, R=6):
        return cls((1,) * R)

    @classmethod
    def espn(cls, R=6):
        return cls(tuple(10 * 2 ** (rd - 1) for rd in range(1, R + 1)))

    @property
    def R(self):
        return len(self.w)


@dataclass(frozen=True)
class StrategyProfile:
    """Per-round Bernoulli parameters."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(float(x) for x in self.probs)
        for x in probs:
            if not 0.0 <= x <= 1.0:
                raise DomainError(f"probability {x} outside [0, 1]")
        object.__setattr__(self, "probs", probs)

    @classmethod
    def constant(cls, value, R=6):
        return cls((value,) * R)

    @property
    def R(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)


@dataclass(frozen=True)
class RoundPartition:
    """Rounds ``1..split`` are early, ``split+1..R`` late."""

    split: int


def profile_from_partition(early, late, part, R):
    E = part.split if isinstance(part, RoundPartition) else int(part)
    if not 1 <= E <= R - 1:
        raise DomainError(f"partition split {E} outside 1..{R - 1}")
    return StrategyProfile((early,) * E + (late,) * (R - E))


def as_profile(x, R):
    if isinstance(x, StrategyProfile):
        prof = x
    elif np.ndim(x) == 0:
        prof = StrategyProfile((float(x),) * R)
    else:
        prof = StrategyProfile(tuple(x))
    if prof.R != R:
        raise DomainError(f"profile has {prof.R} rounds, structure has {R}")
    return prof


def _reference(p, R):
    prof = as_profile(p, R)
    if any(x < 0.5 for x in prof):
        raise DomainError(f"reference probabilities must lie in [0.5, 1], got {prof.probs}")
    return prof


def _submission(q, R, name):
    prof = as_profile(q, R)
    if any(x < 0.5 for x in prof):
        log.warning("%s profile %s has entries below 0.5", name, prof.probs)
    return prof


def _defaults(s, w, R=6):
    s = RoundStructure.default(R) if s is None else s
    if not isinstance(s, RoundStructure):
        s = RoundStructure(tuple(s))
    w = ScoringWeights.hamming(s.R) if w is None else w
    if not isinstance(w, ScoringWeights):
        w = ScoringWeights(tuple(w))
    if w.R != s.R:
        raise DomainError(f"{w.R} weights for {s.R} rounds")
    return s, w


def zero_count_prob(p, u, s):
    """P(u) = prod_rd C(m_rd, u_rd) (1 - p_rd)^u_rd p_rd^(m_rd - u_rd)."""
    s, _ = _defaults(s, None)
    p = as_profile(p, s.R)
    if len(u) != s.R:
        raise DomainError(f"zero counts have {len(u)} rounds, structure has {s.R}")
    out = 1.0
    for mr, ur, pr in zip(s.m, u, p):
        if not 0 <= ur <= mr:
            raise DomainError(f"zero count {ur} outside 0..{mr}")
        out *= comb(mr, ur) * (1.0 - pr) ** ur * pr ** (mr - ur)
    return out


def _round_counts(mr, u, q):
    """Law of correct guesses in a round with ``u`` reference zeros."""
    return np.convolve(binomial_pmf(u, 1.0 - q), binomial_pmf(mr - u, q))


def conditional_score_dist(q, u, s, w):
    """Law of one Bernoulli(q) submission's score given reference zero counts ``u``."""
    s, w = _defaults(s, w)
    q = as_profile(q, s.R)
    if len(u) != s.R:
        raise DomainError(f"zero counts have {len(u)} rounds, structure has {s.R}")
    dist = point_mass(0)
    for mr, ur, wr, qr in zip(s.m, u, w.w, q):
        if not 0 <= ur <= mr:
            raise DomainError(f"zero count {ur} outside 0..{mr}")
        dist = gpb_convolve(dist, gpb_binomial(ur, wr, 1.0 - qr))
        dist = gpb_convolve(dist, gpb_binomial(mr - ur, wr, qr))
    return dist


# ---------------------------------------------------------------------------
# exact objectives


@dataclass
class _Tables:
    m: np.ndarray
    stride: np.ndarray
    pu: np.ndarray
    dists: list
    scale: int

    @property
    def max_reduced(self):
        return int((self.m * self.stride).sum())


def _tables(s, w, p, profiles, merge=True):
    """Flattened per-round tables for the kernels.

    Rounds sharing weight, p and every submission parameter are merged (their
    bits are exchangeable, so this is exact).  Rounds are ordered by
    decreasing size so the zero-count tree fans out near the root.
    """
    keys = [(w.w[i], p.probs[i]) + tuple(q.probs[i] for q in profiles) for i in range(s.R)]
    groups = {}
    order = []
    for i, key in enumerate(keys):
        if merge and key in groups:
            groups[key] += s.m[i]
        else:
            key = key if merge else key + (i,)
            groups[key] = s.m[i]
            order.append(key)
    rounds = sorted(((groups[k],) + k for k in order), key=lambda r: -r[0])
    g = reduce(gcd, (r[1] for r in rounds))
    m = np.array([r[0] for r in rounds], dtype=np.int64)
    stride = np.array([r[1] // g for r in rounds], dtype=np.int64)
    pu = np.concatenate([binomial_pmf(int(r[0]), 1.0 - r[2]) for r in rounds])
    dists = []
    for j in range(len(profiles)):
        blocks = []
        for r in rounds:
            mr, qr = int(r[0]), r[3 + j]
            blocks.append(np.stack([_round_counts(mr, u, qr) for u in range(mr + 1)]).ravel())
        dists.append(np.concatenate(blocks))
    return _Tables(m, stride, pu, dists, g)


def _check_counts(values, name):
    values = np.atleast_1d(np.asarray(values, dtype=np.int64))
    if (values < 1).any():
        raise DomainError(f"{name} must be >= 1, got {values.tolist()}")
    return values


def expected_max_scores(p, q, ns, s=None, w=None, merge=True):
    """Exact E[max score] of ``n`` Bernoulli(q) bitstrings for every ``n`` in ``ns``."""
    s, w = _defaults(s, w)
    p = _reference(p, s.R)
    q = _submission(q, s.R, "q")
    ns = _check_counts(ns, "n")
    t = _tables(s, w, p, [q], merge)
    # acc = sum_{a=0}^{top-1} P(max > a) on the reduced lattice
    acc, _ = kernels.tail_sums(t.m, t.stride, t.pu, t.dists[0], ns)
    return t.scale * np.asarray(acc)


def expected_max_score(p, q, n, s=None, w=None, merge=True):
    return float(expected_max_scores(p, q, [n], s, w, merge)[0])


def win_probabilities(p, q, r, ns, ks, s=None, w=None, strict=False, merge=True):
    """Exact P(max of n q-brackets >= max of k r-brackets) on an (ns, ks) grid.

    With ``strict`` the comparison is ``>`` (ties lose).
    """
    s, w = _defaults(s, w)
    p = _reference(p, s.R)
    q = _submission(q, s.R, "q")
    r = _submission(r, s.R, "r")
    ns = _check_counts(ns, "n")
    ks = _check_counts(ks, "k")
    t = _tables(s, w, p, [q, r], merge)
    acc, _ = kernels.win_sums(t.m, t.stride, t.pu, t.dists[0], t.dists[1], ns, ks, strict)
    return np.asarray(acc)


def win_probability(p, q, r, n, k, s=None, w=None, strict=False, merge=True):
    return float(win_probabilities(p, q, r, [n], [k], s, w, strict, merge)[0, 0])


# ---------------------------------------------------------------------------
# simulation


def simulate(p, q, r, n, k, s=None, w=None, trials=10**6, seed=0, chunk=20_000):
    """Monte-Carlo estimates of E[max score] and the (tie-inclusive) win probability.

    Per trial the reference zero counts, each submission's correct guesses in
    the reference's zero and one positions are drawn as binomials, which is
    the exact law of the bit-level experiment.  Returns
    ``{"emax": (mean, stderr), "winprob": (mean, stderr)}``; ``k = 0`` skips
    the opponents.
    """
    s, w = _defaults(s, w)
    p = as_profile(p, s.R)
    q = as_profile(q, s.R)
    r = as_profile(r, s.R)
    # rounds sharing (weight, p, q, r) pool into one binomial experiment
    groups = {}
    for mr, key in zip(s.m, zip(w.w, p, q, r)):
        groups[key] = groups.get(key, 0) + int(mr)
    gen = np.random.Generator(np.random.Philox(seed))
    ssum = ssq = wins = 0.0
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        ours = np.zeros((c, n), dtype=np.int64)
        theirs = np.zeros((c, max(k, 1)), dtype=np.int64)
        for (wr, pr, qr, rr), mr in groups.items():
            u = gen.binomial(mr, 1.0 - pr, size=c)[:, None]
            ours += wr * (gen.binomial(u, 1.0 - qr, size=(c, n))
                          + gen.binomial(mr - u, qr, size=(c, n)))
            if k:
                theirs += wr * (gen.binomial(u, 1.0 - rr, size=(c, k))
                                + gen.binomial(mr - u, rr, size=(c, k)))
        best = ours.max(axis=1).astype(np.float64)
        ssum += best.sum()
        ssq += (best * best).sum()
        if k:
            wins += (best >= theirs.max(axis=1)).sum()
        done += c
    mean = ssum / trials
    var = max(ssq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    wp = wins / trials
    return {
        "emax": (mean, float(np.sqrt(var / trials))),
        "winprob": (wp, float(np.sqrt(wp * (1.0 - wp) / trials))),
    }


def enumerate_objectives(p, q, r, n, k, s=None, w=None):
    """Brute force over every reference, guess-set and opponent-set.

    Exponential in ``m * max(n, k)``; meant as a test oracle for tiny
    structures.  Returns ``(expected_max_score, win_probability)``.
    """
    s, w = _defaults(s, w)
    p, q, r = (as_profile(x, s.R) for x in (p, q, r))
    bit_w = np.repeat(w.w, s.m)
    bit_p = np.repeat(p.probs, s.m)
    bit_q = np.repeat(q.probs, s.m)
    bit_r = np.repeat(r.probs, s.m)
    strings = np.array(list(itertools.product([0, 1], repeat=s.total)), dtype=np.int64)

    def law(probs):
        return np.prod(np.where(strings == 1, probs, 1.0 - probs), axis=1)

    P, Q, Rr = law(bit_p), law(bit_q), law(bit_r)
    top = int(bit_w.sum())
    emax = 0.0
    wp = 0.0
    for tau, ptau in zip(strings, P):
        if ptau == 0.0:
            continue
        score = ((strings == tau) * bit_w).sum(axis=1)
        mine = _max_law(score, Q, n, top)
        opp = _max_law(score, Rr, k, top)
        emax += ptau * float(np.arange(top + 1) @ mine)
        # sum over every (our set, their set) pair of indicator * probability
        wp += ptau * float(sum(mine[a] * opp[: a + 1].sum() for a in range(top + 1)))
    return emax, wp


def _max_law(score, probs, count, top):
    """Law of the max score over every ordered ``count``-tuple of strings."""
    out = np.zeros(top + 1)
    for tup in itertools.product(range(len(score)), repeat=count):
        tup = list(tup)
        out[score[tup].max()] += np.prod(probs[tup])
    return out
