"""Single-elimination tournament brackets scored ESPN-style.

Teams are indexed ``0..T-1`` in decreasing Elo order, so in every matrix
below entry ``[i, j]`` with ``i < j`` is the probability that the higher
rated team wins.  Brackets are arrays of game winners in round order, slot
order within a round.

Random streams are counter based (see :mod:`multibracket.rng`): the true
bracket for outer draw ``b1`` is keyed by ``(seed, reference, b1)``, and our
``j``-th bracket in cell ``(b1, b2)`` is child ``j`` of
``(seed, ours, b1, b2)``.  All strategies in a sweep consume the same
uniforms, and smaller ``n`` use a prefix of the same bracket sets.
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
import math
import os

import numpy as np

from . import kernels, rng
from .errors import ConfigError, DomainError, ResourceError

ELO_SCALE = 30.464 / 400.0
REGION_TEMPLATE = (1, 16, 8, 9, 5, 12, 4, 13, 6, 11, 3, 14, 7, 10, 2, 15)
EXACT_MAX_TEAMS = 8
THREADS_ENV = "MULTIBRACKET_THREADS"


def seeding_order(size):
    """Standard seed placement for a power-of-two bracket (1-based seeds)."""
    order = [1]
    while len(order) < size:
        n = 2 * len(order) + 1
        order = [x for s in order for x in (s, n - s)]
    return order


@dataclass(frozen=True, eq=False)
class Field:
    names: tuple
    seeds: np.ndarray
    elos: np.ndarray
    regions: tuple
    slots: np.ndarray

    def __post_init__(self):
        T = len(self.names)
        if T < 2 or T & (T - 1):
            raise DomainError(f"field size {T} is not a power of two >= 2")
        slots = np.asarray(self.slots, dtype=np.int64)
        if sorted(slots.tolist()) != list(range(T)):
            raise DomainError("slots must be a permutation of the team indices")
        elos = np.asarray(self.elos, dtype=np.float64)
        if np.any(np.diff(elos) > 0):
            raise DomainError("teams must be indexed in nonincreasing Elo order")
        for name, arr in (("slots", slots), ("elos", elos)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        seeds = np.asarray(self.seeds, dtype=np.int64)
        seeds.setflags(write=False)
        object.__setattr__(self, "seeds", seeds)

    @property
    def size(self):
        return len(self.names)

    @property
    def rounds(self):
        return self.size.bit_length() - 1

    @property
    def games(self):
        return self.size - 1

    @property
    def game_rounds(self):
        """1-based round number of each game."""
        return np.repeat(np.arange(1, self.rounds + 1),
                         [self.size >> rd for rd in range(1, self.rounds + 1)])

    @property
    def game_weights(self):
        return 10 * 2 ** (self.game_rounds - 1)

    @property
    def max_score(self):
        return int(self.game_weights.sum())

    def same_as(self, other):
        return self is other or (self.names == other.names and np.array_equal(self.slots, other.slots))

    @classmethod
    def from_teams(cls, teams, region_order=None):
        """Build a 64-team field from (name, region, seed, elo) records.

        Records are ranked by Elo with ties kept in input order; regions are
        placed in ``region_order`` (default: first appearance) and semifinals
        pair regions 1-2 and 3-4.
        """
        teams = [(str(n), str(r), int(s), float(e)) for n, r, s, e in teams]
        if len(teams) != 64:
            raise DomainError(f"a tournament field needs 64 teams, got {len(teams)}")
        if region_order is None:
            region_order = list(dict.fromkeys(t[1] for t in teams))
        if len(region_order) != 4:
            raise DomainError(f"expected 4 regions, got {len(region_order)}: {region_order}")
        names = [t[0] for t in teams]
        if len(set(names)) != 64:
            raise DomainError("team names must be unique")
        rank = sorted(range(64), key=lambda i: -teams[i][3])   # stable
        index_of = {orig: new for new, orig in enumerate(rank)}
        slots = []
        for reg in region_order:
            by_seed = {}
            for i, t in enumerate(teams):
                if t[1] == reg:
                    if t[2] in by_seed:
                        raise DomainError(f"region {reg} has seed {t[2]} twice")
                    by_seed[t[2]] = i
            if sorted(by_seed) != list(range(1, 17)):
                raise DomainError(f"region {reg} must hold seeds 1..16 exactly once")
            slots.extend(index_of[by_seed[s]] for s in REGION_TEMPLATE)
        return cls(names=tuple(names[i] for i in rank),
                   seeds=np.array([teams[i][2] for i in rank]),
                   elos=np.array([teams[i][3] for i in rank]),
                   regions=tuple(teams[i][1] for i in rank),
                   slots=np.array(slots))

    @classmethod
    def from_ratings(cls, elos, seeds=None, names=None, slots=None):
        """Small or synthetic field; teams must already be in Elo order."""
        T = len(elos)
        seeds = list(range(1, T + 1)) if seeds is None else list(seeds)
        names = tuple(f"team{i + 1}" for i in range(T)) if names is None else tuple(names)
        if slots is None:
            slots = [s - 1 for s in seeding_order(T)]
        return cls(names=names, seeds=np.array(seeds), elos=np.array(elos, float),
                   regions=("",) * T, slots=np.array(slots))

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._read(fh)

    @classmethod
    def _read(cls, fh):
        reader = csv.DictReader(fh)
        need = {"team_name", "region", "seed", "elo"}
        missing = need - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"missing column(s): {', '.join(sorted(missing))}", line=1)
        teams = []
        for lineno, rec in enumerate(reader, 2):
            try:
                seed = int(rec["seed"])
                elo = float(rec["elo"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"unparseable row: {exc}", line=lineno) from None
            if not 1 <= seed <= 16:
                raise ConfigError(f"seed {seed} outside 1..16", line=lineno, field="seed")
            if not math.isfinite(elo):
                raise ConfigError("elo is not finite", line=lineno, field="elo")
            teams.append((rec["team_name"], rec["region"], seed, elo))
        return cls.from_teams(teams)

    @classmethod
    def ncaa_2021(cls):
        """The bundled 2021 field (bracket as played; ratings reconstructed)."""
        ref = resources.files("multibracket") / "data" / "ncaa_2021_elo.csv"
        with ref.open("r", encoding="utf-8", newline="") as fh:
            return cls._read(fh)


@dataclass(frozen=True, eq=False)
class TournamentBracket:
    winners: np.ndarray
    field: Field

    def __post_init__(self):
        w = np.asarray(self.winners, dtype=np.int32)
        if w.shape != (self.field.games,):
            raise DomainError(f"expected {self.field.games} winners, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "winners", w)

    @property
    def champion(self):
        return int(self.winners[-1])

    def is_consistent(self):
        """Whether every winner actually played in its game."""
        cur = self.field.slots
        g = 0
        while cur.size > 1:
            h = cur.size // 2
            w = self.winners[g : g + h]
            if not np.all((w == cur[0::2]) | (w == cur[1::2])):
                return False
            cur = w
            g += h
        return True


def _pairwise(values, fn):
    T = values.size
    M = np.full((T, T), 0.5)
    iu = np.triu_indices(T, 1)
    upper = fn(values[iu[0]], values[iu[1]])
    M[iu] = upper
    M[(iu[1], iu[0])] = 1.0 - upper
    return M


def elo_to_winmatrix(field):
    """P[i, j] = 1 / (1 + 10**(-(elo_i - elo_j) * 30.464 / 400))."""
    return _pairwise(field.elos, lambda a, b: 1.0 / (1.0 + 10.0 ** (-(a - b) * ELO_SCALE)))


def interpolated_strategy(P, lam):
    """Strategy sliding from coin flips (0) through P (1/2) to pure chalk (1)."""
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    P = np.asarray(P, dtype=np.float64)
    T = P.shape[0]
    iu = np.triu_indices(T, 1)
    fav = P[iu]
    if lam <= 0.5:
        upper = (1.0 - 2.0 * lam) * 0.5 + 2.0 * lam * fav
    else:
        t = 2.0 * (lam - 0.5)
        upper = (1.0 - t) * fav + t
    Q = np.full((T, T), 0.5)
    Q[iu] = upper
    Q[(iu[1], iu[0])] = 1.0 - upper
    return Q


def chalky_opponents(field):
    """Public that backs the better seed 90% of the time unless seeds are adjacent."""
    def rule(si, sj):
        d = si - sj
        return np.where(d < -1, 0.9, np.where(d > 1, 0.1, 0.5))
    return _pairwise(field.seeds.astype(np.float64), rule)


def _as_key(source):
    if isinstance(source, rng.CounterStream):
        return source.key
    return rng.root_key(int(source))


def sample_bracket(S, field, source):
    """One bracket drawn game by game under strategy ``S``.

    ``source`` is a :class:`CounterStream` or an integer seed.
    """
    key = np.array([_as_key(source)], dtype=np.uint64)
    win = kernels.sample_brackets(np.asarray(S, dtype=np.float64), field.slots, key)
    return TournamentBracket(win[0], field)


def sample_brackets(S, field, keys):
    """Winner arrays, one row per stream key."""
    return kernels.sample_brackets(np.asarray(S, dtype=np.float64), field.slots,
                                   np.asarray(keys, dtype=np.uint64))


def espn_score(x, tau):
    """Round-weighted count of correctly picked winners."""
    if not x.field.same_as(tau.field):
        raise DomainError("brackets belong to different fields")
    return int(x.field.game_weights @ (x.winners == tau.winners))


# ---------------------------------------------------------------------------
# double Monte Carlo


def _threads():
    raw = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


@dataclass
class SweepResult:
    """Double Monte-Carlo estimates, arrays shaped (strategies, len(ns))."""

    ns: np.ndarray
    emax: np.ndarray
    emax_se: np.ndarray
    winprob: np.ndarray = None
    winprob_se: np.ndarray = None
    k: int = None


def _summarise(per_b1):
    B1 = per_b1.shape[0]
    mean = per_b1.mean(axis=0)
    if B1 < 2:
        return mean, np.full(mean.shape, np.nan)
    return mean, per_b1.std(axis=0, ddof=1) / math.sqrt(B1)


def mc_sweep(P, strategies, field, ns, B1, B2, seed, R=None, k=None):
    """Expected max score (and win probability against ``k`` R-brackets).

    For every outer draw ``b1`` a true bracket is drawn from ``P``; for each
    inner draw ``b2`` a fresh set of ``max(ns)`` brackets is drawn under every
    strategy (shared uniforms) and, if ``R`` is given, ``k`` opponent brackets.
    Ties with the best opponent count as wins.
    """
    ns = np.asarray(sorted(set(int(n) for n in ns)), dtype=np.int64)
    if ns.size == 0 or ns[0] < 1:
        raise DomainError("ns must be positive")
    if B1 < 1 or B2 < 1:
        raise DomainError("B1 and B2 must be >= 1")
    if R is not None and (k is None or k < 1):
        raise DomainError("k must be >= 1 when opponents are given")
    S_stack = np.ascontiguousarray(np.stack([np.asarray(S, np.float64) for S in strategies]))
    P = np.ascontiguousarray(P, dtype=np.float64)
    if S_stack.shape[1:] != (field.size, field.size):
        raise DomainError("strategy matrices do not match the field size")
    nmax = int(ns[-1])
    L = S_stack.shape[0]
    if L * nmax > 1 << 28:
        raise ResourceError(f"{L} strategies x {nmax} brackets per cell is too large")
    gw = field.game_weights.astype(np.int64)
    slots = field.slots
    Rm = None if R is None else np.ascontiguousarray(R, dtype=np.float64)

    def outer(b1):
        tkey = np.array([rng.stream_key(seed, rng.TAG_REFERENCE, b1)], dtype=np.uint64)
        tau = kernels.sample_brackets(P, slots, tkey)[0]
        emax = np.zeros((L, ns.size))
        wins = np.zeros((L, ns.size))
        for b2 in range(B2):
            parent = rng.stream_key(seed, rng.TAG_OURS, b1, b2)
            scores = kernels.score_brackets(S_stack, slots, tau, gw, parent, 0, nmax)
            best = np.maximum.accumulate(scores, axis=1)[:, ns - 1]
            emax += best
            if Rm is not None:
                opp = kernels.max_score(Rm, slots, tau, gw,
                                        rng.stream_key(seed, rng.TAG_OPPONENTS, b1, b2), 0, k)
                wins += best >= opp
        return emax / B2, wins / B2

    threads = _threads()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(outer, range(B1)))
    else:
        results = [outer(b1) for b1 in range(B1)]
    em, em_se = _summarise(np.stack([r[0] for r in results]))
    out = SweepResult(ns=ns, emax=em, emax_se=em_se)
    if Rm is not None:
        out.winprob, out.winprob_se = _summarise(np.stack([r[1] for r in results]))
        out.k = int(k)
    return out


def mc_expected_max_score(P, Q, field, n, B1, B2, seed):
    """Double Monte-Carlo estimate of E[max score of n Q-brackets]: (mean, stderr)."""
    res = mc_sweep(P, [Q], field, [n], B1, B2, seed)
    return float(res.emax[0, 0]), float(res.emax_se[0, 0])


def mc_win_probability(P, Q, R, field, n, k, B1, B2, seed):
    """Double Monte-Carlo estimate of P(our best >= best of k R-brackets)."""
    res = mc_sweep(P, [Q], field, [n], B1, B2, seed, R=R, k=k)
    return float(res.winprob[0, 0]), float(res.winprob_se[0, 0])


# ---------------------------------------------------------------------------
# exact enumeration for small fields


def bracket_law(S, field):
    """All ``2**games`` brackets with their probabilities under ``S``."""
    if field.size > EXACT_MAX_TEAMS:
        raise ResourceError(f"exact enumeration is limited to {EXACT_MAX_TEAMS} teams")
    S = np.asarray(S, dtype=np.float64)
    G = field.games
    bits = (np.arange(2**G)[:, None] >> np.arange(G)[None, :]) & 1   # 1: favourite wins
    B = bits.shape[0]
    cur = np.broadcast_to(field.slots, (B, field.size))
    winners = np.empty((B, G), dtype=np.int32)
    prob = np.ones(B)
    g = 0
    while cur.shape[1] > 1:
        a, b = cur[:, 0::2], cur[:, 1::2]
        fav, dog = np.minimum(a, b), np.maximum(a, b)
        h = a.shape[1]
        fb = bits[:, g : g + h].astype(bool)
        pf = S[fav, dog]
        prob *= np.where(fb, pf, 1.0 - pf).prod(axis=1)
        cur = np.where(fb, fav, dog)
        winners[:, g : g + h] = cur
        g += h
    return winners, prob


def exact_objectives(P, Q, field, n, R=None, k=None):
    """Exact expected max score and (optionally) win probability on a tiny field."""
    taus, p_tau = bracket_law(P, field)
    xs, p_x = bracket_law(Q, field)
    if R is not None:
        ys, p_y = bracket_law(R, field)
    gw = field.game_weights
    top = field.max_score

    def cdf(brackets, probs, tau):
        sc = (brackets == tau[None, :]) @ gw
        return np.minimum(np.cumsum(np.bincount(sc, weights=probs, minlength=top + 1)), 1.0)

    emax = 0.0
    win = 0.0
    for tau, pt in zip(taus, p_tau):
        if pt == 0.0:
            continue
        Fq = cdf(xs, p_x, tau)
        emax += pt * (1.0 - Fq[:-1] ** n).sum()
        if R is not None:
            Fr = cdf(ys, p_y, tau)
            Fq_prev = np.concatenate([[0.0], Fq[:-1]])
            Fr_prev = np.concatenate([[0.0], Fr[:-1]])
            win += pt * (1.0 - (Fq_prev**n * (Fr**k - Fr_prev**k)).sum())
    out = {"emax": emax}
    if R is not None:
        out["winprob"] = win
    return out
