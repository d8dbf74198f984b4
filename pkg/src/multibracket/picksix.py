"""Pick-s horse-race pools: tilted ticket distributions and expected profit.

Every race's horses are kept sorted by decreasing true win probability, so
"the top c horses" of a race are simply its first c entries.
"""

import csv
from dataclasses import dataclass
from importlib import resources
from itertools import product
import math

import numpy as np

from .errors import ConfigError, DomainError, ResourceError

SUM_TOL = 1e-9
DEFAULT_CAP = 10**8
OPPONENT_PHI = 1 / 8
# the outcome space is enumerated in blocks of at most this many tuples
_BLOCK = 1 << 20


def _race_vectors(races, what):
    out = []
    for j, r in enumerate(races, 1):
        v = np.array(r, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise DomainError(f"{what}: race {j} must be a non-empty vector")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise DomainError(f"{what}: race {j} has negative or non-finite entries")
        if abs(v.sum() - 1.0) > SUM_TOL:
            raise DomainError(f"{what}: race {j} sums to {v.sum():.12g}, not 1")
        v.setflags(write=False)
        out.append(v)
    if not out:
        raise DomainError(f"{what}: needs at least one race")
    return tuple(out)


@dataclass(frozen=True, eq=False)
class TicketStrategy:
    """Per race, the probability of selecting each horse."""

    races: tuple

    def __post_init__(self):
        object.__setattr__(self, "races", _race_vectors(self.races, "strategy"))

    @property
    def sizes(self):
        return tuple(r.size for r in self.races)

    def entropy(self):
        """Shannon entropy in bits of each race's selection vector."""
        out = []
        for r in self.races:
            nz = r[r > 0]
            out.append(float(-(nz * np.log2(nz)).sum()))
        return np.array(out)


@dataclass(frozen=True, eq=False)
class RaceCard(TicketStrategy):
    """True win probabilities, each race sorted nonincreasing."""

    def __post_init__(self):
        races = _race_vectors(self.races, "race card")
        for j, r in enumerate(races, 1):
            if np.any(np.diff(r) > 0):
                raise DomainError(f"race card: race {j} is not sorted by decreasing probability")
        object.__setattr__(self, "races", races)

    @property
    def s(self):
        return len(self.races)

    @classmethod
    def from_rows(cls, rows):
        """Build from (race_index, horse_index, win_prob) triples; sorts each race."""
        by_race = {}
        for race, horse, prob in rows:
            seen = by_race.setdefault(int(race), {})
            if int(horse) in seen:
                raise DomainError(f"race {race}: duplicate horse_index {horse}")
            seen[int(horse)] = float(prob)
        races = [sorted(by_race[j].values(), reverse=True) for j in sorted(by_race)]
        return cls(tuple(races))

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="", encoding="utf-8") as fh:
            return cls._read(fh)

    @classmethod
    def _read(cls, fh):
        reader = csv.DictReader(fh)
        need = {"race_index", "horse_index", "win_prob"}
        missing = need - set(reader.fieldnames or ())
        if missing:
            raise ConfigError(f"missing column(s): {', '.join(sorted(missing))}", line=1)
        rows = []
        for lineno, rec in enumerate(reader, 2):
            try:
                rows.append((int(rec["race_index"]), int(rec["horse_index"]), float(rec["win_prob"])))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"unparseable row: {exc}", line=lineno) from None
            if not 0.0 <= rows[-1][2] <= 1.0:
                raise ConfigError("win_prob outside [0, 1]", line=lineno, field="win_prob")
        return cls.from_rows(rows)

    @classmethod
    def belmont(cls):
        """The bundled six-race card (a reconstruction from morning-line odds)."""
        ref = resources.files("multibracket") / "data" / "belmont_2023-05-21.csv"
        with ref.open("r", encoding="utf-8", newline="") as fh:
            return cls._read(fh)


@dataclass(frozen=True)
class PoolEconomics:
    carryover: float
    take: float
    n: int
    k: int
    price: float = 1.0

    def __post_init__(self):
        if self.carryover < 0:
            raise DomainError(f"carryover must be >= 0, got {self.carryover}")
        if not 0.0 <= self.take < 1.0:
            raise DomainError(f"take must lie in [0, 1), got {self.take}")
        if not self.price > 0:
            raise DomainError(f"ticket price must be positive, got {self.price}")
        if self.n < 0 or self.k < 0:
            raise DomainError("ticket counts must be non-negative")

    @property
    def total_pool(self):
        return self.carryover + self.price * (self.n + self.k) * (1.0 - self.take)


@dataclass(frozen=True)
class TiltParams:
    lam: float
    phi: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.phi <= 1.0:
            raise DomainError(f"phi must lie in [0, 1], got {self.phi}")


def round_half_away(x):
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def cutoff(phi, m):
    """Number of favourites boosted in an m-horse race: round(phi*m) clamped to [1, m]."""
    return min(max(round_half_away(phi * m), 1), m)


def tilt(card, t, compat=False):
    """Entropy-tilted ticket strategy.

    lam < 1 flattens each race towards uniform (phi cancels on normalising).
    lam >= 1 multiplies the top ``cutoff(phi, m)`` horses by lam and the rest
    by 1/lam.  ``compat=True`` reproduces the printed variant in which both
    indicators select the top horses, zeroing everyone else.
    """
    if not isinstance(t, TiltParams):
        t = TiltParams(*t)
    out = []
    for P in card.races:
        if t.lam < 1:
            # (P / P[c-1]) ** lam normalises to the same vector for every c;
            # dividing by the favourite keeps phi from leaking in via rounding
            w = (P / P[0]) ** t.lam
        else:
            top = np.arange(P.size) < cutoff(t.phi, P.size)
            if compat:
                w = P * np.where(top, t.lam + 1.0 / t.lam, 0.0)
            else:
                w = P * np.where(top, t.lam, 1.0 / t.lam)
        out.append(w / w.sum())
    return TicketStrategy(tuple(out))


def opponent_strategy(card, lambda_opp):
    """Public ticket strategy: the tilted family at phi = 1/8."""
    return tilt(card, TiltParams(lambda_opp, OPPONENT_PHI))


def _check_shapes(card, *strategies):
    for s in strategies:
        if s.sizes != card.sizes:
            raise DomainError(f"strategy race sizes {s.sizes} do not match card {card.sizes}")


def _outer(vectors):
    out = np.ones(1)
    for v in vectors:
        out = np.multiply.outer(out, v).reshape(-1)
    return out


def outcome_blocks(card, *strategies, cap=DEFAULT_CAP):
    """Yield (P(tau), strategy(tau) ...) arrays over all outcome tuples in blocks.

    Trailing races are expanded into one outer-product block; leading races
    are iterated, scaling the cached block by their prefix product.
    """
    _check_shapes(card, *strategies)
    sizes = card.sizes
    total = math.prod(sizes)
    if total > cap:
        raise ResourceError(f"outcome space of {total} tuples exceeds the cap of {cap}")
    tables = (card,) + strategies
    split = len(sizes)
    while split > 0 and math.prod(sizes[split - 1 :]) <= _BLOCK:
        split -= 1
    if split == len(sizes):
        split -= 1
    tails = [_outer(t.races[split:]) for t in tables]
    for idx in product(*(range(m) for m in sizes[:split])):
        scale = [math.prod(t.races[j][i] for j, i in enumerate(idx)) for t in tables]
        if scale[0] == 0.0:
            continue
        yield tuple(s * tail for s, tail in zip(scale, tails))


def expected_profit_lower_bound(card, q, r, econ, cap=DEFAULT_CAP):
    """Closed-form lower bound on expected profit.

    ``-n*b + T * sum_tau P(tau) (1 - (1 - Q(tau))**n) / (1 + k R(tau))``.
    """
    if econ.n == 0:
        return 0.0
    acc = 0.0
    for P, Q, R in outcome_blocks(card, q, r, cap=cap):
        with np.errstate(divide="ignore"):   # Q = 1 gives log1p(-1) = -inf, hit = 1
            hit = -np.expm1(econ.n * np.log1p(-Q))
        acc += float(np.sum(P * hit / (1.0 + econ.k * R)))
    return -econ.n * econ.price + econ.total_pool * acc


def expected_profit_monte_carlo(card, q, r, econ, trials, seed, chunk=1 << 16):
    """Monte-Carlo estimate of expected profit, returned as (mean, stderr).

    Each trial draws the winning tuple from the card, then our and the
    public's winning-ticket counts as binomials; a 0/0 share counts as 0.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    _check_shapes(card, q, r)
    if econ.n == 0:
        return 0.0, 0.0
    gen = np.random.Generator(np.random.Philox(seed))
    T = econ.total_pool
    cum = [np.cumsum(P) for P in card.races]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        Qt = np.ones(c)
        Rt = np.ones(c)
        for j, cp in enumerate(cum):
            idx = np.searchsorted(cp, gen.random(c) * cp[-1], side="right")
            idx = np.minimum(idx, cp.size - 1)
            Qt *= q.races[j][idx]
            Rt *= r.races[j][idx]
        W = gen.binomial(econ.n, np.minimum(Qt, 1.0))
        Wo = gen.binomial(econ.k, np.minimum(Rt, 1.0))
        denom = W + Wo
        share = np.divide(W, denom, out=np.zeros(c), where=denom > 0)
        profit = T * share - econ.price * econ.n
        total += float(profit.sum())
        total_sq += float((profit * profit).sum())
        done += c
    mean = total / trials
    if trials == 1:
        return mean, 0.0
    var = max(total_sq - trials * mean * mean, 0.0) / (trials - 1)
    return mean, math.sqrt(var / trials)


@dataclass
class TiltSurface:
    lambdas: np.ndarray
    phis: np.ndarray
    values: np.ndarray   # shape (len(lambdas), len(phis))

    def rows(self):
        for i, lam in enumerate(self.lambdas):
            for j, phi in enumerate(self.phis):
                yield float(lam), float(phi), float(self.values[i, j])


def optimize_tilt(card, econ, lambda_opp, lambda_grid, phi_grid, cap=DEFAULT_CAP):
    """Grid search of the profit bound over (lambda, phi).

    Returns (best TiltParams, best value, surface).  Ties go to the first
    point in lambda-major order.
    """
    lambda_grid = list(lambda_grid)
    phi_grid = list(phi_grid)
    if not lambda_grid or not phi_grid:
        raise DomainError("lambda and phi grids must be non-empty")
    r = opponent_strategy(card, lambda_opp)
    values = np.empty((len(lambda_grid), len(phi_grid)))
    best = None
    for i, lam in enumerate(lambda_grid):
        for j, phi in enumerate(phi_grid):
            t = TiltParams(lam, phi)
            v = expected_profit_lower_bound(card, tilt(card, t), r, econ, cap=cap)
            values[i, j] = v
            if best is None or v > best[1]:
                best = (t, v)
    surface = TiltSurface(np.array(lambda_grid, float), np.array(phi_grid, float), values)
    return best[0], best[1], surface
