"""Chalky / typical / rare partition of i.i.d. Bernoulli bitstrings.

A string with ``z`` zeros out of ``m`` bits has probability
``p**(m-z) * (1-p)**z``, so the partition is computed per zero count with
exact integer class sizes ``C(m, z)``.  Thresholds are compared in log2 space
with mpmath at 60 significant digits.
"""

from dataclasses import dataclass, field
from math import comb, log2

import mpmath

from .errors import DomainError, ResourceError

MAX_BITS = 24
_DPS = 60


@dataclass(frozen=True)
class EntropyPartition:
    p: float
    m: int
    epsilon: float
    H: float
    counts: dict       # class name -> exact int count
    masses: dict       # class name -> probability
    alphabet: int = 2

    @property
    def total(self):
        return self.alphabet ** self.m


def binary_entropy(p):
    """Entropy in bits of one Bernoulli(p) symbol."""
    if p in (0.0, 1.0):
        return 0.0
    return -(p * log2(p) + (1.0 - p) * log2(1.0 - p))


def bracket_entropy(prob, m):
    """Per-symbol entropy ``-(1/m) log2 P(x)`` of a single bracket."""
    if not prob > 0.0:
        raise DomainError(f"bracket probability must be positive, got {prob}")
    if prob > 1.0:
        raise DomainError(f"bracket probability {prob} exceeds 1")
    if m < 1:
        raise DomainError(f"bracket length must be >= 1, got {m}")
    return 0.0 - log2(prob) / m


def _entropy_mp(p):
    if p in (0.5, 1.0):
        return mpmath.mpf(1 if p == 0.5 else 0)
    pm = mpmath.mpf(p)
    return -(pm * mpmath.log(pm, 2) + (1 - pm) * mpmath.log(1 - pm, 2))


def _log2_prob(p, m, zeros):
    """log2 of P(x) as an mpf; -inf for impossible strings."""
    p = mpmath.mpf(p)
    ones = m - zeros
    if (zeros and p == 1) or (ones and p == 0):
        return mpmath.ninf
    out = mpmath.mpf(0)
    if ones:
        out += ones * mpmath.log(p, 2)
    if zeros:
        out += zeros * mpmath.log(1 - p, 2)
    return out


def partition_bitstrings(p, m, epsilon):
    """Classify all ``2**m`` bitstrings into chalky, typical and rare sets."""
    if m > MAX_BITS:
        raise ResourceError(f"m={m} exceeds the enumeration cap of {MAX_BITS} bits")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    if not 0.5 <= p <= 1.0:
        raise DomainError(f"p must lie in [0.5, 1], got {p}")
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    with mpmath.workdps(_DPS):
        H = _entropy_mp(p)
        hi = -m * (H - epsilon)    # log2 of the chalky threshold
        lo = -m * (H + epsilon)    # log2 of the rare threshold
        counts = {"chalky": 0, "typical": 0, "rare": 0}
        masses = {"chalky": mpmath.mpf(0), "typical": mpmath.mpf(0), "rare": mpmath.mpf(0)}
        for z in range(m + 1):
            lp = _log2_prob(p, m, z)
            if lp >= hi:
                cls = "chalky"
            elif lp <= lo:
                cls = "rare"
            else:
                cls = "typical"
            n = comb(m, z)
            counts[cls] += n
            if lp != mpmath.ninf:
                masses[cls] += n * mpmath.power(2, lp)
        return EntropyPartition(p=p, m=m, epsilon=epsilon, H=float(H), counts=counts,
                                masses={k: float(v) for k, v in masses.items()})


@dataclass
class BoundCheck:
    m: int
    name: str
    holds: bool
    detail: str


@dataclass
class BoundReport:
    p: float
    epsilon: float
    partitions: list
    checks: list = field(default_factory=list)

    @property
    def typical_mass(self):
        return [part.masses["typical"] for part in self.partitions]

    @property
    def all_hold(self):
        return all(c.holds for c in self.checks)

    @property
    def mass_increases(self):
        """Whether P(typical) at the largest m exceeds that at the smallest m."""
        t = self.typical_mass
        return len(t) >= 2 and t[-1] > t[0]

    def lines(self):
        out = [f"p={self.p} epsilon={self.epsilon}"]
        for c in self.checks:
            out.append(f"m={c.m:<3d} {c.name:<24s} {'pass' if c.holds else 'FAIL'}  {c.detail}")
        seq = ", ".join(f"m={part.m}: {part.masses['typical']:.6f}" for part in self.partitions)
        out.append(f"P(typical) by m: {seq}")
        out.append(f"P(typical) grows from first to last m: {self.mass_increases}")
        return out


def check_typical_bounds(p, m_list, epsilon):
    """Check the class-size bounds at each m by exact counting.

    The lower bound on the typical-set size is only checked once the typical
    mass has reached ``1 - epsilon``; before that the bound is not claimed.
    The typical-mass sequence is reported rather than asserted.
    """
    report = BoundReport(p=p, epsilon=epsilon, partitions=[])
    with mpmath.workdps(_DPS):
        for m in sorted(m_list):
            part = partition_bitstrings(p, m, epsilon)
            report.partitions.append(part)
            H = _entropy_mp(p)
            upper_c = mpmath.power(2, m * (H - epsilon))
            upper_t = mpmath.power(2, m * (H + epsilon))
            C, T, Rr = (part.counts[k] for k in ("chalky", "typical", "rare"))
            checks = [
                ("chalky < 2^m(H-e)", C < upper_c, f"{C} < {mpmath.nstr(upper_c, 8)}"),
                ("typical < 2^m(H+e)", T < upper_t, f"{T} < {mpmath.nstr(upper_t, 8)}"),
                ("rare > 2^m - ...", Rr > 2**m - upper_t - upper_c,
                 f"{Rr} > {mpmath.nstr(2**m - upper_t - upper_c, 8)}"),
            ]
            if part.masses["typical"] >= 1 - epsilon:
                lower_t = (1 - mpmath.mpf(epsilon)) * upper_c
                checks.append(("typical > (1-e)2^m(H-e)", T > lower_t,
                               f"{T} > {mpmath.nstr(lower_t, 8)}"))
            for name, ok, detail in checks:
                report.checks.append(BoundCheck(m, name, bool(ok), detail))
    return report
