"""Exact laws of integer-weighted sums of independent Bernoulli variables.

Distributions live on an arithmetic lattice ``offset + scale * i``.  Weights
are divided by their GCD before building, so a sum of ESPN-style weights
(10, 20, 40, ...) is stored on a lattice 10x smaller than the raw scores.
"""

from dataclasses import dataclass
from functools import reduce
from math import gcd
import numbers

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy
from scipy.stats import binom

from .errors import DomainError


@dataclass(frozen=True)
class BernoulliTerm:
    weight: int
    prob: float

    def __post_init__(self):
        _check_weight(self.weight)
        _check_prob(self.prob)


@dataclass(frozen=True, eq=False)
class ScoreDistribution:
    """PMF over the lattice points ``offset + scale * i`` for ``i < len(pmf)``."""

    offset: int
    pmf: np.ndarray
    scale: int = 1

    def __post_init__(self):
        pmf = np.ascontiguousarray(self.pmf, dtype=np.float64)
        pmf.setflags(write=False)
        object.__setattr__(self, "pmf", pmf)
        if pmf.ndim != 1 or pmf.size == 0:
            raise DomainError("pmf must be a non-empty 1-D array")
        if self.scale < 1:
            raise DomainError("lattice scale must be a positive integer")

    @property
    def support(self):
        return self.offset + self.scale * np.arange(self.pmf.size)

    @property
    def max_score(self):
        return self.offset + self.scale * (self.pmf.size - 1)

    def mean(self):
        return float(self.support @ self.pmf)

    def to_dict(self, atol=0.0):
        """Map score -> mass, dropping masses at or below ``atol``."""
        return {int(x): float(v) for x, v in zip(self.support, self.pmf) if v > atol}

    def rescaled(self, scale):
        """The same law stored on a finer lattice whose spacing divides ``self.scale``."""
        if self.scale % scale:
            raise DomainError(f"scale {scale} does not divide {self.scale}")
        step = self.scale // scale
        out = np.zeros(step * (self.pmf.size - 1) + 1)
        out[::step] = self.pmf
        return ScoreDistribution(self.offset, out, scale)

    def __repr__(self):
        return f"ScoreDistribution(offset={self.offset}, scale={self.scale}, n={self.pmf.size})"


def _check_weight(w):
    if isinstance(w, bool) or not isinstance(w, numbers.Integral):
        if isinstance(w, numbers.Real) and float(w).is_integer():
            raise DomainError(f"weight {w!r} must be an int, not a float")
        raise DomainError(f"weight {w!r} is not an integer")
    if w < 0:
        raise DomainError(f"weight {w} is negative")


def _check_prob(p):
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p} outside [0, 1]")


def point_mass(x=0):
    return ScoreDistribution(int(x), np.ones(1))


def gpb_build(terms):
    """Law of ``sum(t.weight * Bernoulli(t.prob))`` by iterated convolution."""
    terms = [t if isinstance(t, BernoulliTerm) else BernoulliTerm(*t) for t in terms]
    weights = [int(t.weight) for t in terms if t.weight > 0]
    if not weights:
        return point_mass(0)
    g = reduce(gcd, weights)
    pmf = np.zeros(sum(weights) // g + 1)
    pmf[0] = 1.0
    for t in terms:
        if t.weight == 0:
            continue
        step = t.weight // g
        shifted = pmf[:-step] * t.prob
        pmf *= 1.0 - t.prob
        pmf[step:] += shifted
    return ScoreDistribution(0, pmf, g)


def binomial_pmf(count, prob):
    """PMF of Binomial(count, prob) over 0..count."""
    _check_prob(prob)
    if count == 0:
        return np.ones(1)
    k = np.arange(count + 1)
    try:
        return binom.pmf(k, count, prob)
    except OverflowError:
        # scipy's beta-function path overflows for subnormal prob; the
        # log-space form is exact enough there since almost all mass sits at 0
        logp = (gammaln(count + 1) - gammaln(k + 1) - gammaln(count - k + 1)
                + xlogy(k, prob) + xlog1py(count - k, -prob))
        return np.exp(logp)


def gpb_binomial(count, weight, prob):
    """Law of ``weight * Binomial(count, prob)`` on the weight-spaced lattice."""
    if count < 0:
        raise DomainError(f"count {count} is negative")
    _check_weight(weight)
    _check_prob(prob)
    if count == 0 or weight == 0:
        return point_mass(0)
    return ScoreDistribution(0, binomial_pmf(count, prob), int(weight))


def gpb_convolve(a, b):
    """Law of the sum of independent draws from ``a`` and ``b``."""
    if a.pmf.size == 1:
        return ScoreDistribution(a.offset + b.offset, b.pmf.copy(), b.scale)
    if b.pmf.size == 1:
        return ScoreDistribution(a.offset + b.offset, a.pmf.copy(), a.scale)
    g = gcd(a.scale, b.scale)
    pa = a.rescaled(g).pmf if a.scale != g else a.pmf
    pb = b.rescaled(g).pmf if b.scale != g else b.pmf
    # np.convolve is the direct O(|a||b|) sum for these sizes
    return ScoreDistribution(a.offset + b.offset, np.convolve(pa, pb), g)


def gpb_cdf(d, a):
    """P(X <= a)."""
    if a < d.offset:
        return 0.0
    i = (int(np.floor(a)) - d.offset) // d.scale
    if i >= d.pmf.size - 1:
        return 1.0
    return float(min(np.cumsum(d.pmf)[i], 1.0))
