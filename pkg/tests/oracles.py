"""Independent brute-force references used by the tests.

Nothing here imports the library's numerical code: each function enumerates
outcomes directly from the model's definition.
"""

from itertools import product
from math import comb

import numpy as np


def enumerate_weighted_sum(terms):
    """{score: prob} of sum(w * Bernoulli(p)) by listing all 2**len outcomes."""
    out = {}
    for bits in product((0, 1), repeat=len(terms)):
        prob = 1.0
        score = 0
        for b, (w, p) in zip(bits, terms):
            prob *= p if b else 1.0 - p
            score += w * b
        out[score] = out.get(score, 0.0) + prob
    return out


def bit_vectors(m, w, p):
    """Per-bit weight and probability vectors for a round structure."""
    return np.repeat(w, m), np.repeat(p, m)


def _string_laws(m_total, probs):
    strings = np.array(list(product((0, 1), repeat=m_total)), dtype=np.int64)
    law = np.prod(np.where(strings == 1, probs, 1.0 - probs), axis=1)
    return strings, law


def _max_law(scores, probs, count):
    """Law of the max of ``count`` i.i.d. draws, by enumerating every tuple."""
    best = scores.copy()
    prob = probs.copy()
    for _ in range(count - 1):
        best = np.maximum.outer(best, scores).ravel()
        prob = np.multiply.outer(prob, probs).ravel()
    return best, prob


def bitstring_objectives(m, w, p, q, r, n, k):
    """Expected max score and tie-inclusive win probability by enumeration.

    Loops over every reference string; for each, lists every n-tuple of our
    guesses and every k-tuple of opponent guesses.
    """
    bw, bp = bit_vectors(m, w, p)
    _, bq = bit_vectors(m, w, q)
    _, br = bit_vectors(m, w, r)
    total = int(np.sum(m))
    strings, P = _string_laws(total, bp)
    _, Q = _string_laws(total, bq)
    _, R = _string_laws(total, br)
    emax = 0.0
    win = 0.0
    for tau, pt in zip(strings, P):
        if pt == 0:
            continue
        scores = ((strings == tau) * bw).sum(axis=1)
        ours, po = _max_law(scores, Q, n)
        theirs, pr = _max_law(scores, R, k)
        emax += pt * float(ours @ po)
        # P(ours >= theirs) with both tuple sets enumerated
        order = np.argsort(theirs, kind="stable")
        cum = np.cumsum(pr[order])
        idx = np.searchsorted(theirs[order], ours, side="right")
        below = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
        win += pt * float(po @ below)
    return emax, win


def binomial_pmf(count, prob):
    return np.array([comb(count, i) * prob**i * (1 - prob) ** (count - i)
                     for i in range(count + 1)])


def tournament_brackets(elos_or_matrix, slots):
    """Every bracket of a tiny field with its probability, via recursion."""
    S = np.asarray(elos_or_matrix, dtype=float)
    results = []

    def rec(current, winners, prob):
        if len(current) == 1:
            results.append((tuple(winners), prob))
            return
        pairs = [(current[2 * i], current[2 * i + 1]) for i in range(len(current) // 2)]
        for choice in product((0, 1), repeat=len(pairs)):
            nxt = []
            pr = prob
            for (a, b), c in zip(pairs, choice):
                wnr = a if c == 0 else b
                los = b if c == 0 else a
                pr *= S[wnr, los]
                nxt.append(wnr)
            rec(nxt, winners + nxt, pr)

    rec(list(slots), [], 1.0)
    return results


def bitstring_classes(p, m, eps):
    """Chalky/typical/rare counts and masses by listing every string."""
    strings = np.array(list(product((0, 1), repeat=m)), dtype=np.int64)
    ones = strings.sum(axis=1)
    prob = p ** ones * (1 - p) ** (m - ones)
    H = 0.0 if p in (0.0, 1.0) else -(p * np.log2(p) + (1 - p) * np.log2(1 - p))
    chalky = prob >= 2.0 ** (-m * (H - eps))
    rare = prob <= 2.0 ** (-m * (H + eps))
    typical = ~chalky & ~rare
    counts = {"chalky": int(chalky.sum()), "typical": int(typical.sum()), "rare": int(rare.sum())}
    masses = {"chalky": prob[chalky].sum(), "typical": prob[typical].sum(), "rare": prob[rare].sum()}
    return counts, masses
