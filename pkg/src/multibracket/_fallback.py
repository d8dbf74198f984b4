"""Pure numpy implementations of the hot kernels.

Same signatures and results as the compiled ``_kernels`` module; selected by
``multibracket.kernels`` when the extension is unavailable.
"""

import numpy as np

from . import rng

# cap on floats held by one batched level of the zero-count tree
_BATCH_FLOATS = 1 << 22


def ipow(x, n):
    """Elementwise ``x ** n`` for a non-negative int ``n`` by repeated squaring."""
    result = np.ones_like(x)
    base = x.copy()
    n = int(n)
    while n:
        if n & 1:
            result *= base
        n >>= 1
        if n:
            base *= base
    return result


def _offsets(m):
    sizes = m + 1
    pu_off = np.concatenate([[0], np.cumsum(sizes)])
    dq_off = np.concatenate([[0], np.cumsum(sizes * sizes)])
    return pu_off, dq_off


def _round_tables(m, stride, pu, dists, L):
    """Per round: (P(u) vector, list of (U, L)-shaped placed conditional pmfs)."""
    pu_off, dq_off = _offsets(m)
    out = []
    for rd, mr in enumerate(m):
        mr = int(mr)
        w = int(stride[rd])
        p = pu[pu_off[rd] : pu_off[rd + 1]]
        placed = []
        for d in dists:
            block = d[dq_off[rd] : dq_off[rd + 1]].reshape(mr + 1, mr + 1)
            placed.append(block)
        out.append((mr, w, p, placed))
    return out


def _advance(mats, weights, table, L):
    """Convolve every prefix row with every u-value of the next round."""
    mr, w, p, placed = table
    keep = np.nonzero(p > 0.0)[0]
    C = weights.size
    new_w = (weights[:, None] * p[None, keep]).reshape(-1)
    new_mats = []
    for prev, block in zip(mats, placed):
        new = np.zeros((C, keep.size, L))
        for t in range(mr + 1):
            coef = block[keep, t]
            if not coef.any():
                continue
            s = t * w
            new[:, :, s:] += prev[:, None, : L - s] * coef[None, :, None]
        new_mats.append(new.reshape(C * keep.size, L))
    return new_mats, new_w


def _batch_split(tables, L, n_dists):
    """Level below which the whole remaining subtree fits in one batch."""
    for level in range(len(tables) + 1):
        rest = 1
        for mr, _, _, _ in tables[level:]:
            rest *= mr + 1
        if rest * L * n_dists <= _BATCH_FLOATS:
            return level
    return len(tables)


def _run(m, stride, pu, dists, leaf):
    m = np.asarray(m, dtype=np.int64)
    stride = np.asarray(stride, dtype=np.int64)
    L = int((m * stride).sum()) + 1
    tables = _round_tables(m, stride, np.asarray(pu, dtype=np.float64),
                           [np.asarray(d, dtype=np.float64) for d in dists], L)
    split = _batch_split(tables, L, len(dists))
    start = [np.zeros((1, L)) for _ in dists]
    for s in start:
        s[0, 0] = 1.0

    def descend(level, mats, weights):
        if level >= split:
            # vectorise the remainder of the tree in one go
            for lv in range(level, len(tables)):
                mats, weights = _advance(mats, weights, tables[lv], L)
                if not weights.size:
                    return
            leaf(mats, weights)
            return
        mr, w, p, placed = tables[level]
        for u in range(mr + 1):
            if p[u] <= 0.0:
                continue
            sub = (mr, w, p[u : u + 1], [b[u : u + 1] for b in placed])
            m2, w2 = _advance(mats, weights, sub, L)
            descend(level + 1, m2, w2)

    descend(0, start, np.ones(1))
    return L


def tail_sums(m, stride, pu, dq, ns):
    """Return ``(acc, total)``.

    ``acc[i] = sum_u P(u) sum_{a=0}^{L-2} (1 - F(a|u) ** ns[i])`` and
    ``total = sum_u P(u)``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    acc = np.zeros(ns.size)
    total = [0.0]

    def leaf(mats, weights):
        F = np.minimum(np.cumsum(mats[0], axis=1)[:, :-1], 1.0)
        total[0] += weights.sum()
        for i, n in enumerate(ns):
            acc[i] += weights @ (1.0 - ipow(F, n)).sum(axis=1)

    _run(m, stride, pu, [dq], leaf)
    return acc, total[0]


def win_sums(m, stride, pu, dq, dr, ns, ks, strict=False):
    """Return ``(acc, total)`` with ``acc`` of shape ``(len(ns), len(ks))``.

    ``acc[i, j] = sum_u P(u) (1 - sum_a Fq(a - 1 + strict | u) ** ns[i]
    * (Fr(a|u) ** ks[j] - Fr(a-1|u) ** ks[j]))``.
    """
    ns = np.asarray(ns, dtype=np.int64)
    ks = np.asarray(ks, dtype=np.int64)
    acc = np.zeros((ns.size, ks.size))
    total = [0.0]

    def leaf(mats, weights):
        Fq = np.minimum(np.cumsum(mats[0], axis=1), 1.0)
        Fr = np.minimum(np.cumsum(mats[1], axis=1), 1.0)
        if not strict:
            Fq = np.concatenate([np.zeros((Fq.shape[0], 1)), Fq[:, :-1]], axis=1)
        Fr_prev = np.concatenate([np.zeros((Fr.shape[0], 1)), Fr[:, :-1]], axis=1)
        total[0] += weights.sum()
        for j, k in enumerate(ks):
            dk = ipow(Fr, k) - ipow(Fr_prev, k)
            for i, n in enumerate(ns):
                acc[i, j] += weights @ (1.0 - (ipow(Fq, n) * dk).sum(axis=1))

    _run(m, stride, pu, [dq, dr], leaf)
    return acc, total[0]


# ---------------------------------------------------------------------------
# single-elimination bracket sampling


def _play(S, slots, U):
    """Winners, shape (B, G), of brackets driven by uniforms ``U`` under ``S``."""
    B = U.shape[0]
    cur = np.broadcast_to(slots, (B, slots.size))
    out = np.empty((B, slots.size - 1), dtype=np.int32)
    g = 0
    while cur.shape[1] > 1:
        a = cur[:, 0::2]
        b = cur[:, 1::2]
        fav = np.minimum(a, b)
        dog = np.maximum(a, b)
        h = a.shape[1]
        win = np.where(U[:, g : g + h] < S[fav, dog], fav, dog).astype(np.int32)
        out[:, g : g + h] = win
        cur = win
        g += h
    return out


def sample_brackets(S, slots, keys):
    """Winners of one bracket per stream key, shape (len(keys), G)."""
    slots = np.asarray(slots, dtype=np.int64)
    U = rng.uniforms(keys, slots.size - 1)
    return _play(np.asarray(S, dtype=np.float64), slots, U)


def score_brackets(S_stack, slots, tau, game_weights, parent, start, count):
    """Scores vs ``tau`` of brackets ``start..start+count-1`` under each strategy.

    Bracket ``j`` uses stream ``child(parent, j)``; every strategy in
    ``S_stack`` reuses the same uniforms.  Returns int64 array (L, count).
    """
    slots = np.asarray(slots, dtype=np.int64)
    tau = np.asarray(tau)
    game_weights = np.asarray(game_weights, dtype=np.int64)
    keys = rng.child_keys(parent, count, start)
    U = rng.uniforms(keys, slots.size - 1)
    out = np.empty((len(S_stack), count), dtype=np.int64)
    for l, S in enumerate(S_stack):
        win = _play(np.asarray(S, dtype=np.float64), slots, U)
        out[l] = (win == tau[None, :]) @ game_weights
    return out


def max_score(S, slots, tau, game_weights, parent, start, count):
    """Maximum score vs ``tau`` over brackets ``start..start+count-1``."""
    best = -1
    step = 4096
    for s in range(start, start + count, step):
        c = min(step, start + count - s)
        best = max(best, int(score_brackets([S], slots, tau, game_weights, parent, s, c).max()))
    return best
