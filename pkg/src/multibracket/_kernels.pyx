# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Signatures and results match ``_fallback``."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t
from libc.string cimport memset

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t CHILD = 0xBB67AE8584CAA73BULL
cdef double INV53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _ipow(double x, int64_t n) noexcept nogil:
    cdef double r = 1.0
    while n:
        if n & 1:
            r *= x
        n >>= 1
        if n:
            x *= x
    return r


# ---------------------------------------------------------------------------
# zero-count tree for the bitstring contest

cdef struct Tree:
    int R
    int L
    const int64_t *m
    const int64_t *stride
    int64_t *pu_off
    int64_t *dq_off
    const double *pu
    const double *dq
    const double *dr    # NULL for tail sums
    double *bufq        # (R + 1) * L prefix pmfs
    double *bufr
    const int64_t *ns
    int nn
    const int64_t *ks
    int nk
    int nacc
    int strict
    double *lacc        # (R + 1) * nacc per-level partial sums
    double *loc         # nacc scratch for one leaf
    double total
    double *frk         # scratch, 2 * nk


cdef void _conv(double *src, double *dst, int length, const double *taps, int ntaps,
                int stride, int L) noexcept nogil:
    cdef int t, a, s
    cdef double c
    memset(dst, 0, L * sizeof(double))
    for t in range(ntaps):
        c = taps[t]
        if c == 0.0:
            continue
        s = t * stride
        for a in range(length):
            dst[a + s] += c * src[a]


cdef void _leaf_tail(Tree *T, double *pmf) noexcept nogil:
    cdef int a, i
    cdef double F = 0.0
    for i in range(T.nn):
        T.loc[i] = 0.0
    for a in range(T.L - 1):
        F += pmf[a]
        if F > 1.0:
            F = 1.0
        for i in range(T.nn):
            T.loc[i] += 1.0 - _ipow(F, T.ns[i])


cdef void _leaf_win(Tree *T, double *pq, double *pr) noexcept nogil:
    cdef int a, i, j
    cdef double Fq = 0.0, Fq_prev = 0.0, Fr = 0.0, base, qn
    cdef double *cur = T.frk
    cdef double *prev = T.frk + T.nk
    for j in range(T.nk):
        prev[j] = 0.0
    for i in range(T.nacc):
        T.loc[i] = 0.0
    for a in range(T.L):
        Fq_prev = Fq
        Fq += pq[a]
        if Fq > 1.0:
            Fq = 1.0
        if pr[a] == 0.0:
            continue
        Fr += pr[a]
        if Fr > 1.0:
            Fr = 1.0
        base = Fq if T.strict else Fq_prev
        for j in range(T.nk):
            cur[j] = _ipow(Fr, T.ks[j])
        for i in range(T.nn):
            qn = _ipow(base, T.ns[i])
            if qn == 0.0:
                continue
            for j in range(T.nk):
                T.loc[i * T.nk + j] += qn * (cur[j] - prev[j])
        for j in range(T.nk):
            prev[j] = cur[j]
    for i in range(T.nacc):
        T.loc[i] = 1.0 - T.loc[i]


cdef void _descend(Tree *T, int level, int length, double wgt) noexcept nogil:
    cdef int u, mr, w, i
    cdef double p
    cdef double *srcq
    cdef double *dstq
    cdef double *srcr
    cdef double *dstr
    cdef double *here
    cdef double *below
    if level == T.R:
        T.total += wgt
        if T.dr == NULL:
            _leaf_tail(T, T.bufq + level * T.L)
        else:
            _leaf_win(T, T.bufq + level * T.L, T.bufr + level * T.L)
        here = T.lacc + level * T.nacc
        for i in range(T.nacc):
            here[i] += wgt * T.loc[i]
        return
    mr = <int>T.m[level]
    w = <int>T.stride[level]
    srcq = T.bufq + level * T.L
    dstq = srcq + T.L
    for u in range(mr + 1):
        p = T.pu[T.pu_off[level] + u]
        if p <= 0.0:
            continue
        _conv(srcq, dstq, length, T.dq + T.dq_off[level] + u * (mr + 1), mr + 1, w, T.L)
        if T.dr != NULL:
            srcr = T.bufr + level * T.L
            dstr = srcr + T.L
            _conv(srcr, dstr, length, T.dr + T.dq_off[level] + u * (mr + 1), mr + 1, w, T.L)
        _descend(T, level + 1, length + mr * w, wgt * p)
    # fold this node's children into its own partial sum (tree-ordered summation)
    here = T.lacc + level * T.nacc
    below = here + T.nacc
    for i in range(T.nacc):
        here[i] += below[i]
        below[i] = 0.0


cdef _run(m, stride, pu, dq, dr, ns, ks, int strict):
    cdef const int64_t[::1] m_v = np.ascontiguousarray(m, dtype=np.int64)
    cdef const int64_t[::1] s_v = np.ascontiguousarray(stride, dtype=np.int64)
    cdef const double[::1] pu_v = np.ascontiguousarray(pu, dtype=np.float64)
    cdef const double[::1] dq_v = np.ascontiguousarray(dq, dtype=np.float64)
    cdef const double[::1] dr_v
    cdef const int64_t[::1] ns_v = np.ascontiguousarray(ns, dtype=np.int64)
    cdef const int64_t[::1] ks_v
    cdef int R = m_v.shape[0]
    sizes = np.asarray(m_v) + 1
    cdef int64_t[::1] pu_off = np.ascontiguousarray(np.concatenate([[0], np.cumsum(sizes)]), dtype=np.int64)
    cdef int64_t[::1] dq_off = np.ascontiguousarray(np.concatenate([[0], np.cumsum(sizes * sizes)]), dtype=np.int64)
    cdef int L = int((np.asarray(m_v) * np.asarray(s_v)).sum()) + 1
    cdef double[:, ::1] bufq = np.zeros((R + 1, L))
    cdef double[:, ::1] bufr = np.zeros((R + 1, L))
    cdef double[:, ::1] lacc
    cdef double[::1] loc
    cdef double[::1] frk = np.zeros(2 * max(len(ks) if ks is not None else 0, 1))
    cdef Tree T
    T.R = R
    T.L = L
    T.m = &m_v[0]
    T.stride = &s_v[0]
    T.pu_off = &pu_off[0]
    T.dq_off = &dq_off[0]
    T.pu = &pu_v[0]
    T.dq = &dq_v[0]
    T.bufq = &bufq[0, 0]
    T.bufr = &bufr[0, 0]
    T.ns = &ns_v[0]
    T.nn = ns_v.shape[0]
    T.strict = strict
    T.total = 0.0
    T.frk = &frk[0]
    bufq[0, 0] = 1.0
    bufr[0, 0] = 1.0
    if dr is None:
        T.dr = NULL
        T.ks = NULL
        T.nk = 0
        T.nacc = T.nn
    else:
        dr_v = np.ascontiguousarray(dr, dtype=np.float64)
        ks_v = np.ascontiguousarray(ks, dtype=np.int64)
        T.dr = &dr_v[0]
        T.ks = &ks_v[0]
        T.nk = ks_v.shape[0]
        T.nacc = T.nn * T.nk
    lacc = np.zeros((R + 1, T.nacc))
    loc = np.zeros(T.nacc)
    T.lacc = &lacc[0, 0]
    T.loc = &loc[0]
    with nogil:
        _descend(&T, 0, 1, 1.0)
    return np.asarray(lacc[0]).copy(), T.total


def tail_sums(m, stride, pu, dq, ns):
    acc, total = _run(m, stride, pu, dq, None, ns, None, 0)
    return acc.copy(), total


def win_sums(m, stride, pu, dq, dr, ns, ks, strict=False):
    acc, total = _run(m, stride, pu, dq, dr, ns, ks, 1 if strict else 0)
    return acc.reshape(len(ns), len(ks)).copy(), total


# ---------------------------------------------------------------------------
# single-elimination brackets

cdef inline double _uniform(uint64_t key, int g) noexcept nogil:
    return (_mix(key + <uint64_t>(g + 1) * GOLDEN) >> 11) * INV53


cdef inline uint64_t _child(uint64_t parent, int64_t i) noexcept nogil:
    return _mix(parent ^ _mix(<uint64_t>i + CHILD))


cdef void _play(const double *S, int T, const int64_t *slots, double *U, int32_t *cur,
                int32_t *out) noexcept nogil:
    cdef int h = T, i, g = 0, a, b, fav, dog, win
    for i in range(T):
        cur[i] = <int32_t>slots[i]
    while h > 1:
        h >>= 1
        for i in range(h):
            a = cur[2 * i]
            b = cur[2 * i + 1]
            fav = a if a < b else b
            dog = a + b - fav
            # branch-free select: these coin flips defeat the predictor
            win = dog + (fav - dog) * <int>(U[g] < S[fav * T + dog])
            out[g] = win
            cur[i] = win
            g += 1


def sample_brackets(S, slots, keys):
    cdef const double[:, ::1] S_v = np.ascontiguousarray(S, dtype=np.float64)
    cdef const int64_t[::1] sl = np.ascontiguousarray(slots, dtype=np.int64)
    cdef const uint64_t[::1] kv = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef int T = sl.shape[0], G = T - 1, B = kv.shape[0], j, g
    cdef int32_t[:, ::1] out = np.empty((B, G), dtype=np.int32)
    cdef int32_t[::1] cur = np.empty(T, dtype=np.int32)
    cdef double[::1] U = np.empty(max(G, 1))
    with nogil:
        for j in range(B):
            for g in range(G):
                U[g] = _uniform(kv[j], g)
            _play(&S_v[0, 0], T, &sl[0], &U[0], &cur[0], &out[j, 0])
    return np.asarray(out)


cdef void _score_block(const double *S, int nS, int T, const int64_t *slots,
                       const int32_t *tau, const int64_t *gw, uint64_t parent, int64_t start, int64_t count,
                       double *U, int32_t *cur, int32_t *win, int64_t *out,
                       int64_t *best) noexcept nogil:
    cdef int64_t j
    cdef int l, g, G = T - 1
    cdef uint64_t key
    cdef int64_t sc
    for j in range(count):
        key = _child(parent, start + j)
        for g in range(G):
            U[g] = _uniform(key, g)
        for l in range(nS):
            _play(S + l * T * T, T, slots, U, cur, win)
            sc = 0
            for g in range(G):
                sc += gw[g] * <int64_t>(win[g] == tau[g])
            if out != NULL:
                out[l * count + j] = sc
            if best != NULL and sc > best[0]:
                best[0] = sc


def score_brackets(S_stack, slots, tau, game_weights, parent, start, count):
    cdef const double[:, :, ::1] S_v = np.ascontiguousarray(S_stack, dtype=np.float64)
    cdef const int64_t[::1] sl = np.ascontiguousarray(slots, dtype=np.int64)
    cdef const int32_t[::1] tv = np.ascontiguousarray(tau, dtype=np.int32)
    cdef const int64_t[::1] gw = np.ascontiguousarray(game_weights, dtype=np.int64)
    cdef int T = sl.shape[0], nS = S_v.shape[0]
    cdef int64_t c = count, st = start
    cdef uint64_t par = parent
    cdef int64_t[:, ::1] out = np.empty((nS, c), dtype=np.int64)
    cdef double[::1] U = np.empty(T)
    cdef int32_t[::1] cur = np.empty(T, dtype=np.int32)
    cdef int32_t[::1] win = np.empty(T, dtype=np.int32)
    if c == 0:
        return np.asarray(out)
    with nogil:
        _score_block(&S_v[0, 0, 0], nS, T, &sl[0], &tv[0], &gw[0], par, st, c,
                     &U[0], &cur[0], &win[0], &out[0, 0], NULL)
    return np.asarray(out)


def max_score(S, slots, tau, game_weights, parent, start, count):
    cdef const double[:, ::1] S_v = np.ascontiguousarray(S, dtype=np.float64)
    cdef const int64_t[::1] sl = np.ascontiguousarray(slots, dtype=np.int64)
    cdef const int32_t[::1] tv = np.ascontiguousarray(tau, dtype=np.int32)
    cdef const int64_t[::1] gw = np.ascontiguousarray(game_weights, dtype=np.int64)
    cdef int T = sl.shape[0]
    cdef int64_t c = count, st = start, best = -1
    cdef uint64_t par = parent
    cdef double[::1] U = np.empty(T)
    cdef int32_t[::1] cur = np.empty(T, dtype=np.int32)
    cdef int32_t[::1] win = np.empty(T, dtype=np.int32)
    with nogil:
        _score_block(&S_v[0, 0], 1, T, &sl[0], &tv[0], &gw[0], par, st, c,
                     &U[0], &cur[0], &win[0], NULL, &best)
    return int(best)
