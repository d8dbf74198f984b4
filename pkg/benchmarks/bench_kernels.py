"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 3]

Each case runs the same inputs through both backends, checks that the
outputs agree and prints the best-of-N wall time and the speedup.
"""

import argparse
import time

import numpy as np

from multibracket import _fallback, rng
from multibracket import bitstring as bs
from multibracket import tournament as tn

try:
    from multibracket import _kernels as compiled
except ImportError:
    compiled = None


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def tree_cases():
    s = bs.RoundStructure.default()
    p = bs.as_profile(0.75, 6)
    q = bs.profile_from_partition(0.95, 0.7, 3, 6)
    r = bs.profile_from_partition(0.9, 0.8, 3, 6)
    for label, w in (("hamming", bs.ScoringWeights.hamming()), ("espn", bs.ScoringWeights.espn())):
        t = bs._tables(s, w, p, [q, r])
        ns = np.array([1, 10, 100, 10000])
        ks = np.array([100])
        yield (f"tail sums, 63 bits, {label}",
               lambda k, t=t, ns=ns: k.tail_sums(t.m, t.stride, t.pu, t.dists[0], ns)[0])
        yield (f"win sums, 63 bits, {label}",
               lambda k, t=t, ns=ns, ks=ks: k.win_sums(t.m, t.stride, t.pu, t.dists[0],
                                                       t.dists[1], ns, ks)[0])


def bracket_cases():
    field = tn.Field.ncaa_2021()
    P = tn.elo_to_winmatrix(field)
    stack = np.stack([tn.interpolated_strategy(P, l) for l in np.linspace(0, 1, 11)])
    slots = field.slots
    gw = field.game_weights.astype(np.int64)
    tau = _fallback.sample_brackets(P, slots, rng.child_keys(rng.root_key(0), 1))[0]
    parent = rng.stream_key(1, rng.TAG_OURS)
    keys = rng.child_keys(rng.root_key(2), 100_000)
    yield "sample 100k brackets", lambda k: k.sample_brackets(P, slots, keys)
    yield ("score 10k brackets x 11 strategies",
           lambda k: k.score_brackets(stack, slots, tau, gw, parent, 0, 10_000))
    yield ("max of 100k opponent brackets",
           lambda k: k.max_score(P, slots, tau, gw, parent, 0, 100_000))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled extension not built; run `python setup.py build_ext --inplace`")
    print(f"{'case':<40s} {'compiled':>10s} {'numpy':>10s} {'speedup':>8s}  agree")
    for name, fn in list(tree_cases()) + list(bracket_cases()):
        tc, a = best_time(lambda: fn(compiled), args.repeat)
        tp, b = best_time(lambda: fn(_fallback), args.repeat)
        if np.ndim(a):
            agree = np.allclose(np.asarray(a, float), np.asarray(b, float), rtol=1e-11, atol=1e-12)
        else:
            agree = a == b
        print(f"{name:<40s} {tc:>9.3f}s {tp:>9.3f}s {tp / tc:>7.1f}x  {agree}")


if __name__ == "__main__":
    main()
