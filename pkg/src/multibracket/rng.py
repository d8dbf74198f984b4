"""Counter-based random streams.

Every uniform is a pure function of a 64-bit stream key and a draw counter,
so any cell of a Monte-Carlo grid can be regenerated in isolation and the
compiled kernels and the numpy fallback produce identical draws.

Key derivation::

    key(seed)            = mix(seed ^ ROOT)
    child(parent, i)     = mix(parent ^ mix(i + CHILD))
    uniform(key, c)      = (mix(key + (c + 1) * GOLDEN) >> 11) * 2**-53

where ``mix`` is the SplitMix64 finalizer.
"""

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
ROOT = 0x6A09E667F3BCC909
CHILD = 0xBB67AE8584CAA73B
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# stream tags
TAG_REFERENCE = 1
TAG_OURS = 2
TAG_OPPONENTS = 3


def mix(z):
    """SplitMix64 finalizer on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def root_key(seed):
    return mix((int(seed) & MASK) ^ ROOT)


def child_key(parent, i):
    return mix(parent ^ mix((int(i) + CHILD) & MASK))


def stream_key(seed, *path):
    key = root_key(seed)
    for i in path:
        key = child_key(key, i)
    return key


def mix_array(z):
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def child_keys(parent, count, start=0):
    """Keys of children ``start .. start+count-1`` of ``parent``."""
    idx = np.arange(start, start + count, dtype=np.uint64) + np.uint64(CHILD)
    return mix_array(np.uint64(parent) ^ mix_array(idx))


def uniforms(keys, count):
    """Uniforms in [0, 1) of shape ``(len(keys), count)``; row i uses ``keys[i]``."""
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    ctr = (np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN)).reshape(1, -1)
    bits = mix_array(keys + ctr) >> np.uint64(11)
    return bits.astype(np.float64) * (1.0 / (1 << 53))


class CounterStream:
    """A named position in the key tree; hands out child streams and uniforms."""

    def __init__(self, seed, *path):
        self.seed = int(seed)
        self.path = tuple(int(i) for i in path)
        self.key = stream_key(self.seed, *self.path)

    def child(self, i):
        return CounterStream(self.seed, *self.path, i)

    def uniforms(self, count):
        return uniforms([self.key], count)[0]

    def __repr__(self):
        return f"CounterStream(seed={self.seed}, path={self.path})"
