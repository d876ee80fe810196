"""Counter-based SplitMix64 streams.

Element ``i`` of the stream for ``seed`` is the ``i``-th SplitMix64 output
started from state ``seed``, so any slice can be generated without walking
the stream. Values are identical across platforms and languages.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def splitmix64(seed, start, count):
    """Raw 64-bit outputs ``start .. start+count-1`` of the stream for ``seed``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(int(seed) & _MASK) + idx * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_pm1(seed, start, count):
    """Uniform doubles on [-1, 1) built from the top 53 bits of each output."""
    z = splitmix64(seed, start, count)
    u = (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
    return 2.0 * u - 1.0


def random_layer(seed, n_rows, n_cols):
    """Weights ``(n_rows, n_cols)`` then biases ``(n_rows,)`` from one stream.

    Weights occupy stream indices ``0 .. n_rows*n_cols-1`` in row-major order;
    the biases follow immediately.
    """
    vals = uniform_pm1(seed, 0, n_rows * n_cols + n_rows)
    W = vals[: n_rows * n_cols].reshape(n_rows, n_cols)
    b = vals[n_rows * n_cols:].copy()
    return W, b
