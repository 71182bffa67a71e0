"""Counter-based random streams for reproducible, order-independent sampling.

Every random quantity in a simulation is addressed, not drawn from mutable
state: the value for (purpose, mode, shot) is a pure function of the master
seed and those indices.  Shots can therefore be generated in any order, in
chunks of any size, on any number of workers, and the output is bit
identical.  The generator is a SplitMix-style 64-bit avalanche finalizer
applied to an affine counter, which passes standard statistical batteries
and is cheap enough to evaluate billions of times.

The compiled kernel module reimplements these primitives in C with the
exact same arithmetic, operation for operation, so both backends produce
bit-identical streams; any change here must be mirrored there.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_KEY1 = np.uint64(0xA24BAED4963EE407)
_KEY2 = np.uint64(0x9FB21C651E98DF25)
_ONE = np.uint64(1)

_TO_UNIT = 1.0 / 9007199254740992.0  # 2^-53
_TWO_PI = 6.283185307179586

# Stream purposes; mode index and shot counter complete the address.
PURPOSE_WRITE = 1
PURPOSE_THIN = 2
PURPOSE_NOISE_RA = 3
PURPOSE_NOISE_RS = 4
PURPOSE_READNOISE = 5
PURPOSE_COUNTING = 6


def mix64(z):
    """64-bit avalanche finalizer (SplitMix64 style); accepts uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * _MIX1
        z = z ^ (z >> np.uint64(27))
        z = z * _MIX2
        return z ^ (z >> np.uint64(31))


def stream_key(seed: int, purpose: int, index: int) -> np.uint64:
    """Derive the key of the (purpose, index) stream from the master seed."""
    with np.errstate(over="ignore"):
        k = mix64(np.uint64(seed) ^ (np.uint64(purpose) * _KEY1))
        k = mix64(k ^ ((np.uint64(index) + _ONE) * _KEY2))
    return np.uint64(k[()])


def raw64(key, counters):
    """Raw 64-bit words of one or more streams at the given counters.

    ``key`` and ``counters`` broadcast against each other, so a (1, N)
    counter column against an (M,) key row yields an (N, M) block.
    """
    k = np.asarray(key, dtype=np.uint64)
    c = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(k + (c + _ONE) * _GOLDEN)


def uniform01(key, counters):
    """Uniform doubles in [0, 1), one per counter."""
    return np.asarray(raw64(key, counters) >> np.uint64(11), dtype=np.float64) * _TO_UNIT


def normals(key, counters):
    """Standard normals, one per counter, via Box-Muller on two sub-draws."""
    c = np.asarray(counters, dtype=np.uint64)
    two = np.uint64(2)
    with np.errstate(over="ignore"):
        x1 = raw64(key, c * two)
        x2 = raw64(key, c * two + _ONE)
    # first uniform shifted into (0, 1] so the log never sees zero
    u1 = np.asarray((x1 >> np.uint64(11)) + _ONE, dtype=np.float64) * _TO_UNIT
    u2 = np.asarray(x2 >> np.uint64(11), dtype=np.float64) * _TO_UNIT
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def geometric_from_u(u, mean: float):
    """Geometric (single-mode thermal) deviates on {0, 1, ...} by inversion.

    The law P(n) = mean^n / (1 + mean)^(n + 1) has the stated mean and
    variance mean * (mean + 1); one uniform is consumed per deviate.
    """
    u = np.asarray(u, dtype=np.float64)
    if mean <= 0.0:
        return np.zeros_like(u)
    logq = np.log(mean / (mean + 1.0))
    return np.floor(np.log1p(-u) / logq)


def binomial_from_u(u, n, p: float):
    """Binomial(n, p) deviates by single-uniform CDF inversion.

    ``n`` is an array of nonnegative integers stored as float64.  The pmf is
    walked with the stable ratio recurrence, consuming exactly one uniform
    per deviate regardless of the outcome, which keeps counter bookkeeping
    trivial.  Cost is O(result) per deviate; fine for the few-hundred counts
    this package deals in.
    """
    u = np.asarray(u, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    out = np.zeros_like(n)
    if p <= 0.0:
        return out
    if p >= 1.0:
        return n.copy()
    odds = p / (1.0 - p)
    pmf = np.power(1.0 - p, n)
    cum = pmf.copy()
    active = np.flatnonzero((u >= cum) & (n > 0.0))
    k = 0.0
    res = out.ravel()
    u_f, n_f = u.ravel(), n.ravel()
    pmf_f, cum_f = pmf.ravel(), cum.ravel()
    while active.size:
        ratio = (n_f[active] - k) / (k + 1.0)
        pmf_f[active] = pmf_f[active] * ratio
        pmf_f[active] = pmf_f[active] * odds
        cum_f[active] = cum_f[active] + pmf_f[active]
        k += 1.0
        res[active] = k
        active = active[(u_f[active] >= cum_f[active]) & (k < n_f[active])]
    return out
