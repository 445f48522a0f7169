"""Compiled inner loops for walks and SGNS training.

Everything here works on plain arrays indexed by internal node id. The RNG
is a splitmix64-seeded xorshift64* so that every walk (and every training
chunk) has its own stream regardless of scheduling.
"""

import numpy as np
from numba import njit, prange

_U53 = 1.0 / 9007199254740992.0


@njit(inline="always")
def splitmix64(x):
    x = x + np.uint64(0x9E3779B97F4A7C15)
    z = x
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _next(state):
    x = state[0]
    x ^= x >> np.uint64(12)
    x ^= x << np.uint64(25)
    x ^= x >> np.uint64(27)
    state[0] = x
    return x * np.uint64(2685821657736338717)


@njit(inline="always")
def _uniform(state):
    return np.float64(_next(state) >> np.uint64(11)) * _U53


@njit(inline="always")
def _seed_state(state, seed):
    s = splitmix64(np.uint64(seed))
    if s == np.uint64(0):
        s = np.uint64(0x2545F4914F6CDD1D)
    state[0] = s


@njit
def walk_seed(base, node, j):
    h = splitmix64(np.uint64(base))
    h = splitmix64(h ^ np.uint64(node))
    return splitmix64(h ^ (np.uint64(j) * np.uint64(0xD1B54A32D192ED03)))


@njit(cache=True)
def _walk_into(indptr, indices, start, length, state, out, pos):
    cur = start
    out[pos] = cur
    n = 1
    while n < length:
        a = indptr[cur]
        deg = indptr[cur + 1] - a
        if deg == 0:
            break
        cur = indices[a + np.int64(_uniform(state) * deg)]
        out[pos + n] = cur
        n += 1
    return n


@njit(cache=True)
def random_walks(indptr, indices, starts, r, length, base_seed):
    """r walks per start node; returns the flat walk buffer and walk offsets."""
    n_walks = starts.shape[0] * r
    buf = np.empty(n_walks * length, dtype=np.int32)
    lens = np.empty(n_walks, dtype=np.int64)
    state = np.empty(1, dtype=np.uint64)
    for i in range(starts.shape[0]):
        node = starts[i]
        for j in range(r):
            w = i * r + j
            state[0] = walk_seed(base_seed, node, j) | np.uint64(1)
            lens[w] = _walk_into(indptr, indices, node, length, state, buf, w * length)
    offsets = np.zeros(n_walks + 1, dtype=np.int64)
    for w in range(n_walks):
        offsets[w + 1] = offsets[w] + lens[w]
    flat = np.empty(offsets[n_walks], dtype=np.int32)
    for w in range(n_walks):
        flat[offsets[w]:offsets[w + 1]] = buf[w * length:w * length + lens[w]]
    return flat, offsets


@njit(cache=True)
def count_pairs(offsets, window):
    total = np.int64(0)
    for wi in range(offsets.shape[0] - 1):
        a = offsets[wi]
        b = offsets[wi + 1]
        for i in range(a, b):
            total += min(b, i + window + 1) - max(a, i - window) - 1
    return total


@njit(cache=True)
def node_frequency(flat, offsets, window, n_ids):
    """Occurrences of each node across all (center, context) pairs, both roles."""
    freq = np.zeros(n_ids, dtype=np.int64)
    for wi in range(offsets.shape[0] - 1):
        a = offsets[wi]
        b = offsets[wi + 1]
        for i in range(a, b):
            partners = min(b, i + window + 1) - max(a, i - window) - 1
            freq[flat[i]] += 2 * partners
    return freq


@njit(cache=True)
def enumerate_pairs(flat, offsets, window):
    total = count_pairs(offsets, window)
    centers = np.empty(total, dtype=np.int64)
    contexts = np.empty(total, dtype=np.int64)
    p = 0
    for wi in range(offsets.shape[0] - 1):
        a = offsets[wi]
        b = offsets[wi + 1]
        for i in range(a, b):
            for j in range(max(a, i - window), min(b, i + window + 1)):
                if j != i:
                    centers[p] = flat[i]
                    contexts[p] = flat[j]
                    p += 1
    return centers, contexts


@njit(inline="always", fastmath=True)
def _pair_update(zin, zout, c, x, negs, nneg, lr, neu):
    """One SGNS ascent step on (c, x) against ``negs[:nneg]``, word2vec ordering.

    Output rows are updated with the pre-step input row; the input row gets
    the accumulated back-propagated update at the end.
    """
    zc = zin[c]
    d = zc.shape[0]
    for k in range(d):
        neu[k] = 0.0
    for s in range(nneg + 1):
        if s == 0:
            t = x
            label = np.float32(1.0)
        else:
            t = negs[s - 1]
            label = np.float32(0.0)
        zt = zout[t]
        f = np.float32(0.0)
        for k in range(d):
            f += zc[k] * zt[k]
        g = (label - np.float32(1.0) / (np.float32(1.0) + np.exp(-f))) * lr
        for k in range(d):
            neu[k] += g * zt[k]
        for k in range(d):
            zt[k] += g * zc[k]
    for k in range(d):
        zc[k] += neu[k]


@njit(cache=True, fastmath=True)
def pair_update(zin, zout, c, x, negs, nneg, lr, neu):
    _pair_update(zin, zout, c, x, negs, nneg, lr, neu)


@njit(inline="always")
def _draw_negative(state, table):
    r = _next(state) >> np.uint64(32)
    return table[np.int64((r * np.uint64(table.shape[0])) >> np.uint64(32))]


@njit(inline="always")
def _train_range(zin, zout, flat, offsets, order, lo_o, hi_o, window, table,
                 m, lr_start, lr_end, total, done, state, negs, neu):
    for oi in range(lo_o, hi_o):
        wi = order[oi]
        a = offsets[wi]
        b = offsets[wi + 1]
        for i in range(a, b):
            c = flat[i]
            for j in range(max(a, i - window), min(b, i + window + 1)):
                if j == i:
                    continue
                x = flat[j]
                frac = done / total
                if frac > 1.0:
                    frac = 1.0
                lr = np.float32(lr_start + (lr_end - lr_start) * frac)
                done += 1
                nn = 0
                for _ in range(m):
                    t = x
                    tries = 0
                    while t == x and tries < 8:
                        t = _draw_negative(state, table)
                        tries += 1
                    if t != x:
                        negs[nn] = t
                        nn += 1
                _pair_update(zin, zout, c, x, negs, nn, lr, neu)
    return done


@njit(cache=True, fastmath=True)
def train_epoch(zin, zout, flat, offsets, order, window, table,
                m, lr_start, lr_end, total, done, seed):
    """Single-threaded pass over the walks in ``order``; returns the updated pair counter."""
    state = np.empty(1, dtype=np.uint64)
    _seed_state(state, seed)
    negs = np.empty(max(m, 1), dtype=np.int64)
    neu = np.zeros(zin.shape[1], dtype=np.float32)
    return _train_range(zin, zout, flat, offsets, order, 0, order.shape[0], window, table, m,
                        lr_start, lr_end, total, done, state, negs, neu)


@njit(cache=True, fastmath=True, parallel=True)
def train_epoch_hogwild(zin, zout, flat, offsets, order, window, table,
                        m, lr_start, lr_end, total, done, seed, n_chunks):
    """Lock-free variant: chunks of walks update the shared matrices concurrently."""
    n = order.shape[0]
    size = (n + n_chunks - 1) // n_chunks
    # pairs preceding each chunk, so every chunk decays lr from its own offset
    starts = np.zeros(n_chunks + 1, dtype=np.int64)
    for ch in range(n_chunks):
        acc = np.int64(0)
        for oi in range(ch * size, min(n, (ch + 1) * size)):
            wi = order[oi]
            a = offsets[wi]
            b = offsets[wi + 1]
            for i in range(a, b):
                acc += min(b, i + window + 1) - max(a, i - window) - 1
        starts[ch + 1] = starts[ch] + acc
    for ch in prange(n_chunks):
        state = np.empty(1, dtype=np.uint64)
        _seed_state(state, np.uint64(seed) + np.uint64(ch) * np.uint64(0x9E3779B9))
        negs = np.empty(max(m, 1), dtype=np.int64)
        neu = np.zeros(zin.shape[1], dtype=np.float32)
        _train_range(zin, zout, flat, offsets, order, ch * size, min(n, (ch + 1) * size), window,
                     table, m, lr_start, lr_end, total, done + starts[ch],
                     state, negs, neu)
    return done + starts[n_chunks]
