"""Numba-compiled inner loops for Gibbs sampling and embedding training.

Random numbers come from a self-contained xorshift64* stream seeded via
splitmix64, so results are bit-reproducible for a given seed regardless
of numpy or numba version. All kernels are single-threaded on purpose:
the samplers' contracts require deterministic replay.
"""

import math

import numpy as np
from numba import njit

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_INV_2_53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _seed_state(seed):
    # splitmix64 of the user seed; avoids the all-zeros xorshift fixpoint
    z = (np.uint64(seed) + np.uint64(0x9E3779B97F4A7C15)) & _MASK
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK
    z = z ^ (z >> np.uint64(31))
    if z == np.uint64(0):
        z = np.uint64(0x9E3779B97F4A7C15)
    return z


@njit(cache=True)
def _next_state(state):
    state ^= state >> np.uint64(12)
    state = (state ^ (state << np.uint64(25))) & _MASK
    state ^= state >> np.uint64(27)
    return state


@njit(cache=True)
def _to_unit(state):
    # top 53 bits -> float64 in [0, 1)
    v = (state * np.uint64(0x2545F4914F6CDD1D)) & _MASK
    return (v >> np.uint64(11)) * _INV_2_53


@njit(cache=True)
def gibbs_fit(doc_ids, word_ids, n_docs, vocab_size, k, alpha, beta, sweeps, seed):
    """Collapsed Gibbs over flat token arrays.

    Initializes assignments uniformly at random, then for each sweep
    resamples every token from the collapsed conditional
    p(z=t) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)
    with the token's own assignment removed from the counts.
    """
    n_tokens = doc_ids.shape[0]
    z = np.empty(n_tokens, dtype=np.int32)
    state = _seed_state(seed)
    for i in range(n_tokens):
        state = _next_state(state)
        t = int(_to_unit(state) * k)
        if t >= k:
            t = k - 1
        z[i] = t

    n_dk = np.zeros((n_docs, k), dtype=np.int64)
    n_kw = np.zeros((k, vocab_size), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    for i in range(n_tokens):
        n_dk[doc_ids[i], z[i]] += 1
        n_kw[z[i], word_ids[i]] += 1
        n_k[z[i]] += 1

    cum = np.empty(k, dtype=np.float64)
    vb = vocab_size * beta
    for _ in range(sweeps):
        for i in range(n_tokens):
            d = doc_ids[i]
            w = word_ids[i]
            old = z[i]
            n_dk[d, old] -= 1
            n_kw[old, w] -= 1
            n_k[old] -= 1

            total = 0.0
            for t in range(k):
                total += (n_dk[d, t] + alpha) * (n_kw[t, w] + beta) / (n_k[t] + vb)
                cum[t] = total
            state = _next_state(state)
            u = _to_unit(state) * total
            new = 0
            while new < k - 1 and cum[new] < u:
                new += 1

            z[i] = new
            n_dk[d, new] += 1
            n_kw[new, w] += 1
            n_k[new] += 1
    return z, n_dk, n_kw, n_k


@njit(cache=True)
def fold_in(word_ids_flat, doc_offsets, phi, k, alpha, sweeps, seed):
    """Estimate doc-topic mixtures for held-out docs with frozen topics.

    Runs per-document Gibbs against fixed phi rows and returns the
    smoothed theta matrix (n_docs x k).
    """
    n_docs = doc_offsets.shape[0] - 1
    theta = np.empty((n_docs, k), dtype=np.float64)
    state = _seed_state(seed)
    cum = np.empty(k, dtype=np.float64)
    for d in range(n_docs):
        start = doc_offsets[d]
        end = doc_offsets[d + 1]
        length = end - start
        z = np.empty(length, dtype=np.int32)
        n_dk = np.zeros(k, dtype=np.int64)
        for i in range(length):
            state = _next_state(state)
            t = int(_to_unit(state) * k)
            if t >= k:
                t = k - 1
            z[i] = t
            n_dk[t] += 1
        for _ in range(sweeps):
            for i in range(length):
                w = word_ids_flat[start + i]
                old = z[i]
                n_dk[old] -= 1
                total = 0.0
                for t in range(k):
                    total += (n_dk[t] + alpha) * phi[t, w]
                    cum[t] = total
                state = _next_state(state)
                u = _to_unit(state) * total
                new = 0
                while new < k - 1 and cum[new] < u:
                    new += 1
                z[i] = new
                n_dk[new] += 1
        denom = length + k * alpha
        for t in range(k):
            theta[d, t] = (n_dk[t] + alpha) / denom
    return theta


@njit(cache=True)
def sgns_fit(words, sent_offsets, vocab_size, dim, window, negatives, epochs,
             lr0, neg_cdf, seed):
    """Skip-gram with negative sampling over flat token-id arrays.

    Fixed symmetric window, contexts never cross sentence boundaries,
    learning rate decays linearly over the whole run with a floor of
    lr0 * 1e-4. Returns the input vectors and the mean per-pair loss of
    each epoch.
    """
    n_sents = sent_offsets.shape[0] - 1
    n_tokens = words.shape[0]

    state = _seed_state(seed)
    w_in = np.empty((vocab_size, dim), dtype=np.float64)
    for i in range(vocab_size):
        for j in range(dim):
            state = _next_state(state)
            w_in[i, j] = (_to_unit(state) - 0.5) / dim
    w_out = np.zeros((vocab_size, dim), dtype=np.float64)

    losses = np.zeros(epochs, dtype=np.float64)
    total_centers = float(epochs * n_tokens)
    grad_in = np.empty(dim, dtype=np.float64)
    processed = 0.0
    for ep in range(epochs):
        loss = 0.0
        n_pairs = 0
        for s in range(n_sents):
            start = sent_offsets[s]
            end = sent_offsets[s + 1]
            for i in range(start, end):
                lr = lr0 * (1.0 - processed / total_centers)
                if lr < lr0 * 1e-4:
                    lr = lr0 * 1e-4
                processed += 1.0
                c = words[i]
                lo = i - window
                if lo < start:
                    lo = start
                hi = i + window + 1
                if hi > end:
                    hi = end
                for j in range(lo, hi):
                    if j == i:
                        continue
                    o = words[j]
                    for d_ in range(dim):
                        grad_in[d_] = 0.0
                    # positive pair plus sampled negatives
                    for neg in range(negatives + 1):
                        if neg == 0:
                            target = o
                            label = 1.0
                        else:
                            state = _next_state(state)
                            u = _to_unit(state)
                            target = np.searchsorted(neg_cdf, u)
                            if target >= vocab_size:
                                target = vocab_size - 1
                            label = 0.0
                        zdot = 0.0
                        for d_ in range(dim):
                            zdot += w_in[c, d_] * w_out[target, d_]
                        if zdot > 35.0:
                            f = 1.0
                        elif zdot < -35.0:
                            f = 0.0
                        else:
                            f = 1.0 / (1.0 + math.exp(-zdot))
                        if label == 1.0:
                            loss += -math.log(f + 1e-12)
                        else:
                            loss += -math.log(1.0 - f + 1e-12)
                        g = (label - f) * lr
                        for d_ in range(dim):
                            grad_in[d_] += g * w_out[target, d_]
                            w_out[target, d_] += g * w_in[c, d_]
                    for d_ in range(dim):
                        w_in[c, d_] += grad_in[d_]
                    n_pairs += 1
        if n_pairs > 0:
            losses[ep] = loss / n_pairs
    return w_in, losses
