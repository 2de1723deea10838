"""Pure-Python collapsed Gibbs kernel; behavioral twin of the compiled one.

Both kernels drive sampling from the same splitmix64 generator and evaluate
the conditional weights with the same operation order, so for a given seed
they produce bit-identical assignments and count matrices. This module is
the import-time fallback when the compiled extension is unavailable (or
when STDCACHE_PURE_PYTHON=1).
"""

from __future__ import annotations

COMPILED = False

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TO_DOUBLE = 1.1102230246251565e-16  # 2**-53


class SplitMix64:
    """64-bit splitmix sequence; mirrors the compiled kernel bit for bit."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def next_double(self) -> float:
        return (self.next_u64() >> 11) * _TO_DOUBLE

    def next_below(self, n: int) -> int:
        return self.next_u64() % n


def gibbs_fit(doc_ptr, tokens, z, n_tw, n_t, n_dt, alpha, beta, iterations, seed, update_globals, init):
    """Run seeded init (optional) plus full Gibbs sweeps, mutating arrays.

    doc_ptr[d]..doc_ptr[d+1] delimit document d in ``tokens``/``z``.
    update_globals=False freezes the topic-word counts (held-out inference:
    only the per-document counts move).
    """
    rng = SplitMix64(seed)
    k = len(n_t)
    n_docs = len(doc_ptr) - 1
    v_beta = n_tw.shape[1] * beta

    # Plain lists are far faster than ndarray scalar indexing here.
    ptr = doc_ptr.tolist()
    toks = tokens.tolist()
    zs = z.tolist()
    ntw = [row.tolist() for row in n_tw]
    nt = n_t.tolist()
    ndt = [row.tolist() for row in n_dt]

    if init:
        for d in range(n_docs):
            row = ndt[d]
            for i in range(ptr[d], ptr[d + 1]):
                t = rng.next_below(k)
                zs[i] = t
                row[t] += 1
                if update_globals:
                    ntw[t][toks[i]] += 1
                    nt[t] += 1

    weights = [0.0] * k
    for _ in range(iterations):
        for d in range(n_docs):
            row = ndt[d]
            for i in range(ptr[d], ptr[d + 1]):
                w = toks[i]
                t = zs[i]
                row[t] -= 1
                if update_globals:
                    ntw[t][w] -= 1
                    nt[t] -= 1
                total = 0.0
                for j in range(k):
                    wt = (row[j] + alpha) * (ntw[j][w] + beta) / (nt[j] + v_beta)
                    weights[j] = wt
                    total += wt
                u = rng.next_double() * total
                acc = 0.0
                t = k - 1
                for j in range(k):
                    acc += weights[j]
                    if u < acc:
                        t = j
                        break
                zs[i] = t
                row[t] += 1
                if update_globals:
                    ntw[t][w] += 1
                    nt[t] += 1

    z[:] = zs
    for d in range(n_docs):
        n_dt[d, :] = ndt[d]
    if update_globals:
        for t in range(k):
            n_tw[t, :] = ntw[t]
        n_t[:] = nt
