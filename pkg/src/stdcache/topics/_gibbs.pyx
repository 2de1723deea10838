# cython: language_level=3
"""Compiled collapsed Gibbs kernel.

Must stay bit-compatible with _gibbs_py: same splitmix64 draws, same weight
expression and accumulation order, so a fixed seed yields identical counts
in both. Keep default FP codegen (no fast-math, no FMA contraction).
"""

from libc.stdlib cimport free, malloc

COMPILED = True

cdef extern from *:
    """
    #include <stdint.h>
    static inline uint64_t splitmix_next(uint64_t *state) {
        uint64_t z = (*state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    """
    unsigned long long splitmix_next(unsigned long long *state) nogil


cdef inline double _next_double(unsigned long long *state) nogil:
    return <double> (splitmix_next(state) >> 11) * 1.1102230246251565e-16


def gibbs_fit(
    long long[::1] doc_ptr,
    int[::1] tokens,
    int[::1] z,
    long long[:, ::1] n_tw,
    long long[::1] n_t,
    long long[:, ::1] n_dt,
    double alpha,
    double beta,
    int iterations,
    unsigned long long seed,
    bint update_globals,
    bint init,
):
    cdef unsigned long long state = seed
    cdef Py_ssize_t k = n_t.shape[0]
    cdef Py_ssize_t n_docs = doc_ptr.shape[0] - 1
    cdef double v_beta = <double> n_tw.shape[1] * beta
    cdef double *weights = <double *> malloc(k * sizeof(double))
    if weights == NULL:
        raise MemoryError()

    cdef Py_ssize_t d, i, j, it
    cdef int w, t
    cdef double total, u, acc, wt

    try:
        with nogil:
            if init:
                for d in range(n_docs):
                    for i in range(doc_ptr[d], doc_ptr[d + 1]):
                        t = <int> (splitmix_next(&state) % <unsigned long long> k)
                        z[i] = t
                        n_dt[d, t] += 1
                        if update_globals:
                            n_tw[t, tokens[i]] += 1
                            n_t[t] += 1

            for it in range(iterations):
                for d in range(n_docs):
                    for i in range(doc_ptr[d], doc_ptr[d + 1]):
                        w = tokens[i]
                        t = z[i]
                        n_dt[d, t] -= 1
                        if update_globals:
                            n_tw[t, w] -= 1
                            n_t[t] -= 1
                        total = 0.0
                        for j in range(k):
                            wt = (<double> n_dt[d, j] + alpha) * (<double> n_tw[j, w] + beta) / (<double> n_t[j] + v_beta)
                            weights[j] = wt
                            total += wt
                        u = _next_double(&state) * total
                        acc = 0.0
                        t = <int> (k - 1)
                        for j in range(k):
                            acc += weights[j]
                            if u < acc:
                                t = <int> j
                                break
                        z[i] = t
                        n_dt[d, t] += 1
                        if update_globals:
                            n_tw[t, w] += 1
                            n_t[t] += 1
    finally:
        free(weights)
