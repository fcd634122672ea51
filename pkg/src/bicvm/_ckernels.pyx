# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training epoch. Same contract as ``bicvm._pykernels.train_epoch``."""
import numpy as np

from libc.math cimport sqrt
from libc.string cimport memset


cdef inline void _root(double[:, ::1] W, const long long[::1] ptr, const long long[::1] ids,
                       long long s, double* out, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t j
    cdef long long t, w
    memset(out, 0, d * sizeof(double))
    for t in range(ptr[s], ptr[s + 1]):
        w = ids[t]
        for j in range(d):
            out[j] += W[w, j]


cdef inline Py_ssize_t _touch(const long long[::1] ptr, const long long[::1] ids, long long s,
                              char[::1] mark, long long[::1] touched, Py_ssize_t nt) noexcept nogil:
    cdef long long t, w
    for t in range(ptr[s], ptr[s + 1]):
        w = ids[t]
        if not mark[w]:
            mark[w] = 1
            touched[nt] = w
            nt += 1
    return nt


cdef inline void _scatter(double[:, ::1] grad, const long long[::1] ptr, const long long[::1] ids,
                          long long s, double* g, Py_ssize_t d) noexcept nogil:
    cdef long long t, w
    cdef Py_ssize_t j
    for t in range(ptr[s], ptr[s + 1]):
        w = ids[t]
        for j in range(d):
            grad[w, j] += g[j]


def train_epoch(double[:, ::1] W, double[:, ::1] G,
                const long long[::1] ptr, const long long[::1] ids,
                const long long[::1] a_sent, const long long[::1] b_sent,
                const long long[:, ::1] noise_b, const long long[:, ::1] noise_a,
                double margin, double reg_lambda, double step_size, double eps):
    """Run per-pair AdaGrad updates for every scheduled pair; return summed hinge loss."""
    cdef Py_ssize_t R = W.shape[0], d = W.shape[1]
    cdef Py_ssize_t P = a_sent.shape[0], kb = noise_b.shape[1], ka = noise_a.shape[1]
    cdef double[:, ::1] grad = np.zeros((R, d))
    cdef char[::1] mark = np.zeros(R, dtype=np.int8)
    cdef long long[::1] touched = np.zeros(max(R, 1), dtype=np.int64)
    cdef double[::1] buf = np.zeros(5 * d)
    cdef double* ra = &buf[0]
    cdef double* rb = ra + d
    cdef double* rn = rb + d
    cdef double* ga = rn + d
    cdef double* gb = ga + d
    cdef double total = 0.0, dab, dan, h, diff, g, acc
    cdef Py_ssize_t p, i, j, nt, t
    cdef long long a, b, s, w
    cdef bint active

    with nogil:
        for p in range(P):
            a = a_sent[p]
            b = b_sent[p]
            _root(W, ptr, ids, a, ra, d)
            _root(W, ptr, ids, b, rb, d)
            dab = 0.0
            for j in range(d):
                diff = ra[j] - rb[j]
                dab += diff * diff
            memset(ga, 0, d * sizeof(double))
            memset(gb, 0, d * sizeof(double))
            nt = _touch(ptr, ids, a, mark, touched, 0)
            nt = _touch(ptr, ids, b, mark, touched, nt)
            active = False

            for i in range(kb):
                s = noise_b[p, i]
                _root(W, ptr, ids, s, rn, d)
                dan = 0.0
                for j in range(d):
                    diff = ra[j] - rn[j]
                    dan += diff * diff
                h = margin + dab - dan
                if h > 0:
                    total += h
                    active = True
                    for j in range(d):
                        ga[j] += 2.0 * (rn[j] - rb[j])
                        gb[j] += 2.0 * (rb[j] - ra[j])
                        rn[j] = 2.0 * (ra[j] - rn[j])
                    nt = _touch(ptr, ids, s, mark, touched, nt)
                    _scatter(grad, ptr, ids, s, rn, d)

            for i in range(ka):
                s = noise_a[p, i]
                _root(W, ptr, ids, s, rn, d)
                dan = 0.0
                for j in range(d):
                    diff = rb[j] - rn[j]
                    dan += diff * diff
                h = margin + dab - dan
                if h > 0:
                    total += h
                    active = True
                    for j in range(d):
                        ga[j] += 2.0 * (ra[j] - rb[j])
                        gb[j] += 2.0 * (rn[j] - ra[j])
                        rn[j] = 2.0 * (rb[j] - rn[j])
                    nt = _touch(ptr, ids, s, mark, touched, nt)
                    _scatter(grad, ptr, ids, s, rn, d)

            if active:
                _scatter(grad, ptr, ids, a, ga, d)
                _scatter(grad, ptr, ids, b, gb, d)

            for t in range(nt):
                w = touched[t]
                for j in range(d):
                    g = grad[w, j] + reg_lambda * W[w, j]
                    acc = G[w, j] + g * g
                    G[w, j] = acc
                    W[w, j] -= step_size * g / (sqrt(acc) + eps)
                    grad[w, j] = 0.0
                mark[w] = 0
    return total
