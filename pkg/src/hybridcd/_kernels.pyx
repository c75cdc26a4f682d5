# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled coordinate-target kernels.

Arithmetic order here is mirrored exactly by ``_kernels_py`` so both
backends produce bit-identical results.
"""

from libc.math cimport fabs

BACKEND = "cython"

cdef enum:
    GRADIENT = 0
    LINE_SEARCH = 1
    NO_CHANGE = 2


cdef inline double _relu(double v) noexcept nogil:
    return v if v > 0.0 else 0.0


cdef double _probe(const double[::1] z, const double[::1] x, const double[::1] res,
                   double coef, double delta) noexcept nogil:
    cdef Py_ssize_t s, n = z.shape[0]
    cdef double t, acc = 0.0
    for s in range(n):
        t = res[s] + coef * (_relu(z[s] + delta * x[s]) - _relu(z[s]))
        acc += t * t
    return 0.5 * acc


def half_sq_sum(const double[::1] res):
    cdef Py_ssize_t s
    cdef double acc = 0.0
    for s in range(res.shape[0]):
        acc += res[s] * res[s]
    return 0.5 * acc


def perturbed_loss(const double[::1] z, const double[::1] x, const double[::1] res,
                   double coef, double delta):
    return _probe(z, x, res, coef, delta)


cdef void _line_search(const double[::1] z, const double[::1] x, const double[::1] res,
                       double coef, double w, double base, double dw, long max_probes,
                       double* value, int* rule, long* probes) noexcept nogil:
    cdef double lp = _probe(z, x, res, coef, dw)
    cdef double lm = _probe(z, x, res, coef, -dw)
    cdef double sigma, prev, cur
    cdef long k, best_k, used = 2
    if lp == lm or (lp if lp < lm else lm) >= base:
        value[0] = w
        rule[0] = NO_CHANGE
        probes[0] = used
        return
    if lp < lm:
        sigma = 1.0
        prev = lp
    else:
        sigma = -1.0
        prev = lm
    k = 1
    best_k = 1
    while used < max_probes:
        k += 1
        cur = _probe(z, x, res, coef, sigma * k * dw)
        used += 1
        if cur < prev:
            prev = cur
            best_k = k
        else:
            break
    value[0] = w + sigma * best_k * dw
    rule[0] = LINE_SEARCH
    probes[0] = used


def line_search(const double[::1] z, const double[::1] x, const double[::1] res,
                double coef, double w, double base, double dw, long max_probes):
    """Return ``(value, rule, probes_used)`` for one coordinate."""
    cdef double value
    cdef int rule
    cdef long probes
    _line_search(z, x, res, coef, w, base, dw, max_probes, &value, &rule, &probes)
    return value, rule, probes


def coordinate_targets(const double[:, ::1] W, const double[:, ::1] Z,
                       const double[:, ::1] XT, const double[::1] res,
                       const double[::1] coef, const double[:, ::1] grad,
                       double base, double dw, long max_probes,
                       Py_ssize_t r0, Py_ssize_t r1,
                       double[:, ::1] target, signed char[:, ::1] rule,
                       long[:, ::1] probes):
    """Fill rows ``r0:r1`` of the target, rule and probe-count arrays."""
    cdef Py_ssize_t r, j, p = W.shape[1]
    cdef double g, value
    cdef int code
    cdef long used
    with nogil:
        for r in range(r0, r1):
            for j in range(p):
                g = grad[r, j]
                if fabs(g) >= dw:
                    target[r, j] = W[r, j] - g
                    rule[r, j] = GRADIENT
                    probes[r, j] = 0
                else:
                    _line_search(Z[r], XT[j], res, coef[r], W[r, j], base, dw,
                                 max_probes, &value, &code, &used)
                    target[r, j] = value
                    rule[r, j] = <signed char>code
                    probes[r, j] = used
