# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled message-passing kernel.

Statement-for-statement twin of ``_kernel_py.run_sweeps``; see that module
for the arithmetic conventions. Both kernels must produce bit-identical
message streams, so any change here needs the same change there.
"""

from libc.math cimport INFINITY, exp, fabs, isnan, log1p
from libc.stdlib cimport free, malloc

import numpy as np

SEMIRING_SUM = 0
SEMIRING_MAX = 1
SCHEDULE_ASYNC = 0
SCHEDULE_SYNC = 1

cdef int C_SEMIRING_MAX = 1
cdef int C_SCHEDULE_SYNC = 1


cdef inline unsigned long long _mix(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _logaddexp(double a, double b) nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a >= b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


def run_sweeps(
    var_card_in,
    edge_var_in,
    edge_factor_in,
    edge_pos_in,
    scope_off_in,
    stride_flat_in,
    table_off_in,
    var_edge_off_in,
    var_edge_list_in,
    msg_off_in,
    logpsi_in,
    gamma_in,
    f2v_in,
    v2f_in,
    int semiring,
    double damping,
    int max_sweeps,
    double tol,
    int schedule,
    unsigned long long seed,
):
    cdef const long long[::1] var_card = np.ascontiguousarray(var_card_in, dtype=np.int64)
    cdef const long long[::1] edge_var = np.ascontiguousarray(edge_var_in, dtype=np.int64)
    cdef const long long[::1] edge_factor = np.ascontiguousarray(edge_factor_in, dtype=np.int64)
    cdef const long long[::1] edge_pos = np.ascontiguousarray(edge_pos_in, dtype=np.int64)
    cdef const long long[::1] scope_off = np.ascontiguousarray(scope_off_in, dtype=np.int64)
    cdef const long long[::1] table_off = np.ascontiguousarray(table_off_in, dtype=np.int64)
    cdef const long long[::1] var_edge_off = np.ascontiguousarray(var_edge_off_in, dtype=np.int64)
    cdef const long long[::1] var_edge_list = np.ascontiguousarray(var_edge_list_in, dtype=np.int64)
    cdef const long long[::1] msg_off = np.ascontiguousarray(msg_off_in, dtype=np.int64)
    cdef const double[::1] logpsi = np.ascontiguousarray(logpsi_in, dtype=np.float64)
    cdef const double[::1] gamma = np.ascontiguousarray(gamma_in, dtype=np.float64)
    # f2v/v2f are updated in place and must already be float64 C buffers
    cdef double[::1] f2v = f2v_in
    cdef double[::1] v2f = v2f_in

    cdef Py_ssize_t n_edges = edge_var.shape[0]
    cdef Py_ssize_t total_msg = f2v.shape[0]
    cdef Py_ssize_t max_card = 0, max_arity = 0
    cdef Py_ssize_t k
    for k in range(var_card.shape[0]):
        if var_card[k] > max_card:
            max_card = var_card[k]
    for k in range(scope_off.shape[0] - 1):
        if scope_off[k + 1] - scope_off[k] > max_arity:
            max_arity = scope_off[k + 1] - scope_off[k]

    cdef double *m0f = <double *> malloc(max_card * sizeof(double))
    cdef double *m0v = <double *> malloc(max_card * sizeof(double))
    cdef long long *state = <long long *> malloc((max_arity if max_arity > 0 else 1) * sizeof(long long))
    cdef long long *perm = <long long *> malloc(n_edges * sizeof(long long))
    cdef double *prev_f2v = <double *> malloc(total_msg * sizeof(double))
    cdef double *prev_v2f = <double *> malloc(total_msg * sizeof(double))
    if m0f == NULL or m0v == NULL or state == NULL or perm == NULL or prev_f2v == NULL or prev_v2f == NULL:
        free(m0f); free(m0v); free(state); free(perm); free(prev_f2v); free(prev_v2f)
        raise MemoryError()

    cdef unsigned long long rng = seed
    cdef int status = 0
    cdef double delta = INFINITY
    cdef bint converged = False
    cdef int sweeps = 0

    cdef Py_ssize_t sweep, idx, e, a, p, i, ci, eb, arity, tb, size, cell, q, s, t, e2, o, sp
    cdef double lp, acc, v, w, g, gm1, xf, xv, nf, nv, coef, mx_f, mx_v, of, ov, old, d
    cdef unsigned long long z
    cdef long long j, tmp
    cdef bint use_prev

    with nogil:
        for sweep in range(max_sweeps):
            sweeps = sweep + 1
            delta = 0.0
            for k in range(n_edges):
                perm[k] = k
            for k in range(n_edges - 1, 0, -1):
                rng = rng + 0x9E3779B97F4A7C15ULL
                z = _mix(rng)
                j = <long long> (z % (<unsigned long long> (k + 1)))
                tmp = perm[k]; perm[k] = perm[j]; perm[j] = tmp
            use_prev = schedule == C_SCHEDULE_SYNC
            if use_prev:
                for k in range(total_msg):
                    prev_f2v[k] = f2v[k]
                    prev_v2f[k] = v2f[k]

            for idx in range(n_edges):
                e = perm[idx]
                a = edge_factor[e]
                p = edge_pos[e]
                i = edge_var[e]
                ci = var_card[i]
                eb = scope_off[a]
                arity = scope_off[a + 1] - eb
                tb = table_off[a]
                size = table_off[a + 1] - tb

                for s in range(ci):
                    m0f[s] = -INFINITY
                for q in range(arity):
                    state[q] = 0
                for cell in range(size):
                    lp = logpsi[tb + cell]
                    if lp != -INFINITY:
                        acc = lp
                        for q in range(arity):
                            if q != p:
                                if use_prev:
                                    v = prev_v2f[msg_off[eb + q] + state[q]]
                                else:
                                    v = v2f[msg_off[eb + q] + state[q]]
                                if v == -INFINITY:
                                    acc = -INFINITY
                                    break
                                acc += v
                        if acc != -INFINITY:
                            sp = state[p]
                            if semiring == C_SEMIRING_MAX:
                                if acc > m0f[sp]:
                                    m0f[sp] = acc
                            else:
                                m0f[sp] = _logaddexp(m0f[sp], acc)
                    for q in range(arity - 1, -1, -1):
                        state[q] += 1
                        if state[q] < var_card[edge_var[eb + q]]:
                            break
                        state[q] = 0

                for s in range(ci):
                    acc = 0.0
                    for t in range(var_edge_off[i], var_edge_off[i + 1]):
                        e2 = var_edge_list[t]
                        if e2 != e:
                            if use_prev:
                                w = prev_f2v[msg_off[e2] + s]
                            else:
                                w = f2v[msg_off[e2] + s]
                            if w == -INFINITY:
                                acc = -INFINITY
                                break
                            acc += w
                    m0v[s] = acc

                g = gamma[i]
                gm1 = g - 1.0
                mx_f = -INFINITY
                mx_v = -INFINITY
                for s in range(ci):
                    xf = m0f[s]
                    xv = m0v[s]

                    coef = 0.0
                    acc = 0.0
                    if xf == -INFINITY:
                        coef += g
                    else:
                        acc += g * xf
                    if xv == -INFINITY:
                        coef += gm1
                    elif gm1 != 0.0:
                        acc += gm1 * xv
                    if coef > 0.0:
                        nf = -INFINITY
                    elif coef < 0.0:
                        status = 1
                        break
                    else:
                        nf = acc

                    coef = 0.0
                    acc = 0.0
                    if xv == -INFINITY:
                        coef += g
                    else:
                        acc += g * xv
                    if xf == -INFINITY:
                        coef += gm1
                    elif gm1 != 0.0:
                        acc += gm1 * xf
                    if coef > 0.0:
                        nv = -INFINITY
                    elif coef < 0.0:
                        status = 1
                        break
                    else:
                        nv = acc

                    if damping > 0.0:
                        of = f2v[msg_off[e] + s]
                        ov = v2f[msg_off[e] + s]
                        if nf == -INFINITY or of == -INFINITY:
                            nf = -INFINITY
                        else:
                            nf = (1.0 - damping) * nf + damping * of
                        if nv == -INFINITY or ov == -INFINITY:
                            nv = -INFINITY
                        else:
                            nv = (1.0 - damping) * nv + damping * ov
                    m0f[s] = nf
                    m0v[s] = nv
                    if nf > mx_f:
                        mx_f = nf
                    if nv > mx_v:
                        mx_v = nv
                if status != 0:
                    break
                if mx_f == -INFINITY or mx_v == -INFINITY:
                    status = 3
                    break

                for s in range(ci):
                    o = msg_off[e] + s
                    nf = m0f[s]
                    nv = m0v[s]
                    if nf != -INFINITY:
                        nf -= mx_f
                    if nv != -INFINITY:
                        nv -= mx_v
                    if isnan(nf) or isnan(nv):
                        status = 2
                        break
                    old = f2v[o]
                    if nf != old:
                        if nf == -INFINITY or old == -INFINITY:
                            d = INFINITY
                        else:
                            d = fabs(nf - old)
                        if d > delta:
                            delta = d
                    old = v2f[o]
                    if nv != old:
                        if nv == -INFINITY or old == -INFINITY:
                            d = INFINITY
                        else:
                            d = fabs(nv - old)
                        if d > delta:
                            delta = d
                    f2v[o] = nf
                    v2f[o] = nv
                if status != 0:
                    break

            if status != 0:
                break
            if delta < tol:
                converged = True
                break

    free(m0f); free(m0v); free(state); free(perm); free(prev_f2v); free(prev_v2f)
    if status != 0:
        return sweeps, delta, False, status
    return sweeps, delta, bool(converged), status
