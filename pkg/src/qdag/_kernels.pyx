# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled evaluation kernels; drop-in for qdag._pykernels."""

import numpy as np

BACKEND = "cython"


def new_values(prog):
    return np.zeros(prog.size, dtype=np.float64)


def new_scratch(prog):
    return (np.empty(prog.size + 1, dtype=np.int64), np.zeros(prog.size, dtype=np.uint8))


def evaluate(prog, ev, values):
    cdef const signed char[:] kind = prog.kind
    cdef const double[:] num = prog.num
    cdef const long long[:] esn_var = prog.esn_var
    cdef const long long[:] esn_val = prog.esn_val
    cdef const long long[:] in_ptr = prog.in_ptr
    cdef const long long[:] in_idx = prog.in_idx
    cdef const long long[:] order = prog.order
    cdef long long[:] evv = np.asarray(ev, dtype=np.int64)
    cdef double[:] val = values
    cdef Py_ssize_t t, j, nid, n = order.shape[0]
    cdef long long e
    cdef double acc
    with nogil:
        for t in range(n):
            nid = order[t]
            if kind[nid] == 0:
                val[nid] = num[nid]
            elif kind[nid] == 1:
                e = evv[esn_var[nid]]
                val[nid] = 1.0 if (e < 0 or e == esn_val[nid]) else 0.0
            elif kind[nid] == 2:
                acc = 1.0
                for j in range(in_ptr[nid], in_ptr[nid + 1]):
                    acc *= val[in_idx[j]]
                val[nid] = acc
            else:
                acc = 0.0
                for j in range(in_ptr[nid], in_ptr[nid + 1]):
                    acc += val[in_idx[j]]
                val[nid] = acc
    return n


cdef inline void _push(long long[:] heap, Py_ssize_t *size, long long x) noexcept nogil:
    cdef Py_ssize_t i = size[0], p
    size[0] += 1
    while i > 0:
        p = (i - 1) >> 1
        if heap[p] <= x:
            break
        heap[i] = heap[p]
        i = p
    heap[i] = x


cdef inline long long _pop(long long[:] heap, Py_ssize_t *size) noexcept nogil:
    cdef long long top = heap[0], last
    cdef Py_ssize_t i = 0, c, n
    size[0] -= 1
    n = size[0]
    if n == 0:
        return top
    last = heap[n]
    while True:
        c = 2 * i + 1
        if c >= n:
            break
        if c + 1 < n and heap[c + 1] < heap[c]:
            c += 1
        if heap[c] >= last:
            break
        heap[i] = heap[c]
        i = c
    heap[i] = last
    return top


def propagate(prog, ev, Py_ssize_t var, values, scratch):
    cdef const signed char[:] kind = prog.kind
    cdef const long long[:] esn_val = prog.esn_val
    cdef const long long[:] in_ptr = prog.in_ptr
    cdef const long long[:] in_idx = prog.in_idx
    cdef const long long[:] out_ptr = prog.out_ptr
    cdef const long long[:] out_idx = prog.out_idx
    cdef const long long[:] var_ptr = prog.var_ptr
    cdef const long long[:] var_idx = prog.var_idx
    cdef double[:] val = values
    cdef long long e = ev[var]
    cdef long long[:] heap = scratch[0]
    cdef unsigned char[:] queued = scratch[1]
    cdef Py_ssize_t size = 0, touched = 0, j, k
    cdef long long nid, c
    cdef double v, acc
    with nogil:
        for j in range(var_ptr[var], var_ptr[var + 1]):
            nid = var_idx[j]
            v = 1.0 if (e < 0 or e == esn_val[nid]) else 0.0
            if v != val[nid]:
                val[nid] = v
                touched += 1
                for k in range(out_ptr[nid], out_ptr[nid + 1]):
                    c = out_idx[k]
                    if not queued[c]:
                        queued[c] = 1
                        _push(heap, &size, c)
        while size > 0:
            nid = _pop(heap, &size)
            # consumers have larger ids, so a popped node is never queued again
            queued[nid] = 0
            touched += 1
            if kind[nid] == 2:
                acc = 1.0
                for j in range(in_ptr[nid], in_ptr[nid + 1]):
                    acc *= val[in_idx[j]]
            else:
                acc = 0.0
                for j in range(in_ptr[nid], in_ptr[nid + 1]):
                    acc += val[in_idx[j]]
            if acc == val[nid]:
                continue
            val[nid] = acc
            for k in range(out_ptr[nid], out_ptr[nid + 1]):
                c = out_idx[k]
                if not queued[c]:
                    queued[c] = 1
                    _push(heap, &size, c)
    return touched


def evaluate_batch(prog, ev, out):
    """Row b of ``out`` gets the query values under evidence row b of ``ev``."""
    cdef const signed char[:] kind = prog.kind
    cdef const double[:] num = prog.num
    cdef const long long[:] esn_var = prog.esn_var
    cdef const long long[:] esn_val = prog.esn_val
    cdef const long long[:] in_ptr = prog.in_ptr
    cdef const long long[:] in_idx = prog.in_idx
    cdef const long long[:] order = prog.order
    cdef const long long[:] qids = prog.query_ids
    cdef const long long[:, :] evv = np.ascontiguousarray(ev, dtype=np.int64)
    cdef double[:, :] res = out
    cdef double[:] val = np.zeros(prog.size, dtype=np.float64)
    cdef Py_ssize_t t, j, b, nid, n = order.shape[0], nb = evv.shape[0]
    cdef long long e
    cdef double acc
    with nogil:
        for b in range(nb):
            for t in range(n):
                nid = order[t]
                if kind[nid] == 0:
                    val[nid] = num[nid]
                elif kind[nid] == 1:
                    e = evv[b, esn_var[nid]]
                    val[nid] = 1.0 if (e < 0 or e == esn_val[nid]) else 0.0
                elif kind[nid] == 2:
                    acc = 1.0
                    for j in range(in_ptr[nid], in_ptr[nid + 1]):
                        acc *= val[in_idx[j]]
                    val[nid] = acc
                else:
                    acc = 0.0
                    for j in range(in_ptr[nid], in_ptr[nid + 1]):
                        acc += val[in_idx[j]]
                    val[nid] = acc
            for j in range(qids.shape[0]):
                res[b, j] = val[qids[j]]
    return n
