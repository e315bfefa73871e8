"""Compiled batch kernels.

Every routine takes the stream as dense flow indices plus, per stage, a
precomputed ``flow -> cell`` table, and must match ``_pykernels`` exactly.
"""

import numpy as np

from .errors import FifoOverflowError

cdef enum:
    K_CM = 0
    K_GATED = 1

cdef enum:
    W_NONE = 0
    W_FLUSH = 1
    W_RING = 2
    W_SEQ = 3
    W_SEQFLUSH = 4


def run_oracle(const int[::1] index, Py_ssize_t n_flows, Py_ssize_t n_window,
               int th_abs, bint inclusive):
    cdef Py_ssize_t P = index.shape[0], p, pos = 0
    cdef int f, v
    counts_arr = np.zeros(max(n_flows, 1), dtype=np.int32)
    ring_arr = np.zeros(n_window, dtype=np.int32)
    true_arr = np.empty(P, dtype=np.int32)
    heavy_arr = np.empty(P, dtype=np.uint8)
    cdef int[::1] counts = counts_arr
    cdef int[::1] ring = ring_arr
    cdef int[::1] true_count = true_arr
    cdef unsigned char[::1] heavy = heavy_arr
    for p in range(P):
        if p >= n_window:
            counts[ring[pos]] -= 1
        f = index[p]
        ring[pos] = f
        pos += 1
        if pos == n_window:
            pos = 0
        counts[f] += 1
        v = counts[f]
        true_count[p] = v
        heavy[p] = (v >= th_abs) if inclusive else (v > th_abs)
    return true_arr, heavy_arr


def run_sketch(const int[::1] index, const int[:, ::1] tables, const int[::1] widths,
               const int[::1] thresholds, int sketch_kind, int th_abs, int window_kind,
               Py_ssize_t n_window, bint split, int clamp):
    cdef Py_ssize_t P = index.shape[0]
    cdef Py_ssize_t d = widths.shape[0]
    cdef Py_ssize_t narr = 2 * d if split else d
    cdef Py_ssize_t p, i, j, k, total = 0
    cdef int f, c, v, w, est, o, cell, touched, a
    cdef bint passed
    cdef Py_ssize_t ring_pos = 0, since_reset = 0, packets = 0

    off_arr = np.zeros(d, dtype=np.int64)
    for i in range(d):
        off_arr[i] = total
        total += widths[i]
    cdef long long[::1] off = off_arr
    counters_arr = np.zeros(total, dtype=np.int32)
    cdef int[::1] counters = counters_arr

    ring_len = n_window if window_kind == W_RING else 1
    ring_cells_arr = np.zeros(ring_len * d, dtype=np.int32)
    ring_touched_arr = np.zeros(ring_len, dtype=np.uint8)
    cdef int[::1] ring_cells = ring_cells_arr
    cdef unsigned char[::1] ring_touched = ring_touched_arr

    seq_arr = np.zeros(2 * d, dtype=np.int32)
    ptr_arr = np.zeros(2 * d, dtype=np.int32)
    stride_arr = np.ones(d, dtype=np.int64)
    if window_kind == W_SEQFLUSH:
        for i in range(d):
            stride_arr[i] = n_window // widths[i]
    cdef int[::1] seq = seq_arr
    cdef int[::1] ptr = ptr_arr
    cdef long long[::1] stride = stride_arr

    rmw_now_arr = np.zeros(narr, dtype=np.int32)
    rmw_max_arr = np.zeros(narr, dtype=np.int32)
    cdef int[::1] rmw_now = rmw_now_arr
    cdef int[::1] rmw_max = rmw_max_arr

    est_arr = np.empty(P, dtype=np.int32)
    heavy_arr = np.empty(P, dtype=np.uint8)
    cdef int[::1] estimate = est_arr
    cdef unsigned char[::1] heavy = heavy_arr

    for p in range(P):
        f = index[p]
        for a in range(narr):
            rmw_now[a] = 0

        if window_kind == W_FLUSH:
            if since_reset == n_window:
                counters[:] = 0
                since_reset = 0
        elif window_kind == W_RING:
            touched = ring_touched[ring_pos]
            for i in range(touched):
                c = ring_cells[ring_pos * d + i]
                k = off[i] + c
                if counters[k] > 0:
                    counters[k] -= 1
                rmw_now[2 * i + (c & 1) if split else i] += 1

        est = 0
        touched = 0
        passed = True
        for i in range(d):
            c = tables[i, f]
            w = widths[i]
            if window_kind == W_SEQ:
                if split:
                    o = 1 - (c & 1)
                    j = seq[2 * i + o]
                    cell = 2 * j + o
                    seq[2 * i + o] = j + 1 if j + 1 < w // 2 else 0
                    rmw_now[2 * i + o] += 1
                else:
                    cell = seq[i]
                    seq[i] = cell + 1 if cell + 1 < w else 0
                    rmw_now[i] += 1
                k = off[i] + cell
                if counters[k] > 0:
                    counters[k] -= 1
            k = off[i] + c
            v = counters[k] + 1
            if v > clamp:
                v = clamp
            counters[k] = v
            rmw_now[2 * i + (c & 1) if split else i] += 1
            touched = i + 1
            if window_kind == W_RING:
                ring_cells[ring_pos * d + i] = c
            if sketch_kind == K_CM:
                if i == 0 or v < est:
                    est = v
            else:
                if i == 0:
                    est = v
                if v <= thresholds[i]:
                    passed = False
                    break

        estimate[p] = est
        if sketch_kind == K_CM:
            heavy[p] = est > th_abs
        else:
            heavy[p] = passed

        if window_kind == W_RING:
            ring_touched[ring_pos] = touched
            ring_pos += 1
            if ring_pos == n_window:
                ring_pos = 0
        elif window_kind == W_FLUSH:
            since_reset += 1
        elif window_kind == W_SEQFLUSH:
            packets += 1
            for i in range(d):
                if packets % stride[i]:
                    continue
                w = widths[i]
                if split:
                    o = 1 - (tables[i, f] & 1)
                    j = ptr[2 * i + o]
                    cell = 2 * j + o
                    ptr[2 * i + o] = j + 1 if j + 1 < w // 2 else 0
                else:
                    cell = ptr[i]
                    ptr[i] = cell + 1 if cell + 1 < w else 0
                counters[off[i] + cell] = 0

        for a in range(narr):
            if rmw_now[a] > rmw_max[a]:
                rmw_max[a] = rmw_now[a]

    return est_arr, heavy_arr, rmw_max_arr


def run_hybrid(const int[::1] index, const int[::1] table1, const int[::1] table3,
               int width1, int width3, Py_ssize_t n_window, int m, int batch_size,
               Py_ssize_t width2, bint pure_ring, int batch_clamp):
    cdef Py_ssize_t P = index.shape[0], p
    cdef Py_ssize_t index1 = 0, first = 0, last = 0, live = 0, ring_pos = 0
    cdef Py_ssize_t ring_size = n_window // m if pure_ring else 1
    cdef int f, c, v, b, victim, old, rmw_batch, rmw_initial

    initial_arr = np.zeros(width1, dtype=np.int32)
    batch_arr = np.zeros(width3, dtype=np.int32)
    bits_arr = np.zeros(n_window, dtype=np.uint8)
    fifo_arr = np.full(width2, -1, dtype=np.int32)
    ring_arr = np.full(ring_size, -1, dtype=np.int32)
    consumed_arr = np.zeros(width1, dtype=np.int32)
    cdef int[::1] consumed = consumed_arr
    cdef int[::1] initial = initial_arr
    cdef int[::1] batch = batch_arr
    cdef unsigned char[::1] bits = bits_arr
    cdef int[::1] fifo = fifo_arr
    cdef int[::1] ring = ring_arr

    est_arr = np.empty(P, dtype=np.int32)
    heavy_arr = np.empty(P, dtype=np.uint8)
    batches_arr = np.empty(P, dtype=np.int32)
    cdef int[::1] estimate = est_arr
    cdef unsigned char[::1] heavy = heavy_arr
    cdef int[::1] batches = batches_arr
    cdef int max_initial = 0, max_batch = 0

    for p in range(P):
        f = index[p]
        rmw_batch = 0
        rmw_initial = 0
        if bits[index1]:
            victim = fifo[last]
            fifo[last] = -1
            last += 1
            if last == width2:
                last = 0
            live -= 1
            bits[index1] = 0
            c = table3[victim]
            if batch[c] > 0:
                batch[c] -= 1
            rmw_batch += 1

        c = table1[f]
        if pure_ring:
            old = ring[ring_pos]
            if old >= 0:
                if consumed[old] > 0:
                    consumed[old] -= 1
                elif initial[old] > 0:
                    initial[old] -= 1
                rmw_initial += 1
            ring[ring_pos] = c
            ring_pos += 1
            if ring_pos == ring_size:
                ring_pos = 0

        v = initial[c] + 1
        rmw_initial += 1
        if v >= batch_size:
            initial[c] = 0
            if live == width2:
                raise FifoOverflowError(
                    f"flow-id FIFO full ({width2} rows) at position {p}; "
                    "size it with hybrid_width2_bound()")
            b = batch[table3[f]] + 1
            if b > batch_clamp:
                b = batch_clamp
            batch[table3[f]] = b
            rmw_batch += 1
            if pure_ring:
                consumed[c] += batch_size
            bits[index1] = 1
            fifo[first] = f
            first += 1
            if first == width2:
                first = 0
            live += 1
            estimate[p] = b * batch_size
        else:
            initial[c] = v
            b = batch[table3[f]]
            estimate[p] = b * batch_size if b >= 1 else v
        batches[p] = b
        heavy[p] = b >= m
        index1 += 1
        if index1 == n_window:
            index1 = 0
        if rmw_initial > max_initial:
            max_initial = rmw_initial
        if rmw_batch > max_batch:
            max_batch = rmw_batch

    return est_arr, heavy_arr, batches_arr, np.array([max_initial, max_batch], dtype=np.int32)
