# Compiled kernels for the per-sample fit loop and the per-query prediction
# loop. Same chunk contract as _kernels_py: each call writes only rows
# [start, stop) of the outputs and holds no shared mutable state, so chunks
# are safe to run from multiple threads. The GIL is released around the
# numeric loops.

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, sqrt

BACKEND_NAME = "compiled"


def fit_chunk(
    double[:, ::1] xt,
    double[:, ::1] y,
    double[:, :, ::1] anchors,
    double lam,
    long long[::1] assign,
    double[::1] beta,
    double[::1] resid,
    double[:, :, ::1] corr,
    Py_ssize_t start,
    Py_ssize_t stop,
):
    cdef Py_ssize_t dp = xt.shape[1]
    cdef Py_ssize_t k = anchors.shape[0]
    cdef Py_ssize_t m = anchors.shape[2]
    cdef Py_ssize_t i, l, j, dd, best
    cdef double s, r2, best_r2, pred, dy, rj, denom

    with nogil:
        for i in range(start, stop):
            s = 0.0
            for dd in range(dp):
                s += xt[i, dd] * xt[i, dd]
            best = 0
            best_r2 = INFINITY
            for l in range(k):
                r2 = 0.0
                for j in range(m):
                    pred = 0.0
                    for dd in range(dp):
                        pred += anchors[l, dd, j] * xt[i, dd]
                    dy = y[i, j] - pred
                    r2 += dy * dy
                if r2 < best_r2:
                    best_r2 = r2
                    best = l
            denom = lam + s
            assign[i] = best
            beta[i] = lam / denom
            resid[i] = sqrt(best_r2)
            for j in range(m):
                pred = 0.0
                for dd in range(dp):
                    pred += anchors[best, dd, j] * xt[i, dd]
                rj = (y[i, j] - pred) / denom
                for dd in range(dp):
                    corr[i, dd, j] = xt[i, dd] * rj


def predict_chunk(
    double[:, ::1] xq,
    double[:, ::1] train_x,
    double[:, :, ::1] corr,
    double[:, :, ::1] anchors,
    long long[::1] assign,
    Py_ssize_t k_pred,
    double eps,
    bint with_bias,
    double[:, ::1] out,
    Py_ssize_t start,
    Py_ssize_t stop,
):
    cdef Py_ssize_t n = train_x.shape[0]
    cdef Py_ssize_t d = train_x.shape[1]
    cdef Py_ssize_t dp = corr.shape[1]
    cdef Py_ssize_t m = corr.shape[2]
    cdef Py_ssize_t i, j, dd, r, h, best, n_exact, a
    cdef double acc, diff, best_d, wsum, w, pred

    dist_arr = np.empty(n, dtype=np.float64)
    used_arr = np.zeros(n, dtype=np.uint8)
    sel_arr = np.empty(k_pred, dtype=np.int64)
    wts_arr = np.empty(k_pred, dtype=np.float64)
    cdef double[::1] dist = dist_arr
    cdef unsigned char[::1] used = used_arr
    cdef long long[::1] sel = sel_arr
    cdef double[::1] wts = wts_arr

    with nogil:
        for i in range(start, stop):
            for r in range(n):
                acc = 0.0
                for dd in range(d):
                    diff = train_x[r, dd] - xq[i, dd]
                    acc += diff * diff
                dist[r] = sqrt(acc)
            # k_pred smallest distances, ties toward the lower row index
            for j in range(k_pred):
                best = -1
                best_d = INFINITY
                for r in range(n):
                    if not used[r] and dist[r] < best_d:
                        best_d = dist[r]
                        best = r
                sel[j] = best
                used[best] = 1
            for j in range(k_pred):
                used[sel[j]] = 0
            n_exact = 0
            for j in range(k_pred):
                if dist[sel[j]] <= eps:
                    n_exact += 1
            wsum = 0.0
            for j in range(k_pred):
                if n_exact > 0:
                    w = 1.0 if dist[sel[j]] <= eps else 0.0
                else:
                    w = 1.0 / dist[sel[j]]
                wts[j] = w
                wsum += w
            for j in range(k_pred):
                wts[j] /= wsum
            for j in range(m):
                acc = 0.0
                for r in range(k_pred):
                    h = sel[r]
                    a = assign[h]
                    pred = 0.0
                    for dd in range(d):
                        pred += (corr[h, dd, j] + anchors[a, dd, j]) * xq[i, dd]
                    if with_bias:
                        pred += corr[h, d, j] + anchors[a, d, j]
                    acc += wts[r] * pred
                out[i, j] = acc
