# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: stride-1 zero-padded conv2d (forward / weight gradient)
and circular spatial convolution / correlation.

Same call surface as the numpy fallback `_fallback`; see that module for the
shape conventions.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

__all__ = [
    "conv2d_forward",
    "conv2d_grad_input",
    "conv2d_grad_weight",
    "circ_conv2d",
    "circ_corr2d",
]


def conv2d_forward(x, w, int pad):
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] wv = w
    cdef Py_ssize_t B = xv.shape[0], C = xv.shape[1], H = xv.shape[2], W = xv.shape[3]
    cdef Py_ssize_t O = wv.shape[0], kh = wv.shape[2], kw = wv.shape[3]
    cdef Py_ssize_t Ho = H + 2 * pad - kh + 1
    cdef Py_ssize_t Wo = W + 2 * pad - kw + 1
    out = np.zeros((B, O, Ho, Wo), dtype=np.float64)
    cdef double[:, :, :, ::1] yv = out
    cdef Py_ssize_t b, o, c, u, v, i, j, ilo, ihi, jlo, jhi
    cdef double wval
    with nogil:
        for b in range(B):
            for o in range(O):
                for c in range(C):
                    for u in range(kh):
                        ilo = pad - u if pad > u else 0
                        ihi = H + pad - u if H + pad - u < Ho else Ho
                        for v in range(kw):
                            wval = wv[o, c, u, v]
                            if wval == 0.0:
                                continue
                            jlo = pad - v if pad > v else 0
                            jhi = W + pad - v if W + pad - v < Wo else Wo
                            for i in range(ilo, ihi):
                                for j in range(jlo, jhi):
                                    yv[b, o, i, j] += wval * xv[b, c, i + u - pad, j + v - pad]
    return out


def conv2d_grad_input(gy, w, int pad):
    w = np.asarray(w, dtype=np.float64)
    kh = w.shape[2]
    wt = np.ascontiguousarray(np.flip(w, axis=(2, 3)).transpose(1, 0, 2, 3))
    return conv2d_forward(gy, wt, kh - 1 - pad)


def conv2d_grad_weight(x, gy, int pad):
    x = np.ascontiguousarray(x, dtype=np.float64)
    gy = np.ascontiguousarray(gy, dtype=np.float64)
    cdef double[:, :, :, ::1] xv = x
    cdef double[:, :, :, ::1] gv = gy
    cdef Py_ssize_t B = xv.shape[0], C = xv.shape[1], H = xv.shape[2], W = xv.shape[3]
    cdef Py_ssize_t O = gv.shape[1], Ho = gv.shape[2], Wo = gv.shape[3]
    cdef Py_ssize_t kh = H + 2 * pad - Ho + 1
    cdef Py_ssize_t kw = W + 2 * pad - Wo + 1
    out = np.zeros((O, C, kh, kw), dtype=np.float64)
    cdef double[:, :, :, ::1] gwv = out
    cdef Py_ssize_t b, o, c, u, v, i, j, ilo, ihi, jlo, jhi
    cdef double acc
    with nogil:
        for o in range(O):
            for c in range(C):
                for u in range(kh):
                    ilo = pad - u if pad > u else 0
                    ihi = H + pad - u if H + pad - u < Ho else Ho
                    for v in range(kw):
                        jlo = pad - v if pad > v else 0
                        jhi = W + pad - v if W + pad - v < Wo else Wo
                        acc = 0.0
                        for b in range(B):
                            for i in range(ilo, ihi):
                                for j in range(jlo, jhi):
                                    acc += gv[b, o, i, j] * xv[b, c, i + u - pad, j + v - pad]
                        gwv[o, c, u, v] = acc
    return out


def circ_conv2d(x, k, int cr, int cc):
    x = np.ascontiguousarray(x, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] kv = k
    cdef Py_ssize_t H = xv.shape[0], W = xv.shape[1]
    cdef Py_ssize_t kh = kv.shape[0], kw = kv.shape[1]
    out = np.zeros((H, W), dtype=np.float64)
    cdef double[:, ::1] yv = out
    cdef Py_ssize_t p, q, i, j, si, sj
    cdef double kval
    with nogil:
        for p in range(kh):
            for q in range(kw):
                kval = kv[p, q]
                if kval == 0.0:
                    continue
                for i in range(H):
                    si = (i - p + cr) % H
                    if si < 0:
                        si += H
                    for j in range(W):
                        sj = (j - q + cc) % W
                        if sj < 0:
                            sj += W
                        yv[i, j] += kval * xv[si, sj]
    return out


def circ_corr2d(x, k, int cr, int cc):
    x = np.ascontiguousarray(x, dtype=np.float64)
    k = np.ascontiguousarray(k, dtype=np.float64)
    cdef double[:, ::1] xv = x
    cdef double[:, ::1] kv = k
    cdef Py_ssize_t H = xv.shape[0], W = xv.shape[1]
    cdef Py_ssize_t kh = kv.shape[0], kw = kv.shape[1]
    out = np.zeros((H, W), dtype=np.float64)
    cdef double[:, ::1] yv = out
    cdef Py_ssize_t p, q, i, j, si, sj
    cdef double kval
    with nogil:
        for p in range(kh):
            for q in range(kw):
                kval = kv[p, q]
                if kval == 0.0:
                    continue
                for i in range(H):
                    si = (i + p - cr) % H
                    if si < 0:
                        si += H
                    for j in range(W):
                        sj = (j + q - cc) % W
                        if sj < 0:
                            sj += W
                        yv[i, j] += kval * xv[si, sj]
    return out
