# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Operation order matches the reference implementation exactly, including the
real-arithmetic complex products, so results agree bit-for-bit.  Only
complex128 coefficient arrays are handled here; other dtypes fall back.
"""

import numpy as np

ctypedef double complex cplx


def convolve(const long[::1] px, const long[::1] pa, const long[::1] pb,
             const double[::1] pw, const cplx[::1] f, const cplx[::1] g,
             Py_ssize_t n):
    out_re = np.zeros(n)
    out_im = np.zeros(n)
    cdef double[::1] ore = out_re
    cdef double[::1] oim = out_im
    cdef Py_ssize_t k, m = px.shape[0]
    cdef double ar, ai, br, bi, re, im
    for k in range(m):
        ar = f[pa[k]].real
        ai = f[pa[k]].imag
        br = g[pb[k]].real
        bi = g[pb[k]].imag
        re = ar * br - ai * bi
        im = ar * bi + ai * br
        ore[px[k]] += re * pw[k]
        oim[px[k]] += im * pw[k]
    return out_re + 1j * out_im


def convolve_twisted(const long[::1] px, const long[::1] pa, const long[::1] pb,
                     const double[::1] pw, const cplx[::1] ps,
                     const cplx[::1] f, const cplx[::1] g, Py_ssize_t n):
    out_re = np.zeros(n)
    out_im = np.zeros(n)
    cdef double[::1] ore = out_re
    cdef double[::1] oim = out_im
    cdef Py_ssize_t k, m = px.shape[0]
    cdef double ar, ai, br, bi, re, im, sr, si, re2, im2
    for k in range(m):
        ar = f[pa[k]].real
        ai = f[pa[k]].imag
        br = g[pb[k]].real
        bi = g[pb[k]].imag
        re = ar * br - ai * bi
        im = ar * bi + ai * br
        sr = ps[k].real
        si = ps[k].imag
        re2 = re * sr - im * si
        im2 = re * si + im * sr
        ore[px[k]] += re2 * pw[k]
        oim[px[k]] += im2 * pw[k]
    return out_re + 1j * out_im


def associativity_violation(comp_in):
    cdef const long[:, ::1] comp = np.ascontiguousarray(comp_in, dtype=np.int_)
    cdef Py_ssize_t n = comp.shape[0]
    cdef Py_ssize_t x, y, z
    cdef long xy, yz, a, b
    for x in range(n):
        for y in range(n):
            xy = comp[x, y]
            if xy < 0:
                continue
            for z in range(n):
                yz = comp[y, z]
                a = comp[xy, z]
                b = comp[x, yz] if yz >= 0 else -1
                if a != b:
                    return int(x), int(y), int(z)
    return None


def cocycle_defect(comp_in, sigma_in):
    cdef const long[:, ::1] comp = np.ascontiguousarray(comp_in, dtype=np.int_)
    cdef const cplx[:, ::1] s = np.ascontiguousarray(sigma_in, dtype=np.complex128)
    cdef Py_ssize_t n = comp.shape[0]
    cdef Py_ssize_t x, y, z
    cdef long xy, yz
    cdef double d, worst = 0.0
    cdef long wx = -1, wy = -1, wz = -1
    for x in range(n):
        for y in range(n):
            xy = comp[x, y]
            if xy < 0:
                continue
            for z in range(n):
                yz = comp[y, z]
                if yz < 0:
                    continue
                d = abs(s[x, y] * s[xy, z] - s[x, yz] * s[y, z])
                if wx < 0 or d > worst:
                    worst = d
                    wx = x
                    wy = y
                    wz = z
    if wx < 0:
        return 0.0, None
    return worst, (int(wx), int(wy), int(wz))
