# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every loop sums in a fixed index order so results are bit-reproducible
regardless of how callers split work across threads.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def nudft(const double complex[::1] coeffs, const double[::1] p, const double[::1] xs):
    """Return ``out[m] = sum_l coeffs[l] * exp(i p[l] xs[m])``."""
    cdef Py_ssize_t n = coeffs.shape[0]
    cdef Py_ssize_t nx = xs.shape[0]
    cdef Py_ssize_t m, l
    cdef double ph, re, im, cr, ci
    out = np.empty(nx, dtype=np.complex128)
    cdef double complex[::1] o = out
    if p.shape[0] != n:
        raise ValueError("coeffs and p must have the same length")
    with nogil:
        for m in range(nx):
            re = 0.0
            im = 0.0
            for l in range(n):
                ph = p[l] * xs[m]
                cr = coeffs[l].real
                ci = coeffs[l].imag
                re = re + cr * cos(ph) - ci * sin(ph)
                im = im + cr * sin(ph) + ci * cos(ph)
            o[m] = re + 1j * im
    return out


def gram_diagonal(const double[::1] energy, const double[::1] rhohat_sq, double extent):
    """Diagonal of the measurement Gram operator.

    ``rhohat_sq`` is indexed by the momentum-lattice difference modulo n.
    """
    cdef Py_ssize_t n = energy.shape[0]
    cdef Py_ssize_t j, k, d
    cdef double ej, ek, acc, s
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    if rhohat_sq.shape[0] != n:
        raise ValueError("rhohat_sq must match the number of modes")
    with nogil:
        for j in range(n):
            ej = energy[j]
            acc = 0.0
            for k in range(n):
                ek = energy[k]
                d = k - j
                if d < 0:
                    d = d + n
                s = ek + ej
                acc = acc + s * s / (4.0 * ek * ej) * rhohat_sq[d]
            o[j] = acc / extent
    return out


def lattice_convolve(const double complex[::1] f_sep, const double complex[::1] g):
    """Circular convolution ``h[n] = sum_m f_sep[(n - m + N/2) % N] g[m]``.

    ``f_sep`` is tabulated on symmetric separations ``(j - N/2) dx``.
    """
    cdef Py_ssize_t n = g.shape[0]
    cdef Py_ssize_t half = n // 2
    cdef Py_ssize_t i, m, j
    cdef double re, im, fr, fi, gr, gi
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    if f_sep.shape[0] != n:
        raise ValueError("length mismatch")
    with nogil:
        for i in range(n):
            re = 0.0
            im = 0.0
            for m in range(n):
                j = (i - m + half) % n
                if j < 0:
                    j = j + n
                fr = f_sep[j].real
                fi = f_sep[j].imag
                gr = g[m].real
                gi = g[m].imag
                re = re + fr * gr - fi * gi
                im = im + fr * gi + fi * gr
            o[i] = re + 1j * im
    return out
