"""Pure numpy versions of the compiled loops in ``_kernels_c``.

Same signatures and summation semantics; used when the extension is not
built or ``RELMEAS_PURE_PYTHON`` is set.
"""
import numpy as np

_CHUNK = 256


def nudft(coeffs, p, xs):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    p = np.ascontiguousarray(p, dtype=np.float64)
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if p.shape[0] != coeffs.shape[0]:
        raise ValueError("coeffs and p must have the same length")
    out = np.empty(xs.shape[0], dtype=np.complex128)
    for start in range(0, xs.shape[0], _CHUNK):
        ph = np.multiply.outer(xs[start:start + _CHUNK], p)
        out[start:start + _CHUNK] = np.sum(np.exp(1j * ph) * coeffs, axis=1)
    return out


def gram_diagonal(energy, rhohat_sq, extent):
    energy = np.ascontiguousarray(energy, dtype=np.float64)
    rhohat_sq = np.ascontiguousarray(rhohat_sq, dtype=np.float64)
    n = energy.shape[0]
    if rhohat_sq.shape[0] != n:
        raise ValueError("rhohat_sq must match the number of modes")
    k = np.arange(n)
    out = np.empty(n)
    for start in range(0, n, _CHUNK):
        j = np.arange(start, min(start + _CHUNK, n))
        ej = energy[j][:, None]
        w = (energy[None, :] + ej) ** 2 / (4.0 * energy[None, :] * ej)
        d = (k[None, :] - j[:, None]) % n
        out[j] = np.sum(w * rhohat_sq[d], axis=1) / extent
    return out


def lattice_convolve(f_sep, g):
    f_sep = np.ascontiguousarray(f_sep, dtype=np.complex128)
    g = np.ascontiguousarray(g, dtype=np.complex128)
    n = g.shape[0]
    if f_sep.shape[0] != n:
        raise ValueError("length mismatch")
    m = np.arange(n)
    out = np.empty(n, dtype=np.complex128)
    for start in range(0, n, _CHUNK):
        i = np.arange(start, min(start + _CHUNK, n))
        idx = (i[:, None] - m[None, :] + n // 2) % n
        out[i] = np.sum(f_sep[idx] * g[None, :], axis=1)
    return out
