"""Compiled inner loops for coefficient assembly and red-black SOR.

All kernels work on ghost-padded (l, k, j, i) arrays and on interior slabs
``l0 <= l < l1`` (0-based interior frames) so that each worker of a
partition can call them on its own range without the GIL.

Face order matches ``grid.FACES``: +i, -i, +j, -j, +k, -k, +l, -l.
"""

import math

import numpy as np
from numba import njit

# (di, dj, dk, dl) per face
_OFF = np.array([
    [1, 0, 0, 0], [-1, 0, 0, 0],
    [0, 1, 0, 0], [0, -1, 0, 0],
    [0, 0, 1, 0], [0, 0, -1, 0],
    [0, 0, 0, 1], [0, 0, 0, -1],
], dtype=np.int64)


@njit(cache=True, nogil=True)
def _at(u, L, K, J, I, di, dj, dk, dl):
    return u[L + dl, K + dk, J + dj, I + di]


@njit(cache=True, nogil=True)
def assemble_slab(u, G, unit_g, tau_h2, inv_h, eps, l0, l1, diag, off, abar):
    """Fill diag/off/abar for interior frames l0..l1-1 from padded ``u``.

    ``tau_h2[a]`` is tau/h_a^2 and ``inv_h[a]`` is 1/h_a for axis a in
    (i, j, k, l) order. ``G`` has shape (n4, n3, n2, n1, 8) unless
    ``unit_g`` is set. Output arrays are indexed by the global interior
    position. Off-diagonals are rounded to a per-row dyadic grid so that
    diag = 1 + sum|off| holds exactly in floating point.
    """
    n3 = u.shape[1] - 2
    n2 = u.shape[2] - 2
    n1 = u.shape[3] - 2
    eps2 = eps * eps
    grad2 = np.empty(8)
    coef = np.empty(8)
    for l in range(l0, l1):
        L = l + 1
        for k in range(n3):
            K = k + 1
            for j in range(n2):
                J = j + 1
                for i in range(n1):
                    I = i + 1
                    c = u[L, K, J, I]
                    total = 0.0
                    for f in range(8):
                        di = _OFF[f, 0]
                        dj = _OFF[f, 1]
                        dk = _OFF[f, 2]
                        dl = _OFF[f, 3]
                        a = f // 2
                        nb = _at(u, L, K, J, I, di, dj, dk, dl)
                        gn = (nb - c) * inv_h[a]
                        s = gn * gn
                        for b in range(4):
                            if b == a:
                                continue
                            ei = 1 if b == 0 else 0
                            ej = 1 if b == 1 else 0
                            ek = 1 if b == 2 else 0
                            el = 1 if b == 3 else 0
                            t = (_at(u, L, K, J, I, ei, ej, ek, el)
                                 + _at(u, L, K, J, I, di + ei, dj + ej, dk + ek, dl + el)
                                 - _at(u, L, K, J, I, -ei, -ej, -ek, -el)
                                 - _at(u, L, K, J, I, di - ei, dj - ej, dk - ek, dl - el))
                            t = 0.25 * t * inv_h[b]
                            s += t * t
                        grad2[f] = s
                        total += s
                    ab = math.sqrt(eps2 + total / 8.0)
                    abar[l, k, j, i] = ab
                    bound = 1.0
                    for f in range(8):
                        g = 1.0 if unit_g else G[l, k, j, i, f]
                        cf = tau_h2[f // 2] * ab * g / math.sqrt(eps2 + grad2[f])
                        coef[f] = cf
                        bound += cf
                    # quantum q with 2*bound <= 2**52 * q keeps every partial sum exact
                    _, e = math.frexp(2.0 * bound)
                    q = math.ldexp(1.0, e - 52)
                    d = 1.0
                    for f in range(8):
                        cq = math.floor(coef[f] / q + 0.5) * q
                        off[l, k, j, i, f] = -cq
                        d += cq
                    diag[l, k, j, i] = d


@njit(cache=True, nogil=True)
def color_sweep(u, diag, off, rhs, omega, color, l_global0):
    """One SOR half-sweep over doxels with (i+j+k+l) % 2 == color.

    ``u`` is the worker's padded local array (n_loc+2 frames); ``diag``,
    ``off`` and ``rhs`` are its interior slabs. ``l_global0`` is the 1-based
    global frame index of local frame 1, used for the colouring.
    """
    n_loc = u.shape[0] - 2
    n3 = u.shape[1] - 2
    n2 = u.shape[2] - 2
    n1 = u.shape[3] - 2
    w1 = 1.0 - omega
    for L in range(1, n_loc + 1):
        gl = l_global0 + L - 1
        for K in range(1, n3 + 1):
            for J in range(1, n2 + 1):
                start = 1 + ((1 + J + K + gl - color) % 2)
                for I in range(start, n1 + 1, 2):
                    o = off[L - 1, K - 1, J - 1, I - 1]
                    s = (rhs[L - 1, K - 1, J - 1, I - 1]
                         - o[0] * u[L, K, J, I + 1] - o[1] * u[L, K, J, I - 1]
                         - o[2] * u[L, K, J + 1, I] - o[3] * u[L, K, J - 1, I]
                         - o[4] * u[L, K + 1, J, I] - o[5] * u[L, K - 1, J, I]
                         - o[6] * u[L + 1, K, J, I] - o[7] * u[L - 1, K, J, I])
                    gs = s / diag[L - 1, K - 1, J - 1, I - 1]
                    u[L, K, J, I] = omega * gs + w1 * u[L, K, J, I]


@njit(cache=True, nogil=True)
def residual_sq(u, diag, off, rhs):
    """Sum of squared residuals (A u - rhs) over a worker's slab."""
    n_loc = u.shape[0] - 2
    n3 = u.shape[1] - 2
    n2 = u.shape[2] - 2
    n1 = u.shape[3] - 2
    acc = 0.0
    for L in range(1, n_loc + 1):
        for K in range(1, n3 + 1):
            for J in range(1, n2 + 1):
                for I in range(1, n1 + 1):
                    o = off[L - 1, K - 1, J - 1, I - 1]
                    r = (diag[L - 1, K - 1, J - 1, I - 1] * u[L, K, J, I]
                         + o[0] * u[L, K, J, I + 1] + o[1] * u[L, K, J, I - 1]
                         + o[2] * u[L, K, J + 1, I] + o[3] * u[L, K, J - 1, I]
                         + o[4] * u[L, K + 1, J, I] + o[5] * u[L, K - 1, J, I]
                         + o[6] * u[L + 1, K, J, I] + o[7] * u[L - 1, K, J, I]
                         - rhs[L - 1, K - 1, J - 1, I - 1])
                    acc += r * r
    return acc
