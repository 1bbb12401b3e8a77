"""Reduced diamond-cell gradients on doxel faces and Perona-Malik edge weights."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DIAGONALS, FACES, Field4D, GridSpec, Index4, is_interior


@dataclass(frozen=True)
class EdgeParams:
    K: float = 1.0
    delta: float = 1.0
    vartheta: float = 0.0

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be non-negative")
        for name in ("delta", "vartheta"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")


def perona_malik(s, K: float):
    """g(s) = 1 / (1 + K s^2)."""
    s = np.asarray(s, dtype=np.float64)
    return 1.0 / (1.0 + K * s * s)


def corner_averages(u: Field4D, idx: Index4) -> dict[tuple[int, int, int, int], float]:
    """Mean of ``u`` over the four doxels spanning each diagonal offset of ``idx``.

    Keys are the 24 offsets (p, q, r, s) with two non-zero entries, e.g. the
    value at (p, q, 0, 0) averages u at (i,j), (i+p,j), (i,j+q), (i+p,j+q).
    """
    if not is_interior(idx, u.spec):
        raise IndexError(f"{idx} is not an interior doxel")
    g = u.grid
    base = np.array(idx)

    def at(off):
        i, j, k, l = base + off
        return g[l, k, j, i]

    out = {}
    for off in DIAGONALS:
        off = np.array(off)
        a, b = np.flatnonzero(off)
        ea = np.zeros(4, dtype=int)
        eb = np.zeros(4, dtype=int)
        ea[a], eb[b] = off[a], off[b]
        out[tuple(int(x) for x in off)] = 0.25 * (
            at(0 * off) + at(ea) + at(eb) + at(ea + eb)
        )
    return out


def _shifted(grid: np.ndarray, off) -> np.ndarray:
    """Interior-shaped view of a padded (l, k, j, i) array displaced by (di, dj, dk, dl)."""
    n4, n3, n2, n1 = (s - 2 for s in grid.shape)
    di, dj, dk, dl = off
    return grid[1 + dl:n4 + 1 + dl, 1 + dk:n3 + 1 + dk,
                1 + dj:n2 + 1 + dj, 1 + di:n1 + 1 + di]


def face_gradient(u: Field4D, face: int) -> np.ndarray:
    """Gradient on one face for every interior doxel.

    Returns an array (4, n4, n3, n2, n1) of components along (x1, x2, x3, x4).
    The normal component is the one-sided difference across the face; the
    tangential ones are centred differences of corner averages, which reduce
    to a four-point stencil.
    """
    g = u.grid
    h = u.spec.spacing
    off = FACES[face]
    a = int(np.flatnonzero(off)[0])
    p = off[a]
    e = np.eye(4, dtype=int)
    pa = p * e[a]

    centre = _shifted(g, (0, 0, 0, 0))
    out = np.empty((4,) + u.spec.interior_shape)
    for b in range(4):
        if b == a:
            out[b] = p * (_shifted(g, pa) - centre) / h[a]
        else:
            eb = e[b]
            out[b] = (
                _shifted(g, eb) + _shifted(g, pa + eb)
                - _shifted(g, -eb) - _shifted(g, pa - eb)
            ) / (4.0 * h[b])
    return out


def face_gradients(u: Field4D, spec: GridSpec | None = None) -> np.ndarray:
    """All eight face gradients, shape (8, 4, n4, n3, n2, n1), faces ordered as ``FACES``."""
    if spec is not None and spec != u.spec:
        raise ValueError("spec does not match field")
    return np.stack([face_gradient(u, f) for f in range(len(FACES))])


def face_gradient_norms(u: Field4D) -> np.ndarray:
    """|grad u| on each face, shape (n4, n3, n2, n1, 8)."""
    out = np.empty(u.spec.interior_shape + (len(FACES),))
    for f in range(len(FACES)):
        grad = face_gradient(u, f)
        out[..., f] = np.sqrt(np.einsum("c...,c...->...", grad, grad))
    return out


def face_coefficients(I0s: Field4D, ITHs: Field4D, p: EdgeParams,
                      spec: GridSpec | None = None) -> np.ndarray:
    """Edge weights G = g(delta |grad I0s| + vartheta |grad ITHs|) per doxel face.

    Both images must carry meaningful ghost values (the face stencils read
    them at the domain boundary). Shape (n4, n3, n2, n1, 8), faces ordered
    as ``FACES``.
    """
    if I0s.spec != ITHs.spec or (spec is not None and spec != I0s.spec):
        raise ValueError("images must share one grid")
    arg = np.zeros(I0s.spec.interior_shape + (len(FACES),))
    if p.delta:
        arg += p.delta * face_gradient_norms(I0s)
    if p.vartheta:
        arg += p.vartheta * face_gradient_norms(ITHs)
    return perona_malik(arg, p.K)
