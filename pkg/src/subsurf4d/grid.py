"""4D doxel grid geometry with a one-doxel ghost layer.

Arrays are stored C-contiguous with axis order ``(l, k, j, i)`` so that the
flattened buffer has ``i`` fastest, i.e. the linear index of ``(i, j, k, l)``
is ``((l*kMax + k)*jMax + j)*iMax + i``. Interior doxels use 1-based indices
``1..nX`` inside the padded box ``0..nX+1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

# Face-neighbour offsets (p, q, r, s) in (i, j, k, l) order, |p|+|q|+|r|+|s| = 1.
FACES = (
    (1, 0, 0, 0), (-1, 0, 0, 0),
    (0, 1, 0, 0), (0, -1, 0, 0),
    (0, 0, 1, 0), (0, 0, -1, 0),
    (0, 0, 0, 1), (0, 0, 0, -1),
)

# Diagonal offsets, |p|+|q|+|r|+|s| = 2 (24 of them).
DIAGONALS = tuple(
    off for off in (
        (a, b, c, d)
        for a in (-1, 0, 1) for b in (-1, 0, 1)
        for c in (-1, 0, 1) for d in (-1, 0, 1)
    )
    if sum(abs(x) for x in off) == 2
)


class Index4(NamedTuple):
    i: int
    j: int
    k: int
    l: int  # noqa: E741


@dataclass(frozen=True)
class GridSpec:
    n1: int
    n2: int
    n3: int
    n4: int
    h1: float = 1.0
    h2: float = 1.0
    h3: float = 1.0
    h4: float = 1.0
    common_h: Optional[float] = None

    def __post_init__(self):
        for name in ("n1", "n2", "n3", "n4"):
            n = getattr(self, name)
            if int(n) != n or n < 1:
                raise ValueError(f"{name} must be a positive integer, got {n!r}")
        for name in ("h1", "h2", "h3", "h4"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.common_h is not None and any(
            h != self.common_h for h in self.spacing
        ):
            raise ValueError("common_h given but spacings differ")

    @classmethod
    def uniform(cls, shape, h=1.0) -> "GridSpec":
        """Grid with equal spacing ``h`` on all axes; ``shape`` is (n1, n2, n3, n4)."""
        n1, n2, n3, n4 = (int(n) for n in shape)
        return cls(n1, n2, n3, n4, h, h, h, h, common_h=float(h))

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.n1, self.n2, self.n3, self.n4)

    @property
    def spacing(self) -> tuple[float, float, float, float]:
        return (self.h1, self.h2, self.h3, self.h4)

    @property
    def padded_shape(self) -> tuple[int, int, int, int]:
        """Shape of the ghost-padded array in (l, k, j, i) order."""
        return (self.n4 + 2, self.n3 + 2, self.n2 + 2, self.n1 + 2)

    @property
    def interior_shape(self) -> tuple[int, int, int, int]:
        return (self.n4, self.n3, self.n2, self.n1)

    @property
    def total(self) -> int:
        return math.prod(self.padded_shape)

    @property
    def n_interior(self) -> int:
        return math.prod(self.dims)

    @property
    def h(self) -> float:
        if self.common_h is not None:
            return self.common_h
        if len(set(self.spacing)) == 1:
            return self.h1
        raise ValueError("grid spacings are not uniform")

    @property
    def doxel_volume(self) -> float:
        return self.h1 * self.h2 * self.h3 * self.h4


class Field4D:
    """Scalar doxel values on a ghost-padded 4D grid.

    ``values`` is the flat float64 buffer; ``grid`` is a (l, k, j, i) view on it
    and ``interior`` the view without ghosts.
    """

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values=None):
        self.spec = spec
        if values is None:
            values = np.zeros(spec.total)
        values = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
        if values.size != spec.total:
            raise ValueError(
                f"expected {spec.total} values for padded grid, got {values.size}"
            )
        self.values = values

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field4D":
        return cls(spec)

    @classmethod
    def from_interior(cls, spec: GridSpec, interior, ghost=0.0) -> "Field4D":
        """Build a field from an (n4, n3, n2, n1) array; ghosts get ``ghost``."""
        interior = np.asarray(interior, dtype=np.float64)
        if interior.shape != spec.interior_shape:
            raise ValueError(
                f"interior shape {interior.shape} != {spec.interior_shape}"
            )
        f = cls(spec, np.full(spec.total, ghost, dtype=np.float64))
        f.interior[...] = interior
        return f

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape(self.spec.padded_shape)

    @property
    def interior(self) -> np.ndarray:
        return self.grid[1:-1, 1:-1, 1:-1, 1:-1]

    def frame(self, l: int) -> np.ndarray:  # noqa: E741
        """Interior (k, j, i) volume of 1-based frame ``l``."""
        if not 1 <= l <= self.spec.n4:
            raise IndexError(f"frame {l} outside 1..{self.spec.n4}")
        return self.grid[l, 1:-1, 1:-1, 1:-1]

    def copy(self) -> "Field4D":
        return Field4D(self.spec, self.values.copy())

    def __getitem__(self, idx) -> float:
        i, j, k, l = idx
        return float(self.values[linear_index(Index4(i, j, k, l), self.spec)])

    def __repr__(self):
        return f"Field4D(dims={self.spec.dims}, spacing={self.spec.spacing})"


def _check_bounds(idx, spec: GridSpec):
    for v, n, name in zip(idx, spec.dims, "ijkl"):
        if not 0 <= v <= n + 1:
            raise IndexError(f"index {name}={v} outside padded range 0..{n + 1}")


def linear_index(idx: Index4, spec: GridSpec) -> int:
    _check_bounds(idx, spec)
    i, j, k, l = idx
    i_max, j_max, k_max = spec.n1 + 2, spec.n2 + 2, spec.n3 + 2
    return ((l * k_max + k) * j_max + j) * i_max + i


def delinearize(n: int, spec: GridSpec) -> Index4:
    if not 0 <= n < spec.total:
        raise IndexError(f"linear index {n} outside 0..{spec.total - 1}")
    i_max, j_max, k_max = spec.n1 + 2, spec.n2 + 2, spec.n3 + 2
    n, i = divmod(n, i_max)
    n, j = divmod(n, j_max)
    l, k = divmod(n, k_max)
    return Index4(i, j, k, l)


def is_interior(idx: Index4, spec: GridSpec) -> bool:
    return all(1 <= v <= n for v, n in zip(idx, spec.dims))


def ghost_mask(spec: GridSpec) -> np.ndarray:
    mask = np.ones(spec.padded_shape, dtype=bool)
    mask[1:-1, 1:-1, 1:-1, 1:-1] = False
    return mask


def set_ghosts(grid: np.ndarray, value: float) -> None:
    """Set every ghost position of a padded (l, k, j, i) array in place."""
    for ax in range(4):
        sl = [slice(None)] * 4
        sl[ax] = 0
        grid[tuple(sl)] = value
        sl[ax] = -1
        grid[tuple(sl)] = value


def mirror_ghosts(grid: np.ndarray) -> None:
    """Zero-Neumann ghosts: copy the adjacent interior value outward, axis by axis."""
    for ax in range(4):
        lo = [slice(None)] * 4
        src = [slice(None)] * 4
        lo[ax], src[ax] = 0, 1
        grid[tuple(lo)] = grid[tuple(src)]
        lo[ax], src[ax] = -1, -2
        grid[tuple(lo)] = grid[tuple(src)]


def apply_dirichlet(field: Field4D, value: float = 0.0, inplace: bool = False) -> Field4D:
    out = field if inplace else field.copy()
    set_ghosts(out.grid, value)
    return out


def apply_neumann(field: Field4D, inplace: bool = False) -> Field4D:
    out = field if inplace else field.copy()
    mirror_ghosts(out.grid)
    return out


def interior_minmax(field: Field4D) -> tuple[float, float]:
    inner = field.interior
    return float(inner.min()), float(inner.max())


def doxel_centers(spec: GridSpec, origin=(0.0, 0.0, 0.0, 0.0), padded=True):
    """Physical coordinates of doxel centers, x_i = origin + (i - 1/2) h.

    Returns four 1D coordinate arrays (x1, x2, x3, x4), covering ghosts when
    ``padded`` is true.
    """
    out = []
    for n, h, o in zip(spec.dims, spec.spacing, origin):
        idx = np.arange(0, n + 2) if padded else np.arange(1, n + 1)
        out.append(o + (idx - 0.5) * h)
    return tuple(out)


def ball_region(spec: GridSpec, center, radius: float):
    """Doxels of one frame within Euclidean ``radius`` of ``center``.

    ``center`` is (x, y, z) in 0-based doxel coordinates (doxel ``i`` sits at
    x = i - 1). Returns ``(box, mask)`` where ``box`` is a tuple of three
    slices into the padded (k, j, i) axes of a frame and ``mask`` the boolean
    membership inside that box; ``mask`` is empty-sized if no doxel qualifies.
    """
    slices = []
    coords = []
    for c, n in zip(center, spec.dims[:3]):
        lo = max(0, math.ceil(c - radius))
        hi = min(n - 1, math.floor(c + radius))
        if hi < lo:
            return (slice(1, 1),) * 3, np.zeros((0, 0, 0), dtype=bool)
        slices.append(slice(lo + 1, hi + 2))
        coords.append(np.arange(lo, hi + 1) - c)
    dx, dy, dz = coords
    d2 = dz[:, None, None] ** 2 + dy[None, :, None] ** 2 + dx[None, None, :] ** 2
    mask = d2 <= radius * radius
    return (slices[2], slices[1], slices[0]), mask


def ball_distances(spec: GridSpec, center, radius: float):
    """Like ``ball_region`` but also returns distances inside the box."""
    box, mask = ball_region(spec, center, radius)
    if mask.size == 0:
        return box, mask, np.zeros(mask.shape)
    ks, js, is_ = (np.arange(s.start - 1, s.stop - 1) for s in box)
    x, y, z = center
    d = np.sqrt((ks[:, None, None] - z) ** 2 + (js[None, :, None] - y) ** 2
                + (is_[None, None, :] - x) ** 2)
    return box, mask, d
