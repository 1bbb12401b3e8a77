"""Semi-implicit step assembly and red-black SOR over a time-slab partition.

Each worker of a :class:`Partition` owns a contiguous range of frames plus
one halo frame on either side. After every colour phase the halo frames are
exchanged with the neighbouring workers; the residual is reduced from
per-worker partial sums. Workers are threads running ``nogil`` kernels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .grid import Field4D, GridSpec


class SolverError(RuntimeError):
    """SOR did not reach the residual tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NumericalError(ArithmeticError):
    """Assembled coefficients are not finite."""


@dataclass(frozen=True)
class SolverParams:
    tau: float
    epsilon: float
    omega: float = 1.85
    sor_tol: float = 1e-8
    sor_max_iter: int = 10_000
    n_steps: int = 10
    rescale_each_step: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not 0 < self.omega < 2:
            raise ValueError("omega must lie in (0, 2)")
        if not self.sor_tol > 0:
            raise ValueError("sor_tol must be positive")
        if self.sor_max_iter < 1 or self.n_steps < 1:
            raise ValueError("sor_max_iter and n_steps must be positive")


@dataclass(frozen=True)
class Partition:
    """Split of the N4 frames over ``workers`` in the style of a 1D slab decomposition.

    The first ``workers - 1`` ranks get ``ceil(N4 / workers)`` frames and the
    last one the remainder, which must be at least one frame.
    """

    n_frames: int
    workers: int = 1

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if self.last_size < 1:
            raise ValueError(
                f"{self.workers} workers cannot partition {self.n_frames} frames "
                f"(last rank would get {self.last_size})")

    @property
    def chunk(self) -> int:
        return -(-self.n_frames // self.workers)

    @property
    def last_size(self) -> int:
        return self.n_frames - (self.workers - 1) * self.chunk

    @property
    def ranges(self) -> list[tuple[int, int]]:
        """Half-open 0-based interior frame ranges [l0, l1) per worker."""
        c = self.chunk
        out = [(w * c, (w + 1) * c) for w in range(self.workers - 1)]
        out.append(((self.workers - 1) * c, self.n_frames))
        return out


@dataclass
class StepCoefficients:
    """Matrix of one implicit step, one row per interior doxel.

    ``diag`` and ``abar`` have shape (n4, n3, n2, n1); ``offdiag`` has a
    trailing face axis of length 8 ordered as ``grid.FACES``.
    """

    diag: np.ndarray
    offdiag: np.ndarray
    abar: np.ndarray

    @classmethod
    def identity(cls, spec: GridSpec) -> "StepCoefficients":
        shape = spec.interior_shape
        return cls(np.ones(shape), np.zeros(shape + (8,)), np.ones(shape))

    def matvec(self, u: Field4D) -> np.ndarray:
        """A u including the ghost contributions, shape (n4, n3, n2, n1)."""
        from .edge import _shifted
        from .grid import FACES
        g = u.grid
        out = self.diag * u.interior
        for f, off in enumerate(FACES):
            out = out + self.offdiag[..., f] * _shifted(g, off)
        return out


class _Pool:
    """Runs one callable per worker and waits for all (a phase barrier)."""

    def __init__(self, workers: int):
        self.workers = workers
        self._ex = ThreadPoolExecutor(workers) if workers > 1 else None

    def run(self, fn):
        if self._ex is None:
            return [fn(0)]
        return list(self._ex.map(fn, range(self.workers)))

    def close(self):
        if self._ex is not None:
            self._ex.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _partition_for(spec: GridSpec, part: Partition | int | None) -> Partition:
    if part is None:
        return Partition(spec.n4, 1)
    if isinstance(part, int):
        return Partition(spec.n4, part)
    if part.n_frames != spec.n4:
        raise ValueError("partition does not match grid")
    return part


_DIVERGED = 1e8


def omega_bound(coeff: StepCoefficients) -> float:
    """Relaxation factors in (0, bound) are guaranteed to converge.

    For a strictly diagonally dominant matrix SOR converges whenever
    omega < 2 / (1 + rho(|J|)); the largest row sum of |J| bounds rho.
    """
    rho = float(np.max(np.abs(coeff.offdiag).sum(axis=-1) / coeff.diag))
    return 2.0 / (1.0 + rho)


def assemble_step(u_prev: Field4D, G, p: SolverParams, spec: GridSpec | None = None,
                  part: Partition | int | None = None) -> StepCoefficients:
    """Coefficients of the semi-implicit step built from ``u_prev``.

    ``G`` holds per-face edge weights (n4, n3, n2, n1, 8), or ``None`` for
    G = 1. Off-diagonals are -(tau/h_a^2) * Abar * G / A per face, which is
    the general m(e)/(m(V) m(sigma)) factor for axis-aligned doxels.
    """
    spec = spec or u_prev.spec
    if spec != u_prev.spec:
        raise ValueError("spec does not match field")
    part = _partition_for(spec, part)
    shape = spec.interior_shape
    # rounding to the dyadic grid would hide inf/nan, so check inputs first
    if not np.isfinite(u_prev.values).all():
        raise NumericalError("non-finite value in previous iterate")
    if G is not None and not np.isfinite(G).all():
        raise NumericalError("non-finite edge weight")
    unit_g = G is None
    if unit_g:
        G = np.ones((1, 1, 1, 1, 8))
    else:
        G = np.ascontiguousarray(G, dtype=np.float64)
        if G.shape != shape + (8,):
            raise ValueError(f"G shape {G.shape} != {shape + (8,)}")
    tau_h2 = np.array([p.tau / h ** 2 for h in spec.spacing])
    inv_h = np.array([1.0 / h for h in spec.spacing])
    diag = np.empty(shape)
    off = np.empty(shape + (8,))
    abar = np.empty(shape)
    grid = u_prev.grid

    def work(w):
        l0, l1 = part.ranges[w]
        _kernels.assemble_slab(grid, G, unit_g, tau_h2, inv_h, p.epsilon,
                               l0, l1, diag, off, abar)

    with _Pool(part.workers) as pool:
        pool.run(work)
    if not (np.isfinite(diag).all() and np.isfinite(off).all()):
        raise NumericalError("non-finite coefficient in assembled step")
    return StepCoefficients(diag, off, abar)


def redblack_sor(coeff: StepCoefficients, rhs, u_guess: Field4D, p: SolverParams,
                 part: Partition | int | None = None) -> tuple[Field4D, int]:
    """Solve A u = rhs by red-black SOR starting from ``u_guess``.

    Ghost values of ``u_guess`` are the boundary data and stay fixed. A
    doxel is red when i+j+k+l is even. Each iteration updates red, exchanges
    halos, updates black, exchanges halos and reduces the global residual
    ||A u - rhs||_2; iteration stops once it is at most ``p.sor_tol``.

    Returns the solution and the number of iterations performed (at least 1).
    """
    spec = u_guess.spec
    part = _partition_for(spec, part)
    rhs_arr = rhs.interior if isinstance(rhs, Field4D) else np.asarray(rhs)
    rhs_arr = np.ascontiguousarray(rhs_arr, dtype=np.float64)
    if rhs_arr.shape != spec.interior_shape or coeff.diag.shape != spec.interior_shape:
        raise ValueError("coefficients, rhs and guess must share one grid")

    g = u_guess.grid
    ranges = part.ranges
    # local padded slabs: frames l0 .. l1+1 of the padded array
    local = [g[l0:l1 + 2].copy() for l0, l1 in ranges]
    diag = [np.ascontiguousarray(coeff.diag[l0:l1]) for l0, l1 in ranges]
    off = [np.ascontiguousarray(coeff.offdiag[l0:l1]) for l0, l1 in ranges]
    rhs_s = [rhs_arr[l0:l1] for l0, l1 in ranges]
    omega = float(p.omega)

    def exchange():
        for w in range(len(local) - 1):
            left, right = local[w], local[w + 1]
            right[0] = left[-2]
            left[-1] = right[1]

    def sweep(color):
        def work(w):
            _kernels.color_sweep(local[w], diag[w], off[w], rhs_s[w], omega,
                                 color, ranges[w][0] + 1)
        return work

    def partial_residual(w):
        return _kernels.residual_sq(local[w], diag[w], off[w], rhs_s[w])

    red, black = sweep(0), sweep(1)
    res = float("inf")
    first = None
    with _Pool(part.workers) as pool:
        for it in range(1, p.sor_max_iter + 1):
            pool.run(red)
            exchange()
            pool.run(black)
            exchange()
            res = math.sqrt(sum(pool.run(partial_residual)))
            if res <= p.sor_tol:
                break
            if first is None:
                first = res
            if not math.isfinite(res) or res > _DIVERGED * first:
                raise SolverError(
                    f"SOR diverged after {it} iterations (residual {res:.3e}); "
                    f"omega={omega} may exceed {omega_bound(coeff):.4f}", res, it)
        else:
            raise SolverError(
                f"SOR did not converge in {p.sor_max_iter} iterations "
                f"(residual {res:.3e} > {p.sor_tol:.1e})", res, p.sor_max_iter)

    out = u_guess.copy()
    og = out.grid
    for (l0, l1), loc in zip(ranges, local):
        og[l0 + 1:l1 + 1] = loc[1:-1]
    return out, it


def solve_step(u_prev: Field4D, G, p: SolverParams, part=None, rhs=None,
               boundary: Field4D | None = None):
    """Assemble from ``u_prev`` and solve one step.

    ``rhs`` defaults to the interior of ``u_prev``; ``boundary`` (if given)
    supplies the ghost values of the new time level. Returns
    ``(u_next, iterations, coefficients)``.
    """
    part = _partition_for(u_prev.spec, part)
    coeff = assemble_step(u_prev, G, p, part=part)
    guess = u_prev.copy()
    if boundary is not None:
        guess.values[:] = boundary.values
        guess.interior[...] = u_prev.interior
    u_next, its = redblack_sor(coeff, u_prev.interior if rhs is None else rhs,
                               guess, p, part)
    return u_next, its, coeff


def check_minmax(u_next: Field4D, u_prev_rescaled: Field4D, slack: float = 0.0) -> bool:
    """Discrete minimum-maximum principle over interior doxels."""
    a = u_prev_rescaled.interior
    b = u_next.interior
    return bool(a.min() - slack <= b.min() and b.max() <= a.max() + slack)
