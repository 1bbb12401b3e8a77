"""Presmoothing by implicit heat steps and local thresholding inside seed balls."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import FACES, Field4D, ball_region, mirror_ghosts
from .io import CentersTable, ValidationError
from .sor import Partition, SolverParams, StepCoefficients, redblack_sor


@dataclass(frozen=True)
class SmoothingParams:
    sigma: float = 1.0
    steps: int = 1

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")


@dataclass(frozen=True)
class ThresholdParams:
    lam: float = 0.5
    background: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")


def heat_coefficients(spec, dt: float) -> StepCoefficients:
    """Implicit linear heat step with zero flux through the outer boundary.

    Dropping the boundary faces is the same as mirrored (zero-Neumann)
    ghosts, since the flux to a mirror ghost vanishes.
    """
    shape = spec.interior_shape
    off = np.empty(shape + (8,))
    for f, o in enumerate(FACES):
        a = int(np.flatnonzero(o)[0])
        off[..., f] = -dt / spec.spacing[a] ** 2
        # array axis of grid axis a in (l, k, j, i) layout
        ax = 3 - a
        sl = [slice(None)] * 4 + [f]
        sl[ax] = -1 if o[a] > 0 else 0
        off[tuple(sl)] = 0.0
    diag = 1.0 - off.sum(axis=-1)
    return StepCoefficients(diag, off, np.ones(shape))


def _jacobi_omega(coeff: StepCoefficients) -> float:
    rho = float(np.max(-coeff.offdiag.sum(axis=-1) / coeff.diag))
    rho = min(rho, 1.0 - 1e-12)
    return 2.0 / (1.0 + math.sqrt(1.0 - rho * rho))


def heat_smooth(image: Field4D, p: SmoothingParams, tol: float = 1e-10,
                omega: float | None = None, max_iter: int = 10_000,
                part: Partition | int | None = None) -> Field4D:
    """Gaussian-like presmoothing: ``p.steps`` implicit heat steps up to time sigma^2/2.

    The result carries mirrored ghosts. ``omega`` defaults to the optimal
    SOR factor for the (constant-coefficient) heat matrix.
    """
    out = image.copy()
    mirror_ghosts(out.grid)
    if p.sigma == 0:
        return out
    dt = 0.5 * p.sigma ** 2 / p.steps
    coeff = heat_coefficients(image.spec, dt)
    if omega is None:
        omega = _jacobi_omega(coeff)
    sp = SolverParams(tau=dt, epsilon=1.0, omega=omega, sor_tol=tol,
                      sor_max_iter=max_iter, n_steps=p.steps)
    for _ in range(p.steps):
        out, _its = redblack_sor(coeff, out.interior, out, sp, part)
        mirror_ghosts(out.grid)
    return out


def local_threshold(image: Field4D, centers: CentersTable, p: ThresholdParams) -> Field4D:
    """Binarise intensities to {min, max} of each seed ball.

    Inside the ball of a center, values >= lam*min + (1-lam)*max become the
    ball maximum and all others the minimum; doxels outside every ball get
    ``p.background``. Balls are processed in table order, later ones win.
    """
    spec = image.spec
    centers.validate(spec)
    out = Field4D.from_interior(spec, np.full(spec.interior_shape, p.background))
    src = image.grid
    dst = out.grid
    for n, c in enumerate(centers):
        box, mask = ball_region(spec, (c.x, c.y, c.z), c.radius)
        if not mask.any():
            raise ValidationError(f"center {n}: ball contains no doxel")
        l = c.frame + 1  # noqa: E741
        vals = src[l][box][mask]
        alpha, beta = vals.min(), vals.max()
        th = p.lam * alpha + (1.0 - p.lam) * beta
        region = dst[l][box]
        region[mask] = np.where(vals >= th, beta, alpha)
    return out
