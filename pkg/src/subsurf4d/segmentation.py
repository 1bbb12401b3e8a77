"""Full segmentation run: initial function, edge weights and the time loop."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import _kernels
from .edge import EdgeParams, face_coefficients
from .grid import Field4D, interior_minmax
from .io import CentersTable
from .preprocess import SmoothingParams, ThresholdParams, heat_smooth, local_threshold
from .seedinit import InitParams, build_initial, local_rescale
from .sor import Partition, SolverParams, solve_step

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class StepInfo:
    step: int
    iterations: int
    residual: float
    umin: float
    umax: float

    def line(self) -> str:
        return (f"step {self.step}: sor_iterations={self.iterations} "
                f"residual={self.residual:.3e} min={self.umin:.6g} max={self.umax:.6g}")


@dataclass(frozen=True)
class SegmentationParams:
    """Every knob of a segmentation run.

    ``epsilon=None`` means h^2 of the grid; ``rescale_radius=None`` reuses
    each center's own radius.
    """

    tau: float = 1.0
    epsilon: float | None = None
    omega: float = 1.85
    sor_tol: float = 1e-8
    sor_max_iter: int = 10_000
    n_steps: int = 10
    rescale_each_step: bool = True
    rescale_radius: float | None = None
    edge: EdgeParams = field(default_factory=lambda: EdgeParams(K=10.0))
    smoothing: SmoothingParams = field(default_factory=SmoothingParams)
    threshold: ThresholdParams = field(default_factory=ThresholdParams)
    init: InitParams = field(default_factory=InitParams)

    def solver(self, h: float) -> SolverParams:
        eps = h * h if self.epsilon is None else self.epsilon
        return SolverParams(tau=self.tau, epsilon=eps, omega=self.omega,
                            sor_tol=self.sor_tol, sor_max_iter=self.sor_max_iter,
                            n_steps=self.n_steps, rescale_each_step=self.rescale_each_step)


def edge_weights(I0: Field4D, centers: CentersTable, p: SegmentationParams,
                 part=None):
    """Per-face G from the smoothed original and smoothed thresholded images."""
    ith = local_threshold(I0, centers, p.threshold)
    i0s = heat_smooth(I0, p.smoothing, part=part)
    iths = heat_smooth(ith, p.smoothing, part=part)
    return face_coefficients(i0s, iths, p.edge)


def segment(I0: Field4D, centers: CentersTable, p: SegmentationParams | None = None,
            workers: int = 1, on_step=None, u0: Field4D | None = None) -> Field4D:
    """Evolve the segmentation function for ``p.n_steps`` semi-implicit steps.

    Ghosts of u stay at zero (Dirichlet). ``on_step`` receives a
    :class:`StepInfo` after each step. ``u0`` replaces the seed-built
    initial function when given.
    """
    p = p or SegmentationParams()
    spec = I0.spec
    part = Partition(spec.n4, workers)
    if len(centers) == 0 and u0 is None:
        return Field4D.zeros(spec)
    sp = p.solver(spec.h)
    if u0 is None:
        u = build_initial(centers, p.init, spec)
    else:
        u = u0.copy()
    if p.rescale_each_step:
        local_rescale(u, centers, p.rescale_radius, inplace=True)
    G = edge_weights(I0, centers, p, part)
    for step in range(1, p.n_steps + 1):
        rhs = u.interior.copy()
        u, its, coeff = solve_step(u, G, sp, part=part)
        res = math.sqrt(_kernels.residual_sq(u.grid, coeff.diag, coeff.offdiag, rhs))
        if p.rescale_each_step:
            local_rescale(u, centers, p.rescale_radius, inplace=True)
        lo, hi = interior_minmax(u)
        info = StepInfo(step, its, res, lo, hi)
        log.info(info.line())
        if on_step is not None:
            on_step(info)
    return u
