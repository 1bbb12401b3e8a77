"""Convergence check against an exact solution of the 4D level-set equation.

The exact solution u(x, t) = (|x|^2 - 1)/6 + t satisfies
u_t = |grad u| div(grad u / |grad u|) in four space dimensions. The scheme is
run with G = 1 and no rescaling on [-1.25, 1.25]^4, with Dirichlet data taken
from the exact solution, and the error is measured in L2((0,T), L2(Omega)).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .grid import Field4D, GridSpec, doxel_centers
from .sor import Partition, SolverParams, solve_step

SCHEDULE = {10: 1, 20: 4, 40: 16, 80: 64, 160: 256}


@dataclass(frozen=True)
class EocConfig:
    lower: float = -1.25
    upper: float = 1.25
    T: float = 0.0625
    schedule: dict = field(default_factory=lambda: dict(SCHEDULE))
    omega: float = 1.85
    sor_tol: float = 1e-8
    sor_max_iter: int = 10_000
    # ghosts of step n hold the exact solution at t_n - boundary_lag * tau
    boundary_lag: float = 0.0
    # "h2": epsilon = h^2; "h": epsilon = h
    epsilon_rule: str = "h2"

    def __post_init__(self):
        if self.epsilon_rule not in ("h2", "h"):
            raise ValueError("epsilon_rule must be 'h2' or 'h'")
        if not self.upper > self.lower or not self.T > 0:
            raise ValueError("empty domain or time interval")

    def spacing(self, n: int) -> float:
        return (self.upper - self.lower) / n

    def steps(self, n: int) -> int:
        try:
            return self.schedule[n]
        except KeyError:
            raise ValueError(
                f"grid size {n} not in schedule {sorted(self.schedule)}") from None

    def tau(self, n: int) -> float:
        return self.T / self.steps(n)

    def epsilon(self, n: int) -> float:
        h = self.spacing(n)
        return h * h if self.epsilon_rule == "h2" else h


@dataclass
class EocRow:
    n: int
    h: float
    final_step: int
    error: float
    eoc: float | None = None
    seconds: float = 0.0
    sor_iterations: int = 0


def exact_u(x, t):
    """(x1^2 + x2^2 + x3^2 + x4^2 - 1)/6 + t."""
    x = np.asarray(x, dtype=np.float64)
    return (np.sum(x * x, axis=-1) - 1.0) / 6.0 + t


def exact_field(spec: GridSpec, t: float, lower: float = -1.25) -> Field4D:
    """Exact solution sampled at every padded doxel centre (ghosts included)."""
    x1, x2, x3, x4 = doxel_centers(spec, origin=(lower,) * 4)
    r2 = (x4[:, None, None, None] ** 2 + x3[None, :, None, None] ** 2
          + x2[None, None, :, None] ** 2 + x1[None, None, None, :] ** 2)
    return Field4D(spec, (r2 - 1.0) / 6.0 + t)


def space_time_l2(u_steps, times, tau: float, lower: float = -1.25) -> float:
    """sqrt(sum_n tau * sum_doxels h^4 (u^n - u_exact(t_n))^2) over the given steps."""
    total = 0.0
    for u, t in zip(u_steps, times, strict=True):
        diff = u.interior - exact_field(u.spec, t, lower).interior
        total += tau * u.spec.doxel_volume * float(np.sum(diff * diff))
    return math.sqrt(total)


def eoc_value(err_h: float, err_h2: float) -> float:
    """log2(Err(h) / Err(h/2))."""
    if not (err_h > 0 and err_h2 > 0):
        raise ValueError("errors must be positive")
    return math.log2(err_h / err_h2)


def run_levelset_row(n: int, cfg: EocConfig | None = None, workers: int = 1,
                     return_stats: bool = False):
    """Solve the level-set problem on an n^4 grid and return the space-time L2 error."""
    cfg = cfg or EocConfig()
    steps = cfg.steps(n)
    h = cfg.spacing(n)
    tau = cfg.tau(n)
    spec = GridSpec.uniform((n, n, n, n), h)
    part = Partition(n, workers)
    params = SolverParams(tau=tau, epsilon=cfg.epsilon(n), omega=cfg.omega,
                          sor_tol=cfg.sor_tol, sor_max_iter=cfg.sor_max_iter,
                          n_steps=steps, rescale_each_step=False)
    u = exact_field(spec, 0.0, cfg.lower)
    total = 0.0
    iterations = 0
    for step in range(1, steps + 1):
        t = step * tau
        exact = exact_field(spec, t, cfg.lower)
        if cfg.boundary_lag:
            bc = exact_field(spec, t - cfg.boundary_lag * tau, cfg.lower)
        else:
            bc = exact
        u, its, _ = solve_step(u, None, params, part=part, boundary=bc)
        iterations += its
        diff = u.interior - exact.interior
        total += tau * spec.doxel_volume * float(np.sum(diff * diff))
    err = math.sqrt(total)
    if return_stats:
        return err, iterations
    return err


def error_report(max_n: int = 40, cfg: EocConfig | None = None, workers: int = 1,
                 progress=None) -> list[EocRow]:
    cfg = cfg or EocConfig()
    sizes = sorted(cfg.schedule)
    if max_n not in sizes:
        raise ValueError(f"max_n must be one of {sizes}")
    rows: list[EocRow] = []
    for n in sizes:
        if n > max_n:
            break
        start = time.perf_counter()
        err, its = run_levelset_row(n, cfg, workers, return_stats=True)
        row = EocRow(n, cfg.spacing(n), cfg.steps(n), err,
                     seconds=time.perf_counter() - start, sor_iterations=its)
        if rows:
            row.eoc = eoc_value(rows[-1].error, err)
        rows.append(row)
        if progress is not None:
            progress(row)
    return rows


def format_report(rows: list[EocRow]) -> str:
    lines = [f"{'n':>4} {'h':>10} {'final step':>10} {'error':>14} {'EOC':>10}"]
    for r in rows:
        eoc = f"{r.eoc:10.6f}" if r.eoc is not None else " " * 10
        lines.append(f"{r.n:>4} {r.h:>10.6g} {r.final_step:>10d} {r.error:>14.6e} {eoc}")
    return "\n".join(lines)
