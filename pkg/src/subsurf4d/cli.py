"""Command-line entry point.

    subsurf4d segment --config run.cfg [--workers N] [--output STEM]
    subsurf4d eoc --max-n 40 [--workers N]
    subsurf4d threshold-preview --config run.cfg [--output STEM]
    subsurf4d track --config run.cfg [--output trajectories.csv]

Config files hold one ``key = value`` per line; ``#`` starts a comment.
Command-line flags override config values. Diagnostics go to stderr,
results go to files only.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass, fields

from .edge import EdgeParams
from .eoc import EocConfig, error_report, format_report
from .io import (CentersTable, DataError, FormatError, ValidationError, default_paths,
                 export_frame_vtk, read_centers, read_image4d, write_image4d,
                 write_trajectories)
from .grid import Field4D
from .preprocess import SmoothingParams, ThresholdParams, local_threshold
from .segmentation import SegmentationParams, segment
from .seedinit import InitParams
from .sor import NumericalError, Partition, SolverError
from .tracking import track, trajectory_rows

log = logging.getLogger("subsurf4d")


@dataclass
class RunConfig:
    """Flat set of every run option, with defaults."""

    image: str = ""
    centers: str = ""
    output: str = ""
    workers: int = 1
    # solver
    tau: float = 1.0
    epsilon: float | None = None
    omega: float = 1.85
    sor_tol: float = 1e-8
    sor_max_iter: int = 10_000
    n_steps: int = 10
    rescale_each_step: bool = True
    rescale_radius: float | None = None
    # edge detector
    K: float = 10.0
    delta: float = 1.0
    vartheta: float = 0.0
    # presmoothing and thresholding
    sigma: float = 1.0
    smoothing_steps: int = 1
    lam: float = 0.5
    background: float = 0.0
    # initial function
    v: float = 1.0
    R: float = 10.0
    profile: str = "peak"
    # tracking
    level: float = 0.5
    window: int = 3
    radius: float = 5.0
    vtk_dir: str = ""

    def segmentation_params(self) -> SegmentationParams:
        return SegmentationParams(
            tau=self.tau, epsilon=self.epsilon, omega=self.omega, sor_tol=self.sor_tol,
            sor_max_iter=self.sor_max_iter, n_steps=self.n_steps,
            rescale_each_step=self.rescale_each_step, rescale_radius=self.rescale_radius,
            edge=EdgeParams(self.K, self.delta, self.vartheta),
            smoothing=SmoothingParams(self.sigma, self.smoothing_steps),
            threshold=ThresholdParams(self.lam, self.background),
            init=InitParams(self.v, self.R, self.profile))


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, text: str):
    default = getattr(RunConfig, key)
    text = text.strip()
    if key in ("epsilon", "rescale_radius"):
        return None if text.lower() in ("", "none", "auto") else float(text)
    if isinstance(default, bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(default, int):
        return int(text)
    if isinstance(default, float):
        return float(text)
    return text


def parse_config_text(text: str, source: str = "<config>") -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise ValidationError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _convert(key, val)
        except ValueError as exc:
            raise ValidationError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return out


def load_config(path: str | None, overrides: dict) -> RunConfig:
    values = {}
    if path:
        with open(path) as fh:
            values = parse_config_text(fh.read(), path)
        # relative paths in a config file are relative to that file
        base = os.path.dirname(os.path.abspath(path))
        for key in ("image", "centers", "output", "vtk_dir"):
            if values.get(key) and not os.path.isabs(values[key]):
                values[key] = os.path.join(base, values[key])
    values.update({k: v for k, v in overrides.items() if v is not None})
    cfg = RunConfig(**values)
    if cfg.workers < 1:
        raise ValidationError("workers must be positive")
    return cfg


def _require(path: str, what: str) -> str:
    if not path:
        raise ValidationError(f"no {what} given")
    return path


def _read_input(cfg: RunConfig) -> tuple[Field4D, CentersTable]:
    hdr, raw = default_paths(_require(cfg.image, "image"))
    image = read_image4d(hdr, raw)
    centers = read_centers(_require(cfg.centers, "centers file"), image.spec)
    Partition(image.spec.n4, cfg.workers)
    return image, centers


def cmd_segment(cfg: RunConfig) -> int:
    image, centers = _read_input(cfg)
    params = cfg.segmentation_params()
    u = segment(image, centers, params, workers=cfg.workers,
                on_step=lambda info: print(info.line(), file=sys.stderr))
    hdr, raw = default_paths(_require(cfg.output, "output"))
    write_image4d(u, hdr, raw)
    return 0


def cmd_threshold_preview(cfg: RunConfig) -> int:
    image, centers = _read_input(cfg)
    ith = local_threshold(image, centers, ThresholdParams(cfg.lam, cfg.background))
    hdr, raw = default_paths(_require(cfg.output, "output"))
    write_image4d(ith, hdr, raw)
    return 0


def cmd_track(cfg: RunConfig) -> int:
    hdr, raw = default_paths(_require(cfg.image, "segmentation input"))
    u = read_image4d(hdr, raw)
    trajs = track(u, cfg.level, cfg.window, cfg.radius)
    write_trajectories(trajectory_rows(trajs), _require(cfg.output, "output"))
    if cfg.vtk_dir:
        from .tracking import extract_mask, label_components
        labels = label_components(extract_mask(u, cfg.level))
        os.makedirs(cfg.vtk_dir, exist_ok=True)
        lf = Field4D.from_interior(u.spec, labels.astype(float))
        for l in range(1, u.spec.n4 + 1):  # noqa: E741
            export_frame_vtk(lf, l, os.path.join(cfg.vtk_dir, f"labels_{l - 1:04d}.vtk"),
                             name="labels")
    print(f"{len(trajs)} trajectories", file=sys.stderr)
    return 0


def cmd_eoc(max_n: int, workers: int, cfg: EocConfig | None = None) -> int:
    cfg = cfg or EocConfig()
    print(f"EOC up to n={max_n} with {workers} worker(s)", file=sys.stderr)
    rows = error_report(max_n, cfg, workers,
                        progress=lambda r: print(f"n={r.n} done in {r.seconds:.1f} s "
                                                 f"({r.sor_iterations} SOR iterations)",
                                                 file=sys.stderr))
    print(format_report(rows))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="subsurf4d", description="4D (3D + time) segmentation and tracking.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    defaults = RunConfig()
    for name, helptext in (("segment", "run the segmentation"),
                           ("threshold-preview", "write the locally thresholded image"),
                           ("track", "extract trajectories from a segmentation")):
        p = sub.add_parser(name, help=helptext,
                           formatter_class=argparse.ArgumentDefaultsHelpFormatter,
                           epilog="config keys (key = value) and defaults: " + ", ".join(
                               f"{k}={getattr(defaults, k)!r}" for k in _FIELDS))
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--workers", type=int, help="worker threads (frame slabs)")
        p.add_argument("--output", help="output stem (.json/.raw) or CSV path for track")
        p.add_argument("--image", help="input image stem (.json/.raw)")
        if name != "track":
            p.add_argument("--centers", help="centers CSV (frame,x,y,z,radius)")

    sizes = sorted(EocConfig().schedule)
    p = sub.add_parser("eoc", help="convergence table against the exact solution",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--max-n", type=int, default=40, choices=sizes,
                   help="largest grid size to run")
    p.add_argument("--workers", type=int, default=1, help="worker threads")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "eoc":
            if args.workers < 1:
                ap.error("--workers must be positive")
            return cmd_eoc(args.max_n, args.workers)
        overrides = {k: getattr(args, k, None) for k in ("workers", "output", "image", "centers")}
        cfg = load_config(args.config, overrides)
        if args.command == "segment":
            return cmd_segment(cfg)
        if args.command == "threshold-preview":
            return cmd_threshold_preview(cfg)
        return cmd_track(cfg)
    except (OSError, FormatError, DataError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, NumericalError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
