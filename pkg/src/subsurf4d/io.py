"""File formats: raw 4D images with a JSON header, center and trajectory CSVs, VTK frames.

Image payloads are little-endian float32 with ``i`` varying fastest, then
``j``, ``k`` and the time axis ``l``. Headers look like::

    {"dims": [n1, n2, n3, n4], "spacing": [h, h, h, h],
     "dtype": "f32le", "order": "i-fastest"}
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

from .grid import Field4D, GridSpec

DTYPE = "f32le"
ORDER = "i-fastest"


class FormatError(ValueError):
    """Malformed header or payload."""


class DataError(ValueError):
    """Payload parses but holds unusable values."""


class ValidationError(ValueError):
    """Table contents inconsistent with the grid."""


class Center(NamedTuple):
    frame: int
    x: float
    y: float
    z: float
    radius: float


@dataclass
class CentersTable:
    """Seed points per frame, in table order.

    Frames are 0-based (frame ``f`` is grid frame ``l = f + 1``) and
    coordinates are 0-based doxel coordinates (doxel ``i`` is at x = i - 1).
    """

    rows: list[Center] = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def __iter__(self) -> Iterator[Center]:
        return iter(self.rows)

    def in_frame(self, frame: int) -> list[Center]:
        return [c for c in self.rows if c.frame == frame]

    def validate(self, spec: GridSpec) -> "CentersTable":
        for n, c in enumerate(self.rows):
            if not 0 <= c.frame < spec.n4:
                raise ValidationError(
                    f"row {n}: frame {c.frame} outside 0..{spec.n4 - 1}")
            if not c.radius > 0:
                raise ValidationError(f"row {n}: radius must be positive")
            for v, dim, name in zip((c.x, c.y, c.z), spec.dims[:3], "xyz"):
                if not 0 <= v <= dim - 1:
                    raise ValidationError(
                        f"row {n}: {name}={v} outside 0..{dim - 1}")
        return self

    @classmethod
    def from_rows(cls, rows) -> "CentersTable":
        return cls([Center(int(r[0]), float(r[1]), float(r[2]), float(r[3]),
                           float(r[4])) for r in rows])


def write_header(path, spec: GridSpec) -> None:
    header = {
        "dims": list(spec.dims),
        "spacing": list(spec.spacing),
        "dtype": DTYPE,
        "order": ORDER,
    }
    with open(path, "w") as fh:
        json.dump(header, fh)
        fh.write("\n")


def read_header(path) -> GridSpec:
    try:
        with open(path) as fh:
            header = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: header is not valid JSON ({exc})") from exc
    try:
        dims = [int(n) for n in header["dims"]]
        spacing = [float(h) for h in header["spacing"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: missing or bad dims/spacing") from exc
    if len(dims) != 4 or len(spacing) != 4:
        raise FormatError(f"{path}: dims and spacing need 4 entries")
    if header.get("dtype", DTYPE) != DTYPE or header.get("order", ORDER) != ORDER:
        raise FormatError(f"{path}: only {DTYPE}/{ORDER} payloads are supported")
    try:
        if len(set(spacing)) == 1:
            return GridSpec.uniform(dims, spacing[0])
        return GridSpec(*dims, *spacing)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def read_image4d(header_path, data_path) -> Field4D:
    spec = read_header(header_path)
    expected = spec.n_interior * 4
    size = os.path.getsize(data_path)
    if size != expected:
        raise FormatError(
            f"{data_path}: payload has {size} bytes, header implies {expected}")
    raw = np.fromfile(data_path, dtype="<f4")
    if not np.all(np.isfinite(raw)):
        raise DataError(f"{data_path}: payload contains non-finite values")
    return Field4D.from_interior(spec, raw.reshape(spec.interior_shape))


def write_image4d(field: Field4D, header_path, data_path) -> None:
    write_header(header_path, field.spec)
    np.ascontiguousarray(field.interior, dtype="<f4").tofile(data_path)


def default_paths(stem) -> tuple[str, str]:
    """``stem.json`` and ``stem.raw``."""
    stem = os.fspath(stem)
    for ext in (".json", ".raw"):
        if stem.endswith(ext):
            stem = stem[: -len(ext)]
    return stem + ".json", stem + ".raw"


def read_centers(path, spec: GridSpec | None = None) -> CentersTable:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, rec in enumerate(reader, 1):
            if not rec or not "".join(rec).strip():
                continue
            if lineno == 1 and rec[0].strip().lower() == "frame":
                continue
            if len(rec) != 5:
                raise FormatError(f"{path}:{lineno}: expected 5 columns")
            try:
                frame = float(rec[0])
                if frame != int(frame):
                    raise ValueError
                rows.append((int(frame), *(float(v) for v in rec[1:])))
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad number") from exc
    table = CentersTable.from_rows(rows)
    if spec is not None:
        table.validate(spec)
    else:
        for n, c in enumerate(table.rows):
            if not c.radius > 0:
                raise ValidationError(f"row {n}: radius must be positive")
    return table


def write_centers(table: CentersTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "x", "y", "z", "radius"])
        for c in table:
            w.writerow([c.frame, c.x, c.y, c.z, c.radius])


def write_trajectories(rows, path) -> None:
    """Write (trajectory_id, frame, x, y, z) rows as CSV."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trajectory_id", "frame", "x", "y", "z"])
        for row in rows:
            w.writerow(list(row))


def read_trajectories(path) -> list[tuple[int, int, float, float, float]]:
    out = []
    last: dict[int, int] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["trajectory_id", "frame", "x", "y", "z"]:
            raise FormatError(f"{path}: unexpected header {header}")
        for rec in reader:
            tid, frame = int(rec[0]), int(rec[1])
            if tid in last and frame <= last[tid]:
                raise ValidationError(
                    f"{path}: trajectory {tid} frames not strictly increasing")
            last[tid] = frame
            out.append((tid, frame, float(rec[2]), float(rec[3]), float(rec[4])))
    return out


def export_frame_vtk(field: Field4D, l: int, path, name: str = "u") -> None:  # noqa: E741
    """Write 1-based frame ``l`` as a legacy ASCII STRUCTURED_POINTS file."""
    spec = field.spec
    if not 1 <= l <= spec.n4:
        raise IndexError(f"frame {l} outside 1..{spec.n4}")
    vol = field.frame(l)
    n1, n2, n3 = spec.n1, spec.n2, spec.n3
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{name} frame {l}\n")
        fh.write("ASCII\n")
        fh.write("DATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {n1} {n2} {n3}\n")
        fh.write("ORIGIN 0 0 0\n")
        fh.write(f"SPACING {spec.h1:g} {spec.h2:g} {spec.h3:g}\n")
        fh.write(f"POINT_DATA {n1 * n2 * n3}\n")
        fh.write(f"SCALARS {name} float 1\n")
        fh.write("LOOKUP_TABLE default\n")
        # VTK point order is x fastest, matching the (k, j, i) C layout
        np.savetxt(fh, vol.reshape(-1, n1).astype(np.float32), fmt="%.7g")
