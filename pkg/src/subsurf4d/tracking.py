"""Cell trajectories from a 4D segmentation.

Per-frame 26-connected components, distance-transform centres, linking
backward in time by centre projection or region overlap, then joining
partial trajectories whose prolonged ends meet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .grid import Field4D

_STRUCT26 = np.ones((3, 3, 3), dtype=bool)


@dataclass(frozen=True)
class CellRecord:
    frame: int          # 0-based frame
    label: int
    center: tuple[int, int, int]  # (x, y, z) = (i, j, k), 0-based voxel coordinates
    max_distance: int
    voxel_count: int


@dataclass
class Trajectory:
    id: int
    records: list[CellRecord] = field(default_factory=list)

    @property
    def first(self) -> CellRecord:
        return self.records[0]

    @property
    def last(self) -> CellRecord:
        return self.records[-1]

    def frames(self) -> list[int]:
        return [r.frame for r in self.records]

    def points(self) -> np.ndarray:
        return np.array([r.center for r in self.records], dtype=np.float64)


def extract_mask(u: Field4D | np.ndarray, level: float = 0.5) -> np.ndarray:
    """Boolean (n4, n3, n2, n1) foreground: u >= level."""
    vals = u.interior if isinstance(u, Field4D) else np.asarray(u)
    return vals >= level


def _label_frame(mask3: np.ndarray) -> np.ndarray:
    lab, n = ndimage.label(mask3, structure=_STRUCT26)
    if n == 0:
        return lab.astype(np.int32)
    counts = np.bincount(lab.ravel(), minlength=n + 1)[1:]
    # decreasing size, ties keep scan order
    order = np.argsort(-counts, kind="stable")
    remap = np.zeros(n + 1, dtype=np.int32)
    remap[order + 1] = np.arange(1, n + 1, dtype=np.int32)
    return remap[lab]


def label_components(mask: np.ndarray) -> np.ndarray:
    """Label each frame's 26-connected components 1..k by decreasing voxel count."""
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim == 3:
        return _label_frame(mask)
    return np.stack([_label_frame(m) for m in mask]) if len(mask) else mask.astype(np.int32)


def boundary_distance(mask3: np.ndarray) -> np.ndarray:
    """Integer 26-neighbourhood distance to the nearest background voxel.

    Voxels outside the volume count as background, so a single foreground
    voxel has distance 1.
    """
    padded = np.pad(np.asarray(mask3, dtype=bool), 1)
    d = ndimage.distance_transform_cdt(padded, metric="chessboard")
    return d[1:-1, 1:-1, 1:-1].astype(np.int64)


def _argmax_center(dist: np.ndarray, region: np.ndarray, offset=(0, 0, 0)):
    """(x, y, z) and value of the region's maximal distance; ties -> smallest linear index."""
    flat = np.flatnonzero(region)
    vals = dist.ravel()[flat]
    n = flat[int(np.argmax(vals))]
    k, j, i = np.unravel_index(n, region.shape)
    return (int(i + offset[2]), int(j + offset[1]), int(k + offset[0])), int(vals.max())


def frame_records(labels3: np.ndarray, frame: int) -> list[CellRecord]:
    dist = boundary_distance(labels3 > 0)
    out = []
    for lab, sl in enumerate(ndimage.find_objects(labels3), start=1):
        if sl is None:
            continue
        region = labels3[sl] == lab
        centre, dmax = _argmax_center(dist[sl], region, tuple(s.start for s in sl))
        out.append(CellRecord(frame, lab, centre, dmax, int(region.sum())))
    return out


def distance_centers(labels: np.ndarray) -> list[CellRecord]:
    """One record per labelled cell, ordered by frame then label."""
    out: list[CellRecord] = []
    for f, lab3 in enumerate(labels):
        out.extend(frame_records(lab3, f))
    return out


def _overlap_target(cell: np.ndarray, prev: np.ndarray) -> int:
    """Label in ``prev`` owning the distance centre of the overlap, or 0."""
    overlap = cell & (prev > 0)
    if not overlap.any():
        return 0
    dist = boundary_distance(overlap)
    (x, y, z), _ = _argmax_center(dist, overlap)
    return int(prev[z, y, x])


def backtrack_link(records: list[CellRecord], labels: np.ndarray) -> list[Trajectory]:
    """Build partial trajectories from the last frame backward.

    A cell links to the previous-frame cell under its centre voxel, or
    failing that to the cell owning the centre of the overlap region.
    Cells of a frame claim in label (decreasing size) order; a cell that
    was already claimed ends the claiming chain.
    """
    by_frame: dict[int, dict[int, CellRecord]] = {}
    for r in records:
        by_frame.setdefault(r.frame, {})[r.label] = r
    n_frames = len(labels)
    chains: list[list[CellRecord]] = []
    owner: dict[tuple[int, int], int] = {}  # (frame, label) -> chain index

    for f in range(n_frames - 1, -1, -1):
        cells = by_frame.get(f, {})
        for lab in sorted(cells):
            if (f, lab) not in owner:
                owner[(f, lab)] = len(chains)
                chains.append([cells[lab]])
        if f == 0:
            break
        prev = labels[f - 1]
        for lab in sorted(cells):
            rec = cells[lab]
            x, y, z = rec.center
            target = int(prev[z, y, x])
            if target == 0:
                target = _overlap_target(labels[f] == lab, prev)
            if target == 0 or (f - 1, target) in owner:
                continue
            chain = owner[(f, lab)]
            owner[(f - 1, target)] = chain
            chains[chain].append(by_frame[f - 1][target])

    partials = [list(reversed(c)) for c in chains]
    partials.sort(key=lambda c: (c[0].frame, c[0].center, c[-1].frame))
    return [Trajectory(n, c) for n, c in enumerate(partials)]


def _tangent(a: CellRecord, b: CellRecord) -> np.ndarray:
    return (np.array(b.center, float) - np.array(a.center, float)) / (b.frame - a.frame)


def prolong_and_merge(partials: list[Trajectory], window: int = 3,
                      radius: float = 5.0) -> list[Trajectory]:
    """Join partials whose prolonged end meets another partial's start.

    The end of A (frame fa) and the start of B (frame fb) may join when
    0 < fb - fa <= window and either A's tail prolonged to fb or B's head
    prolonged back to fa lands within ``radius`` of the other endpoint.
    Tangents are one-sided differences of the two outermost records, so
    single-record partials are never prolonged. Joins are chosen greedily
    by (gap, distance) and every endpoint is used at most once.
    """
    if window < 1 or radius < 0:
        raise ValueError("window must be >= 1 and radius >= 0")
    cands = []
    for a in partials:
        for b in partials:
            if a is b:
                continue
            gap = b.first.frame - a.last.frame
            if not 0 < gap <= window:
                continue
            pa = np.array(a.last.center, float)
            pb = np.array(b.first.center, float)
            dists = []
            if len(a.records) > 1:
                dists.append(np.linalg.norm(pa + gap * _tangent(a.records[-2], a.last) - pb))
            if len(b.records) > 1:
                dists.append(np.linalg.norm(pb - gap * _tangent(b.first, b.records[1]) - pa))
            if dists and min(dists) <= radius:
                cands.append((gap, float(min(dists)), a.id, b.id))
    cands.sort()
    nxt: dict[int, int] = {}
    has_prev: set[int] = set()
    for _gap, _d, ia, ib in cands:
        if ia in nxt or ib in has_prev:
            continue
        nxt[ia] = ib
        has_prev.add(ib)

    by_id = {t.id: t for t in partials}
    merged = []
    for t in partials:
        if t.id in has_prev:
            continue
        recs = list(t.records)
        cur = t.id
        while cur in nxt:
            cur = nxt[cur]
            recs.extend(by_id[cur].records)
        merged.append(recs)
    merged.sort(key=lambda c: (c[0].frame, c[0].center))
    return [Trajectory(n, c) for n, c in enumerate(merged)]


def trajectory_rows(trajs: list[Trajectory]) -> list[tuple[int, int, float, float, float]]:
    """(trajectory_id, frame, x, y, z) rows."""
    return [(t.id, r.frame, float(r.center[0]), float(r.center[1]), float(r.center[2]))
            for t in trajs for r in t.records]


def track(u: Field4D | np.ndarray, level: float = 0.5, window: int = 3,
          radius: float = 5.0) -> list[Trajectory]:
    """extract_mask -> label_components -> distance_centers -> backtrack_link -> prolong_and_merge."""
    labels = label_components(extract_mask(u, level))
    records = distance_centers(labels)
    partials = backtrack_link(records, labels)
    return prolong_and_merge(partials, window, radius)
