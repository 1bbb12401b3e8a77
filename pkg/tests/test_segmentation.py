import numpy as np
import pytest

from subsurf4d.grid import Field4D, GridSpec
from subsurf4d.io import CentersTable
from subsurf4d.seedinit import InitParams
from subsurf4d.segmentation import SegmentationParams, StepInfo, edge_weights, segment

from conftest import ball_volume


def _static_sphere(n=24, radius=6, frames=3):
    c = (n - 1) / 2
    truth = ball_volume((n, n, n), (c, c, c), radius)
    spec = GridSpec(n, n, n, frames)
    vid = np.repeat(truth[None].astype(float), frames, axis=0)
    centers = CentersTable.from_rows([(f, c, c, c, radius + 3) for f in range(frames)])
    return Field4D.from_interior(spec, vid), centers, truth


def test_constant_is_fixed_point_without_rescale():
    spec = GridSpec(5, 5, 4, 3)
    img = Field4D.zeros(spec)
    u0 = Field4D.from_interior(spec, np.full(spec.interior_shape, 0.0))
    p = SegmentationParams(n_steps=3, rescale_each_step=False, sor_tol=1e-12)
    centers = CentersTable.from_rows([(1, 2, 2, 2, 1.5)])
    u = segment(img, centers, p, u0=u0)
    # zero interior and zero Dirichlet ghosts: nothing moves
    assert np.all(u.interior == 0.0)


def test_edge_weights_flat_image_are_one():
    spec = GridSpec(6, 6, 6, 2)
    img = Field4D.from_interior(spec, np.full(spec.interior_shape, 0.3))
    G = edge_weights(img, CentersTable.from_rows([(0, 3, 3, 3, 2)]), SegmentationParams())
    assert np.allclose(G, 1.0)


@pytest.mark.parametrize("radius", [5, 6, 7])
def test_sphere_segmented(radius):
    img, centers, truth = _static_sphere(radius=radius)
    p = SegmentationParams(init=InitParams(R=radius + 3))
    u = segment(img, centers, p)
    seg = u.interior[1] >= 0.5
    coverage = (seg & truth).sum() / truth.sum()
    spurious = (seg & ~truth).sum() / seg.sum()
    assert coverage >= 0.9 and spurious <= 0.1


def test_empty_centers_gives_zero_field():
    spec = GridSpec(4, 4, 4, 2)
    u = segment(Field4D.zeros(spec), CentersTable.from_rows([]))
    assert np.all(u.values == 0.0)


def test_step_diagnostics():
    img, centers, _ = _static_sphere(n=16, radius=4)
    seen: list[StepInfo] = []
    segment(img, centers, SegmentationParams(n_steps=4, init=InitParams(R=7)),
            on_step=seen.append)
    assert [s.step for s in seen] == [1, 2, 3, 4]
    for s in seen:
        assert s.iterations >= 1 and s.residual <= 1e-8
        assert 0.0 <= s.umin <= s.umax <= 1.0 + 1e-12
        assert s.line().startswith(f"step {s.step}: sor_iterations=")


def test_workers_agree():
    img, centers, _ = _static_sphere(n=16, radius=4, frames=5)
    p = SegmentationParams(n_steps=3, init=InitParams(R=7))
    a = segment(img, centers, p, workers=1)
    b = segment(img, centers, p, workers=3)
    assert np.max(np.abs(a.values - b.values)) <= 1e-10


def test_deterministic_single_worker():
    img, centers, _ = _static_sphere(n=12, radius=3)
    p = SegmentationParams(n_steps=2, init=InitParams(R=6))
    assert np.array_equal(segment(img, centers, p).values, segment(img, centers, p).values)
