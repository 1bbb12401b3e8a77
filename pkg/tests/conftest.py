import numpy as np
import pytest

from subsurf4d.grid import Field4D, GridSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_field(spec: GridSpec, rng, lo=0.0, hi=1.0, ghost=None) -> Field4D:
    """Uniform random interior; ghosts random too unless ``ghost`` is given."""
    f = Field4D(spec, rng.uniform(lo, hi, spec.total))
    if ghost is not None:
        from subsurf4d.grid import set_ghosts
        set_ghosts(f.grid, ghost)
    return f


def ball_volume(shape, center, radius):
    """Boolean (k, j, i) volume of voxels within ``radius`` of (x, y, z)."""
    nz, ny, nx = shape
    z, y, x = np.mgrid[0:nz, 0:ny, 0:nx]
    cx, cy, cz = center
    return (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2 <= radius * radius


def moving_sphere_video(n=24, frames=20, radius=5, start=7.0, speed=0.5, blank=None):
    """Sphere moving along x; returns (video (l, k, j, i), centre function)."""
    def centre(f):
        return (start + speed * f, 11.5, 11.5)

    vid = np.zeros((frames, n, n, n))
    for f in range(frames):
        vid[f] = ball_volume((n, n, n), centre(f), radius)
    if blank is not None:
        vid[blank] = 0.0
    return vid, centre


def nucleus_volume(n=28, radius=8, inner=4, body=0.5, bright=1.0):
    """Dim sphere with a bright concentric inner ball; returns (volume, ground-truth mask)."""
    c = (n - 1) / 2
    truth = ball_volume((n, n, n), (c, c, c), radius)
    vol = np.where(truth, body, 0.0)
    vol[ball_volume((n, n, n), (c, c, c), inner)] = bright
    return vol, truth


# Straight-line sphere population: (first frame, last frame, start (x, y, z), velocity).
# Populations: frames 0-6 -> 4, frames 7-13 -> 7, frames 14-19 -> 5.
TRACK_SPHERES = [
    (0, 19, (6, 6, 8), (1, 0, 0)),
    (0, 19, (6, 40, 8), (1, -1, 0)),
    (0, 13, (40, 14, 8), (0, 1, 0)),
    (0, 13, (50, 50, 8), (-1, 0, 0)),
    (7, 19, (10, 54, 8), (1, 0, 0)),
    (7, 19, (54, 6, 8), (0, 1, 0)),
    (7, 19, (30, 30, 8), (0, 0, 0)),
]


def tracking_video(shape=(16, 64, 64), frames=20, radius=3, spheres=TRACK_SPHERES):
    vid = np.zeros((frames,) + shape)
    for first, last, start, vel in spheres:
        for f in range(first, last + 1):
            c = tuple(s + v * (f - first) for s, v in zip(start, vel))
            vid[f][ball_volume(shape, c, radius)] = 1.0
    return vid


_ACCEPT_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    lines = request.config.stash.setdefault(_ACCEPT_KEY, [])

    def record(number: int, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        lines.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPT_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
