import itertools

import numpy as np
import pytest

from subsurf4d.edge import (EdgeParams, corner_averages, face_coefficients, face_gradient,
                            face_gradients, perona_malik)
from subsurf4d.grid import FACES, Field4D, GridSpec, Index4

from conftest import random_field


def _affine(spec, coef):
    """u = sum_a coef[a] * index_a over the padded grid."""
    l, k, j, i = np.meshgrid(*(np.arange(n + 2) for n in reversed(spec.dims)), indexing="ij")
    vals = coef[0] * i * spec.h1 + coef[1] * j * spec.h2 + coef[2] * k * spec.h3 \
        + coef[3] * l * spec.h4
    return Field4D(spec, vals)


def _corner_oracle(u: Field4D, idx):
    """The six corner-average families, written out one by one."""
    i, j, k, l = idx
    g = u.grid

    def U(a, b, c, d):
        return g[d, c, b, a]

    out = {}
    for p, q in itertools.product((-1, 1), repeat=2):
        out[(p, q, 0, 0)] = (U(i, j, k, l) + U(i + p, j, k, l) + U(i, j + q, k, l)
                             + U(i + p, j + q, k, l)) / 4
        out[(0, p, q, 0)] = (U(i, j, k, l) + U(i, j + p, k, l) + U(i, j, k + q, l)
                             + U(i, j + p, k + q, l)) / 4
        out[(0, 0, p, q)] = (U(i, j, k, l) + U(i, j, k + p, l) + U(i, j, k, l + q)
                             + U(i, j, k + p, l + q)) / 4
        out[(p, 0, q, 0)] = (U(i, j, k, l) + U(i + p, j, k, l) + U(i, j, k + q, l)
                             + U(i + p, j, k + q, l)) / 4
        out[(p, 0, 0, q)] = (U(i, j, k, l) + U(i + p, j, k, l) + U(i, j, k, l + q)
                             + U(i + p, j, k, l + q)) / 4
        out[(0, p, 0, q)] = (U(i, j, k, l) + U(i, j + p, k, l) + U(i, j, k, l + q)
                             + U(i, j + p, k, l + q)) / 4
    return out


def _face_gradient_oracle(u: Field4D, idx, face):
    """Face gradient from the corner-average formulas, one doxel at a time."""
    h = u.spec.spacing
    off = FACES[face]
    a = int(np.flatnonzero(off)[0])
    p = off[a]
    ca = _corner_oracle(u, idx)
    nb = tuple(x + o for x, o in zip(idx, off))
    g = np.empty(4)
    g[a] = p * (u[nb] - u[idx]) / h[a]
    for b in range(4):
        if b == a:
            continue
        up = [0, 0, 0, 0]
        dn = [0, 0, 0, 0]
        up[a] = dn[a] = p
        up[b], dn[b] = 1, -1
        g[b] = (ca[tuple(up)] - ca[tuple(dn)]) / h[b]
    return g


def test_corner_constant():
    spec = GridSpec(3, 3, 3, 3)
    u = Field4D(spec, np.full(spec.total, 2.5))
    vals = corner_averages(u, Index4(2, 2, 2, 2))
    assert len(vals) == 24 and all(v == 2.5 for v in vals.values())


def test_corner_linear_in_i():
    spec = GridSpec(3, 3, 3, 3)
    u = _affine(spec, (1, 0, 0, 0))
    idx = Index4(2, 1, 3, 2)
    assert corner_averages(u, idx)[(1, 1, 0, 0)] == pytest.approx(u[idx] + 0.5)


def test_corner_random_against_formulas(rng):
    spec = GridSpec(4, 4, 4, 4)
    u = random_field(spec, rng)
    for idx in [Index4(1, 1, 1, 1), Index4(2, 3, 4, 1), Index4(4, 4, 4, 4)]:
        got = corner_averages(u, idx)
        want = _corner_oracle(u, idx)
        assert set(got) == set(want)
        for key in want:
            assert got[key] == pytest.approx(want[key], abs=1e-14)


def test_corner_rejects_ghost():
    u = Field4D.zeros(GridSpec(2, 2, 2, 2))
    with pytest.raises(IndexError):
        corner_averages(u, Index4(0, 1, 1, 1))


def test_gradient_linear_x1():
    spec = GridSpec.uniform((3, 4, 3, 3), 0.7)
    grads = face_gradients(_affine(spec, (1, 0, 0, 0)))
    for f in range(8):
        assert np.allclose(grads[f, 0], 1.0) and np.allclose(grads[f, 1:], 0.0)


def test_gradient_constant_zero():
    spec = GridSpec(3, 3, 3, 3)
    grads = face_gradients(Field4D(spec, np.full(spec.total, -4.0)))
    assert np.all(grads == 0)


def test_gradient_affine_1234():
    spec = GridSpec(3, 3, 3, 3)
    grads = face_gradients(_affine(spec, (1, 2, 3, 4)))
    for f in range(8):
        for c, want in enumerate((1, 2, 3, 4)):
            assert np.allclose(grads[f, c], want, atol=1e-12)


def test_gradient_affine_anisotropic():
    spec = GridSpec(3, 4, 2, 3, 0.5, 1.5, 2.0, 0.25)
    grads = face_gradients(_affine(spec, (-1, 0.5, 3, 2)))
    assert np.allclose(grads, np.array([-1, 0.5, 3, 2])[None, :, None, None, None, None])


def test_gradient_against_pointwise_oracle(rng):
    spec = GridSpec(3, 4, 3, 2, 1.0, 0.5, 2.0, 1.5)
    u = random_field(spec, rng)
    for face in range(8):
        grad = face_gradient(u, face)
        for idx in [Index4(1, 1, 1, 1), Index4(3, 4, 3, 2), Index4(2, 2, 1, 2)]:
            i, j, k, l = idx
            assert np.allclose(grad[:, l - 1, k - 1, j - 1, i - 1],
                               _face_gradient_oracle(u, idx, face), atol=1e-13)


def test_shared_face_consistency(rng):
    spec = GridSpec(4, 3, 3, 3)
    u = random_field(spec, rng)
    for a, (fp, fm) in enumerate([(0, 1), (2, 3), (4, 5), (6, 7)]):
        plus = face_gradient(u, fp)
        minus = face_gradient(u, fm)
        ax = 4 - 1 - a  # array axis of grid axis a
        lo = [slice(None)] * 4
        hi = [slice(None)] * 4
        lo[ax], hi[ax] = slice(0, -1), slice(1, None)
        # the whole face vector agrees from both sides of the shared face
        assert np.allclose(plus[(slice(None),) + tuple(lo)], minus[(slice(None),) + tuple(hi)])
        # the one-sided differences u_nb - u are negatives of each other
        d_plus = plus[a] * spec.spacing[a]
        d_minus = -minus[a] * spec.spacing[a]
        assert np.allclose(d_plus[tuple(lo)], -d_minus[tuple(hi)])


def test_perona_malik_monotone():
    s = np.linspace(0, 10, 101)
    g = perona_malik(s, 3.0)
    assert g[0] == 1.0 and np.all(np.diff(g) <= 0)
    assert np.all(perona_malik(s, 0.0) == 1.0)


def test_edge_params_validation():
    with pytest.raises(ValueError):
        EdgeParams(K=-1)
    with pytest.raises(ValueError):
        EdgeParams(delta=1.5)
    with pytest.raises(ValueError):
        EdgeParams(vartheta=-0.1)


def test_coefficients_constant_images():
    spec = GridSpec(3, 3, 3, 3)
    c = Field4D(spec, np.full(spec.total, 0.4))
    G = face_coefficients(c, c, EdgeParams(K=5, delta=0.5, vartheta=0.5))
    assert G.shape == spec.interior_shape + (8,) and np.all(G == 1.0)


def test_coefficients_ramp_half():
    spec = GridSpec(3, 3, 3, 3)
    ramp = _affine(spec, (1, 0, 0, 0))
    zero = Field4D.zeros(spec)
    G = face_coefficients(ramp, zero, EdgeParams(K=1, delta=1, vartheta=0))
    assert np.allclose(G, 0.5)


def test_coefficients_weighted_sum():
    spec = GridSpec(3, 3, 3, 3)
    ramp = _affine(spec, (2, 0, 0, 0))
    K = 0.3
    G = face_coefficients(ramp, ramp, EdgeParams(K=K, delta=0.5, vartheta=0.5))
    assert np.allclose(G, 1 / (1 + 4 * K))


def test_classical_mode_when_vartheta_zero(rng):
    spec = GridSpec(3, 4, 3, 2)
    i0 = random_field(spec, rng)
    ith = random_field(spec, rng)
    G = face_coefficients(i0, ith, EdgeParams(K=2.0, delta=1.0, vartheta=0.0))
    norms = np.stack([np.linalg.norm(face_gradient(i0, f), axis=0) for f in range(8)], -1)
    assert np.allclose(G, 1 / (1 + 2.0 * norms ** 2))
    assert np.all((G > 0) & (G <= 1))
