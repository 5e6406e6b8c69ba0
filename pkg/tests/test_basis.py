import math

import numpy as np
import pytest

from edgecurrents.basis import (DimensionError, build_band_basis, build_mixed_basis,
                                landau_orbital)


def test_grid_layout(params):
    b = build_mixed_basis(params, 8)
    assert b.x[0] == pytest.approx(params.x_min) and b.x[-1] == pytest.approx(params.x_max)
    assert (b.Nx - 1) % 8 == 0
    b2 = build_mixed_basis(params, 16)
    assert b2.Nx - 1 == 2 * (b.Nx - 1)
    assert b.hx <= 1 / 8 / math.sqrt(params.B) + 1e-12


def test_momenta_cover_grid_with_margin(params):
    b = build_mixed_basis(params, 8)
    c = b.centers()
    step = 2 * np.pi / (params.B * params.L)
    assert params.x_min - 3 <= c.min() < params.x_min - 3 + step
    assert params.x_max + 3 - step < c.max() <= params.x_max + 3
    np.testing.assert_allclose(np.diff(b.kset), 2 * np.pi / params.L)


def test_dimension_cap(params):
    with pytest.raises(DimensionError, match="exceeds cap"):
        build_mixed_basis(params, 8, dim_cap=100)
    with pytest.raises(ValueError):
        build_mixed_basis(params, 4)


def test_restrict_and_bulk(params):
    b = build_mixed_basis(params, 8)
    r = b.restrict(-2.0, 2.0)
    assert np.all(np.abs(r.centers()) <= 2.0 + 1e-12)
    assert r.Nx == b.Nx
    np.testing.assert_allclose(b.kset[b.k_position(r)], r.kset)
    bulk = b.bulk(4.0)
    assert bulk.centers().min() >= params.x_min + 4 - 1e-12
    with pytest.raises(DimensionError):
        b.restrict(3.0, 2.0)


def test_to_grid_layout(params):
    b = build_mixed_basis(params, 8)
    v = np.arange(b.dim, dtype=float)
    g = b.to_grid(v)
    assert g.shape == (b.Nx, b.Nk)
    assert g[3, 2] == v[3 * b.Nk + 2]


def test_landau_orbital_normalized():
    x = np.linspace(-10, 10, 801)
    g = landau_orbital(x, 1.0, 2.0)
    assert np.sum(g * g) == pytest.approx(1.0)
    assert x[np.argmax(g)] == pytest.approx(0.5, abs=0.03)


def test_band_basis_embedding(params):
    b = build_mixed_basis(params, 8)
    band = build_band_basis(params, b)
    E = band.embed()
    assert E.shape == (b.dim, band.size)
    np.testing.assert_allclose(E.T @ E, np.eye(band.size), atol=1e-12)
    assert np.all(np.abs(band.kset / params.B) <= params.L / 2 + 3 + 1e-9)
