import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from edgecurrents.model import (H_SUP, ModelError, ModelParams, bump, clean_realization,
                                coupling_density, eval_random_potential, lattice_sites, make_rng,
                                sample_couplings, sample_disorder)


def test_derived_margin_and_layer(params):
    wall = 0.5 + 0.2 + 10.0
    assert params.W == pytest.approx(math.sqrt(wall))
    assert params.c1 * params.W ** params.m1 == pytest.approx(wall)
    assert params.layer == pytest.approx(math.log(12))
    assert params.window == pytest.approx((0.55, 0.7))


@pytest.mark.parametrize("kw, msg", [
    (dict(B=0.5, V0=0.2), "B > 4\\*V0"),
    (dict(epsilon=0.3), "epsilon"),
    (dict(L=3), "integer >= 4"),
    (dict(L=7.5), "integer >= 4"),
    (dict(c_right=2.0), "outside"),
    (dict(m_left=1.5), "outside"),
    (dict(W=1.0), "W\\*\\*m1"),
])
def test_constraint_violations(kw, msg):
    base = dict(B=1.0, L=12, V0=0.2, epsilon=0.05)
    base.update(kw)
    with pytest.raises(ModelError, match=msg):
        ModelParams(**base)


def test_replace_recomputes_derived(params):
    p16 = params.replace(L=16)
    assert p16.layer == pytest.approx(math.log(16))
    pinned = params.replace(layer=3.0).replace(L=16)
    assert pinned.layer == 3.0


def test_confinement_vanishes_on_passive_side(params):
    left, right = params.confinement()
    x = np.linspace(-20, 20, 401)
    ul, ur = left(x), right(x)
    assert np.all(ul[x >= -6] == 0) and np.all(ur[x <= 6] == 0)
    assert np.all(ul[x < -6] > 0) and np.all(ur[x > 6] > 0)
    # c (|x| - L/2)^m past the wall
    assert right(np.array([8.0]))[0] == pytest.approx(1.3 * 4.0)
    assert left(np.array([-8.0]))[0] == pytest.approx(4.0)


def test_wall_reaches_threshold_at_margin(params):
    left, right = params.confinement()
    wall = params.B / 2 + params.V0 + 10 * params.B
    assert left(np.array([params.x_min]))[0] >= wall * (1 - 1e-12)
    assert right(np.array([params.x_max]))[0] >= wall * (1 - 1e-12)


def test_bump_profile():
    assert bump(0.0, 0.3) == pytest.approx(0.3)
    assert bump(1 / 16, 0.3) == 0.0
    assert bump(0.05, 1.0) == pytest.approx((1 - 0.8) ** 3)


def test_coupling_density_normalized():
    t = np.linspace(-1, 1, 20001)
    assert np.trapezoid(coupling_density(t), t) == pytest.approx(1.0, abs=1e-8)
    assert coupling_density(0.0) == pytest.approx(H_SUP)


def test_couplings_follow_density():
    rng = make_rng(0, 123)
    X = sample_couplings(rng, 20000)
    assert np.all(np.abs(X) <= 1)
    # CDF of h: integral of 15/16 (1-t^2)^2 from -1
    cdf = lambda t: 15 / 16 * (t - 2 * t ** 3 / 3 + t ** 5 / 5) + 0.5
    assert stats.kstest(X, cdf).pvalue > 1e-3


def test_streams_are_reproducible_and_distinct(params):
    a = sample_disorder(params, 5)
    b = sample_disorder(params, 5)
    c = sample_disorder(params, 6)
    np.testing.assert_array_equal(a.X, b.X)
    assert not np.array_equal(a.X, c.X)
    d = sample_disorder(params.replace(seed_base=1), 5)
    assert not np.array_equal(a.X, d.X)


def test_lattice_sites_cover_interior(params):
    n, m = lattice_sites(params)
    lo, hi = params.lattice_bounds()
    assert lo >= -6 + params.layer and hi <= 6 - params.layer
    assert n.size == (hi - lo + 1) * params.L
    assert len(set(zip(n.tolist(), m.tolist()))) == n.size
    assert m.min() == -6 and m.max() == 5


def test_empty_lattice_raises():
    p = ModelParams(B=1.0, L=4, V0=0.2, epsilon=0.05, layer=2.5)
    with pytest.raises(ModelError, match="empty"):
        lattice_sites(p)


def test_potential_at_sites(params):
    real = sample_disorder(params, 3)
    V = eval_random_potential(real, real.n.astype(float), real.m.astype(float))
    np.testing.assert_allclose(V, real.X * params.V0)
    # periodic in y
    V2 = eval_random_potential(real, real.n.astype(float), real.m + params.L * 1.0)
    np.testing.assert_allclose(V2, V)
    assert np.all(clean_realization(params).X == 0)


@settings(max_examples=50, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6), st.integers(-20, 20))
def test_shift_translates_potential(x, y, dm):
    p = ModelParams(B=1.0, L=12, V0=0.2, epsilon=0.05)
    real = sample_disorder(p, 0)
    moved = real.shifted(dm)
    assert moved.X.shape == real.X.shape
    np.testing.assert_allclose(eval_random_potential(moved, x, y + dm),
                               eval_random_potential(real, x, y), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_potential_bounded(x, y):
    p = ModelParams(B=1.0, L=12, V0=0.2, epsilon=0.05)
    real = sample_disorder(p, 1)
    assert abs(float(eval_random_potential(real, x, y))) <= p.V0 + 1e-15


def test_realization_json_roundtrip(params):
    import json
    real = sample_disorder(params, 2)
    d = json.loads(real.to_json())
    assert d["seed"] == 2
    assert len(d["sites"]) == len(real)
    assert d["sites"][0][2] == pytest.approx(real.X[0])
