import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgecurrents.basis import build_mixed_basis
from edgecurrents.classify import (LABELS, BasisMismatchError, ClassificationPolicy,
                                   cluster_indices, classify_window, decay_profile,
                                   pairwise_current, projector_distance, reconstruct,
                                   state_current, trace_bound, trace_bound_check, window_currents,
                                   y_lines)
from edgecurrents.edge import branch_pair
from edgecurrents.eigensolve import eig_window
from edgecurrents.model import ModelParams, clean_realization, sample_disorder
from edgecurrents.operators import assemble_family, assemble_vy
from edgecurrents.specfun import hs_constant


@pytest.fixture(scope="module")
def solved():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    basis = build_mixed_basis(p, 8)
    left, right = branch_pair(p, grid=basis)
    vy = assemble_vy(basis)
    out = {}
    for seed in (None, 0):
        real = clean_realization(p) if seed is None else sample_disorder(p, seed)
        win = eig_window(assemble_family(p, basis, real)["Hfull"], p.window, 1e-8)
        out[seed] = (win, classify_window(win, left, right, vy, p.L))
    return p, basis, vy, left, right, out


def test_cluster_indices():
    E = np.array([0.0, 1e-9, 0.5, 0.5 + 6e-9, 0.5 + 1.2e-8, 1.0])
    groups = cluster_indices(E, 1e-8)
    assert [g.tolist() for g in groups] == [[0, 1], [2, 3, 4], [5]]
    assert cluster_indices(np.zeros(0), 1.0) == []


def test_current_is_velocity_expectation(solved):
    p, basis, vy, *_ , out = solved
    win, _ = out[0]
    J, imag = window_currents(win, vy)
    dense = vy.to_dense()
    for i in range(len(win)):
        v = win.vectors[:, i]
        assert J[i] == pytest.approx(float(np.vdot(v, dense @ v).real), abs=1e-10)
    assert imag < 1e-12
    assert state_current(win.pairs[0], vy) == pytest.approx(J[0], abs=1e-10)
    with pytest.raises(BasisMismatchError):
        state_current(np.ones(3), vy)


def test_clean_run_has_no_bulk(solved):
    *_, out = solved
    _, cls = out[None]
    c = cls.counts()
    assert c["bulk"] == 0 and c["ambiguous"] == 0
    assert c["L-edge"] > 0 and c["R-edge"] > 0
    assert cls.is_partition() and cls.sign_consistent()
    assert math.isnan(cls.max_bulk_current)


def test_labels_follow_thresholds(solved):
    *_, out = solved
    _, cls = out[0]
    assert set(cls.labels()) <= set(LABELS)
    assert cls.J_edge == pytest.approx(0.5 * cls.j_epsilon)
    assert cls.J_bulk == pytest.approx(0.1 * cls.j_epsilon)
    for e in cls.entries:
        if e.label == "bulk":
            assert abs(e.J) <= cls.J_bulk
        if abs(e.J) >= cls.J_edge:
            assert e.label == ("R-edge" if e.J > 0 else "L-edge")


def test_policy_thresholds():
    assert ClassificationPolicy(0.4, 0.2).thresholds(2.0) == (0.8, 0.4)


def test_reconstruction_normalization(solved):
    p, basis, vy, *_ , out = solved
    win, _ = out[0]
    y = y_lines(p.L, basis=basis)
    psi = reconstruct(win.vectors[:, 0], basis, y)
    dy = p.L / y.size
    assert np.sum(np.abs(psi) ** 2) * basis.hx * dy == pytest.approx(1.0, rel=1e-10)


def test_pairwise_bound_on_eigenpairs(solved):
    p, basis, vy, *_ , out = solved
    win, _ = out[0]
    pairs = win.pairs
    for i in range(min(4, len(pairs))):
        for j in range(i + 1, min(4, len(pairs))):
            cert = pairwise_current(pairs[i], pairs[j], vy, p.L)
            assert cert.passed
            assert cert.value == pytest.approx(np.vdot(pairs[i].vector, vy.to_dense() @ pairs[j].vector))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 10 ** 6))
def test_projector_distance_properties(m, seed):
    rng = np.random.default_rng(seed)
    A, _ = np.linalg.qr(rng.standard_normal((12, m)) + 1j * rng.standard_normal((12, m)))
    U, _ = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))
    assert projector_distance(A, A @ U) < 1e-7
    B, _ = np.linalg.qr(rng.standard_normal((12, m)))
    d = projector_distance(A, B)
    assert 0 <= d <= 1
    assert d == pytest.approx(np.linalg.norm(A @ A.conj().T - B @ B.T, 2), abs=1e-7)


def test_projector_distance_rejects_nonorthonormal():
    with pytest.raises(ValueError):
        projector_distance(np.ones((4, 1)), np.eye(4)[:, :1])


def test_decay_profile_recovers_exact_gaussian():
    # single momentum mode with envelope exp(-0.3 d^2), d = |x| - (L/2 - log L)
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    basis = build_mixed_basis(p, 8)
    d = np.abs(basis.x) - (4 - math.log(8))
    v = np.zeros((basis.Nx, basis.Nk))
    v[:, 3] = np.exp(-0.3 * d ** 2)
    v = (v / np.linalg.norm(v)).ravel()
    prof = decay_profile(v, basis)
    assert prof.slope == pytest.approx(-0.3, rel=1e-9)
    assert prof.slope_residual < 1e-9
    assert prof.fit_points == int(np.sum(np.abs(basis.x) > 4))
    # a single mode has |psi| independent of y
    assert prof.mu_proxy == pytest.approx(prof.envelope.max(), rel=1e-12)


def test_trace_bound_formula():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    c = hs_constant(1.0)
    assert trace_bound(p) == pytest.approx(2 * 0.05 ** -2 * c * c * 0.04 * 8 ** 4)
    cert = trace_bound_check(np.array([0.4, 0.6, 0.65, 0.8]), p.window, p)
    assert cert.count == 2 and cert.passed
