import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgecurrents.classify import ClassifiedEntry, ClassifiedSpectrum
from edgecurrents.experiments import (HallOrderingError, SolveSettings, band_spectrum,
                                      centered_levels, default_deltas, hall_current, line_fit,
                                      lowest_band, power_fit, probability, run_seeds, run_edge_bulk_ensemble,
                                      run_wegner, tail_indices, validate_fast_mode, wegner_bound,
                                      wilson_interval)
from edgecurrents.model import ModelParams
from edgecurrents.specfun import hs_constant


def wilson_closed_form(k, n, zq=1.959963984540054):
    p = k / n
    den = 1 + zq * zq / n
    c = (p + zq * zq / (2 * n)) / den
    h = zq * math.sqrt(p * (1 - p) / n + zq * zq / (4 * n * n)) / den
    return c - h, c + h


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 500), st.data())
def test_wilson_interval(n, data):
    k = data.draw(st.integers(0, n))
    lo, hi = wilson_interval(k, n)
    rlo, rhi = wilson_closed_form(k, n)
    assert lo == pytest.approx(rlo, abs=1e-9) and hi == pytest.approx(rhi, abs=1e-9)
    assert 0 <= lo <= k / n <= hi <= 1


def test_probability_record():
    r = probability(3, 10)
    assert r["p"] == 0.3 and r["k"] == 3 and r["n"] == 10
    assert wilson_interval(0, 0) == (0.0, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10))
def test_power_fit_exact(e, c):
    x = np.array([8.0, 12.0, 16.0])
    f = power_fit(x, c * x ** e)
    assert f.exponent == pytest.approx(e, abs=1e-9)
    assert f.prefactor == pytest.approx(c, rel=1e-8)
    assert f.within(e, 1e-6)


def test_power_fit_undefined():
    assert math.isnan(power_fit([8, 12, 16], [1, 0, 2]).exponent)
    assert math.isnan(power_fit([8], [1]).exponent)
    assert not power_fit([8, 12], [1, 0]).within(0, 10)
    assert power_fit([2, 4], [3, 12]).exponent == pytest.approx(2)


def test_line_fit():
    assert line_fit([1, 2, 3], [1, 3, 5])["slope"] == pytest.approx(2)
    assert math.isnan(line_fit([1, 2], [1, math.nan])["slope"])


def _square(s):
    return s * s


def test_run_seeds_order_and_threads():
    assert run_seeds(_square, [3, 1, 2]) == [1, 4, 9]
    assert run_seeds(_square, [3, 1, 2], threads=2) == [1, 4, 9]


def _spectrum(entries, window=(0.55, 0.7)):
    return ClassifiedSpectrum(window, [ClassifiedEntry(E, J, 0.0, lab, None, None)
                                       for E, J, lab in entries])


def test_hall_current_sums_filled_levels():
    cls = _spectrum([(0.56, -1.0, "L-edge"), (0.60, -1.0, "L-edge"), (0.58, 1.0, "R-edge"),
                     (0.66, 1.0, "R-edge"), (0.62, 0.001, "bulk"), (0.64, 0.002, "bulk")])
    h = hall_current(cls, 0.61, 0.67, 0.63, L=10)
    # left to 0.61: two states; right to 0.67: two states; bulk to 0.63: one state
    assert h.I == pytest.approx((-2.0 + 2.0 + 0.001) / 10)
    assert h.filled["bulk"] == [0.62]
    assert h.predicted == pytest.approx(0.06 / (2 * math.pi))
    assert h.bulk_budget == pytest.approx(2 * 0.002 / 10)
    assert h.ratio == pytest.approx(h.I * 2 * math.pi / 0.06)
    assert len(h.scan) == 11


def test_hall_ordering():
    cls = _spectrum([])
    with pytest.raises(HallOrderingError, match="ordering"):
        hall_current(cls, 0.65, 0.6, 0.62, 10)
    with pytest.raises(HallOrderingError):
        hall_current(cls, 0.5, 0.65, 0.6, 10)


def test_centered_levels():
    p = ModelParams(B=1.0, L=12, V0=0.2, epsilon=0.05)
    mu_l, mu_r, E_F = centered_levels(p, 0.1)
    assert (mu_l, E_F, mu_r) == pytest.approx((0.575, 0.625, 0.675))


def test_tail_indices():
    E = np.array([0.5, 0.49, 0.52, 0.46, 0.5])
    assert tail_indices(E, 1.0).tolist() == [2, 3]
    assert tail_indices(np.zeros(0), 1.0).size == 0


def test_wegner_bound_and_deltas():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    assert wegner_bound(p, 0.01) == pytest.approx(
        4 * hs_constant(1.0) * 15 / 16 * 0.01 / 0.05 ** 2 * 0.2 * 8 ** 4)
    d = default_deltas(p)
    assert d[0] == 0 and d[-1] == pytest.approx(0.2) and np.all(np.diff(d) > 0)


def test_wegner_ensemble_shape():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    rep = run_wegner(p, p.window[0], default_deltas(p), range(6))
    ps = [c["p"] for c in rep.aggregates["curve"]]
    assert ps[0] == 0 and rep.aggregates["zero_at_zero"]
    assert rep.aggregates["monotone"] and rep.aggregates["below_bound"]
    assert len(rep.records) == 6
    with pytest.raises(ValueError):
        run_wegner(p, 0.0, [0.1], range(2))


def test_fast_mode_agrees_with_full_solve():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    v = validate_fast_mode(p, [0, 1])
    # second-order leakage to higher levels; must stay below half the smallest Wegner delta
    assert v["agree"] and v["max_diff"] <= 0.5 * default_deltas(p)[1]
    weak = validate_fast_mode(p.replace(V0=0.1), [0, 1])
    assert weak["max_diff"] < 0.5 * v["max_diff"]
    E = band_spectrum(p, 0)
    assert np.all(np.abs(E - 0.5) < p.V0)


def test_lowest_band_widens():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    basis, win, vy = lowest_band(p, 0)
    basis2, win2, _ = lowest_band(p, 0, min_states=len(win) + 1)
    assert len(win2) > len(win) and basis2.Nk > basis.Nk
    assert vy.dim == basis.dim
    with pytest.raises(RuntimeError):
        lowest_band(p, 0, min_states=10 ** 4, max_widen=1)


def test_edge_bulk_small_ensemble():
    p = ModelParams(B=1.0, L=8, V0=0.2, epsilon=0.05)
    rep = run_edge_bulk_ensemble(p, [0, 1], L_list=(8,))
    assert len(rep.records) == 2
    for r in rep.records:
        assert r["partition"] and r["sign_ok"]
        assert r["n_window"] == r["n_left"] + r["n_right"] + r["n_bulk"] + r["n_ambiguous"]
    assert rep.bookkeeping["target_L8"] == pytest.approx(1 - 3 * 8.0 ** -1)
    assert rep.probabilities["event_L8"]["n"] == 2
    with pytest.raises(ValueError):
        run_edge_bulk_ensemble(p, [0], p=6)
    d = rep.to_dict()
    assert d["fits"]["edge_count"]["points"] == 1
