"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Ensembles shared between criteria are computed once per session.
"""
import filecmp
import json
import math
import time

import numpy as np
import pytest

from edgecurrents.basis import build_mixed_basis
from edgecurrents.classify import pairwise_current, trace_bound_check, window_currents
from edgecurrents.cli import cmd_decoupling, cmd_kernel_check, main
from edgecurrents.config import parse_config
from edgecurrents.decouple import assemble_K, build_partitions, certified_z_grid
from edgecurrents.edge import branch_pair, branch_spacing
from edgecurrents.eigensolve import eig_window
from edgecurrents.experiments import (centered_levels, classify_seed, default_deltas,
                                      full_bulk_spectrum, hall_current, lowest_band,
                                      run_edge_bulk_ensemble, run_h1_h2_diagnostics, run_wegner)
from edgecurrents.model import ModelParams, sample_disorder
from edgecurrents.operators import assemble_family, assemble_h0

B, V0, EPS = 1.0, 0.2, 0.05
SIZES = (8, 12, 16)
N_SEEDS = 50


def model(L, **kw):
    return ModelParams(B=B, L=L, V0=V0, epsilon=EPS, **kw)


def g(v):
    return f"{v:.4g}" if isinstance(v, (float, np.floating)) else str(v)


@pytest.fixture(scope="session")
def ensemble():
    return run_edge_bulk_ensemble(model(12), range(N_SEEDS), SIZES)


@pytest.fixture(scope="session")
def branches12():
    t0 = time.perf_counter()
    left, right = branch_pair(model(12))
    return left, right, time.perf_counter() - t0


def test_c01_landau_levels(verdict):
    t0 = time.perf_counter()
    p = model(12)
    basis = build_mixed_basis(p, 16).bulk(4.0)
    win = eig_window(assemble_h0(basis), (0.0, 2.0 * B), tol=1e-9)
    E = np.sort(win.E)
    cut = np.nonzero(np.diff(E) > 0.1 * B)[0]
    first, second = E[: cut[0] + 1], E[cut[0] + 1: cut[1] + 1] if cut.size > 1 else E[cut[0] + 1:]
    e0 = float(np.max(np.abs(first - 0.5 * B)))
    e1 = float(np.max(np.abs(second - 1.5 * B)))
    dt = time.perf_counter() - t0
    ok = e0 <= 1e-4 * B and e1 <= 1e-3 * B and dt <= 10
    verdict(1, "Landau levels of H0", ok,
            f"max|E-B/2|={g(e0)} over {first.size} states, max|E-3B/2|={g(e1)} over {second.size}, "
            f"runtime {dt:.1f}s")


def test_c02_feynman_hellmann(verdict, branches12):
    left, right, dt = branches12
    defects = [float(np.max(np.abs(b.J_integral - b.J_derivative)[b.in_window()], initial=0.0))
               for b in (left, right)]
    n = sum(int(b.in_window().sum()) for b in (left, right))
    ok = max(defects) <= 1e-4 and n > 0 and dt <= 30
    verdict(2, "Feynman-Hellmann consistency", ok,
            f"max|J_int-J_der| left {g(defects[0])}, right {g(defects[1])} over {n} window levels, "
            f"runtime {dt:.1f}s")


def test_c03_edge_current_dichotomy(verdict, branches12):
    left, right, _ = branches12
    jl = left.J_integral[left.in_window()]
    jr = right.J_integral[right.in_window()]
    sp = {b.side: branch_spacing(b) for b in (left, right)}
    j_eps = min(left.j_epsilon, right.j_epsilon)
    ok = (jl.size > 0 and jr.size > 0 and np.all(jl < 0) and np.all(jr > 0) and j_eps > 0
          and all(s["pass"] for s in sp.values()))
    verdict(3, "edge current dichotomy", ok,
            f"j_epsilon={g(j_eps)}; left J {np.round(jl, 4).tolist()}, right J {np.round(jr, 4).tolist()}; "
            f"min spacing left {g(sp['left']['min'])} right {g(sp['right']['min'])} vs bound "
            f"{g(sp['left']['bound'])}/{g(sp['right']['bound'])}")


def test_c04_classification_partition(verdict, ensemble):
    recs = [r for r in ensemble.records if r["L"] == 12]
    parts = all(r["partition"] and r["sign_ok"] for r in recs)
    ambiguous = sum(r["n_ambiguous"] for r in recs)
    clean, _, _ = classify_seed(model(12), None)
    clean_bulk = clean.counts()["bulk"]
    ok = len(recs) == N_SEEDS and parts and ambiguous == 0 and clean_bulk == 0
    verdict(4, "classification partition", ok,
            f"{len(recs)} seeds at L=12: partition+signs {parts}, ambiguous states {ambiguous}; "
            f"clean-limit bulk labels {clean_bulk}")


def test_c05_current_separation(verdict, ensemble):
    pr = ensemble.probabilities["ratio_L16"]
    med = [ensemble.aggregates[str(L)]["median_max_bulk_J"] for L in SIZES]
    decreasing = bool(all(np.isfinite(med)) and np.all(np.diff(med) < 0))
    no_bulk = ensemble.aggregates["16"]["seeds_without_bulk"]
    gamma = ensemble.fits["gamma_slope"]["slope"]
    ok = pr["p"] >= 0.9 and decreasing
    verdict(5, "edge/bulk current separation", ok,
            f"ratio>=100 at L=16 in {pr['k']}/{pr['n']} seeds (Wilson [{g(pr['lo'])}, {g(pr['hi'])}]), "
            f"{no_bulk} seeds without bulk states; median max bulk |J| over L={SIZES}: "
            f"{[g(m) for m in med]}, decreasing {decreasing}; fitted gamma slope {g(gamma)}")


def test_c06_counting_laws(verdict, ensemble):
    fe, fb = ensemble.fits["edge_count"], ensemble.fits["bulk_count"]
    counts = {L: (ensemble.aggregates[str(L)]["mean_edge_count"],
                  ensemble.aggregates[str(L)]["mean_bulk_count"]) for L in SIZES}
    ok = fe.within(1.0, 0.3) and fb.within(2.0, 0.5)
    verdict(6, "edge and bulk counting exponents", ok,
            f"edge exponent {g(fe.exponent)} +- {g(fe.stderr)}, bulk exponent {g(fb.exponent)}; "
            f"mean (edge, bulk) counts {counts}")


def test_c07_wegner(verdict):
    t0 = time.perf_counter()
    p = model(8)
    rep = run_wegner(p, p.window[0], default_deltas(p), range(500), fast=True)
    dt = time.perf_counter() - t0
    a = rep.aggregates
    fit = rep.fits["small_delta"]
    ok = a["monotone"] and a["zero_at_zero"] and a["below_bound"] and fit.within(1.0, 0.3) and dt <= 600
    curve = [(g(c["delta"]), g(c["p"])) for c in a["curve"] if c["p"] > 0][:4]
    verdict(7, "Wegner estimate", ok,
            f"monotone {a['monotone']}, zero at 0 {a['zero_at_zero']}, below bound {a['below_bound']}, "
            f"small-delta exponent {g(fit.exponent)} from {fit.points} points, min distance "
            f"{g(a['min_distance'])}, first nonzero (delta, P) {curve}, runtime {dt:.0f}s")


def test_c08_hall_conductance(verdict):
    p = model(12)
    mu_l, mu_r, E_F = centered_levels(p, 0.1)
    scale = 2 * math.pi / (mu_r - mu_l)
    clean, _, _ = classify_seed(p, None)
    hc = hall_current(clean, mu_l, mu_r, E_F, p.L)
    per_seed = []
    for seed in range(10):
        cls, _, _ = classify_seed(p, seed)
        h = hall_current(cls, mu_l, mu_r, E_F, p.L)
        per_seed.append((h.deviation <= 0.1 + h.bulk_budget * scale, h.ratio, h.plateau_change))
    plateau = max([hc.plateau_change] + [s[2] for s in per_seed])
    ok = hc.deviation <= 0.1 and all(s[0] for s in per_seed) and plateau <= 0.01
    verdict(8, "Hall conductance and plateau", ok,
            f"clean ratio {g(hc.ratio)} (allowed 1 +- 0.1), disordered ratios "
            f"{sorted({g(s[1]) for s in per_seed})} passing {sum(s[0] for s in per_seed)}/10, "
            f"max plateau change {g(plateau)}")


def test_c09_kernels(verdict):
    t0 = time.perf_counter()
    out = cmd_kernel_check(parse_config({"B": B, "L": 12, "V0": V0, "epsilon": EPS}), None)
    dt = time.perf_counter() - t0
    r = out.report
    ok = out.ok and dt <= 60
    verdict(9, "kernels", ok,
            f"U errors {g(r['U0_err'])}/{g(r['U1_err'])}, completed oracle {g(r['oracle_max_rel_err'])} "
            f"(nu<=40 truncation alone {g(r['truncated_max_rel_err'])}), decay certificates "
            f"{r['decay_failures']} failures in {r['kernel_decay_samples']} samples, projector diagonal "
            f"{g(r['projector_diag_err'])} (cylinder {g(r['projector_cylinder_diag_err'])}), runtime {dt:.1f}s")


def _k_norm_at(L, layer, D):
    p = model(L, layer=layer)
    basis = build_mixed_basis(p, 8)
    ops = assemble_family(p, basis, sample_disorder(p, 1))
    left, right = branch_pair(p, grid=basis)
    zs = certified_z_grid(np.r_[left.energy, right.energy], p.window)
    z = zs[len(zs) // 2]
    return assemble_K(z, ops, build_partitions(p, basis, D)).norm()[0], z


def test_c10_decoupling(verdict):
    cfg = parse_config({"B": B, "L": 12, "V0": V0, "epsilon": EPS, "layer": 4.5,
                        "experiment": {"D": 4}})
    out = cmd_decoupling(cfg, None)
    r = out.report
    n4, z = _k_norm_at(16, 7.25, 4.0)
    n8, _ = _k_norm_at(16, 7.25, 8.0)
    decreases = n8 < n4
    ok = out.ok and decreases
    verdict(10, "decoupling formula", ok,
            f"identity defects {[g(d) for d in r['identity_defects']]}, max residual "
            f"{g(r['max_residual'])} and reconstruction {g(r['max_reconstruction_error'])} over "
            f"{r['z_count']} z, max ||K|| {g(r['max_k_norm'])} (<1: {out.checks['k_norm']}); "
            f"L=16 at z={z:.4f}: ||K|| D=4 {g(n4)}, D=8 {g(n8)}, decreases {decreases}")


def test_c11_bulk_currents(verdict):
    p = model(12)
    basis, win, vy = lowest_band(p, 1, min_states=30)
    J, _ = window_currents(win, vy)
    top = np.argsort(win.E)[-30:]
    pairs = [win.pairs[i] for i in top]
    jmax = float(np.max(np.abs(J[top])))
    certs = [pairwise_current(pairs[i], pairs[j], vy, p.L)
             for i in range(30) for j in range(i + 1, 30)]
    worst = max(abs(c.value) / c.bound for c in certs)
    ok = jmax <= 1e-3 and all(c.passed for c in certs)
    verdict(11, "bulk current bounds", ok,
            f"30 states in [{g(win.E[top].min())}, {g(win.E[top].max())}]: max |J| {g(jmax)}, "
            f"{sum(c.passed for c in certs)}/{len(certs)} pairwise certificates, worst |value|/bound {g(worst)}")


def test_c12_bulk_count_and_decay(verdict):
    counts = []
    for L in SIZES:
        p = model(L)
        for seed in range(10):
            E = full_bulk_spectrum(p, seed, p.window).E
            c = trace_bound_check(E, p.window, p)
            counts.append((L, c.count, c.bound, c.passed))
    diag = run_h1_h2_diagnostics(model(12), range(10), SIZES)
    slopes = {L: diag.aggregates[str(L)]["median_slope"] for L in SIZES}
    limit = -0.75 * B / 8
    slopes_ok = all(np.isfinite(s) and s <= limit for s in slopes.values())
    ok = all(c[3] for c in counts) and slopes_ok
    verdict(12, "bulk count bound and exterior decay", ok,
            f"window counts {sorted({c[1] for c in counts})} vs bounds "
            f"{[g(b) for b in sorted({c[2] for c in counts})]}; median exterior slopes "
            f"{ {L: g(s) for L, s in slopes.items()} } vs limit {g(limit)}")


def _tree_equal(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only:
        return False
    _, diff, err = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not diff and not err and all(_tree_equal(a / d, b / d) for d in cmp.common_dirs)


def test_c13_determinism(verdict, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"B": B, "L": 12, "V0": V0, "epsilon": EPS,
                               "experiment": {"L_list": [8, 12]}}))
    runs = []
    for i, threads in enumerate((1, 1, 2)):
        out = tmp_path / f"run{i}"
        main(["theorem1", "--config", str(cfg), "--seeds", "3", "--threads", str(threads),
              "--out", str(out)])
        runs.append(out)
    files = sorted(str(f.relative_to(runs[0])) for f in runs[0].rglob("*") if f.is_file())
    same = _tree_equal(runs[0], runs[1])
    same_threads = _tree_equal(runs[0], runs[2])
    ok = same and same_threads and len(files) > 3
    verdict(13, "determinism", ok,
            f"{len(files)} artifacts ({', '.join(files[:4])}, ...): identical rerun {same}, "
            f"identical with 2 workers {same_threads}")
