"""Seed ensembles: spectral-gap probabilities, edge/bulk statistics, Hall current."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
from scipy.stats import binomtest, linregress

from .basis import build_band_basis, build_mixed_basis
from .classify import (ClassificationPolicy, ClassifiedSpectrum, classify_window, decay_profile,
                       trace_bound_check, window_currents)
from .edge import branch_pair, check_h1
from .eigensolve import eig_dense, eig_window
from .model import ModelParams, clean_realization, sample_disorder
from .operators import assemble_bulk, assemble_family, assemble_vy, project_to_band
from .specfun import hs_constant


@dataclass(frozen=True)
class SolveSettings:
    resolution: int = 8
    tol: float = 1e-8
    dim_cap: int = 60000
    bulk_margin: float = 4.0


# ---------------------------------------------------------------------------
# statistics


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def probability(k: int, n: int) -> dict:
    lo, hi = wilson_interval(k, n)
    return {"k": int(k), "n": int(n), "p": k / n if n else math.nan, "lo": lo, "hi": hi}


@dataclass
class PowerFit:
    exponent: float
    stderr: float
    prefactor: float
    points: int

    @classmethod
    def undefined(cls, points: int = 0) -> "PowerFit":
        return cls(math.nan, math.nan, math.nan, points)

    def within(self, target: float, tol: float) -> bool:
        return bool(np.isfinite(self.exponent) and abs(self.exponent - target) <= tol)


def power_fit(x, y) -> PowerFit:
    """Least-squares y = c x^e on log-log axes; undefined if any y <= 0."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or not np.all(np.isfinite(y)) or np.any(y <= 0):
        return PowerFit.undefined(int(x.size))
    if x.size == 2:
        e = math.log(y[1] / y[0]) / math.log(x[1] / x[0])
        return PowerFit(e, math.nan, float(y[0] / x[0] ** e), 2)
    r = linregress(np.log(x), np.log(y))
    return PowerFit(float(r.slope), float(r.stderr), float(math.exp(r.intercept)), int(x.size))


def line_fit(x, y) -> dict:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or not np.all(np.isfinite(y)):
        return {"slope": math.nan, "stderr": math.nan}
    if x.size == 2:
        return {"slope": float((y[1] - y[0]) / (x[1] - x[0])), "stderr": math.nan}
    r = linregress(x, y)
    return {"slope": float(r.slope), "stderr": float(r.stderr)}


def _nanmedian(v) -> float:
    v = np.asarray([a for a in v if a is not None and np.isfinite(a)], float)
    return float(np.median(v)) if v.size else math.nan


@dataclass
class EnsembleReport:
    kind: str
    config: dict
    records: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    probabilities: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)
    bookkeeping: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["fits"] = {k: asdict(v) if isinstance(v, PowerFit) else v for k, v in self.fits.items()}
        return d


def run_seeds(fn, seeds, threads: int = 1) -> list:
    """Apply ``fn`` per seed; results come back in seed order either way."""
    seeds = sorted(int(s) for s in seeds)
    if threads <= 1 or len(seeds) < 2:
        return [fn(s) for s in seeds]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, seeds))


# ---------------------------------------------------------------------------
# single-seed pipelines


def _realization(params: ModelParams, seed):
    return clean_realization(params) if seed is None else sample_disorder(params, seed)


def classify_seed(params: ModelParams, seed, settings: SolveSettings = SolveSettings(),
                  policy: ClassificationPolicy = ClassificationPolicy()):
    """Window spectrum of H_omega labelled against the edge branches on the same grid."""
    basis = build_mixed_basis(params, settings.resolution, settings.dim_cap)
    left, right = branch_pair(params, grid=basis)
    ops = assemble_family(params, basis, _realization(params, seed))
    win = eig_window(ops["Hfull"], params.window, settings.tol)
    cls = classify_window(win, left, right, assemble_vy(basis), params.L, policy)
    return cls, win, (left, right)


def seed_record(params: ModelParams, seed, cls: ClassifiedSpectrum, branches) -> dict:
    left, right = branches
    c = cls.counts()
    shifts, dJ = [], []
    for e in cls.entries:
        if e.label in ("L-edge", "R-edge"):
            br = left if e.label == "L-edge" else right
            i = int(np.argmin(np.abs(br.k - e.matched_k)))
            shifts.append(e.shift)
            dJ.append(abs(e.J - br.J_integral[i]))
    bulkE = np.array([e.E for e in cls.entries if e.label == "bulk"])
    edgeE = np.array([e.E for e in cls.entries if e.label in ("L-edge", "R-edge")])
    dist = (float(np.min(np.abs(bulkE[:, None] - edgeE[None, :])))
            if bulkE.size and edgeE.size else math.nan)
    mb, me = cls.max_bulk_current, cls.min_edge_current
    return {
        "L": params.L, "seed": -1 if seed is None else int(seed),
        "n_window": len(cls.entries), "n_left": c["L-edge"], "n_bulk": c["bulk"],
        "n_right": c["R-edge"], "n_ambiguous": c["ambiguous"],
        "min_edge_J": me, "max_bulk_J": mb,
        "ratio": me / mb if mb > 0 else math.nan,
        "median_shift": _nanmedian(shifts), "max_shift": max(shifts) if shifts else math.nan,
        "median_dJ": _nanmedian(dJ), "set_distance": dist,
        "partition": cls.is_partition(), "sign_ok": cls.sign_consistent(),
        "j_epsilon": cls.j_epsilon, "radius": cls.radius,
    }


def _ensemble_seed(params: ModelParams, settings: SolveSettings, seed: int) -> dict:
    cls, _, br = classify_seed(params, seed, settings)
    return seed_record(params, seed, cls, br)


# ---------------------------------------------------------------------------
# ensembles


def run_edge_bulk_ensemble(params: ModelParams, seeds, L_list=(8, 12, 16), p: int = 7,
                 theta: float = math.nan, settings: SolveSettings = SolveSettings(),
                 threads: int = 1, ratio_target: float = 1e2) -> EnsembleReport:
    """Edge/bulk classification statistics for each size in ``L_list``.

    Per seed the conjunction of four events is recorded: every edge level
    matched within the classification radius, edge/bulk label sets at least
    L^{1-p} apart, bulk currents under the bulk threshold, and a clean
    partition with consistent current signs.
    """
    if p < 7:
        raise ValueError("p >= 7 required")
    rep = EnsembleReport("theorem1", {"params": params.as_dict(), "seeds": sorted(map(int, seeds)),
                                      "L_list": list(L_list), "p": p, "settings": asdict(settings)})
    s = min(theta, p - 6) if np.isfinite(theta) else p - 6
    per_L = {}
    for L in L_list:
        pl = params.replace(L=int(L))
        recs = run_seeds(partial(_ensemble_seed, pl, settings), seeds, threads)
        for r in recs:
            n_edge = r["n_left"] + r["n_right"]
            a_ok = n_edge == 0 or bool(r["max_shift"] <= r["radius"])
            c_ok = not np.isfinite(r["set_distance"]) or r["set_distance"] >= L ** (1 - p)
            d_ok = not np.isfinite(r["max_bulk_J"]) or r["max_bulk_J"] <= 0.1 * r["j_epsilon"]
            r["event"] = bool(a_ok and c_ok and d_ok and r["partition"] and r["sign_ok"])
            r["ratio_ok"] = bool(np.isfinite(r["ratio"]) and r["ratio"] >= ratio_target)
        rep.records.extend(recs)
        n = len(recs)
        per_L[int(L)] = {
            "mean_edge_count": float(np.mean([r["n_left"] + r["n_right"] for r in recs])),
            "mean_bulk_count": float(np.mean([r["n_bulk"] for r in recs])),
            "median_max_bulk_J": _nanmedian([r["max_bulk_J"] for r in recs]),
            "median_min_edge_J": _nanmedian([r["min_edge_J"] for r in recs]),
            "median_shift": _nanmedian([r["median_shift"] for r in recs]),
            "median_dJ": _nanmedian([r["median_dJ"] for r in recs]),
            "min_set_distance": min((r["set_distance"] for r in recs
                                     if np.isfinite(r["set_distance"])), default=math.nan),
            "ambiguous_fraction": (sum(r["n_ambiguous"] for r in recs)
                                   / max(1, sum(r["n_window"] for r in recs))),
            "seeds_without_bulk": sum(1 for r in recs if r["n_bulk"] == 0),
        }
        rep.probabilities[f"event_L{L}"] = probability(sum(r["event"] for r in recs), n)
        rep.probabilities[f"ratio_L{L}"] = probability(sum(r["ratio_ok"] for r in recs), n)
        rep.bookkeeping[f"target_L{L}"] = 1 - 3 * float(L) ** (-s)
    rep.aggregates = {str(k): v for k, v in per_L.items()}
    Ls = np.array(sorted(per_L))
    rep.fits["edge_count"] = power_fit(Ls, [per_L[L]["mean_edge_count"] for L in Ls])
    rep.fits["bulk_count"] = power_fit(Ls, [per_L[L]["mean_bulk_count"] for L in Ls])
    mb = [per_L[L]["median_max_bulk_J"] for L in Ls]
    rep.fits["gamma_slope"] = line_fit(params.B * np.log(Ls) ** 2,
                                       np.log(mb) if all(np.isfinite(mb)) and all(np.array(mb) > 0)
                                       else [math.nan] * len(Ls))
    rep.bookkeeping.update({"p": p, "theta": theta, "s": s})
    return rep


def band_spectrum(params: ModelParams, seed, settings: SolveSettings = SolveSettings()) -> np.ndarray:
    """Eigenvalues of H_b compressed to the lowest-Landau orbitals (fast mode)."""
    basis = build_mixed_basis(params, settings.resolution, settings.dim_cap).bulk(settings.bulk_margin)
    band = build_band_basis(params, basis)
    Hb = assemble_bulk(basis, _realization(params, seed))
    return np.array([p.E for p in eig_dense(project_to_band(Hb, band))])


def full_bulk_spectrum(params: ModelParams, seed, window, settings: SolveSettings = SolveSettings()):
    basis = build_mixed_basis(params, settings.resolution, settings.dim_cap).bulk(settings.bulk_margin)
    Hb = assemble_bulk(basis, _realization(params, seed))
    return eig_window(Hb, window, settings.tol)


def _distance_to(E: float, spectrum: np.ndarray) -> float:
    return float(np.min(np.abs(spectrum - E))) if spectrum.size else math.inf


def _wegner_seed(params, E, settings, fast, seed):
    if fast:
        spec = band_spectrum(params, seed, settings)
    else:
        a = 0.5 * params.B - params.V0
        spec = full_bulk_spectrum(params, seed, (a, 0.5 * params.B + 2 * params.V0), settings).E
    return _distance_to(E, spec)


def wegner_bound(params: ModelParams, delta) -> np.ndarray:
    """4 c(B) ||h||_inf delta eps^-2 V0 L^4 with ||h||_inf = 15/16."""
    h_inf = 15.0 / 16.0
    return 4 * hs_constant(params.B) * h_inf * np.asarray(delta) * params.epsilon ** -2 * params.V0 * params.L ** 4


def default_deltas(params: ModelParams, count: int = 24) -> np.ndarray:
    return np.concatenate([[0.0], np.geomspace(1e-4, params.V0, count)])


def run_wegner(params: ModelParams, E: float, deltas, seeds, fast: bool = True,
               settings: SolveSettings = SolveSettings(), threads: int = 1,
               fit_max_p: float = 0.5) -> EnsembleReport:
    """Frequency of dist(sigma(H_b), E) < delta over seeds, for each delta.

    The small-delta exponent is fitted on the deltas with 0 < P <= fit_max_p.
    """
    a, b = params.window
    if not a <= E <= b:
        raise ValueError(f"E={E} outside the window [{a}, {b}]")
    deltas = np.asarray(deltas, float)
    if np.any(deltas < 0):
        raise ValueError("deltas must be nonnegative")
    dist = np.array(run_seeds(partial(_wegner_seed, params, E, settings, fast), seeds, threads))
    n = dist.size
    rep = EnsembleReport("wegner", {"params": params.as_dict(), "E": E, "deltas": deltas.tolist(),
                                    "seeds": sorted(map(int, seeds)), "fast": fast,
                                    "settings": asdict(settings)})
    rep.records = [{"seed": int(s), "distance": float(d)} for s, d in zip(sorted(seeds), dist)]
    bound = wegner_bound(params, deltas)
    curve = []
    for d, bd in zip(deltas, bound):
        k = int(np.sum(dist < d))
        pr = probability(k, n)
        pr.update(delta=float(d), bound=float(bd))
        curve.append(pr)
    rep.aggregates["curve"] = curve
    ps = np.array([c["p"] for c in curve])
    rep.aggregates["monotone"] = bool(np.all(np.diff(ps) >= 0))
    rep.aggregates["zero_at_zero"] = bool(ps[deltas == 0].sum() == 0) if np.any(deltas == 0) else None
    rep.aggregates["below_bound"] = bool(np.all(ps <= bound + 1e-15))
    rep.aggregates["min_distance"] = float(dist.min()) if n else math.nan
    sel = (deltas > 0) & (ps > 0) & (ps <= fit_max_p)
    rep.fits["small_delta"] = power_fit(deltas[sel], ps[sel])
    rep.bookkeeping["c_B"] = hs_constant(params.B)
    return rep


def validate_fast_mode(params: ModelParams, seeds, settings: SolveSettings = SolveSettings()) -> dict:
    """Lowest-band eigenvalues from the band compression against full solves."""
    worst = 0.0
    for s in seeds:
        fast = band_spectrum(params, s, settings)
        full = full_bulk_spectrum(params, s, (0.5 * params.B - params.V0, 0.5 * params.B + params.V0),
                                  settings).E
        if fast.size != full.size:
            return {"agree": False, "max_diff": math.inf, "sizes": (fast.size, full.size)}
        worst = max(worst, float(np.max(np.abs(np.sort(fast) - np.sort(full)))))
    return {"agree": True, "max_diff": worst}


# ---------------------------------------------------------------------------
# bulk-state diagnostics


def lowest_band(params: ModelParams, seed, settings: SolveSettings = SolveSettings(),
                min_states: int = 0, max_widen: int = 10):
    """Lowest band of H_b on the bulk basis, returned as (basis, window, vy).

    H_b carries no wall, so the truncation margin is free; it is widened one
    unit at a time until the band holds at least ``min_states`` states.
    """
    pw = params
    for _ in range(max_widen + 1):
        basis = build_mixed_basis(pw, settings.resolution, settings.dim_cap).bulk(settings.bulk_margin)
        Hb = assemble_bulk(basis, _realization(params, seed))
        win = eig_window(Hb, (0.5 * params.B - params.V0, 0.5 * params.B + params.V0), settings.tol)
        if len(win) >= min_states:
            return basis, win, assemble_vy(basis)
        pw = pw.replace(W=pw.W + 1.0)
    raise RuntimeError(f"band holds {len(win)} < {min_states} states after widening")


def tail_indices(E: np.ndarray, B: float, fraction: float = 0.5) -> np.ndarray:
    """States whose distance from B/2 is at least ``fraction`` of the largest."""
    d = np.abs(E - 0.5 * B)
    return np.nonzero(d >= fraction * d.max())[0] if d.size else np.zeros(0, int)


def _h2_seed(params, settings, threshold, seed):
    basis, win, _ = lowest_band(params, seed, settings)
    idx = tail_indices(win.E, params.B)
    prof = [decay_profile(win.pairs[i], basis) for i in idx]
    mus = [p.mu_proxy for p in prof]
    inside = eig_window(assemble_bulk(basis, sample_disorder(params, seed)), params.window, settings.tol)
    return {"L": params.L, "seed": int(seed), "n_tail": len(idx),
            "median_mu_proxy": _nanmedian(mus), "max_mu_proxy": max(mus) if mus else math.nan,
            "median_slope": _nanmedian([p.slope for p in prof]),
            "n_window_bulk": len(inside), "pass": bool(all(m <= threshold for m in mus))}


def run_h1_h2_diagnostics(params: ModelParams, seeds, L_list=(8, 12, 16), threshold: float = 1e-2,
                          settings: SolveSettings = SolveSettings(), threads: int = 1) -> EnsembleReport:
    """H1 separation per size and the H2 line-amplitude proxy over seeds.

    The window bulk spectrum is empty at desk scale, so the proxy is taken on
    the band-tail states of H_b.
    """
    rep = EnsembleReport("diagnostics", {"params": params.as_dict(), "seeds": sorted(map(int, seeds)),
                                         "L_list": list(L_list), "threshold": threshold,
                                         "settings": asdict(settings)})
    fracs = {}
    for L in L_list:
        pl = params.replace(L=int(L))
        h1 = check_h1(*branch_pair(pl), pl.L)
        recs = run_seeds(partial(_h2_seed, pl, settings, threshold), seeds, threads)
        rep.records.extend(recs)
        k = sum(r["pass"] for r in recs)
        rep.probabilities[f"h2_L{L}"] = probability(k, len(recs))
        fracs[int(L)] = k / len(recs)
        rep.aggregates[str(L)] = {"d_epsilon": h1["d_epsilon"], "h1_pass": h1["pass"],
                                  "median_mu_proxy": _nanmedian([r["median_mu_proxy"] for r in recs]),
                                  "median_slope": _nanmedian([r["median_slope"] for r in recs])}
    Ls = np.array(sorted(fracs))
    fail = np.array([1 - fracs[L] for L in Ls])
    rep.fits["theta"] = power_fit(Ls, fail)
    if np.isfinite(rep.fits["theta"].exponent):
        rep.fits["theta"].exponent = -rep.fits["theta"].exponent
    return rep


# ---------------------------------------------------------------------------
# Hall current


class HallOrderingError(ValueError):
    pass


@dataclass
class HallResult:
    mu_l: float
    mu_r: float
    E_F: float
    L: int
    filled: dict
    I: float
    predicted: float
    bulk_budget: float
    scan: list = field(default_factory=list)

    @property
    def ratio(self) -> float:
        return self.I * 2 * math.pi / (self.mu_r - self.mu_l)

    @property
    def deviation(self) -> float:
        return abs(self.ratio - 1.0)

    @property
    def plateau_change(self) -> float:
        if not self.scan:
            return 0.0
        return max(abs(I - self.I) for _, I in self.scan) / abs(self.I) if self.I else math.inf


def _check_order(cls: ClassifiedSpectrum, mu_l, mu_r, E_F):
    a, b = cls.window
    if not (a < mu_l < E_F < mu_r < b):
        raise HallOrderingError(
            f"ordering B/2 + epsilon < mu_l < E_F < mu_r < B/2 + V0 violated: "
            f"{a:.6g} < {mu_l:.6g} < {E_F:.6g} < {mu_r:.6g} < {b:.6g}")


def _filled_current(cls: ClassifiedSpectrum, mu_l, mu_r, E_F, L):
    a = cls.window[0]
    tops = {"L-edge": mu_l, "R-edge": mu_r, "bulk": E_F}
    filled = {k: [] for k in tops}
    I = 0.0
    for e in cls.entries:
        top = tops.get(e.label)
        if top is not None and a <= e.E <= top:
            filled[e.label].append(e.E)
            I += e.J / L
    return I, filled


def hall_current(cls: ClassifiedSpectrum, mu_l: float, mu_r: float, E_F: float, L: int,
                 sweep_fraction: float = 0.2, sweep_points: int = 11) -> HallResult:
    """Sum of J/L over filled levels: left edge to mu_l, right edge to mu_r, bulk to E_F.

    The plateau scan moves E_F across ``sweep_fraction`` of the window,
    centered on E_F and clipped to (mu_l, mu_r).
    """
    _check_order(cls, mu_l, mu_r, E_F)
    I, filled = _filled_current(cls, mu_l, mu_r, E_F, L)
    a, b = cls.window
    half = 0.5 * sweep_fraction * (b - a)
    lo = max(E_F - half, mu_l + 1e-12 * (b - a))
    hi = min(E_F + half, mu_r - 1e-12 * (b - a))
    scan = [(float(e), _filled_current(cls, mu_l, mu_r, float(e), L)[0])
            for e in np.linspace(lo, hi, sweep_points)]
    nb = len(cls.select("bulk"))
    mb = cls.max_bulk_current
    budget = nb * mb / L if nb else 0.0
    return HallResult(mu_l, mu_r, E_F, L, filled, I, (mu_r - mu_l) / (2 * math.pi), budget, scan)


def centered_levels(params: ModelParams, spread: float = 0.1) -> tuple[float, float, float]:
    """mu_l, mu_r symmetric about the window center, E_F at the center."""
    a, b = params.window
    c = 0.5 * (a + b)
    return c - 0.5 * spread, c + 0.5 * spread, c


def edge_riemann_sum(branches, mu_l: float, mu_r: float, L: int, window) -> float:
    """Branch-level counterpart of the Hall sum: clean J_0k / L over filled k."""
    left, right = branches
    a = window[0]
    sl = left.J_integral[(left.energy >= a) & (left.energy <= mu_l)].sum()
    sr = right.J_integral[(right.energy >= a) & (right.energy <= mu_r)].sum()
    return float((sl + sr) / L)


def bulk_currents(win, vy) -> np.ndarray:
    return window_currents(win, vy)[0]


def trace_check(params: ModelParams, seed, settings: SolveSettings = SolveSettings()):
    win = full_bulk_spectrum(params, seed, params.window, settings)
    return trace_bound_check(win.E, params.window, params)
