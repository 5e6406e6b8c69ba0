"""Command line entry point.

    edgecurrents SUBCOMMAND --config run.json [--seeds N] [--seed-base K]
                 [--out DIR] [--threads N] [--fast]

Exit status: 0 success, 2 when a checked surrogate fails, 1 on error.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys

import numpy as np

from . import __version__
from .basis import DimensionError, build_mixed_basis
from .config import ConfigError, RunConfig, canonical_json, load_config, parse_config
from .decouple import build_partitions, certified_z_grid, verify_decoupling
from .edge import branch_pair, branch_spacing, check_h1
from .eigensolve import eig_window
from .experiments import (HallOrderingError, centered_levels, classify_seed, default_deltas,
                          edge_riemann_sum, hall_current, run_h1_h2_diagnostics, run_edge_bulk_ensemble,
                          run_wegner)
from .model import ModelError, clean_realization, sample_disorder
from .operators import assemble_family
from .specfun import (certify_kernel_decay, kummer_u, landau_projector_kernel, landau_projector_plane,
                      kernel_decay_samples, resolvent_kernel_plane, spectral_sum_oracle)

SUBCOMMANDS = ("spectrum", "classify", "edge-branches", "kernel-check", "decoupling",
               "wegner", "theorem1", "hall", "diagnostics")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


class Table:
    def __init__(self, columns, rows=()):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]

    def render(self, header: str) -> str:
        buf = io.StringIO()
        buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([fmt(v) for v in r])
        return buf.getvalue()


class Outcome:
    def __init__(self):
        self.tables: dict[str, Table] = {}
        self.seed_tables: dict[int, Table] = {}
        self.report: dict = {}
        self.checks: dict[str, bool] = {}

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _seed(cfg: RunConfig):
    return cfg.experiment["seed"]


def _real(cfg, seed):
    return clean_realization(cfg.params) if seed is None else sample_disorder(cfg.params, seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_spectrum(cfg: RunConfig, args) -> Outcome:
    p = cfg.params
    basis = build_mixed_basis(p, cfg.solver["resolution"], cfg.solver["dim_cap"])
    ops = assemble_family(p, basis, _real(cfg, _seed(cfg)))
    win = eig_window(ops["Hfull"], p.window, cfg.solver["tol"])
    out = Outcome()
    out.tables["spectrum"] = Table(["index", "E", "residual"],
                                   [(i, e, r) for i, (e, r) in enumerate(zip(win.E, win.residuals))])
    out.report = {"count": len(win), "certificate": win.certificate, "dim": basis.dim,
                  "orthogonality_defect": win.orthogonality_defect()}
    out.checks["certified"] = win.certificate.get("found") == win.certificate.get("expected")
    return out


def cmd_classify(cfg: RunConfig, args) -> Outcome:
    cls, win, _ = classify_seed(cfg.params, _seed(cfg), cfg.settings)
    out = Outcome()
    out.tables["classify"] = Table(["index", "E", "J", "residual", "label", "matched_k", "shift"],
                                   cls.rows())
    out.report = {"counts": cls.counts(), "j_epsilon": cls.j_epsilon, "J_edge": cls.J_edge,
                  "J_bulk": cls.J_bulk, "radius": cls.radius,
                  "min_edge_J": cls.min_edge_current, "max_bulk_J": cls.max_bulk_current,
                  "certificate": win.certificate}
    out.checks["partition"] = cls.is_partition()
    out.checks["signs"] = cls.sign_consistent()
    return out


def cmd_edge_branches(cfg: RunConfig, args) -> Outcome:
    p = cfg.params
    left, right = branch_pair(p)
    out = Outcome()
    rows = list(left.rows()) + list(right.rows())
    out.tables["edge_branches"] = Table(["side", "k", "E", "J_integral", "J_derivative"], rows)
    h1 = check_h1(left, right, p.L)
    sp = {b.side: branch_spacing(b) for b in (left, right)}
    out.report = {"j_epsilon": {"left": left.j_epsilon, "right": right.j_epsilon},
                  "fh_defect": max(left.fh_defect(), right.fh_defect()),
                  "spacing": sp, "h1": h1}
    inw = [(b, b.in_window()) for b in (left, right)]
    out.checks["fh"] = max(float(np.max(np.abs(b.J_integral[s] - b.J_derivative[s]), initial=0))
                           for b, s in inw) <= 1e-4
    out.checks["signs"] = bool(np.all(left.J_integral[left.in_window()] < 0)
                               and np.all(right.J_integral[right.in_window()] > 0))
    out.checks["spacing"] = all(v["pass"] for v in sp.values())
    out.checks["h1"] = h1["pass"]
    return out


def cmd_kernel_check(cfg: RunConfig, args) -> Outcome:
    ex = cfg.experiment
    L = float(cfg.params.L)
    out = Outcome()
    rho = np.linspace(0.05, 40.0, 200)
    u0 = max(abs(complex(kummer_u(0, 1, float(r))) - 1) for r in rho)
    u1 = max(abs(complex(kummer_u(-1, 1, float(r))) - (r - 1)) for r in rho)
    oracle = []
    for B in (0.5, 1.0, 2.0):
        for z in (0.8 * B + 0.1j, 1.2 * B - 0.3j, 0.6 * B):
            r, rp = (1.1 / math.sqrt(B), 0.4 / math.sqrt(B)), (0.0, 0.0)
            k = resolvent_kernel_plane(r, rp, z, B)
            o = spectral_sum_oracle(r, rp, z, B)
            raw = spectral_sum_oracle(r, rp, z, B, tail=False)
            oracle.append((B, z.real if isinstance(z, complex) else z,
                           z.imag if isinstance(z, complex) else 0.0,
                           abs(k - o) / abs(o), abs(k - raw) / abs(k)))
    certs = certify_kernel_decay(kernel_decay_samples(ex["samples"], ex["sample_seed"], L), L)
    out.tables["kernel_check"] = Table(
        ["B", "n", "x", "y", "xp", "yp", "z_re", "z_im", "abs_value", "bound", "passed"],
        [(c.B, c.n, c.x, c.y, c.xp, c.yp, c.z.real, c.z.imag, abs(c.value), c.bound, c.passed)
         for c in certs])
    out.tables["oracle"] = Table(["B", "z_re", "z_im", "rel_err_oracle", "rel_err_truncated"], oracle)
    r0 = (0.3, 0.2)
    diag = abs(landau_projector_plane(r0, r0, 1.0).real - 1 / (2 * math.pi))
    # cylinder images add B/2pi sum_m exp(-B m^2 L^2 / 4) cos(B x m L) on the diagonal
    m = np.arange(-8, 9)
    images = np.sum(np.exp(-m ** 2 * L ** 2 / 4) * np.cos(r0[0] * m * L)) / (2 * math.pi)
    diag_cyl = abs(landau_projector_kernel(r0, r0, L, 1.0) - images)
    out.report = {"U0_err": u0, "U1_err": u1, "oracle_max_rel_err": max(o[3] for o in oracle),
                  "truncated_max_rel_err": max(o[4] for o in oracle),
                  "kernel_decay_samples": ex["samples"], "decay_failures": sum(not c.passed for c in certs),
                  "projector_diag_err": diag, "projector_cylinder_diag_err": diag_cyl}
    out.checks["U"] = max(u0, u1) <= 1e-12
    out.checks["oracle"] = out.report["oracle_max_rel_err"] <= 1e-6
    out.checks["decay"] = out.report["decay_failures"] == 0
    out.checks["projector"] = max(diag, diag_cyl) <= 1e-10
    return out


def cmd_decoupling(cfg: RunConfig, args) -> Outcome:
    p = cfg.params
    seed = _seed(cfg)
    basis = build_mixed_basis(p, cfg.solver["resolution"], cfg.solver["dim_cap"])
    ops = assemble_family(p, basis, _real(cfg, seed))
    parts = build_partitions(p, basis, cfg.experiment["D"])
    left, right = branch_pair(p, grid=basis)
    zs = certified_z_grid(np.r_[left.energy, right.energy], p.window, cfg.experiment["z_per_gap"])
    out = Outcome()
    rows = []
    for z in zs:
        rep = verify_decoupling(z, ops["Hfull"], parts, ops, probes=cfg.experiment["probes"],
                                params=p)
        rows.append((z.real, z.imag, rep.k_norm, rep.residual, rep.reconstruction_error))
    out.tables["decoupling"] = Table(["z_re", "z_im", "k_norm", "residual", "reconstruction_error"], rows)
    d1, d2 = parts.identity_defects()
    out.report = {"D": parts.D, "layer": p.layer, "z_count": len(zs),
                  "identity_defects": [d1, d2], "max_d1": parts.max_d1, "max_d2": parts.max_d2,
                  "max_residual": max((r[3] for r in rows), default=0.0),
                  "max_reconstruction_error": max((r[4] for r in rows), default=0.0),
                  "max_k_norm": max((r[2] for r in rows), default=0.0)}
    out.checks["identities"] = max(d1, d2) <= 1e-12
    out.checks["residual"] = out.report["max_residual"] <= 1e-8
    out.checks["k_norm"] = out.report["max_k_norm"] < 1
    return out


def cmd_wegner(cfg: RunConfig, args) -> Outcome:
    p = cfg.params
    ex = cfg.experiment
    E = ex["E"] if ex["E"] is not None else p.window[0]
    deltas = ex["deltas"] if ex["deltas"] is not None else default_deltas(p)
    rep = run_wegner(p, E, deltas, cfg.seeds, fast=ex["fast"],
                     settings=cfg.settings, threads=args.threads)
    out = Outcome()
    out.tables["wegner"] = Table(["delta", "k", "n", "p", "lo", "hi", "bound"],
                                 [(c["delta"], c["k"], c["n"], c["p"], c["lo"], c["hi"], c["bound"])
                                  for c in rep.aggregates["curve"]])
    for r in rep.records:
        out.seed_tables[r["seed"]] = Table(["seed", "distance"], [(r["seed"], r["distance"])])
    out.report = rep.to_dict()
    out.report.pop("records")
    fit = rep.fits["small_delta"]
    out.checks["monotone"] = rep.aggregates["monotone"]
    out.checks["zero_at_zero"] = rep.aggregates["zero_at_zero"] is not False
    out.checks["below_bound"] = rep.aggregates["below_bound"]
    out.checks["fit"] = fit.within(1.0, 0.3)
    return out


def cmd_theorem1(cfg: RunConfig, args) -> Outcome:
    ex = cfg.experiment
    theta = ex["theta"] if ex["theta"] is not None else math.nan
    Ls = ex["L_list"]
    for L in Ls:
        build_mixed_basis(cfg.params.replace(L=L), cfg.solver["resolution"], cfg.solver["dim_cap"])
    rep = run_edge_bulk_ensemble(cfg.params, cfg.seeds, Ls, ex["p"], theta, cfg.settings, args.threads)
    out = Outcome()
    cols = list(rep.records[0]) if rep.records else ["L", "seed"]
    by_seed: dict[int, list] = {}
    for r in rep.records:
        by_seed.setdefault(r["seed"], []).append([r[c] for c in cols])
    out.seed_tables = {s: Table(cols, rows) for s, rows in by_seed.items()}
    out.report = rep.to_dict()
    out.report.pop("records")
    Lmax = max(Ls)
    out.checks["ratio"] = rep.probabilities[f"ratio_L{Lmax}"]["p"] >= 0.9
    out.checks["edge_exponent"] = rep.fits["edge_count"].within(1.0, 0.3)
    out.checks["bulk_exponent"] = rep.fits["bulk_count"].within(2.0, 0.5)
    return out


def cmd_hall(cfg: RunConfig, args) -> Outcome:
    p = cfg.params
    ex = cfg.experiment
    mu_l, mu_r, E_F = centered_levels(p, ex["spread"])
    mu_l = ex["mu_l"] if ex["mu_l"] is not None else mu_l
    mu_r = ex["mu_r"] if ex["mu_r"] is not None else mu_r
    E_F = ex["E_F"] if ex["E_F"] is not None else E_F
    a, b = p.window
    if not (a < mu_l < E_F < mu_r < b):
        raise HallOrderingError(
            f"ordering B/2 + epsilon < mu_l < E_F < mu_r < B/2 + V0 violated: "
            f"{a:.6g} < {mu_l:.6g} < {E_F:.6g} < {mu_r:.6g} < {b:.6g}")
    cls, _, br = classify_seed(p, _seed(cfg), cfg.settings)
    h = hall_current(cls, mu_l, mu_r, E_F, p.L)
    out = Outcome()
    out.tables["hall"] = Table(["E_F", "I"], h.scan)
    allowed = 0.1 + h.bulk_budget * 2 * math.pi / (mu_r - mu_l)
    out.report = {"mu_l": mu_l, "mu_r": mu_r, "E_F": E_F, "I": h.I, "predicted": h.predicted,
                  "ratio": h.ratio, "allowed_deviation": allowed, "bulk_budget": h.bulk_budget,
                  "plateau_change": h.plateau_change, "filled": h.filled,
                  "branch_sum": edge_riemann_sum(br, mu_l, mu_r, p.L, p.window)}
    out.checks["ratio"] = h.deviation <= allowed
    out.checks["plateau"] = h.plateau_change <= 0.01
    return out


def cmd_diagnostics(cfg: RunConfig, args) -> Outcome:
    ex = cfg.experiment
    rep = run_h1_h2_diagnostics(cfg.params, cfg.seeds, ex["L_list"], ex["threshold"], cfg.settings,
                                args.threads)
    out = Outcome()
    cols = list(rep.records[0]) if rep.records else ["L", "seed"]
    by_seed: dict[int, list] = {}
    for r in rep.records:
        by_seed.setdefault(r["seed"], []).append([r[c] for c in cols])
    out.seed_tables = {s: Table(cols, rows) for s, rows in by_seed.items()}
    out.report = rep.to_dict()
    out.report.pop("records")
    out.checks["h1"] = all(v["h1_pass"] for v in rep.aggregates.values())
    return out


COMMANDS = {
    "spectrum": cmd_spectrum, "classify": cmd_classify, "edge-branches": cmd_edge_branches,
    "kernel-check": cmd_kernel_check, "decoupling": cmd_decoupling, "wegner": cmd_wegner,
    "theorem1": cmd_theorem1, "hall": cmd_hall, "diagnostics": cmd_diagnostics,
}


# ---------------------------------------------------------------------------
# orchestration


def render(cmd: str, cfg: RunConfig, out: Outcome) -> dict[str, str]:
    """Artifact path -> content; identical inputs give identical bytes."""
    header = f"edgecurrents {__version__} config {cfg.hash}"
    files = {"config.json": cfg.canonical()}
    for name, t in out.tables.items():
        files[f"{name}.csv"] = t.render(header)
    for s, t in sorted(out.seed_tables.items()):
        files[os.path.join("seeds", f"{s:03d}.csv")] = t.render(header)
    report = {"subcommand": cmd, "version": __version__, "config_hash": cfg.hash,
              "checks": out.checks, "passed": out.ok, "result": out.report}
    files["report.json"] = canonical_json(report)
    return files


def write_run(directory: str, files: dict[str, str]) -> None:
    for rel, content in files.items():
        path = os.path.join(directory, rel)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edgecurrents", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--seeds", type=int, help="number of seeds (0..N-1)")
        sp.add_argument("--seed-base", type=int, help="RNG root seed")
        sp.add_argument("--out", help="run directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--fast", action="store_true", help="band-projected bulk spectra")
    return ap


def configure(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seeds is None and args.seed_base is None and args.out is None and not args.fast:
        return cfg
    doc = cfg.to_document()
    doc["out"] = cfg.out
    if args.fast:
        doc["experiment"]["fast"] = True
    if args.seeds is not None:
        doc["seeds"] = args.seeds
    if args.seed_base is not None:
        doc["seed_base"] = args.seed_base
    if args.out is not None:
        doc["out"] = args.out
    return parse_config(doc)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = configure(args)
        out = COMMANDS[args.command](cfg, args)
    except (ConfigError, ModelError, DimensionError, HallOrderingError, ValueError,
            RuntimeError, OSError) as err:
        print(f"edgecurrents {args.command}: error: {err}", file=sys.stderr)
        return 1
    files = render(args.command, cfg, out)
    if cfg.out:
        write_run(cfg.out, files)
    else:
        sys.stdout.write(files["report.json"])
    if not out.ok:
        failed = ", ".join(k for k, v in out.checks.items() if not v)
        print(f"edgecurrents {args.command}: surrogate check failed: {failed}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
