"""Fibered edge Hamiltonians H_alpha(k) = 1/2 p_x^2 + 1/2 (k - B x)^2 + U_alpha(x).

Each fiber is a symmetric tridiagonal matrix on the x-grid; the lowest
eigenvalue comes from Sturm-count bisection and the vector from inverse
iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _tridiag
from .basis import MixedBasis
from .model import ModelParams

WALL_EXCLUSION = 5.0   # magnetic lengths kept clear of the passive Dirichlet wall


class WindowCoverageError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeGrid:
    x: np.ndarray
    hx: float
    B: float

    @classmethod
    def from_params(cls, params: ModelParams, resolution: int = 128) -> "EdgeGrid":
        sb = math.sqrt(params.B)
        cells = math.ceil((params.x_max - params.x_min) * sb - 1e-12)
        Nx = resolution * cells + 1
        x = np.linspace(params.x_min, params.x_max, Nx)
        return cls(x, (params.x_max - params.x_min) / (Nx - 1), params.B)

    @classmethod
    def from_basis(cls, basis: MixedBasis) -> "EdgeGrid":
        return cls(basis.x, basis.hx, basis.B)


@dataclass
class SpectralBranch:
    side: str
    k: np.ndarray
    energy: np.ndarray
    J_integral: np.ndarray
    J_derivative: np.ndarray
    J_lattice: np.ndarray
    vectors: np.ndarray          # (len(k), Nx), unit l2 norm
    x: np.ndarray
    window: tuple
    nu: int = 0

    def in_window(self) -> np.ndarray:
        a, b = self.window
        return (self.energy >= a) & (self.energy <= b)

    @property
    def j_epsilon(self) -> float:
        sel = self.in_window()
        return float(np.min(np.abs(self.J_integral[sel]))) if sel.any() else math.inf

    def fh_defect(self) -> float:
        return float(np.max(np.abs(self.J_integral - self.J_derivative))) if self.k.size else 0.0

    def window_levels(self):
        sel = self.in_window()
        return self.k[sel], self.energy[sel], self.J_integral[sel]

    def is_monotone_in_window(self) -> bool:
        _, e, _ = self.window_levels()
        if e.size < 2:
            return True
        d = np.diff(e)
        return bool(np.all(d > 0)) if self.side == "right" else bool(np.all(d < 0))

    def rows(self):
        for i in range(self.k.size):
            yield (self.side, float(self.k[i]), float(self.energy[i]), float(self.J_integral[i]),
                   float(self.J_derivative[i]))


def fiber_diagonal(grid: EdgeGrid, k: float, u: np.ndarray) -> np.ndarray:
    # cell-averaged magnetic term, consistent with operators._kinetic_diag
    return 1.0 / grid.hx ** 2 + 0.5 * (k - grid.B * grid.x) ** 2 + grid.B ** 2 * grid.hx ** 2 / 24 + u


def fiber_ground_state(grid: EdgeGrid, k: float, u: np.ndarray, vector: bool = True):
    d = fiber_diagonal(grid, k, u)
    off = -0.5 / grid.hx ** 2
    e = _tridiag.lowest_eigenvalue(d, off, 1e-16)
    if not np.isfinite(e):
        raise ArithmeticError(f"bisection failed for k={k}")
    if not vector:
        return e, None
    # inverse iteration slightly below the eigenvalue
    shift = e - 1e-10 * max(1.0, abs(e))
    v = np.exp(-0.5 * grid.B * (grid.x - k / grid.B) ** 2) + 1e-3
    for _ in range(3):
        v = _tridiag.tridiag_solve(d, off, shift, v)
        v /= np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return e, v


def default_k_list(params: ModelParams, side: str, grid: EdgeGrid) -> np.ndarray:
    """Lattice momenta whose centers keep WALL_EXCLUSION magnetic lengths
    away from the Dirichlet wall on the passive side."""
    sb = math.sqrt(params.B)
    lo, hi = grid.x[0], grid.x[-1]
    if side == "right":
        lo = lo + WALL_EXCLUSION / sb
    else:
        hi = hi - WALL_EXCLUSION / sb
    f = params.B * params.L / (2 * np.pi)
    n = np.arange(math.ceil(lo * f), math.floor(hi * f) + 1)
    return 2 * np.pi * n / params.L


def edge_branch(params: ModelParams, side: str, k_list=None, grid: EdgeGrid | MixedBasis | None = None,
                delta_k: float = 1e-3) -> SpectralBranch:
    """Lowest band of H_alpha(k) on each k in ``k_list``.

    Currents: J_integral = sum_j phi_j^2 (k - B x_j) and J_derivative, the
    central difference of the band energy with step ``delta_k``; J_lattice is
    the central difference across neighbouring lattice momenta.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    if grid is None:
        grid = EdgeGrid.from_params(params)
    elif isinstance(grid, MixedBasis):
        grid = EdgeGrid.from_basis(grid)
    left, right = params.confinement()
    pot = right if side == "right" else left
    u = pot(grid.x)
    if k_list is None:
        k_list = default_k_list(params, side, grid)
    k_list = np.asarray(k_list, dtype=float)
    step = 2 * np.pi / params.L
    n_idx = k_list / step
    if np.any(np.abs(n_idx - np.rint(n_idx)) > 1e-9):
        raise ValueError("k_list must consist of multiples of 2 pi / L")
    E = np.empty(k_list.size)
    Jint = np.empty(k_list.size)
    Jder = np.empty(k_list.size)
    Jlat = np.empty(k_list.size)
    vecs = np.empty((k_list.size, grid.x.size))
    for i, k in enumerate(k_list):
        e, v = fiber_ground_state(grid, k, u)
        E[i] = e
        vecs[i] = v
        Jint[i] = np.sum(v * v * (k - params.B * grid.x))
        ep, _ = fiber_ground_state(grid, k + delta_k, u, vector=False)
        em, _ = fiber_ground_state(grid, k - delta_k, u, vector=False)
        Jder[i] = (ep - em) / (2 * delta_k)
        ep, _ = fiber_ground_state(grid, k + step, u, vector=False)
        em, _ = fiber_ground_state(grid, k - step, u, vector=False)
        Jlat[i] = (ep - em) / (2 * step)
    return SpectralBranch(side, k_list, E, Jint, Jder, Jlat, vecs, grid.x, params.window)


def branch_spacing(branch: SpectralBranch, window=None) -> dict:
    """Consecutive spacings of branch energies near the window.

    A pair of neighbouring momenta counts when at least one of its two
    energies lies in the window, so a window holding a single level still
    yields the spacings to its neighbours. ``inside`` repeats the summary
    for pairs with both ends in the window.
    """
    a, b = branch.window if window is None else window
    if branch.k.size and (branch.energy.min() > a or branch.energy.max() < b):
        raise WindowCoverageError("branch does not cover the window")
    order = np.argsort(branch.k)
    e = branch.energy[order]
    inw = (e >= a) & (e <= b)
    d = np.abs(np.diff(e))
    touch = inw[1:] | inw[:-1]
    both = inw[1:] & inw[:-1]
    j = branch.j_epsilon
    L = 2 * np.pi / float(np.min(np.diff(branch.k[order]))) if branch.k.size > 1 else math.nan

    def summary(sel):
        if not sel.any():
            return {"pairs": 0, "min": None, "max": None, "median": None}
        return {"pairs": int(sel.sum()), "min": float(d[sel].min()), "max": float(d[sel].max()),
                "median": float(np.median(d[sel]))}

    out = summary(touch)
    out["count"] = int(inw.sum())
    out["inside"] = summary(both)
    out["j_epsilon"] = j
    out["bound"] = j / L if np.isfinite(j) else None
    out["pass"] = bool(out["min"] is None or (out["bound"] is not None and out["min"] > out["bound"]))
    return out


def check_h1(left: SpectralBranch, right: SpectralBranch, L: int, threshold: float = 1e-3,
             window=None) -> dict:
    """d_epsilon = L * min |E^l - E^r| over window levels; pass iff d_epsilon > threshold."""
    a, b = left.window if window is None else window
    el = left.energy[(left.energy >= a) & (left.energy <= b)]
    er = right.energy[(right.energy >= a) & (right.energy <= b)]
    if el.size == 0 or er.size == 0:
        return {"d_epsilon": math.inf, "pass": True}
    d = L * float(np.min(np.abs(el[:, None] - er[None, :])))
    return {"d_epsilon": d, "pass": d > threshold}


def branch_pair(params: ModelParams, grid=None) -> tuple[SpectralBranch, SpectralBranch]:
    return edge_branch(params, "left", grid=grid), edge_branch(params, "right", grid=grid)
