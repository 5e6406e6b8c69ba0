"""Discretization bases.

MixedBasis: Fourier modes e^{iky}/sqrt(L) in y times a uniform finite-difference
grid in x with Dirichlet conditions at the two virtual points just outside the
grid.  Coefficient vectors are stored x-major, index ``j * Nk + a`` for grid
point j and momentum kset[a], and are normalized in plain l2.

BandBasis: one sampled lowest-Landau orbital per momentum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams

DEFAULT_DIM_CAP = 60000


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class MixedBasis:
    B: float
    L: int
    x_min: float
    x_max: float
    Nx: int
    n_lo: int
    n_hi: int
    resolution: int

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.Nx - 1)

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.hx * np.arange(self.Nx)

    @property
    def n_index(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    @property
    def kset(self) -> np.ndarray:
        return 2 * np.pi * self.n_index / self.L

    @property
    def Nk(self) -> int:
        return self.n_hi - self.n_lo + 1

    @property
    def dim(self) -> int:
        return self.Nx * self.Nk

    def centers(self) -> np.ndarray:
        return self.kset / self.B

    def restrict(self, c_lo: float, c_hi: float) -> "MixedBasis":
        """Same grid, momenta restricted to guiding centers in [c_lo, c_hi]."""
        f = self.B * self.L / (2 * np.pi)
        lo = max(self.n_lo, math.ceil(c_lo * f - 1e-9))
        hi = min(self.n_hi, math.floor(c_hi * f + 1e-9))
        if hi < lo:
            raise DimensionError("restriction leaves no momenta")
        return MixedBasis(self.B, self.L, self.x_min, self.x_max, self.Nx, lo, hi,
                          self.resolution)

    def bulk(self, margin: float = 4.0) -> "MixedBasis":
        """Momenta whose centers stay ``margin`` magnetic lengths off both walls."""
        d = margin / math.sqrt(self.B)
        return self.restrict(self.x_min + d, self.x_max - d)

    def to_grid(self, coeffs: np.ndarray) -> np.ndarray:
        """Reshape a coefficient vector (or column block) to (Nx, Nk, ...)."""
        return coeffs.reshape((self.Nx, self.Nk) + coeffs.shape[1:])

    def k_position(self, k_other: "MixedBasis") -> np.ndarray:
        """Positions of another basis' momenta inside this kset."""
        return k_other.n_index - self.n_lo


def build_mixed_basis(params: ModelParams, resolution: int = 8,
                      dim_cap: int = DEFAULT_DIM_CAP) -> MixedBasis:
    """Grid with ``resolution`` points per magnetic length.

    Nx - 1 = resolution * ceil((x_max - x_min) sqrt(B)), so doubling the
    resolution doubles Nx - 1 exactly.
    """
    if resolution < 8:
        raise ValueError("resolution must be >= 8 points per magnetic length")
    B = params.B
    sb = math.sqrt(B)
    x_min, x_max = params.x_min, params.x_max
    cells = math.ceil((x_max - x_min) * sb - 1e-12)
    Nx = resolution * cells + 1
    f = B * params.L / (2 * np.pi)
    n_lo = math.ceil((x_min - 3 / sb) * f)
    n_hi = math.floor((x_max + 3 / sb) * f)
    basis = MixedBasis(B, params.L, x_min, x_max, Nx, n_lo, n_hi, int(resolution))
    if basis.dim > dim_cap:
        raise DimensionError(f"dimension {Nx}x{basis.Nk}={basis.dim} exceeds cap {dim_cap}")
    return basis


@dataclass(frozen=True)
class BandBasis:
    mixed: MixedBasis
    k_index: np.ndarray      # positions in mixed.kset
    orbitals: np.ndarray     # shape (n_orbitals, Nx)

    @property
    def kset(self) -> np.ndarray:
        return self.mixed.kset[self.k_index]

    @property
    def size(self) -> int:
        return len(self.k_index)

    def embed(self) -> np.ndarray:
        """Dense (dim, size) isometry from band coordinates to the mixed basis."""
        mb = self.mixed
        E = np.zeros((mb.Nx, mb.Nk, self.size))
        E[:, self.k_index, np.arange(self.size)] = self.orbitals.T
        return E.reshape(mb.dim, self.size)


def landau_orbital(x: np.ndarray, k: float, B: float) -> np.ndarray:
    g = np.exp(-0.5 * B * (x - k / B) ** 2)
    return g / np.sqrt(np.sum(g * g))


def build_band_basis(params: ModelParams, basis: MixedBasis) -> BandBasis:
    """Lowest-Landau orbitals with centers in [-L/2 - 3/sqrt(B), L/2 + 3/sqrt(B)]."""
    d = 3 / math.sqrt(params.B)
    c = basis.centers()
    sel = np.nonzero((c >= -0.5 * params.L - d - 1e-12) & (c <= 0.5 * params.L + d + 1e-12))[0]
    x = basis.x
    orb = np.array([landau_orbital(x, basis.kset[a], params.B) for a in sel])
    return BandBasis(basis, sel, orb)
