"""Physical parameters, confining walls, impurity bumps and disorder sampling.

Units: hbar = m = 1.  The cylinder is x in R, y periodic with period L,
in Landau gauge so that the kinetic term reads 1/2 p_x^2 + 1/2 (p_y - B x)^2.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

BUMP_RADIUS = 0.25
H_SUP = 15.0 / 16.0  # sup norm of the coupling density


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    """Physical and geometric constants of one cylinder.

    ``W`` and ``layer`` are derived when left as None: ``W`` is the smallest
    margin with ``c1 * W**m1 >= B/2 + V0 + 10 B`` and ``layer`` is ``log L``.
    """

    B: float
    L: int
    V0: float
    epsilon: float
    c1: float = 1.0
    c2: float = 1.3
    m1: float = 2.0
    m2: float = 2.0
    c_left: float = 1.0
    m_left: float = 2.0
    c_right: float = 1.3
    m_right: float = 2.0
    W: float | None = None
    layer: float | None = None
    seed_base: int = 0

    def __post_init__(self):
        B, L, V0, eps = self.B, self.L, self.V0, self.epsilon
        if not (B > 0):
            raise ModelError("B > 0 required")
        if int(L) != L or L < 4:
            raise ModelError(f"L must be an integer >= 4, got {L}")
        object.__setattr__(self, "L", int(L))
        if not (V0 > 0):
            raise ModelError("V0 > 0 required")
        if not (B > 4 * V0):
            raise ModelError(f"violates B > 4*V0 (B={B}, V0={V0})")
        if not (0 < eps < V0):
            raise ModelError(f"violates 0 < epsilon < V0 (epsilon={eps}, V0={V0})")
        if not (0 < self.c1 < self.c2):
            raise ModelError("violates 0 < c1 < c2")
        if not (2 <= self.m1 <= self.m2):
            raise ModelError("violates 2 <= m1 <= m2")
        for name, c, m in (("left", self.c_left, self.m_left),
                           ("right", self.c_right, self.m_right)):
            if not (self.c1 <= c <= self.c2):
                raise ModelError(f"{name} coefficient {c} outside [c1, c2]")
            if not (self.m1 <= m <= self.m2):
                raise ModelError(f"{name} exponent {m} outside [m1, m2]")
        wall = B / 2 + V0 + 10 * B
        if self.W is None:
            object.__setattr__(self, "W", (wall / self.c1) ** (1.0 / self.m1))
        elif self.c1 * self.W ** self.m1 < wall * (1 - 1e-12):
            raise ModelError("violates c1 * W**m1 >= B/2 + V0 + 10 B")
        if self.layer is None:
            object.__setattr__(self, "layer", math.log(L))
        elif self.layer <= 0:
            raise ModelError("layer must be positive")

    @property
    def window(self) -> tuple[float, float]:
        """Analysis window [B/2 + epsilon, B/2 + V0]."""
        return (0.5 * self.B + self.epsilon, 0.5 * self.B + self.V0)

    @property
    def x_min(self) -> float:
        return -0.5 * self.L - self.W

    @property
    def x_max(self) -> float:
        return 0.5 * self.L + self.W

    @property
    def magnetic_length(self) -> float:
        return 1.0 / math.sqrt(self.B)

    def lattice_bounds(self) -> tuple[int, int]:
        """Inclusive column range of impurity sites, rounded inward."""
        lo = math.ceil(-0.5 * self.L + self.layer)
        hi = math.floor(0.5 * self.L - self.layer)
        return lo, hi

    def confinement(self) -> tuple["ConfiningPotential", "ConfiningPotential"]:
        return (ConfiningPotential("left", self.c_left, self.m_left, self.L),
                ConfiningPotential("right", self.c_right, self.m_right, self.L))

    def replace(self, **changes) -> "ModelParams":
        d = self.as_dict()
        # derived quantities are recomputed unless explicitly given
        if "W" not in changes and self._W_auto():
            d["W"] = None
        if "layer" not in changes and self._layer_auto():
            d["layer"] = None
        d.update(changes)
        return ModelParams(**d)

    def _W_auto(self) -> bool:
        wall = self.B / 2 + self.V0 + 10 * self.B
        return self.W == (wall / self.c1) ** (1.0 / self.m1)

    def _layer_auto(self) -> bool:
        return self.layer == math.log(self.L)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class ConfiningPotential:
    """Power-law wall, zero on the passive side of x = -L/2 (left) or L/2 (right)."""

    side: Literal["left", "right"]
    coeff: float
    exponent: float
    L: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.side == "right":
            d = x - 0.5 * self.L
        else:
            d = -x - 0.5 * self.L
        return np.where(d > 0, self.coeff * np.abs(d) ** self.exponent, 0.0)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.side == "right":
            d = x - 0.5 * self.L
            sgn = 1.0
        else:
            d = -x - 0.5 * self.L
            sgn = -1.0
        dp = np.where(d > 0, d, 0.0)
        return np.where(d > 0, sgn * self.coeff * self.exponent * dp ** (self.exponent - 1), 0.0)


def eval_confinement(pot: ConfiningPotential, x):
    return pot(x)


def bump(r2, V0: float):
    """Impurity profile V0 (1 - 16 r^2)^3 on r <= 1/4, as a function of r^2."""
    r2 = np.asarray(r2, dtype=float)
    s = 1.0 - 16.0 * r2
    return np.where(s > 0, V0 * s ** 3, 0.0)


def coupling_density(t):
    t = np.asarray(t, dtype=float)
    return np.where(np.abs(t) <= 1, H_SUP * (1 - t * t) ** 2, 0.0)


def make_rng(seed_base: int, seed: int) -> np.random.Generator:
    """Independent stream per (seed_base, seed) pair."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed_base), int(seed)])))


def sample_couplings(rng: np.random.Generator, size) -> np.ndarray:
    # h(t) = 15/16 (1-t^2)^2 is the law of 2u-1 with u ~ Beta(3, 3)
    return 2.0 * rng.beta(3.0, 3.0, size=size) - 1.0


@dataclass(frozen=True)
class DisorderRealization:
    """Impurity lattice and couplings; sites ordered by (n, m)."""

    seed: int
    L: int
    V0: float
    n: np.ndarray
    m: np.ndarray
    X: np.ndarray
    _columns: dict = field(default_factory=dict, repr=False, compare=False)

    def __len__(self):
        return len(self.X)

    @property
    def columns(self) -> list[int]:
        return sorted(set(self.n.tolist()))

    def column(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """(m, X) arrays for lattice column n."""
        if n not in self._columns:
            sel = self.n == n
            self._columns[n] = (self.m[sel], self.X[sel])
        return self._columns[n]

    def with_couplings(self, X) -> "DisorderRealization":
        X = np.broadcast_to(np.asarray(X, dtype=float), self.X.shape).copy()
        return DisorderRealization(self.seed, self.L, self.V0, self.n, self.m, X)

    def shifted(self, dm: int) -> "DisorderRealization":
        """Translate every impurity by dm lattice units in y (periodic)."""
        L = self.L
        m = self.m + dm
        m = m - L * np.floor((m + 0.5 * L) / L).astype(int)
        return DisorderRealization(self.seed, L, self.V0, self.n, m, self.X.copy())

    def table(self) -> tuple[np.ndarray, int, int]:
        """Dense coupling array indexed by (n - n_lo, m - m_lo)."""
        if "table" not in self._columns:
            n_lo = int(self.n.min())
            m_lo = math.ceil(-0.5 * self.L)
            t = np.zeros((int(self.n.max()) - n_lo + 1, self.L))
            t[self.n - n_lo, self.m - m_lo] = self.X
            self._columns["table"] = (t, n_lo, m_lo)
        return self._columns["table"]

    def to_json(self) -> str:
        sites = [[int(a), int(b), float(c)] for a, b, c in zip(self.n, self.m, self.X)]
        return json.dumps({"seed": int(self.seed), "sites": sites}, separators=(",", ":"))


def lattice_sites(params: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = params.lattice_bounds()
    L = params.L
    # half-open in m so that the periodic seam carries no duplicate site
    m_lo = math.ceil(-0.5 * L)
    ms = np.arange(m_lo, m_lo + L)
    ns = np.arange(lo, hi + 1)
    if ns.size == 0:
        raise ModelError(f"empty impurity lattice for L={L}, layer={params.layer:.4g}")
    n, m = np.meshgrid(ns, ms, indexing="ij")
    return n.ravel(), m.ravel()


def sample_disorder(params: ModelParams, seed: int) -> DisorderRealization:
    n, m = lattice_sites(params)
    rng = make_rng(params.seed_base, seed)
    X = sample_couplings(rng, n.size)
    return DisorderRealization(int(seed), params.L, params.V0, n, m, X)


def clean_realization(params: ModelParams) -> DisorderRealization:
    n, m = lattice_sites(params)
    return DisorderRealization(-1, params.L, params.V0, n, m, np.zeros(n.size))


def eval_random_potential(real: DisorderRealization, x, y):
    """Lattice sum of bumps; at most one bump covers any point."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    L = real.L
    y = y - L * np.floor((y + 0.5 * L) / L)
    n0 = np.rint(x).astype(int)
    m0 = np.rint(y).astype(int)
    m_site = m0 - L * np.floor((m0 + 0.5 * L) / L).astype(int)
    r2 = (x - n0) ** 2 + (y - m0) ** 2
    table, n_lo, m_lo = real.table()
    i = n0 - n_lo
    j = m_site - m_lo
    ok = (i >= 0) & (i < table.shape[0])
    coup = np.where(ok, table[np.clip(i, 0, table.shape[0] - 1), j], 0.0)
    return coup * bump(r2, real.V0)
