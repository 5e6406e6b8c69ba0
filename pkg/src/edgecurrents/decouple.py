"""Resolvent decoupling by a smooth partition of the cylinder.

With J_l, J_b, J_r smooth and Jt_l, Jt_b, Jt_r sharp indicator functions of x,

    (z - H) sum_i J_i R_i(z) Jt_i = 1 - K(z),   K = sum_i 1/2 [p_x^2, J_i] R_i(z) Jt_i,

whenever (H - H_i) J_i = 0, i.e. each J_i avoids every term of H missing
from H_i.  On the grid [p_x^2, J] is the tridiagonal matrix with entries
-(J_{j+1} - J_j)/hx^2 between neighbours, so the identity holds to rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .basis import MixedBasis
from .eigensolve import BlockFactorization
from .model import BUMP_RADIUS, ModelParams
from .operators import HermitianOperator

SIDES = ("left", "bulk", "right")
OP_KEYS = {"left": "Hl", "bulk": "Hb", "right": "Hr"}


class PartitionError(ValueError):
    pass


class ResolventDomainError(ValueError):
    pass


def smoothstep(t):
    """Quintic 0 -> 1 on [0, 1] with vanishing first and second derivatives at the ends."""
    t = np.clip(t, 0.0, 1.0)
    return t ** 3 * (10 - 15 * t + 6 * t * t)


def smoothstep_d1(t):
    t = np.clip(t, 0.0, 1.0)
    return 30 * t * t * (1 - t) ** 2


def smoothstep_d2(t):
    t = np.clip(t, 0.0, 1.0)
    return 60 * t * (1 - t) * (1 - 2 * t)


@dataclass
class PartitionSet:
    D: float
    L: int
    x: np.ndarray
    smooth: dict            # side -> J_i(x)
    sharp: dict             # side -> Jt_i(x), 0/1 valued
    d1: dict                # side -> J_i'(x) (analytic)
    d2: dict                # side -> J_i''(x)
    cuts: tuple = ()

    @property
    def max_d1(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.d1.values())

    @property
    def max_d2(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.d2.values())

    def identity_defects(self) -> tuple[float, float]:
        """max |sum J_i Jt_i - 1| and max |sum Jt_i - 1| over the grid."""
        s1 = sum(self.smooth[s] * self.sharp[s] for s in SIDES)
        s2 = sum(self.sharp[s] for s in SIDES)
        return float(np.max(np.abs(s1 - 1))), float(np.max(np.abs(s2 - 1)))

    def transition(self, side: str) -> tuple[float, float]:
        """Interval where J_side is strictly between 0 and 1 (closure)."""
        L, D = self.L, self.D
        if side == "left":
            a = -0.5 * L + 0.75 * D
            return a, a + 1
        if side == "right":
            b = 0.5 * L - 0.75 * D
            return b - 1, b
        a = 0.5 * L - 0.25 * D
        return a, a + 1

    def support(self, side: str) -> tuple[float, float]:
        """Closed x-interval outside of which J_side vanishes."""
        if side == "left":
            return -math.inf, self.transition("left")[1]
        if side == "right":
            return self.transition("right")[0], math.inf
        b = self.transition("bulk")[1]
        return -b, b


def build_partitions(params: ModelParams, x: np.ndarray | MixedBasis, D: float | None = None) -> PartitionSet:
    """Smooth and sharp partition functions sampled on the grid ``x``.

    J_l = 1 for x <= -L/2 + 3D/4 and 0 beyond one unit more; J_r mirrors it;
    J_b = 1 for |x| <= L/2 - D/4 and 0 for |x| >= L/2 - D/4 + 1.  The sharp
    cut points are -+(L/2 - D/2); cells are half-open [c1, c2) so that the
    sharp functions add to one at every grid point.
    """
    if isinstance(x, MixedBasis):
        x = x.x
    x = np.asarray(x, dtype=float)
    L = params.L
    D = math.log(L) if D is None else float(D)
    if D <= 0:
        raise PartitionError("layer width must be positive")
    if 1.5 * D + 2 > L:
        raise PartitionError(f"supports of J_l and J_r overlap for L={L}, D={D:.4g}")
    c1, c2 = -0.5 * L + 0.5 * D, 0.5 * L - 0.5 * D
    tl = x - (-0.5 * L + 0.75 * D)
    tr = x - (0.5 * L - 0.75 * D - 1)
    tb = np.abs(x) - (0.5 * L - 0.25 * D)
    sgn = np.sign(x)
    smooth = {"left": 1 - smoothstep(tl), "bulk": 1 - smoothstep(tb), "right": smoothstep(tr)}
    d1 = {"left": -smoothstep_d1(tl), "bulk": -sgn * smoothstep_d1(tb), "right": smoothstep_d1(tr)}
    d2 = {"left": -smoothstep_d2(tl), "bulk": -smoothstep_d2(tb), "right": smoothstep_d2(tr)}
    sharp = {"left": (x < c1).astype(float), "bulk": ((x >= c1) & (x < c2)).astype(float),
             "right": (x >= c2).astype(float)}
    return PartitionSet(D, L, x, smooth, sharp, d1, d2, (c1, c2))


def commutator_stencil(J: np.ndarray, hx: float) -> tuple[np.ndarray, np.ndarray]:
    """Off-diagonals of 1/2 [p_x^2, J] on the 3-point grid.

    Returns (upper, lower) with upper[j] the (j, j+1) entry and lower[j]
    the (j+1, j) entry; the diagonal vanishes.
    """
    dJ = np.diff(J)
    c = -0.5 / hx ** 2
    return c * dJ, -c * dJ


def apply_commutator(J: np.ndarray, hx: float, V: np.ndarray) -> np.ndarray:
    """1/2 [p_x^2, J] V for V of shape (Nx, Nk, ...)."""
    up, lo = commutator_stencil(J, hx)
    sh = (-1,) + (1,) * (V.ndim - 1)
    out = np.zeros_like(V)
    out[:-1] += up.reshape(sh) * V[1:]
    out[1:] += lo.reshape(sh) * V[:-1]
    return out


def support_violations(params: ModelParams, parts: PartitionSet, basis: MixedBasis,
                       ops: dict) -> dict:
    """Where (H - H_i) J_i fails to vanish on the grid, per side.

    H - H_l = V + U_r, H - H_b = U_l + U_r, H - H_r = V + U_l.  A side is
    clean when every grid point with J_i != 0 carries none of those terms.
    """
    left, right = params.confinement()
    x = basis.x
    ul, ur = left(x), right(x)
    vrows = np.zeros(x.size, dtype=bool)
    vrows[list(ops["Hb"].vblocks)] = True
    missing = {"left": (ur != 0) | vrows, "bulk": (ul != 0) | (ur != 0), "right": (ul != 0) | vrows}
    out = {}
    for s in SIDES:
        bad = np.nonzero((parts.smooth[s] != 0) & missing[s])[0]
        out[s] = bad
    return out


def layer_requirement(D: float) -> float:
    """Smallest impurity-free layer keeping J_l and J_r clear of all bumps.

    Columns sit at integers >= -L/2 + layer with bumps of radius 1/4, and J_l
    reaches -L/2 + 3D/4 + 1, so layer >= 3D/4 + 5/4 suffices.
    """
    return 0.75 * D + 1.0 + BUMP_RADIUS


@dataclass
class KOperator:
    """K(z) = sum_i 1/2 [p_x^2, J_i] R_i(z) Jt_i as a matrix-free operator."""

    z: complex
    parts: PartitionSet
    basis: MixedBasis
    factors: dict = field(default_factory=dict)      # side -> factorization at z
    factors_conj: dict = field(default_factory=dict)  # side -> factorization at conj(z)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _grid(self, v):
        return self.basis.to_grid(v)

    def resolvent(self, side: str, v: np.ndarray, conj: bool = False) -> np.ndarray:
        """R_i(z) v = (z - H_i)^{-1} v."""
        fac = (self.factors_conj if conj else self.factors)[side]
        return -fac.solve(v)

    def term(self, side: str, v: np.ndarray) -> np.ndarray:
        Jt = self.parts.sharp[side]
        J = self.parts.smooth[side]
        if not np.any(np.diff(J)):
            return np.zeros(v.shape, dtype=complex)
        w = self._grid(v) * _col(Jt, v.ndim)
        w = self._grid(self.resolvent(side, w.reshape(v.shape)))
        return apply_commutator(J, self.basis.hx, w).reshape(v.shape)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        return sum(self.term(s, v) for s in SIDES)

    def rmatvec(self, v: np.ndarray) -> np.ndarray:
        """K(z)^* v = sum_i Jt_i R_i(conj z) (-1/2 [p_x^2, J_i]) v."""
        out = np.zeros(v.shape, dtype=complex)
        for s in SIDES:
            J = self.parts.smooth[s]
            if not np.any(np.diff(J)):
                continue
            w = -apply_commutator(J, self.basis.hx, self._grid(v.astype(complex)))
            w = self.resolvent(s, w.reshape(v.shape), conj=True)
            out += (self._grid(w) * _col(self.parts.sharp[s], v.ndim)).reshape(v.shape)
        return out

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator((self.dim, self.dim), matvec=self.matvec, rmatvec=self.rmatvec,
                              dtype=complex)

    def decoupled(self, v: np.ndarray) -> np.ndarray:
        """sum_i J_i R_i(z) Jt_i v."""
        out = np.zeros(v.shape, dtype=complex)
        for s in SIDES:
            w = (self._grid(v) * _col(self.parts.sharp[s], v.ndim)).reshape(v.shape)
            w = self.resolvent(s, w)
            out += (self._grid(w) * _col(self.parts.smooth[s], v.ndim)).reshape(v.shape)
        return out

    def norm(self, rtol: float = 1e-6, max_iter: int = 500, seed: int = 0) -> tuple[float, int]:
        """Power iteration on K^* K; returns (||K|| estimate, iterations)."""
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([20261, seed])))
        v = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        v /= np.linalg.norm(v)
        est = 0.0
        for it in range(1, max_iter + 1):
            w = self.rmatvec(self.matvec(v))
            nw = np.linalg.norm(w)
            new = math.sqrt(nw)
            if nw == 0.0:
                return 0.0, it
            v = w / nw
            if abs(new - est) <= rtol * new:
                return new, it
            est = new
        return est, max_iter


def _col(f: np.ndarray, ndim: int) -> np.ndarray:
    return f.reshape((-1,) + (1,) * ndim)


def assemble_K(z: complex, ops: dict, parts: PartitionSet, floor: float = 0.0) -> KOperator:
    """K(z) from H_l, H_b, H_r (``ops`` keyed Hl, Hb, Hr) on one basis.

    ``floor`` is the least admissible |Im z|; since all spectra are real,
    |Im z| bounds the distance to each of them from below.
    """
    z = complex(z)
    if abs(z.imag) <= floor or z.imag == 0:
        raise ResolventDomainError(f"z={z} closer than the floor {floor} to the real axis")
    basis = ops["Hb"].basis
    K = KOperator(z, parts, basis)
    for s in SIDES:
        op = ops[OP_KEYS[s]]
        K.factors[s] = BlockFactorization(op, z)
        K.factors_conj[s] = BlockFactorization(op, z.conjugate())
    return K


def k_norm(K: KOperator, rtol: float = 1e-6) -> float:
    return K.norm(rtol)[0]


@dataclass
class DecouplingReport:
    z: complex
    residual: float                # ||(z - H) A V - (1 - K) V||_F / ||V||_F
    reconstruction_error: float    # ||R(z) V - A (1 - K)^{-1} V||_F / ||R(z) V||_F
    k_norm: float
    support_ok: bool
    gmres_info: int = 0


def probe_block(dim: int, count: int = 32, seed: int = 0) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([20262, seed])))
    V = rng.standard_normal((dim, count)) + 1j * rng.standard_normal((dim, count))
    return V / np.linalg.norm(V, axis=0)


def verify_decoupling(z: complex, H: HermitianOperator, parts: PartitionSet, ops: dict,
                      probes: int = 32, seed: int = 0, K: KOperator | None = None,
                      params: ModelParams | None = None, with_norm: bool = True) -> DecouplingReport:
    """Residual of the decoupling identity and of the resolvent reconstruction."""
    if K is None:
        K = assemble_K(z, ops, parts)
    z = K.z
    V = probe_block(H.dim, probes, seed)
    A = K.decoupled(V)
    lhs = z * A - H.matvec(A)
    rhs = V - K.matvec(V)
    residual = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(V))

    direct = -BlockFactorization(H, z).solve(V)
    lin = LinearOperator((H.dim, H.dim), matvec=lambda v: v - K.matvec(v), dtype=complex)
    X = np.empty_like(V)
    info = 0
    for c in range(V.shape[1]):
        X[:, c], inf = gmres(lin, V[:, c], rtol=1e-13, atol=0.0, restart=60, maxiter=40)
        info = max(info, inf)
    recon = K.decoupled(X)
    err = float(np.linalg.norm(direct - recon) / np.linalg.norm(direct))
    ok = True
    if params is not None:
        ok = not any(v.size for v in support_violations(params, parts, K.basis, ops).values())
    kn = K.norm()[0] if with_norm else math.nan
    return DecouplingReport(z, residual, err, kn, ok, info)


def certified_z_grid(levels, window, per_gap: int = 8) -> list[complex]:
    """Points spread across each gap between consecutive edge levels.

    ``levels`` are the edge energies (both sides); the nearest levels just
    outside the window close the first and last gaps.  Each gap of width g
    gets ``per_gap`` real parts at its interior (i + 1/2)/per_gap fractions
    and imaginary part g/2.
    """
    a, b = window
    e = np.unique(np.asarray(levels, dtype=float))
    below = e[e < a]
    above = e[e > b]
    inside = e[(e >= a) & (e <= b)]
    pts = list(inside)
    if below.size:
        pts.insert(0, below.max())
    if above.size:
        pts.append(above.min())
    pts = np.array(sorted(pts))
    zs = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        g = hi - lo
        if g <= 0:
            continue
        for i in range(per_gap):
            re = lo + g * (i + 0.5) / per_gap
            if a <= re <= b:
                zs.append(complex(re, 0.5 * g))
    return zs
