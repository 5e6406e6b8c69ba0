"""Hamiltonians and the velocity observable on a MixedBasis.

Every operator is block tridiagonal in the x-major ordering: the diagonal
block at grid point x_j is ``diag(d_j) + Vhat_j`` (Vhat_j is the Hermitian
Toeplitz matrix of y-Fourier coefficients of the random potential, present
only where an impurity covers x_j) and the off-diagonal blocks are
``off * I`` with off = -1/(2 hx^2) from the 3-point Laplacian.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import toeplitz

from .basis import BandBasis, MixedBasis
from .model import BUMP_RADIUS, ConfiningPotential, DisorderRealization, ModelParams

LABELS = ("H0", "Hb", "Hl", "Hr", "Hfull", "Vy", "band")

# 16-point Gauss-Legendre rule mapped to [0, 1]
_GL_T, _GL_W = np.polynomial.legendre.leggauss(16)
_GL_T = 0.5 * (_GL_T + 1.0)
_GL_W = 0.5 * _GL_W


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix with block-tridiagonal or dense storage.

    Block storage: ``diag`` (Nx, Nk) real, ``vblocks`` {j: (Nk, Nk)} complex
    Hermitian, scalar ``off`` coupling neighbouring grid points.
    """

    label: str
    basis: MixedBasis | BandBasis | None
    diag: np.ndarray | None = None
    vblocks: dict = field(default_factory=dict)
    off: float = 0.0
    dense: np.ndarray | None = None

    @property
    def storage(self) -> str:
        return "dense" if self.dense is not None else "block"

    @property
    def dim(self) -> int:
        if self.dense is not None:
            return self.dense.shape[0]
        return self.diag.size

    @property
    def shape_blocks(self) -> tuple[int, int]:
        return self.diag.shape

    def block(self, j: int) -> np.ndarray:
        """Dense diagonal block at grid point j."""
        A = np.diag(self.diag[j].astype(complex))
        if j in self.vblocks:
            A = A + self.vblocks[j]
        return A

    def is_k_diagonal(self) -> bool:
        return self.dense is None and not self.vblocks

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.dense is not None:
            return self.dense @ v
        Nx, Nk = self.diag.shape
        shp = v.shape
        V = v.reshape((Nx, Nk) + shp[1:])
        d = self.diag.reshape((Nx, Nk) + (1,) * (len(shp) - 1))
        out = d * V
        if self.off != 0.0:
            out = out.astype(np.result_type(out, V), copy=False)
            out[1:] += self.off * V[:-1]
            out[:-1] += self.off * V[1:]
        for j, blk in self.vblocks.items():
            out[j] = out[j] + blk @ V[j]
        return out.reshape(shp)

    __matmul__ = matvec

    def to_dense(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense.copy()
        Nx, Nk = self.diag.shape
        H = np.zeros((Nx * Nk, Nx * Nk), dtype=complex)
        for j in range(Nx):
            s = slice(j * Nk, (j + 1) * Nk)
            H[s, s] = self.block(j)
            if j + 1 < Nx and self.off != 0.0:
                t = slice((j + 1) * Nk, (j + 2) * Nk)
                H[s, t] = self.off * np.eye(Nk)
                H[t, s] = self.off * np.eye(Nk)
        return H

    def shifted(self, c: float) -> "HermitianOperator":
        """Operator + c * identity."""
        if self.dense is not None:
            return replace(self, dense=self.dense + c * np.eye(self.dim))
        return replace(self, diag=self.diag + c)

    def norm_estimate(self) -> float:
        """Gershgorin bound on the spectral norm."""
        if self.dense is not None:
            return float(np.max(np.sum(np.abs(self.dense), axis=1)))
        row = np.abs(self.diag) + 2 * abs(self.off)
        for j, blk in self.vblocks.items():
            row[j] += np.sum(np.abs(blk), axis=1)
        return float(row.max())

    def hermiticity_defect(self) -> float:
        """Largest |entry(i,j) - conj(entry(j,i))| as stored."""
        if self.dense is not None:
            return float(np.max(np.abs(self.dense - self.dense.conj().T)))
        d = 0.0
        for blk in self.vblocks.values():
            d = max(d, float(np.max(np.abs(blk - blk.conj().T))))
        return d


def _kinetic_diag(basis: MixedBasis, cell_average: bool = True) -> np.ndarray:
    """Diagonal of 1/2 p_x^2 + 1/2 (k - B x)^2 on the grid, shape (Nx, Nk)."""
    x = basis.x[:, None]
    k = basis.kset[None, :]
    hx = basis.hx
    d = 1.0 / hx ** 2 + 0.5 * (k - basis.B * x) ** 2
    if cell_average:
        # cell average of (k - Bx)^2 over [x_j - h/2, x_j + h/2]
        d = d + basis.B ** 2 * hx ** 2 / 24.0
    return d


def assemble_h0(basis: MixedBasis, cell_average: bool = True) -> HermitianOperator:
    return HermitianOperator("H0", basis, diag=_kinetic_diag(basis, cell_average),
                             off=-0.5 / basis.hx ** 2)


def _with_potential(op: HermitianOperator, label: str, u: np.ndarray) -> HermitianOperator:
    return replace(op, label=label, diag=op.diag + u[:, None])


def assemble_edge(basis: MixedBasis, pot: ConfiningPotential) -> HermitianOperator:
    """H_l or H_r: free Hamiltonian plus one confining wall."""
    label = "Hl" if pot.side == "left" else "Hr"
    return _with_potential(assemble_h0(basis), label, pot(basis.x))


def potential_blocks(basis: MixedBasis, real: DisorderRealization) -> dict:
    """Fourier blocks Vhat_j[a, b] = (1/L) int_0^L e^{-i(k_a - k_b) y} V(x_j, y) dy."""
    if BUMP_RADIUS < 2 * basis.hx:
        raise QuadratureError(f"bump radius {BUMP_RADIUS} below 2*hx = {2 * basis.hx:.4g}")
    if real.L != basis.L:
        raise ValueError("basis and realization disagree on L")
    L = real.L
    x = basis.x
    q = 2 * np.pi * np.arange(basis.Nk) / L
    blocks = {}
    for n in real.columns:
        m, X = real.column(n)
        if not np.any(X):
            continue
        F = np.exp(-1j * np.outer(q, m)) @ X                 # sum_m X_nm e^{-i q m}
        js = np.nonzero(np.abs(x - n) < BUMP_RADIUS)[0]
        for j in js:
            s2 = (x[j] - n) ** 2
            r = np.sqrt(1.0 / 16.0 - s2)
            t = r * _GL_T
            v = real.V0 * (1.0 - 16.0 * (s2 + t * t)) ** 3
            g = 2.0 * r * (np.cos(np.outer(q, t)) @ (_GL_W * v))
            c = g * F / L
            c[0] = c[0].real
            blk = toeplitz(c)                                   # first row conj(c): Hermitian
            blocks[int(j)] = blocks[int(j)] + blk if j in blocks else blk
    return blocks


def assemble_bulk(basis: MixedBasis, real: DisorderRealization) -> HermitianOperator:
    op = assemble_h0(basis)
    return replace(op, label="Hb", vblocks=potential_blocks(basis, real))


def assemble_full(basis: MixedBasis, real: DisorderRealization,
                  conf: tuple[ConfiningPotential, ConfiningPotential]) -> HermitianOperator:
    """H_omega = H_0 + V_omega + U_l + U_r."""
    op = assemble_h0(basis)
    u = sum(p(basis.x) for p in conf)
    return replace(op, label="Hfull", diag=op.diag + u[:, None],
                   vblocks=potential_blocks(basis, real))


def assemble_vy(basis: MixedBasis) -> HermitianOperator:
    """v_y = p_y - B x, diagonal with entries k - B x_j."""
    d = basis.kset[None, :] - basis.B * basis.x[:, None]
    return HermitianOperator("Vy", basis, diag=d, off=0.0)


def assemble_family(params: ModelParams, basis: MixedBasis, real: DisorderRealization) -> dict:
    """H_l, H_b, H_r and H_omega sharing one basis and one set of Fourier blocks."""
    h0 = assemble_h0(basis)
    left, right = params.confinement()
    ul, ur = left(basis.x), right(basis.x)
    vb = potential_blocks(basis, real)
    return {
        "Hl": replace(h0, label="Hl", diag=h0.diag + ul[:, None]),
        "Hr": replace(h0, label="Hr", diag=h0.diag + ur[:, None]),
        "Hb": replace(h0, label="Hb", vblocks=vb),
        "Hfull": replace(h0, label="Hfull", diag=h0.diag + (ul + ur)[:, None], vblocks=vb),
    }


def project_to_band(op: HermitianOperator, band: BandBasis) -> HermitianOperator:
    """Compression <orbital_k| op |orbital_k'> onto the band basis."""
    mb = band.mixed
    if op.basis is not mb and op.basis != mb:
        raise ValueError("operator and band basis live on different grids")
    g = band.orbitals                      # (nb, Nx)
    a = band.k_index
    nb = band.size
    M = np.zeros((nb, nb), dtype=complex)
    # diagonal part of each k block: sum_j g_j^2 d_j(k) + off * 2 sum_j g_j g_{j+1}
    M[np.arange(nb), np.arange(nb)] = (np.sum(g * g * op.diag[:, a].T, axis=1)
                                       + 2 * op.off * np.sum(g[:, 1:] * g[:, :-1], axis=1))
    for j, blk in op.vblocks.items():
        gj = g[:, j]
        M += np.outer(gj, gj) * blk[np.ix_(a, a)]
    M = 0.5 * (M + M.conj().T)
    return HermitianOperator("band", band, dense=M)


# binary export: magic, version, dimension, then the upper triangle row by row
_MAGIC = b"HOPR"


def export_operator(op: HermitianOperator, path) -> None:
    H = op.to_dense()
    n = H.shape[0]
    iu = np.triu_indices(n)
    with open(path, "wb") as fh:
        fh.write(_MAGIC + struct.pack("<Iq", 1, n))
        fh.write(np.ascontiguousarray(H[iu], dtype="<c16").tobytes())


def read_operator(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if head[:4] != _MAGIC:
            raise ValueError("not an operator file")
        _, n = struct.unpack("<Iq", head[4:])
        data = np.frombuffer(fh.read(), dtype="<c16")
    H = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n)
    H[iu] = data
    H = H + np.triu(H, 1).conj().T
    return H
