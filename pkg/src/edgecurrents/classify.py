"""Currents of window eigenstates, edge/bulk labelling and state diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import MixedBasis
from .edge import SpectralBranch, check_h1
from .eigensolve import EigenPair, SpectrumWindow
from .model import ModelParams
from .operators import HermitianOperator, assemble_vy
from .specfun import hs_constant

LABELS = ("L-edge", "bulk", "R-edge", "ambiguous")


class BasisMismatchError(ValueError):
    pass


def _vector(p) -> np.ndarray:
    return p.vector if isinstance(p, EigenPair) else np.asarray(p)


def state_current(pair, vy: HermitianOperator) -> float:
    """<psi, v_y psi> for one eigenpair; a (dim, n) cluster block gives Tr(v_y P)/n."""
    v = _vector(pair)
    if v.shape[0] != vy.dim:
        raise BasisMismatchError(f"vector length {v.shape[0]} != operator dimension {vy.dim}")
    if v.ndim == 1:
        return float(np.vdot(v, vy.matvec(v)).real)
    tr = np.einsum("ij,ij->", v.conj(), vy.matvec(v))
    return float(tr.real) / v.shape[1]


def cluster_indices(E: np.ndarray, tol: float) -> list[np.ndarray]:
    """Group sorted energies whose neighbours lie within ``tol``."""
    if E.size == 0:
        return []
    cuts = np.nonzero(np.diff(E) > tol)[0] + 1
    return np.split(np.arange(E.size), cuts)


def window_currents(win: SpectrumWindow, vy: HermitianOperator, cluster_tol: float | None = None):
    """Per-state currents with degenerate clusters sharing their trace current equally."""
    if cluster_tol is None:
        cluster_tol = 10 * win.tol
    J = np.empty(len(win))
    VX = vy.matvec(win.vectors)
    diag = np.einsum("ij,ij->j", win.vectors.conj(), VX)
    for idx in cluster_indices(win.E, cluster_tol):
        J[idx] = diag[idx].real.mean()
    return J, float(np.max(np.abs(diag.imag))) if diag.size else 0.0


@dataclass(frozen=True)
class ClassificationPolicy:
    edge_fraction: float = 0.5      # J_edge = edge_fraction * j_epsilon
    bulk_fraction: float = 0.1      # J_bulk = bulk_fraction * j_epsilon

    def thresholds(self, j_eps: float) -> tuple[float, float]:
        return self.edge_fraction * j_eps, self.bulk_fraction * j_eps


@dataclass
class ClassifiedEntry:
    E: float
    J: float
    residual: float
    label: str
    matched_k: float | None
    shift: float | None


@dataclass
class ClassifiedSpectrum:
    window: tuple
    entries: list = field(default_factory=list)
    j_epsilon: float = math.nan
    J_edge: float = math.nan
    J_bulk: float = math.nan
    radius: float = math.nan

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def counts(self) -> dict:
        c = {lab: 0 for lab in LABELS}
        for e in self.entries:
            c[e.label] += 1
        return c

    def select(self, label: str) -> list[ClassifiedEntry]:
        return [e for e in self.entries if e.label == label]

    # both extremes are NaN over an empty label set
    @property
    def min_edge_current(self) -> float:
        js = [abs(e.J) for e in self.entries if e.label in ("L-edge", "R-edge")]
        return min(js) if js else math.nan

    @property
    def max_bulk_current(self) -> float:
        js = [abs(e.J) for e in self.entries if e.label == "bulk"]
        return max(js) if js else math.nan

    def is_partition(self) -> bool:
        return sum(self.counts().values()) == len(self.entries)

    def sign_consistent(self) -> bool:
        return all((e.label != "L-edge" or e.J < 0) and (e.label != "R-edge" or e.J > 0)
                   for e in self.entries)

    def rows(self):
        for i, e in enumerate(self.entries):
            yield (i, e.E, e.J, e.residual, e.label,
                   "" if e.matched_k is None else e.matched_k,
                   "" if e.shift is None else e.shift)


def _branch_j_epsilon(left: SpectralBranch, right: SpectralBranch) -> float:
    j = min(left.j_epsilon, right.j_epsilon)
    if math.isfinite(j):
        return j
    # no branch level inside the window: fall back to levels above its bottom
    a = left.window[0]
    vals = [abs(b.J_integral[b.energy >= a]).min() for b in (left, right) if np.any(b.energy >= a)]
    return float(min(vals)) if vals else 0.0


def _nearest(branch: SpectralBranch, E: float):
    i = int(np.argmin(np.abs(branch.energy - E)))
    return float(branch.k[i]), float(abs(branch.energy[i] - E))


def classify_window(win: SpectrumWindow, left: SpectralBranch, right: SpectralBranch,
                    vy: HermitianOperator, L: int,
                    policy: ClassificationPolicy = ClassificationPolicy()) -> ClassifiedSpectrum:
    """Label every window eigenvalue by current, dead zone by energy proximity."""
    j_eps = _branch_j_epsilon(left, right)
    J_edge, J_bulk = policy.thresholds(j_eps)
    d_eps = check_h1(left, right, L, window=(win.a, win.b))["d_epsilon"]
    radius = min(d_eps, j_eps) / (2 * L)
    J, _ = window_currents(win, vy)
    out = ClassifiedSpectrum((win.a, win.b), j_epsilon=j_eps, J_edge=J_edge, J_bulk=J_bulk,
                             radius=radius)
    for E, j, r in zip(win.E, J, win.residuals):
        if j >= J_edge:
            label = "R-edge"
        elif j <= -J_edge:
            label = "L-edge"
        elif abs(j) <= J_bulk:
            label = "bulk"
        else:
            kl, sl = _nearest(left, E)
            kr, sr = _nearest(right, E)
            if min(sl, sr) <= radius:
                label = "L-edge" if sl <= sr else "R-edge"
            else:
                label = "ambiguous"
        mk = sh = None
        if label in ("L-edge", "R-edge"):
            mk, sh = _nearest(left if label == "L-edge" else right, E)
        out.entries.append(ClassifiedEntry(float(E), float(j), float(r), label, mk, sh))
    return out


# ---------------------------------------------------------------------------
# wave-function reconstruction


def y_lines(L: int, count: int | None = None, basis: MixedBasis | None = None) -> np.ndarray:
    if count is None:
        count = max(4 * L, 2 * basis.Nk if basis is not None else 0)
    return -0.5 * L + L * np.arange(count) / count


def reconstruct(vector: np.ndarray, basis: MixedBasis, y: np.ndarray, weight=None) -> np.ndarray:
    """psi(x_j, y_l) in continuum normalization, shape (Nx, len(y)).

    ``weight`` multiplies the coefficient at (x_j, k_a) first, e.g. k - B x
    for v_y psi.
    """
    C = basis.to_grid(vector)
    if weight is not None:
        C = C * weight
    phase = np.exp(1j * np.outer(basis.kset, y))
    return (C @ phase) / math.sqrt(basis.L * basis.hx)


def _velocity_weight(basis: MixedBasis) -> np.ndarray:
    return basis.kset[None, :] - basis.B * basis.x[:, None]


@dataclass
class PairwiseCertificate:
    value: complex
    E1: float
    E2: float
    slack: float
    bound: float

    @property
    def passed(self) -> bool:
        return abs(self.value) <= self.bound


def seam_slack(v1: np.ndarray, v2: np.ndarray, basis: MixedBasis, y: np.ndarray | None = None) -> float:
    """Smallest over lines ybar of (L/2) int dx (|v_y psi1||psi2| + |psi1||v_y psi2|)(x, ybar).

    Cutting the cylinder at ybar makes y a bounded multiplication operator;
    the jump of y across the cut contributes this boundary term to the
    commutator identity (E1 - E2)(psi1, y psi2) = -i (psi1, v_y psi2) + seam.
    """
    if y is None:
        y = y_lines(basis.L, basis=basis)
    w = _velocity_weight(basis)
    p1, p2 = np.abs(reconstruct(v1, basis, y)), np.abs(reconstruct(v2, basis, y))
    q1, q2 = np.abs(reconstruct(v1, basis, y, w)), np.abs(reconstruct(v2, basis, y, w))
    line = basis.hx * np.sum(q1 * p2 + p1 * q2, axis=0)
    return float(0.5 * basis.L * line.min())


def pairwise_current(p1: EigenPair, p2: EigenPair, vy: HermitianOperator, L: int,
                     slack: float | None = None) -> PairwiseCertificate:
    """(psi1, v_y psi2) with the bound 2 |E1 - E2| L + slack."""
    v1, v2 = _vector(p1), _vector(p2)
    if v1.shape[0] != vy.dim or v2.shape[0] != vy.dim:
        raise BasisMismatchError("eigenvector and velocity operator differ in dimension")
    val = complex(np.vdot(v1, vy.matvec(v2)))
    if slack is None:
        slack = seam_slack(v1, v2, vy.basis)
    bound = 2 * abs(p1.E - p2.E) * L + slack
    return PairwiseCertificate(val, p1.E, p2.E, slack, bound)


def projector_distance(A: np.ndarray, B: np.ndarray, tol: float = 1e-8) -> float:
    """||P_A - P_B|| for orthonormal column blocks A and B."""
    A = np.atleast_2d(np.asarray(A).T).T if np.ndim(A) == 1 else np.asarray(A)
    B = np.atleast_2d(np.asarray(B).T).T if np.ndim(B) == 1 else np.asarray(B)
    for M in (A, B):
        if np.max(np.abs(M.conj().T @ M - np.eye(M.shape[1]))) > tol:
            raise ValueError("input columns are not orthonormal")
    if A.shape[1] != B.shape[1]:
        return 1.0
    if A.shape[1] == 0:
        return 0.0
    s = np.linalg.svd(A.conj().T @ B, compute_uv=False)
    smin = min(float(s.min()), 1.0)
    return float(math.sqrt(max(0.0, 1.0 - smin * smin)))


@dataclass
class DecayProfile:
    x: np.ndarray
    envelope: np.ndarray
    slope: float              # coefficient of d^2 in log A, d = |x| - (L/2 - log L)
    slope_residual: float
    fit_points: int
    mu_proxy: float           # min over y-lines of max over x of |psi|
    ybar: float


def decay_profile(pair, basis: MixedBasis, y: np.ndarray | None = None,
                  floor: float = 1e-10) -> DecayProfile:
    """Envelope max_y |psi(x, y)| and a Gaussian fit of its exterior tail.

    The fit uses grid points with |x| > L/2 whose envelope exceeds ``floor``
    times the maximum.
    """
    v = _vector(pair)
    if y is None:
        y = y_lines(basis.L, basis=basis)
    P = np.abs(reconstruct(v, basis, y))
    env = P.max(axis=1)
    line_max = P.max(axis=0)
    il = int(np.argmin(line_max))
    x = basis.x
    L = basis.L
    d = np.abs(x) - (0.5 * L - math.log(L))
    sel = (np.abs(x) > 0.5 * L) & (env > floor * env.max())
    slope, resid = math.nan, math.nan
    if sel.sum() >= 3:
        A = np.column_stack([d[sel] ** 2, np.ones(sel.sum())])
        coef, res, *_ = np.linalg.lstsq(A, np.log(env[sel]), rcond=None)
        slope = float(coef[0])
        resid = float(math.sqrt(res[0] / sel.sum())) if res.size else 0.0
    return DecayProfile(x, env, slope, resid, int(sel.sum()), float(line_max[il]), float(y[il]))


@dataclass
class TraceCertificate:
    interval: tuple
    count: int
    bound: float

    @property
    def passed(self) -> bool:
        return self.count <= self.bound


def trace_bound(params: ModelParams) -> float:
    c = hs_constant(params.B)
    return 2 * params.epsilon ** -2 * c * c * params.V0 ** 2 * params.L ** 4


def trace_bound_check(E: np.ndarray, interval, params: ModelParams) -> TraceCertificate:
    """Eigenvalue count of the bulk operator in ``interval`` against 2 eps^-2 c^2 V0^2 L^4."""
    a, b = interval
    E = np.asarray(E)
    count = int(np.sum((E >= a) & (E <= b))) if b >= a else 0
    return TraceCertificate((a, b), count, trace_bound(params))


def velocity_for(basis: MixedBasis) -> HermitianOperator:
    return assemble_vy(basis)
