"""Hermitian eigensolvers.

eig_dense: Householder tridiagonalization plus implicit QL on the real
doubling embedding [[Re, -Im], [Im, Re]] of a complex Hermitian matrix.

eig_window: shift-invert Lanczos with full reorthogonalization on top of a
block-tridiagonal factorization; completeness is certified by Sylvester
inertia counts at the window ends.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _tridiag
from .operators import HermitianOperator

DENSE_CAP = 6000


class ConvergenceError(RuntimeError):
    pass


class SingularShiftError(RuntimeError):
    pass


class MissedEigenvalueError(RuntimeError):
    pass


@dataclass(frozen=True)
class EigenPair:
    E: float
    vector: np.ndarray
    residual: float


@dataclass
class SpectrumWindow:
    a: float
    b: float
    E: np.ndarray
    vectors: np.ndarray          # (dim, n) orthonormal columns
    residuals: np.ndarray
    tol: float
    certificate: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.E)

    @property
    def pairs(self) -> list[EigenPair]:
        return [EigenPair(float(e), self.vectors[:, i], float(r))
                for i, (e, r) in enumerate(zip(self.E, self.residuals))]

    def orthogonality_defect(self) -> float:
        if len(self.E) < 2:
            return 0.0
        G = self.vectors.conj().T @ self.vectors
        return float(np.max(np.abs(G - np.eye(len(self.E)))))


def _as_dense(op) -> np.ndarray:
    if isinstance(op, HermitianOperator):
        return op.to_dense()
    return np.asarray(op)


def _lex_key(v: np.ndarray, floor: float) -> int:
    idx = np.nonzero(np.abs(v) > floor)[0]
    return int(idx[0]) if idx.size else 0


def eig_dense(op, dim_cap: int = DENSE_CAP, max_iter: int = 60,
              cluster_rtol: float = 1e-10) -> list[EigenPair]:
    """All eigenpairs of a Hermitian matrix, ascending.

    Each eigenvalue of the complex matrix appears twice in the real
    embedding, with eigenvectors (Re u, Im u) and (-Im u, Re u).  Within a
    pair the member whose leading nonzero coefficient is larger is kept;
    clusters of more than one complex eigenvalue are resolved by
    Rayleigh-Ritz on the span of all their members.
    """
    H = _as_dense(op)
    n = H.shape[0]
    if n > dim_cap:
        raise ValueError(f"dimension {n} exceeds dense cap {dim_cap}")
    if n == 0:
        return []
    cplx = np.iscomplexobj(H) and np.any(H.imag != 0)
    if cplx:
        M = np.block([[H.real, -H.imag], [H.imag, H.real]])
    else:
        M = np.array(H.real, dtype=float)
    N = M.shape[0]
    V = np.ascontiguousarray(M, dtype=float)
    d = np.zeros(N)
    e = np.zeros(N)
    _tridiag.tred2(V, d, e)
    fail = _tridiag.tql2(V, d, e, max_iter)
    if fail >= 0:
        raise ConvergenceError(f"QL iteration did not converge for eigenvalue index {fail}")
    order = np.argsort(d, kind="stable")
    d = d[order]
    V = V[:, order]
    norm = max(float(np.max(np.abs(d))), 1e-300)

    if not cplx:
        vals, vecs = d, V.astype(complex) if np.iscomplexobj(H) else V
    else:
        vals_l, vecs_l = [], []
        tol = cluster_rtol * norm
        i = 0
        while i < N:
            j = i + 1
            while j < N and d[j] - d[j - 1] <= tol:
                j += 1
            size = j - i
            if size % 2:
                raise ConvergenceError(f"odd cluster of size {size} at index {i} in doubled spectrum")
            U = V[:n, i:j] + 1j * V[n:, i:j]
            if size == 2:
                v1, v2 = V[:, i], V[:, i + 1]
                floor = 1e-8
                k = min(_lex_key(v1, floor), _lex_key(v2, floor))
                u = U[:, 0] if v1[k] >= v2[k] else U[:, 1]
                u = u / np.linalg.norm(u)
                vals_l.append(0.5 * (d[i] + d[i + 1]))
                vecs_l.append(u[:, None])
            else:
                m = size // 2
                Q, _, _ = np.linalg.svd(U, full_matrices=False)
                Q = Q[:, :m]
                w, Z = np.linalg.eigh(Q.conj().T @ H @ Q)
                vals_l.extend(w.tolist())
                vecs_l.append(Q @ Z)
            i = j
        vals = np.array(vals_l)
        vecs = np.hstack(vecs_l)
    R = H @ vecs - vecs * vals[None, :]
    res = np.linalg.norm(R, axis=0)
    bad = np.nonzero(res > 1e-9 * norm)[0]
    if bad.size:
        raise ConvergenceError(f"residual {res[bad[0]]:.3e} above tolerance at index {bad[0]}")
    return [EigenPair(float(vals[i]), vecs[:, i], float(res[i])) for i in range(len(vals))]


# ---------------------------------------------------------------------------
# block-tridiagonal factorization


class BlockFactorization:
    """Block Thomas elimination of (op - z) with Schur complements
    S_j = A_j - z - off^2 S_{j-1}^{-1}.

    For real z the Schur complements are Hermitian and the number of their
    negative eigenvalues equals the number of eigenvalues of op below z.
    """

    def __init__(self, op: HermitianOperator, z: complex, singular_rtol: float = 1e-13):
        if op.storage != "block":
            raise ValueError("block factorization needs block storage")
        self.op = op
        self.z = z
        Nx, Nk = op.diag.shape
        self.Nx, self.Nk = Nx, Nk
        off = op.off
        real = np.isrealobj(z) or np.imag(z) == 0
        if real:
            z = float(np.real(z))
        self.real = real
        scale = op.norm_estimate()
        floor = singular_rtol * scale
        inv = []
        neg = 0
        prev = None          # S_{j-1}^{-1}: 1-D when diagonal, else 2-D
        for j in range(Nx):
            dj = op.diag[j] - z
            has_v = j in op.vblocks
            if prev is None:
                S = np.diag(dj) + op.vblocks[j] if has_v else dj
            elif prev.ndim == 1 and not has_v:
                S = dj - off * off * prev
            else:
                S = -off * off * (np.diag(prev) if prev.ndim == 1 else prev)
                S = S + np.diag(dj)
                if has_v:
                    S = S + op.vblocks[j]
            if S.ndim == 1:
                if np.min(np.abs(S)) < floor:
                    raise SingularShiftError(f"near-singular pivot at block {j}")
                if real:
                    neg += int(np.count_nonzero(S.real < 0))
                Sinv = 1.0 / S
            elif real:
                S = 0.5 * (S + S.conj().T)
                w, Q = np.linalg.eigh(S)
                if np.min(np.abs(w)) < floor:
                    raise SingularShiftError(f"near-singular block {j}")
                neg += int(np.count_nonzero(w < 0))
                Sinv = (Q / w) @ Q.conj().T
            else:
                Sinv = np.linalg.inv(S)
            inv.append(Sinv)
            prev = Sinv
        self.inv = inv
        self.negative_count = neg if real else None

    @staticmethod
    def _apply(Sinv, v):
        if Sinv.ndim == 1:
            return Sinv.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        return Sinv @ v

    def solve(self, b: np.ndarray) -> np.ndarray:
        """x = (op - z)^{-1} b for a vector or a column block."""
        Nx, Nk = self.Nx, self.Nk
        shp = b.shape
        B = b.reshape((Nx, Nk) + shp[1:]).astype(complex)
        off = self.op.off
        g = np.empty_like(B)
        g[0] = B[0]
        for j in range(1, Nx):
            g[j] = B[j] - off * self._apply(self.inv[j - 1], g[j - 1])
        x = np.empty_like(B)
        x[-1] = self._apply(self.inv[-1], g[-1])
        for j in range(Nx - 2, -1, -1):
            x[j] = self._apply(self.inv[j], g[j] - off * x[j + 1])
        return x.reshape(shp)


def factorize(op: HermitianOperator, z: complex, tol: float = 1e-9,
              retries: int = 5) -> BlockFactorization:
    """Factorization of op - z, nudging a real shift away from eigenvalues."""
    last = None
    for t in range(retries + 1):
        try:
            return BlockFactorization(op, z + t * tol)
        except SingularShiftError as err:
            last = err
    raise SingularShiftError(f"shift {z} stays singular after {retries} perturbations: {last}")


def inertia_count(op: HermitianOperator, x: float, tol: float = 1e-9) -> int:
    """Number of eigenvalues of op strictly below x."""
    return factorize(op, float(x), tol).negative_count


def _start_vector(dim: int, index: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([20260, index])))
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _orth_against(v, Q):
    if Q is None or Q.shape[1] == 0:
        return v
    for _ in range(2):
        v = v - Q @ (Q.conj().T @ v)
    return v


def _lanczos_capture(op, fac, a, b, expected, locked, tol, max_steps, start_index):
    """One shift-invert Lanczos run; returns (E, X) of converged Ritz pairs in [a, b]."""
    dim = op.dim
    sigma = float(np.real(fac.z))
    q = _orth_against(_start_vector(dim, start_index), locked)
    q /= np.linalg.norm(q)
    Qs = [q]
    alpha, beta = [], []
    found_E = np.zeros(0)
    found_X = np.zeros((dim, 0), dtype=complex)
    steps = min(max_steps, dim - (0 if locked is None else locked.shape[1]))
    check_every = max(5, expected // 2)
    for it in range(steps):
        w = fac.solve(Qs[-1])
        w = _orth_against(w, locked)
        al = np.vdot(Qs[-1], w).real
        w = w - al * Qs[-1]
        if it > 0:
            w = w - beta[-1] * Qs[-2]
        Qm = np.column_stack(Qs)
        for _ in range(2):
            w = w - Qm @ (Qm.conj().T @ w)
        alpha.append(al)
        bt = np.linalg.norm(w)
        last = it + 1 == steps or bt < 1e-14
        if it + 1 >= expected and ((it + 1) % check_every == 0 or last):
            T = np.diag(alpha) + np.diag(beta, 1) + np.diag(beta, -1)
            th, S = np.linalg.eigh(T)
            lam = sigma + 1.0 / th
            inside = (lam >= a) & (lam <= b)
            # cheap gate: Ritz residual of the inverted operator
            est = np.abs(bt * S[-1, :])
            cand = np.nonzero(inside & (est < 1e-6 * np.abs(th)))[0]
            if cand.size:
                X = Qm @ S[:, cand]
                E = np.array([np.vdot(X[:, i], op.matvec(X[:, i])).real for i in range(cand.size)])
                R = op.matvec(X) - X * E[None, :]
                res = np.linalg.norm(R, axis=0)
                ok = res <= tol
                found_E, found_X = E[ok], X[:, ok]
            if found_E.size >= expected or last:
                break
        if bt < 1e-14:
            break
        beta.append(bt)
        Qs.append(w / bt)
    return found_E, found_X


def eig_window(op: HermitianOperator, window: tuple[float, float], tol: float = 1e-8,
               max_block: int = 40, max_restarts: int = 6) -> SpectrumWindow:
    """All eigenpairs with energy in [a, b], certified by inertia counts.

    ``tol`` bounds every returned residual ||H psi - E psi||, hence also the
    eigenvalue error.
    """
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise ValueError("empty window")
    if op.storage == "dense":
        pairs = [p for p in eig_dense(op) if a <= p.E <= b]
        E = np.array([p.E for p in pairs])
        X = np.column_stack([p.vector for p in pairs]) if pairs else np.zeros((op.dim, 0), complex)
        res = np.array([p.residual for p in pairs])
        return SpectrumWindow(a, b, E, X, res, tol, {"count_a": None, "count_b": None,
                                                     "expected": len(pairs), "found": len(pairs)})
    na = inertia_count(op, a, tol)
    nb = inertia_count(op, b, tol)
    expected = nb - na
    cert = {"count_a": na, "count_b": nb, "expected": expected}
    if expected <= 0:
        cert["found"] = 0
        return SpectrumWindow(a, b, np.zeros(0), np.zeros((op.dim, 0), complex), np.zeros(0), tol, cert)

    E_all, X_all = [], []
    stack = [(a, b, na, nb)]
    counter = 0
    while stack:
        lo, hi, nlo, nhi = stack.pop()
        cnt = nhi - nlo
        if cnt == 0:
            continue
        mid = 0.5 * (lo + hi)
        if cnt > max_block:
            nm = inertia_count(op, mid, tol)
            stack.append((mid, hi, nm, nhi))
            stack.append((lo, mid, nlo, nm))
            continue
        fac = factorize(op, mid, tol)
        locked = np.zeros((op.dim, 0), dtype=complex)
        got_E = np.zeros(0)
        for r in range(max_restarts):
            counter += 1
            need = cnt - got_E.size
            E, X = _lanczos_capture(op, fac, lo, hi, need, locked, tol,
                                    max_steps=max(60, 6 * need + 40), start_index=counter)
            if E.size:
                X = _orth_against(X, locked)
                X, _ = np.linalg.qr(X)
                locked = np.hstack([locked, X])
                # Rayleigh-Ritz on everything captured in this interval
                Hl = locked.conj().T @ op.matvec(locked)
                w, Z = np.linalg.eigh(0.5 * (Hl + Hl.conj().T))
                keep = (w >= lo) & (w <= hi)
                locked = (locked @ Z)[:, keep]
                got_E = w[keep]
            if got_E.size >= cnt:
                break
        if got_E.size != cnt:
            if hi - lo > 1e3 * tol:
                nm = inertia_count(op, mid, tol)
                stack.append((mid, hi, nm, nhi))
                stack.append((lo, mid, nlo, nm))
                continue
            raise MissedEigenvalueError(f"found {got_E.size} of {cnt} eigenvalues in [{lo}, {hi}]")
        E_all.append(got_E)
        X_all.append(locked)
    E = np.concatenate(E_all)
    X = np.hstack(X_all)
    # global Rayleigh-Ritz keeps vectors orthonormal across sub-intervals
    X, _ = np.linalg.qr(X)
    Hl = X.conj().T @ op.matvec(X)
    E, Z = np.linalg.eigh(0.5 * (Hl + Hl.conj().T))
    X = X @ Z
    X = X * _phase_fix(X)[None, :]
    res = np.linalg.norm(op.matvec(X) - X * E[None, :], axis=0)
    cert["found"] = int(E.size)
    if E.size != expected:
        raise MissedEigenvalueError(f"certificate expects {expected}, found {E.size}")
    if np.any(res > tol):
        raise ConvergenceError(f"window residual {res.max():.3e} above tol {tol:.1e}")
    return SpectrumWindow(a, b, E, X, res, tol, cert)


def _phase_fix(X: np.ndarray) -> np.ndarray:
    """Unit phases making the largest-modulus entry of each column real positive."""
    idx = np.argmax(np.abs(X), axis=0)
    piv = X[idx, np.arange(X.shape[1])]
    return np.conj(piv) / np.abs(piv)


def eigenvalues_below(op: HermitianOperator, x: float) -> int:
    return inertia_count(op, x)
