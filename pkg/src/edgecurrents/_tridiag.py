"""Compiled kernels: Householder tridiagonalization, implicit QL, Sturm counts."""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def tred2(V, d, e):
    """Householder reduction of the symmetric matrix V (overwritten by the
    accumulated orthogonal transform) to tridiagonal form (d, e)."""
    n = V.shape[0]
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += abs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = math.sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= f * e[k] + g * d[k]
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


@njit(cache=True)
def tql2(V, d, e, max_iter):
    """Implicit-shift QL on (d, e), rotating the columns of V.

    Returns -1 on success, else the index of the eigenvalue that failed to
    converge within ``max_iter`` sweeps.
    """
    n = V.shape[0]
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    f = 0.0
    tst1 = 0.0
    eps = 2.0 ** -52
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n:
            if abs(e[m]) <= eps * tst1:
                break
            m += 1
        if m == n:
            m = n - 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > max_iter:
                    return l
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = math.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f = f + h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = math.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        h = V[k, i + 1]
                        V[k, i + 1] = s * V[k, i] + c * h
                        V[k, i] = c * V[k, i] - s * h
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return -1


@njit(cache=True)
def sturm_count(diag, off, lam):
    """Number of eigenvalues below lam of the symmetric tridiagonal matrix
    with diagonal ``diag`` and constant off-diagonal ``off``."""
    n = diag.shape[0]
    cnt = 0
    q = diag[0] - lam
    if q < 0:
        cnt += 1
    tiny = 1e-300
    o2 = off * off
    for i in range(1, n):
        if q == 0.0:
            q = tiny
        q = diag[i] - lam - o2 / q
        if q < 0:
            cnt += 1
    return cnt


@njit(cache=True)
def lowest_eigenvalue(diag, off, rtol):
    """Bisection on Sturm counts for the smallest eigenvalue."""
    n = diag.shape[0]
    lo = diag[0] - 2 * abs(off)
    hi = diag[0] + 2 * abs(off)
    for i in range(1, n):
        lo = min(lo, diag[i] - 2 * abs(off))
        hi = max(hi, diag[i] + 2 * abs(off))
    # the smallest eigenvalue is at most the smallest diagonal entry
    dmin = diag[0]
    for i in range(1, n):
        dmin = min(dmin, diag[i])
    hi = dmin
    scale = max(abs(lo), abs(hi))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sturm_count(diag, off, mid) >= 1:
            hi = mid
        else:
            lo = mid
        if hi - lo <= rtol * scale:
            break
    return 0.5 * (lo + hi)


@njit(cache=True)
def tridiag_solve(diag, off, shift, rhs):
    """Solve (T - shift) x = rhs for constant off-diagonal T (Thomas)."""
    n = diag.shape[0]
    c = np.empty(n)
    x = np.empty(n)
    b = diag[0] - shift
    c[0] = off / b
    x[0] = rhs[0] / b
    for i in range(1, n):
        b = diag[i] - shift - off * c[i - 1]
        if b == 0.0:
            b = 1e-300
        c[i] = off / b
        x[i] = (rhs[i] - off * x[i - 1]) / b
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x
