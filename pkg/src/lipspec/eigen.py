"""Dense complex eigenvalues: balancing, Hessenberg reduction, shifted QR.

The permutation stage of balancing matters here: matrices of weighted
Lipschitz operators have one nonzero per column, and the tail points of the
functional graph form a triangular part that is isolated exactly.  Without
it the nilpotent Jordan blocks would smear zero eigenvalues to O(eps^(1/k)).
"""

from __future__ import annotations

import cmath

import numpy as np

from .errors import NumericalError, StructuralError

EPS = np.finfo(float).eps
MAX_DIM = 512


def _swap(A: np.ndarray, i: int, j: int):
    if i != j:
        A[[i, j], :] = A[[j, i], :]
        A[:, [i, j]] = A[:, [j, i]]


def isolate(A: np.ndarray):
    """Permutation stage of balancing; works in place on a copy.

    Returns ``(A, ilo, ihi)`` with A[ilo:ihi+1, ilo:ihi+1] the block that
    still needs iteration; every other eigenvalue sits on the diagonal.
    """
    A = np.array(A, dtype=complex)
    n = A.shape[0]
    ilo, ihi = 0, n - 1
    # rows with zero off-diagonal part go to the bottom
    while ihi >= ilo:
        S = A[ilo:ihi + 1, ilo:ihi + 1] != 0
        off = S.sum(axis=1) - np.diag(S)
        zero = np.flatnonzero(off == 0)
        if zero.size == 0:
            break
        _swap(A, ilo + int(zero[-1]), ihi)
        ihi -= 1
    # columns with zero off-diagonal part go to the top
    while ihi >= ilo:
        S = A[ilo:ihi + 1, ilo:ihi + 1] != 0
        off = S.sum(axis=0) - np.diag(S)
        zero = np.flatnonzero(off == 0)
        if zero.size == 0:
            break
        _swap(A, ilo + int(zero[0]), ilo)
        ilo += 1
    return A, ilo, ihi


def scale(A: np.ndarray, radix: float = 2.0, max_sweeps: int = 100) -> np.ndarray:
    """Diagonal similarity by powers of two that evens out row and column norms."""
    A = np.array(A, dtype=complex)
    m = A.shape[0]
    sq = radix * radix
    for _ in range(max_sweeps):
        done = True
        for i in range(m):
            c = np.abs(A[:, i]).sum() - abs(A[i, i])
            r = np.abs(A[i, :]).sum() - abs(A[i, i])
            if c == 0 or r == 0:
                continue
            s = c + r
            f = 1.0
            g = r / radix
            while c < g:
                f *= radix
                c *= sq
            g = r * radix
            while c > g:
                f /= radix
                c /= sq
            if (c + r) / f < 0.95 * s:
                done = False
                A[i, :] /= f
                A[:, i] *= f
        if done:
            break
    return A


def hessenberg(A: np.ndarray) -> np.ndarray:
    """Householder reduction to upper Hessenberg form (eigenvalues only)."""
    H = np.array(A, dtype=complex)
    m = H.shape[0]
    for k in range(m - 2):
        x = H[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx == 0 or np.all(x[1:] == 0):
            continue
        x0 = x[0]
        ph = x0 / abs(x0) if x0 != 0 else 1.0
        v = x.copy()
        v[0] += ph * nx
        v /= np.linalg.norm(v)
        H[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ H[k + 1:, k:])
        H[:, k + 1:] -= 2.0 * np.outer(H[:, k + 1:] @ v, v.conj())
        H[k + 2:, k] = 0.0
    return H


def _eig2(a, b, c, d):
    m = 0.5 * (a + d)
    p = 0.5 * (a - d)
    disc = cmath.sqrt(p * p + b * c)
    s = disc if abs(m + disc) >= abs(m - disc) else -disc
    l1 = m + s
    det = a * d - b * c
    l2 = det / l1 if l1 != 0 else m - s
    return l1, l2


def _qr_step(W: np.ndarray, mu: complex):
    """One explicit shifted QR step W - mu I = QR, W <- RQ + mu I, in place."""
    m = W.shape[0]
    idx = np.arange(m)
    W[idx, idx] -= mu
    rots = []
    for k in range(m - 1):
        a, b = W[k, k], W[k + 1, k]
        if b == 0:
            rots.append((1.0, 0.0))
            continue
        if a == 0:
            c, s = 0.0, 1.0
        else:
            r = np.hypot(abs(a), abs(b))
            c = abs(a) / r
            s = (a / abs(a)) * np.conj(b) / r
        rk = W[k, k:].copy()
        rk1 = W[k + 1, k:]
        W[k, k:] = c * rk + s * rk1
        W[k + 1, k:] = -np.conj(s) * rk + c * rk1
        W[k + 1, k] = 0.0
        rots.append((c, s))
    for k, (c, s) in enumerate(rots):
        if s == 0 and c == 1.0:
            continue
        top = min(k + 2, m)
        ck = W[:top, k].copy()
        ck1 = W[:top, k + 1]
        W[:top, k] = c * ck + np.conj(s) * ck1
        W[:top, k + 1] = -s * ck + c * ck1
    W[idx, idx] += mu


def hessenberg_eigenvalues(H: np.ndarray, max_iter_per_eig: int = 30) -> np.ndarray:
    """Eigenvalues of an upper Hessenberg matrix by Wilkinson-shifted QR with deflation."""
    H = np.array(H, dtype=complex)
    m = H.shape[0]
    out = []
    hi = m - 1
    its = 0
    total = 0
    cap = max(1, m) * max_iter_per_eig
    norm = np.abs(H).max() if m else 0.0
    while hi >= 0:
        l = hi
        while l > 0:
            sub = abs(H[l, l - 1])
            ref = abs(H[l, l]) + abs(H[l - 1, l - 1])
            if ref == 0:
                ref = norm
            if sub <= EPS * ref:
                H[l, l - 1] = 0.0
                break
            l -= 1
        if l == hi:
            out.append(H[hi, hi])
            hi -= 1
            its = 0
            continue
        if l == hi - 1:
            out.extend(_eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi]))
            hi -= 2
            its = 0
            continue
        its += 1
        total += 1
        if total > cap:
            raise NumericalError(
                "shifted QR did not converge",
                {"iterations": total, "active_window": (l, hi), "subdiagonal": abs(H[hi, hi - 1])},
            )
        if its % 10 == 0:
            # exceptional shift breaks the stagnation of unitary-like blocks
            mu = H[hi, hi] + 0.75 * abs(H[hi, hi - 1]) * cmath.exp(1j * 0.37 * its)
        else:
            l1, l2 = _eig2(H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi])
            mu = l1 if abs(l1 - H[hi, hi]) <= abs(l2 - H[hi, hi]) else l2
        _qr_step(H[l:hi + 1, l:hi + 1], mu)
    return np.array(out[::-1], dtype=complex)


def dense_eigenvalues(matrix) -> np.ndarray:
    """All eigenvalues (with multiplicity) of a square complex matrix.

    Eigenvalues isolated by the permutation stage are returned exactly as
    diagonal entries; the remaining block is scaled, reduced to Hessenberg
    form and iterated.  Raises ``NumericalError`` on non-convergence.
    """
    A = np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise StructuralError("dense_eigenvalues needs a square matrix")
    n = A.shape[0]
    if n > MAX_DIM:
        raise StructuralError(f"dimension {n} exceeds {MAX_DIM}")
    if n == 0:
        return np.zeros(0, dtype=complex)
    if not np.all(np.isfinite(A)):
        raise NumericalError("matrix has non-finite entries", {"shape": A.shape})
    B, ilo, ihi = isolate(A)
    diag = np.diag(B)
    vals = [diag[:ilo], diag[ihi + 1:]]
    if ihi >= ilo:
        core = scale(B[ilo:ihi + 1, ilo:ihi + 1])
        vals.append(hessenberg_eigenvalues(hessenberg(core)))
    return canonical_order(np.concatenate(vals))


def canonical_order(values) -> np.ndarray:
    """Sort by modulus, then by argument in [0, 2π)."""
    v = np.asarray(values, dtype=complex)
    mod = np.round(np.abs(v), 12)
    arg = np.round(np.mod(np.angle(v), 2 * np.pi), 12)
    arg[(mod == 0) | (arg >= round(2 * np.pi, 12))] = 0.0
    return v[np.lexsort((arg, mod))]


def group_multiset(values, tol: float = 1e-9):
    """Collapse a multiset into ``[(value, multiplicity), ...]`` clusters."""
    out = []
    for v in canonical_order(values):
        for k, (c, m) in enumerate(out):
            if abs(v - c) <= tol:
                out[k] = (c, m + 1)
                break
        else:
            out.append((complex(v), 1))
    return out
