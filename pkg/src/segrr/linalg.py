"""Small dense linear algebra: Jacobi eigensolver, SVD, min-norm least squares.

Everything here works on float64 numpy arrays and is meant for dimensions up to
a few hundred. The eigensolver is a cyclic Jacobi method that rotates a full
round-robin set of disjoint index pairs at once, so each rotation round is a
handful of vectorised row/column updates.

Singular values are taken from the symmetric embedding ``[[0, M], [M^T, 0]]``
whose eigenvalues are ``+-sigma_i``. Unlike the ``M^T M`` route this keeps small
singular values accurate to about ``eps * sigma_max`` instead of
``sqrt(eps) * sigma_max``, which matters because ranks are decided with a
``1e-10`` relative threshold.
"""
from __future__ import annotations

import numpy as np

from .errors import ContractViolation, NumericalError

PINV_RTOL = 1e-10
SYMMETRY_RTOL = 1e-12
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


def as_matrix(M, name="M"):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise ContractViolation(f"{name} must be a non-empty 2-d array, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation(f"{name} has non-finite entries")
    return M


def as_vector(v, name="v"):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ContractViolation(f"{name} must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ContractViolation(f"{name} has non-finite entries")
    return v


def _round_robin(m):
    """Rounds of disjoint pairs covering every pair of ``range(m)`` once (circle method)."""
    players = list(range(m)) + ([-1] if m % 2 else [])
    size = len(players)
    rounds = []
    for _ in range(size - 1):
        ps, qs = [], []
        for i in range(size // 2):
            a, b = players[i], players[size - 1 - i]
            if a >= 0 and b >= 0:
                ps.append(min(a, b))
                qs.append(max(a, b))
        rounds.append((np.array(ps, dtype=np.intp), np.array(qs, dtype=np.intp)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


_ROUNDS_CACHE: dict[int, list] = {}


def _off_norms(A):
    idx = np.arange(A.shape[-1])
    off = A.copy()
    off[:, idx, idx] = 0.0
    return np.sqrt(np.einsum("bij,bij->b", off, off))


def _jacobi_batch(A, tol, max_sweeps):
    """Diagonalise a stack of symmetric matrices in place; returns eigenvector stack."""
    batch, m, _ = A.shape
    V = np.broadcast_to(np.eye(m), A.shape).copy()
    if m == 1:
        return V
    rounds = _ROUNDS_CACHE.get(m)
    if rounds is None:
        rounds = _ROUNDS_CACHE[m] = _round_robin(m)
    threshold = tol * np.sqrt(np.einsum("bij,bij->b", A, A))
    for _ in range(max_sweeps):
        if np.all(_off_norms(A) <= threshold):
            return V
        for p, q in rounds:
            apq = A[:, p, q]
            if not apq.any():
                continue
            app, aqq = A[:, p, p], A[:, q, q]
            zero = apq == 0.0
            with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
                theta = (aqq - app) / (2.0 * apq)
                t = np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0))
            t[theta == 0.0] = 1.0
            t[zero] = 0.0
            c = (1.0 / np.sqrt(t * t + 1.0))[:, :, None]
            s = t[:, :, None] * c

            rp, rq = A[:, p, :], A[:, q, :]
            A[:, p, :], A[:, q, :] = c * rp - s * rq, s * rp + c * rq
            cp, cq = A[:, :, p], A[:, :, q]
            ct, st = c.transpose(0, 2, 1), s.transpose(0, 2, 1)
            A[:, :, p], A[:, :, q] = cp * ct - cq * st, cp * st + cq * ct
            A[:, p, q] = 0.0
            A[:, q, p] = 0.0

            vp, vq = V[:, :, p], V[:, :, q]
            V[:, :, p], V[:, :, q] = vp * ct - vq * st, vp * st + vq * ct
    off = _off_norms(A)
    if np.any(off > threshold):
        worst = float(np.max(off))
        raise NumericalError(
            f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal mass {worst:.3e})",
            residual=worst,
        )
    return V


def _check_symmetric(A):
    scale = np.sqrt(np.einsum("bij,bij->b", A, A))
    asym = np.max(np.abs(A - A.transpose(0, 2, 1)), axis=(1, 2))
    if np.any(asym > SYMMETRY_RTOL * np.maximum(scale, np.finfo(float).tiny)):
        raise ContractViolation(f"matrix is not symmetric (max |M - M^T| = {asym.max():.3e})")


def sym_eigen_batch(Ms, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """:func:`sym_eigen` over a ``(batch, m, m)`` stack sharing one rotation schedule."""
    Ms = np.asarray(Ms, dtype=np.float64)
    if Ms.ndim != 3 or Ms.shape[1] != Ms.shape[2] or Ms.shape[1] < 1:
        raise ContractViolation(f"expected a stack of square matrices, got shape {Ms.shape}")
    if not np.all(np.isfinite(Ms)):
        raise ContractViolation("matrix stack has non-finite entries")
    _check_symmetric(Ms)
    A = 0.5 * (Ms + Ms.transpose(0, 2, 1))
    V = _jacobi_batch(A, tol, max_sweeps)
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    order = np.argsort(w, axis=1, kind="stable")
    w = np.take_along_axis(w, order, axis=1)
    V = np.take_along_axis(V, order[:, None, :], axis=2)
    return w, V


def sym_eigen(M, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, V)`` with eigenvalues ascending and the columns of
    ``V`` the matching orthonormal eigenvectors. Iteration stops once the
    off-diagonal Frobenius mass drops below ``tol * ||M||_F``; otherwise a
    :class:`NumericalError` carrying the residual is raised.
    """
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ContractViolation(f"sym_eigen needs a square matrix, got {M.shape}")
    w, V = sym_eigen_batch(M[None], tol, max_sweeps)
    return w[0], V[0]


def spectral_norms(Ms):
    """Largest singular value of each matrix in a ``(batch, r, c)`` stack.

    Uses the top eigenvalue of ``M^T M``; squaring only hurts the small end of
    the spectrum, the largest value keeps full relative accuracy.
    """
    Ms = np.asarray(Ms, dtype=np.float64)
    grams = np.einsum("bki,bkj->bij", Ms, Ms)
    w, _ = sym_eigen_batch(grams)
    return np.sqrt(np.maximum(w[:, -1], 0.0))


def _svd_embedded(M):
    """Positive part of the spectrum of ``[[0, M], [M^T, 0]]``.

    Returns ``(s, U, V)`` for the ``min(rows, cols)`` largest eigenvalues, with
    ``U``/``V`` the rescaled halves of their eigenvectors. The vector pairs are
    only meaningful where ``s`` is clearly positive.
    """
    rows, cols = M.shape
    J = np.zeros((rows + cols, rows + cols))
    J[:rows, rows:] = M
    J[rows:, :rows] = M.T
    w, X = sym_eigen(J)
    p = min(rows, cols)
    w, X = w[::-1][:p], X[:, ::-1][:, :p]
    s = np.maximum(w, 0.0)
    root2 = np.sqrt(2.0)
    return s, root2 * X[:rows], root2 * X[rows:]


def singular_values(M):
    """Singular values of ``M``, descending."""
    M = as_matrix(M)
    s, _, _ = _svd_embedded(M)
    return s


def truncated_svd(M, rtol=PINV_RTOL):
    """Singular triplets with ``sigma > rtol * sigma_max``.

    Returns ``(s, U, V)`` with ``M ~= U @ diag(s) @ V.T`` on the kept subspace.
    """
    M = as_matrix(M)
    s, U, V = _svd_embedded(M)
    if s.size == 0 or s[0] == 0.0:
        return s[:0], U[:, :0], V[:, :0]
    keep = s > rtol * s[0]
    return s[keep], U[:, keep], V[:, keep]


def least_squares_min_norm(M, v, rtol=PINV_RTOL):
    """Minimum-norm minimiser of ``||M x - v||`` via a truncated pseudoinverse."""
    M = as_matrix(M)
    v = as_vector(v)
    if v.shape[0] != M.shape[0]:
        raise ContractViolation(f"dimension mismatch: M is {M.shape}, v has length {v.shape[0]}")
    s, U, V = truncated_svd(M, rtol)
    return V @ ((U.T @ v) / s)


def householder_qr(A):
    """Thin QR of a square matrix by Householder reflections: ``A = Q R``."""
    A = as_matrix(A, "A")
    m = A.shape[0]
    R = A.copy()
    Q = np.eye(m)
    for k in range(m - 1):
        x = R[k:, k]
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        u = x.copy()
        u[0] += np.copysign(alpha, x[0])
        u /= np.linalg.norm(u)
        R[k:, :] -= 2.0 * np.outer(u, u @ R[k:, :])
        Q[:, k:] -= 2.0 * np.outer(Q[:, k:] @ u, u)
    return Q, R


def random_orthogonal(d, rng):
    """Haar-distributed orthogonal ``d x d`` matrix drawn from ``rng``.

    ``rng`` is a :class:`segrr.rng.Xoshiro256` (anything with ``normals``).
    Column signs are fixed by the signs of ``diag(R)``.
    """
    if d < 1:
        raise ContractViolation(f"dimension must be >= 1, got {d}")
    G = np.array(rng.normals(d * d)).reshape(d, d)
    Q, R = householder_qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    return Q * signs
