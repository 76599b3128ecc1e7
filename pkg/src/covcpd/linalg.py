"""Symmetric-matrix primitives.

Symmetric matrices are plain ``(p, p)`` float arrays. Every routine in the
package builds them from outer products and real-weighted sums of outer
products, which are exactly symmetric in floating point, so no packed
storage is needed. Unit vectors are ``(p,)`` arrays; the all-zeros vector is
the sentinel for "no direction".
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericalError

DEFAULT_TOL = 1e-10
DENSE_MAX_DIM = 64
# first coordinate whose magnitude exceeds this decides the sign of a unit vector
SIGN_ATOL = 1e-10


def outer(x) -> np.ndarray:
    """Return the symmetric matrix ``x x^T``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected a vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector has non-finite entries")
    return np.outer(x, x)


def is_symmetric(S: np.ndarray) -> bool:
    S = np.asarray(S)
    return S.ndim == 2 and S.shape[0] == S.shape[1] and np.array_equal(S, S.T)


def symmetrize(S) -> np.ndarray:
    """Return ``(S + S^T) / 2``; exact no-op on symmetric input."""
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + S.T)


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so that its first non-negligible coordinate is positive."""
    nz = np.flatnonzero(np.abs(v) > SIGN_ATOL)
    if nz.size and v[nz[0]] < 0:
        return -v
    return v


def max_iterations(p: int) -> int:
    return int(10 * p * math.log(max(p, 1)) + 1000)


def _power_top(A: np.ndarray, tol: float, max_iter: int) -> tuple[float, np.ndarray]:
    # largest eigenvalue of a PSD matrix; Rayleigh quotient stopping rule
    p = A.shape[0]
    v = np.random.default_rng(0).standard_normal(p)
    v /= np.linalg.norm(v)
    lam = float(v @ A @ v)
    for _ in range(max_iter):
        w = A @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0, v
        v = w / nrm
        new = float(v @ A @ v)
        if abs(new - lam) <= tol * max(abs(new), 1e-300):
            return new, v
        lam = new
    raise NumericalError(f"power iteration did not converge in {max_iter} steps (p={p})")


def _power_op_norm(S: np.ndarray, tol: float, cap: int) -> tuple[float, np.ndarray]:
    # Gershgorin shift keeps both S + cI and -S + cI positive semidefinite
    p = S.shape[0]
    c = float(np.max(np.sum(np.abs(S), axis=1)))
    if c == 0.0:
        return 0.0, np.eye(p)[0]
    eye = np.eye(p)
    top, v_top = _power_top(S + c * eye, tol, cap)
    bot, v_bot = _power_top(-S + c * eye, tol, cap)
    lam_max, lam_min = top - c, -(bot - c)
    if abs(lam_min) > abs(lam_max):
        return abs(lam_min), v_bot
    return abs(lam_max), v_top


def op_norm_eig(S, tol: float = DEFAULT_TOL, method: str = "auto",
                max_iter: int | None = None) -> tuple[float, np.ndarray]:
    """Operator norm of a symmetric matrix and a maximizing unit vector.

    Parameters
    ----------
    S : array_like, shape (p, p)
        Symmetric matrix with finite entries.
    tol : float
        Relative tolerance for the iterative solver.
    method : {"auto", "dense", "power"}
        ``"auto"`` uses a dense symmetric eigendecomposition for
        ``p <= 64`` and shifted power iteration beyond.
    max_iter : int, optional
        Iteration cap for power iteration; defaults to ``10 p ln p + 1000``.
        Hitting it raises :class:`NumericalError`.

    Returns
    -------
    lam : float
        ``max_i |lambda_i(S)|``.
    v : ndarray, shape (p,)
        Unit vector with ``|v^T S v| = lam``, first non-negligible coordinate
        positive. The zero matrix returns ``e_1``. When ``|lambda_max|`` and
        ``|lambda_min|`` tie, the eigenvector of the positive one is used.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(S)):
        raise ValueError("matrix has non-finite entries")
    p = S.shape[0]
    if not np.any(S):
        return 0.0, np.eye(p)[0]
    if method == "auto":
        method = "dense" if p <= DENSE_MAX_DIM else "power"
    if method == "dense":
        w, V = np.linalg.eigh(S)
        # eigh sorts ascending: candidates are the two ends
        if abs(w[0]) > abs(w[-1]):
            lam, v = abs(w[0]), V[:, 0]
        else:
            lam, v = abs(w[-1]), V[:, -1]
    elif method == "power":
        lam, v = _power_op_norm(S, tol, max_iter or max_iterations(p))
    else:
        raise ValueError(f"unknown method {method!r}")
    v = v / np.linalg.norm(v)
    return float(lam), fix_sign(v)


def op_norms(stack: np.ndarray) -> np.ndarray:
    """Operator norms of a stack of symmetric matrices, shape ``(T, p, p)``."""
    stack = np.asarray(stack, dtype=float)
    if stack.shape[0] == 0:
        return np.zeros(0)
    p = stack.shape[-1]
    if p == 1:
        return np.abs(stack[:, 0, 0])
    if p <= DENSE_MAX_DIM:
        w = np.linalg.eigvalsh(stack)
        return np.maximum(np.abs(w[:, 0]), np.abs(w[:, -1]))
    return np.array([op_norm_eig(S)[0] for S in stack])
