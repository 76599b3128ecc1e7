"""Localization metrics and brute-force reference scans."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError
from .linalg import fix_sign


@dataclass(frozen=True)
class EvalReport:
    k_true: int
    k_est: int
    matched_error: Optional[int]
    hausdorff: int
    normalized_error: float


def _check_sorted(cps, n, name):
    cps = [int(c) for c in cps]
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ContractError(f"{name} must be strictly increasing: {cps}")
    if cps and (cps[0] <= 0 or cps[-1] >= n):
        raise ContractError(f"{name} must lie in (0, {n}): {cps}")
    return cps


def hausdorff(a, b, n: int) -> int:
    """Hausdorff distance between two point sets; ``n`` if exactly one is empty."""
    if not a and not b:
        return 0
    if not a or not b:
        return n
    A = np.asarray(a)[:, None]
    B = np.asarray(b)[None, :]
    D = np.abs(A - B)
    return int(max(D.min(axis=1).max(), D.min(axis=0).max()))


def compare(true_cps, est_cps, n: int) -> EvalReport:
    """Compare estimated change points with the truth.

    ``matched_error`` pairs the k-th true point with the k-th estimate and
    is only defined when the counts agree.
    """
    true_cps = _check_sorted(true_cps, n, "true change points")
    est_cps = _check_sorted(est_cps, n, "estimated change points")
    matched = None
    if len(true_cps) == len(est_cps):
        matched = max((abs(a - b) for a, b in zip(true_cps, est_cps)), default=0)
    h = hausdorff(true_cps, est_cps, n)
    return EvalReport(len(true_cps), len(est_cps), matched, h, h / n)


def _restricted(s, e, margin):
    lo = max(math.ceil(s + margin), s + 1)
    hi = min(math.floor(e - margin), e - 1)
    return range(lo, hi + 1)


def oracle_single_cp(X, s: int, e: int, margin: float):
    """Exhaustive argmax of ``||S_t^{s,e}||_op`` using direct sums and full eigendecompositions.

    Returns ``(b, a, v)``: smallest maximizing split, the maximum, and the
    leading eigenvector (sign-fixed) at ``b``.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not (0 <= s < e <= n) or e - s <= 2 * margin + 1:
        raise ContractError(f"need 0 <= s < e <= n and e - s > 2*margin + 1, got s={s}, e={e}, margin={margin}")
    best = None
    for t in _restricted(s, e, margin):
        left = X[s:t].T @ X[s:t]
        right = X[t:e].T @ X[t:e]
        S = math.sqrt((e - t) / ((e - s) * (t - s))) * left - math.sqrt((t - s) / ((e - s) * (e - t))) * right
        w, V = np.linalg.eigh(S)
        j = 0 if abs(w[0]) > abs(w[-1]) else len(w) - 1
        a = abs(w[j])
        if best is None or a > best[1]:
            best = (t, float(a), V[:, j])
    b, a, v = best
    if a == 0.0:
        v = np.eye(X.shape[1])[0]
    return b, a, fix_sign(v / np.linalg.norm(v))


def oracle_1d_argmax(Y, s: int, e: int, margin: float):
    """Exhaustive argmax of the absolute univariate CUSUM; returns ``(b, a)``."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    ts = _restricted(s, e, margin)
    if not (0 <= s < e <= n) or len(ts) == 0:
        raise ContractError(f"empty search range for s={s}, e={e}, margin={margin}, n={n}")
    best = None
    for t in ts:
        val = math.sqrt((e - t) / ((e - s) * (t - s))) * Y[s:t].sum() - math.sqrt((t - s) / ((e - s) * (e - t))) * Y[t:e].sum()
        if best is None or abs(val) > best[1]:
            best = (t, abs(val))
    return best
