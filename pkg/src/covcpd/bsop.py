"""Binary segmentation on the operator norm of the covariance CUSUM."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .cusum import OuterPrefix, as_observations, cov_cusum_stack
from .errors import ContractError
from .linalg import op_norm_eig, op_norms
from .results import Detection, DetectionResult

SHORT_WARNING = "interval shorter than twice the boundary margin"


@dataclass(frozen=True)
class BsopParams:
    tau: float
    margin_scale: float = 1.0

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ContractError(f"tau must be positive and finite, got {self.tau}")
        if not self.margin_scale > 0:
            raise ContractError(f"margin_scale must be positive, got {self.margin_scale}")


def boundary_margin(n: int, p: int, margin_scale: float = 1.0) -> int:
    """``ceil(margin_scale * p * ln n)``."""
    return math.ceil(margin_scale * p * math.log(n))


def search_range(s: int, e: int, margin: float) -> np.ndarray:
    """Splits ``ceil(s + margin) <= t <= floor(e - margin)``, kept inside ``(s, e)``."""
    lo = max(math.ceil(s + margin), s + 1)
    hi = min(math.floor(e - margin), e - 1)
    return np.arange(lo, hi + 1)


def scan_op_norm(pre: OuterPrefix, s: int, e: int, margin: float):
    """Maximize ``||S_t^{s,e}||_op`` over the restricted range.

    Returns ``(b, a)`` with the smallest maximizing ``t``, or ``None`` if the
    range is empty.
    """
    ts = search_range(s, e, margin)
    if ts.size == 0:
        return None
    norms = op_norms(cov_cusum_stack(pre, s, e, ts))
    j = int(np.argmax(norms))
    return int(ts[j]), float(norms[j])


def pooled_scale(X) -> float:
    """Operator norm of the pooled (uncentered) sample covariance."""
    X = np.asarray(X, dtype=float)
    return op_norm_eig(X.T @ X / X.shape[0])[0]


def auto_tau(X, c_tau: float = 1.0) -> float:
    """Data-driven threshold ``c_tau * sigma^2 * sqrt(p ln n)``."""
    X = as_observations(X)
    n, p = X.shape
    return c_tau * pooled_scale(X) * math.sqrt(p * math.log(n))


def bsop_detect(X, params: BsopParams) -> DetectionResult:
    X = as_observations(X)
    n, p = X.shape
    m = boundary_margin(n, p, params.margin_scale)
    used = asdict(params) | {"margin": m, "n": n, "p": p}
    if n <= 2 * m + 1:
        return DetectionResult([], warnings=[SHORT_WARNING], params=used)

    pre = OuterPrefix.build(X)
    records: list[Detection] = []
    stack = [(0, n)]
    while stack:
        s, e = stack.pop()
        if e - s <= 2 * m + 1:
            continue
        best = scan_op_norm(pre, s, e, m)
        if best is None:
            continue
        b, a = best
        if a <= params.tau:
            continue
        S = cov_cusum_stack(pre, s, e, [b])[0]
        records.append(Detection(b, a, (s, e), op_norm_eig(S)[1]))
        # children (s, b-1) and (b, e); the asymmetry is intentional
        stack.append((b, e))
        stack.append((s, b - 1))
    return DetectionResult.from_records(records, params=used)


def known_k_detect(X, k: int, margin_scale: float = 1.0) -> DetectionResult:
    """Binary segmentation told the true number of change points.

    Repeatedly splits the candidate interval with the largest restricted
    operator-norm CUSUM until ``k`` points are found or no interval can be
    split. Children are ``(s, b)`` and ``(b, e)``. For ``k = 1`` this is the
    exhaustive single-change estimator.
    """
    X = as_observations(X)
    n, p = X.shape
    m = boundary_margin(n, p, margin_scale)
    used = {"k": k, "margin_scale": margin_scale, "margin": m, "n": n, "p": p}
    pre = OuterPrefix.build(X)
    records: list[Detection] = []
    frontier = {}

    def consider(s, e):
        if e - s > 2 * m + 1:
            best = scan_op_norm(pre, s, e, m)
            if best is not None:
                frontier[(s, e)] = best

    consider(0, n)
    warnings = [] if frontier else [SHORT_WARNING]
    while len(records) < k and frontier:
        (s, e), (b, a) = max(frontier.items(), key=lambda kv: (kv[1][1], -kv[0][0]))
        del frontier[(s, e)]
        S = cov_cusum_stack(pre, s, e, [b])[0]
        records.append(Detection(b, a, (s, e), op_norm_eig(S)[1]))
        consider(s, b)
        consider(b, e)
    return DetectionResult.from_records(records, warnings=warnings, params=used)
