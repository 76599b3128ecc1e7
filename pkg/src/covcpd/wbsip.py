"""Wild binary segmentation through independent projections.

One half of the data estimates a projection direction per random interval;
the other half, projected onto it and squared, is segmented with a
univariate wild binary segmentation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .bsop import boundary_margin, pooled_scale, scan_op_norm, search_range
from .cusum import OuterPrefix, as_observations, cov_cusum_stack, cusum_1d, series_prefix
from .errors import ContractError
from .linalg import op_norm_eig
from .results import Detection, DetectionResult

NO_INTERVALS_WARNING = "empty interval set"


@dataclass(frozen=True)
class IntervalSet:
    intervals: np.ndarray  # shape (M, 2), rows (alpha, beta)
    seed: Optional[int] = None

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(map(tuple, self.intervals.tolist()))


@dataclass(frozen=True)
class WbsipParams:
    tau: float
    delta: int
    margin_scale: float = 1.0
    max_interval_len: Optional[int] = None
    # scale of the univariate scan margin; defaults to margin_scale
    inner_margin_scale: Optional[float] = None

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ContractError(f"tau must be positive and finite, got {self.tau}")
        if self.delta < 0 or int(self.delta) != self.delta:
            raise ContractError(f"delta must be a nonnegative integer, got {self.delta}")
        if not self.margin_scale > 0:
            raise ContractError(f"margin_scale must be positive, got {self.margin_scale}")
        if self.max_interval_len is not None and self.max_interval_len < 2:
            raise ContractError("max_interval_len must be at least 2")
        if self.inner_margin_scale is not None and not self.inner_margin_scale > 0:
            raise ContractError(f"inner_margin_scale must be positive, got {self.inner_margin_scale}")

    @property
    def inner_scale(self) -> float:
        return self.margin_scale if self.inner_margin_scale is None else self.inner_margin_scale


def default_delta(n: int) -> int:
    return min(math.ceil(math.log(n) ** 2), n // 10)


def draw_intervals(n: int, M: int, rng=None, max_len: Optional[int] = None) -> IntervalSet:
    """Draw ``M`` intervals with endpoints i.i.d. uniform on ``{0, ..., n}``.

    Pairs with ``beta - alpha < 2`` or longer than ``max_len`` are redrawn.
    ``rng`` may be a seed or a ``numpy.random.Generator``.
    """
    if n < 2 or M < 0:
        raise ContractError(f"need n >= 2 and M >= 0, got n={n}, M={M}")
    if max_len is not None and max_len < 2:
        raise ContractError(f"max_len must be at least 2, got {max_len}")
    seed = None if isinstance(rng, np.random.Generator) else rng
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    # batched rejection sampling; accepted pairs keep their draw order
    kept = []
    need = M
    while need > 0:
        pairs = np.sort(gen.integers(0, n + 1, size=(2 * need + 8, 2)), axis=1)
        length = pairs[:, 1] - pairs[:, 0]
        ok = length >= 2
        if max_len is not None:
            ok &= length <= max_len
        pairs = pairs[ok][:need]
        kept.append(pairs)
        need -= len(pairs)
    out = np.concatenate(kept) if kept else np.empty((0, 2), dtype=int)
    return IntervalSet(out, seed)


def index_map(t):
    """Half-scale index to original-scale index."""
    return 2 * t


def split_series(Z):
    """Split into even-position rows ``W`` and odd-position rows ``X``.

    Positions are 1-based, so ``W`` holds ``Z_2, Z_4, ...`` and ``X`` holds
    ``Z_1, Z_3, ...``; both are truncated to ``floor(N / 2)`` rows.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    if Z.shape[0] < 4:
        raise ContractError(f"need at least 4 observations to split, got {Z.shape[0]}")
    n = Z.shape[0] // 2
    return Z[1::2][:n], Z[0::2][:n], index_map


def pc_directions(W, intervals: IntervalSet, margin_scale: float = 1.0) -> np.ndarray:
    """Leading eigenvector of the covariance CUSUM at its maximizing split, per interval.

    Returns an ``(M, p)`` array; intervals with ``beta - alpha <= 2m + 1``
    (``m`` the boundary margin) get the zero vector.
    """
    W = as_observations(W)
    n, p = W.shape
    m = boundary_margin(n, p, margin_scale)
    U = np.zeros((len(intervals), p))
    pre = None
    for k, (alpha, beta) in enumerate(intervals):
        if beta - alpha <= 2 * m + 1:
            continue
        if pre is None:
            pre = OuterPrefix.build(W)
        best = scan_op_norm(pre, alpha, beta, m)
        if best is None:
            continue
        d = best[0]
        U[k] = op_norm_eig(cov_cusum_stack(pre, alpha, beta, [d])[0])[1]
    return U


@dataclass
class _Scan:
    b: np.ndarray
    a: np.ndarray
    windows: list = field(default_factory=list)


def _scan_intervals(prefixes, intervals, s, e, delta, margin):
    M = len(prefixes)
    b = np.full(M, -1)
    a = np.full(M, -1.0)
    windows = []
    for k in range(M):
        alpha, beta = intervals[k]
        sm = max(s, alpha) + delta
        em = min(e, beta) - delta
        windows.append((sm, em))
        if em - sm < 2 * margin + 1:
            continue
        ts = search_range(sm, em, margin)
        vals = np.abs(cusum_1d(prefixes[k], sm, em, ts))
        j = int(np.argmax(vals))
        b[k], a[k] = ts[j], vals[j]
    return _Scan(b, a, windows)


def wbsip_detect(X, W, intervals: IntervalSet, params: WbsipParams, trace: bool = False) -> DetectionResult:
    """Wild binary segmentation of ``X`` projected on directions estimated from ``W``.

    ``X`` and ``W`` must be independent samples of the same shape. Locations
    are in the index scale of ``X``. With ``trace=True`` every inner scan
    ``(s_m, e_m, b_m, a_m)`` is logged in ``result.trace``.
    """
    X = as_observations(X)
    W = as_observations(W)
    if X.shape != W.shape:
        raise ContractError(f"X and W shapes differ: {X.shape} vs {W.shape}")
    n, p = X.shape
    margin = params.inner_scale * math.log(n)
    used = asdict(params) | {"n": n, "p": p, "M": len(intervals), "seed": intervals.seed,
                             "inner_margin": margin,
                             "pc_margin": boundary_margin(n, p, params.margin_scale)}
    if len(intervals) == 0:
        return DetectionResult([], warnings=[NO_INTERVALS_WARNING], params=used)
    iv = np.asarray(intervals.intervals)
    if iv.min() < 0 or iv.max() > n:
        raise ContractError(f"intervals must lie in [0, {n}]")

    U = pc_directions(W, intervals, params.margin_scale)
    prefixes = series_prefix(((X @ U.T) ** 2).T)
    records: list[Detection] = []
    log: list[dict] = []
    stack = [(0, n)]
    while stack:
        s, e = stack.pop()
        scan = _scan_intervals(prefixes, iv, s, e, params.delta, margin)
        if trace:
            for k in range(len(iv)):
                log.append({"s": s, "e": e, "m": k, "s_m": scan.windows[k][0], "e_m": scan.windows[k][1],
                            "b_m": int(scan.b[k]), "a_m": float(scan.a[k])})
        k = int(np.argmax(scan.a))
        if not scan.a[k] > params.tau:
            continue
        b = int(scan.b[k])
        records.append(Detection(b, float(scan.a[k]), (s, e), U[k].copy(), tuple(int(x) for x in iv[k])))
        stack.append((b + 1, e))
        stack.append((s, b))
    result = DetectionResult.from_records(records, params=used)
    result.trace = log
    if trace:
        result.extras.update(directions=U, series_prefix=prefixes)
    return result


def auto_tau(X, c_tau: float = 1.0) -> float:
    """Data-driven threshold ``c_tau * sigma^2 * sqrt(ln n)`` on the projected scale."""
    X = as_observations(X)
    return c_tau * pooled_scale(X) * math.sqrt(math.log(X.shape[0]))


def run_wbsip(Z, M: int, seed=None, tau: Optional[float] = None, delta: Optional[int] = None,
          margin_scale: float = 1.0, max_interval_len: Optional[int] = None,
          c_tau: float = 1.0, inner_margin_scale: Optional[float] = None, trace: bool = False) -> DetectionResult:
    """Full pipeline on a single series: split, draw intervals, detect, map back.

    Missing ``tau`` and ``delta`` are filled with :func:`auto_tau` and
    :func:`default_delta` on the half-length series; the values used are
    echoed in ``result.params``.
    """
    Z = as_observations(Z)
    W, X, to_original = split_series(Z)
    n = X.shape[0]
    filled = []
    if tau is None:
        tau = auto_tau(X, c_tau)
        filled.append("tau")
    if delta is None:
        delta = default_delta(n)
        filled.append("delta")
    params = WbsipParams(float(tau), int(delta), margin_scale, max_interval_len, inner_margin_scale)
    intervals = draw_intervals(n, M, seed, max_interval_len)
    res = wbsip_detect(X, W, intervals, params, trace=trace)
    half = list(res.change_points)
    for r in res.records:
        r.location = int(to_original(r.location))
        r.interval = tuple(int(to_original(x)) for x in r.interval)
        if r.source is not None:
            r.source = tuple(int(to_original(x)) for x in r.source)
    res.change_points = [int(to_original(c)) for c in half]
    res.params.update({"half_scale_change_points": half, "auto_filled": filled,
                       "N": Z.shape[0], "c_tau": c_tau if "tau" in filled else None})
    return res
