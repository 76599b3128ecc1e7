"""Covariance CUSUM statistics.

Time indices follow the usual convention: observations are ``X_1, ..., X_n``
(row ``i - 1`` of the array) and an interval ``(s, e]`` with split ``t``
compares ``X_{s+1..t}`` against ``X_{t+1..e}``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .linalg import op_norm_eig, symmetrize

PSD_RTOL = 1e-10


def as_observations(X, center: bool = False) -> np.ndarray:
    """Validate an ``(n, p)`` observation matrix; 1-d input becomes ``p = 1``.

    With ``center=True`` the global sample mean is subtracted first.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ContractError(f"observations must be 2-d, got shape {X.shape}")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise ContractError(f"need n >= 2 and p >= 1, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ContractError("observations contain non-finite values")
    if center:
        X = X - X.mean(axis=0)
    return X


def check_split(s: int, e: int, t, n: int) -> None:
    t_arr = np.asarray(t)
    if not (0 <= s and e <= n and np.all(s < t_arr) and np.all(t_arr < e)):
        raise ContractError(f"need 0 <= s < t < e <= n, got s={s}, t={t}, e={e}, n={n}")


def cusum_weights(s: int, e: int, t):
    """Left and right CUSUM weights for split(s) ``t`` of ``(s, e]``."""
    t = np.asarray(t, dtype=float)
    left = np.sqrt((e - t) / ((e - s) * (t - s)))
    right = np.sqrt((t - s) / ((e - s) * (e - t)))
    return left, right


@dataclass(frozen=True)
class OuterPrefix:
    """Cumulative sums of outer products: ``prefix[t] = sum_{i<=t} X_i X_i^T``."""

    prefix: np.ndarray

    @classmethod
    def build(cls, X) -> "OuterPrefix":
        X = as_observations(X)
        n, p = X.shape
        prefix = np.zeros((n + 1, p, p))
        np.cumsum(X[:, :, None] * X[:, None, :], axis=0, out=prefix[1:])
        prefix.setflags(write=False)
        return cls(prefix)

    @property
    def n(self) -> int:
        return self.prefix.shape[0] - 1

    @property
    def p(self) -> int:
        return self.prefix.shape[1]

    def window(self, s: int, e: int) -> np.ndarray:
        """``sum_{i=s+1}^{e} X_i X_i^T``."""
        return self.prefix[e] - self.prefix[s]


def cov_cusum(pre: OuterPrefix, s: int, e: int, t: int) -> np.ndarray:
    """Covariance CUSUM matrix of ``(s, e]`` split at ``t``."""
    check_split(s, e, t, pre.n)
    wl, wr = cusum_weights(s, e, t)
    return wl * (pre.prefix[t] - pre.prefix[s]) - wr * (pre.prefix[e] - pre.prefix[t])


def cov_cusum_stack(pre: OuterPrefix, s: int, e: int, ts) -> np.ndarray:
    """CUSUM matrices for every split in ``ts``, shape ``(len(ts), p, p)``."""
    ts = np.asarray(ts, dtype=int)
    if ts.size == 0:
        return np.zeros((0, pre.p, pre.p))
    check_split(s, e, ts, pre.n)
    wl, wr = cusum_weights(s, e, ts)
    P = pre.prefix
    return wl[:, None, None] * (P[ts] - P[s]) - wr[:, None, None] * (P[e] - P[ts])


@dataclass(frozen=True)
class SegmentModel:
    """Piecewise-constant covariance: ``sigmas[k]`` holds on ``(eta_k, eta_{k+1}]``."""

    n: int
    change_points: tuple[int, ...]
    sigmas: tuple[np.ndarray, ...] = field(repr=False)

    def __post_init__(self):
        cps = tuple(int(c) for c in self.change_points)
        sigmas = tuple(symmetrize(S) for S in self.sigmas)
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "sigmas", sigmas)
        if self.n < 2:
            raise ContractError("n must be at least 2")
        if len(sigmas) != len(cps) + 1:
            raise ContractError(f"{len(cps)} change points need {len(cps) + 1} covariances")
        bounds = (0,) + cps + (self.n,)
        if any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise ContractError(f"change points must be strictly increasing in [1, n-1]: {cps}")
        p = sigmas[0].shape[0]
        for k, S in enumerate(sigmas):
            if S.shape != (p, p) or not np.all(np.isfinite(S)):
                raise ContractError(f"segment {k}: covariance must be a finite {p}x{p} matrix")
            w = np.linalg.eigvalsh(S)
            scale = max(np.max(np.abs(w)), 1e-300)
            if w[0] < -PSD_RTOL * scale:
                raise ContractError(f"segment {k}: covariance is not positive semidefinite (min eig {w[0]:.3g})")
        for k in range(1, len(sigmas)):
            if not np.any(sigmas[k] != sigmas[k - 1]):
                raise ContractError(f"segments {k - 1} and {k} have identical covariance")

    @property
    def p(self) -> int:
        return self.sigmas[0].shape[0]

    @property
    def bounds(self) -> tuple[int, ...]:
        return (0,) + self.change_points + (self.n,)

    @property
    def spacing(self) -> int:
        b = self.bounds
        return min(hi - lo for lo, hi in zip(b, b[1:]))

    @property
    def jumps(self) -> list[float]:
        return [op_norm_eig(self.sigmas[k] - self.sigmas[k - 1])[0] for k in range(1, len(self.sigmas))]

    @property
    def kappa(self) -> float:
        """Smallest jump in operator norm (``inf`` without change points)."""
        return min(self.jumps, default=float("inf"))

    @property
    def max_op_norm(self) -> float:
        return max(op_norm_eig(S)[0] for S in self.sigmas)

    def sigma_at(self, i: int) -> np.ndarray:
        """Covariance of observation ``X_i`` (1-based)."""
        return self.sigmas[int(np.searchsorted(self.change_points, i, side="left"))]

    def window(self, s: int, e: int) -> np.ndarray:
        """``sum_{i=s+1}^{e} Sigma_i``."""
        out = np.zeros((self.p, self.p))
        b = self.bounds
        for k, S in enumerate(self.sigmas):
            overlap = min(e, b[k + 1]) - max(s, b[k])
            if overlap > 0:
                out += overlap * S
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "change_points": list(self.change_points),
            "sigmas": [S.tolist() for S in self.sigmas],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SegmentModel":
        return cls(int(d["n"]), tuple(d["change_points"]), tuple(np.asarray(S, dtype=float) for S in d["sigmas"]))


def pop_cusum(model: SegmentModel, s: int, e: int, t: int) -> np.ndarray:
    """Population covariance CUSUM, with ``Sigma_i`` in place of ``X_i X_i^T``."""
    check_split(s, e, t, model.n)
    wl, wr = cusum_weights(s, e, t)
    return wl * model.window(s, t) - wr * model.window(t, e)


def project_series(X, v) -> np.ndarray:
    """``Y_i = (v^T X_i)^2``; the zero sentinel gives an all-zero series."""
    X = np.asarray(X, dtype=float)
    v = np.asarray(v, dtype=float)
    if X.ndim != 2 or v.shape != (X.shape[1],):
        raise ContractError(f"dimension mismatch: X {X.shape}, v {v.shape}")
    return (X @ v) ** 2


def series_prefix(Y) -> np.ndarray:
    """Prefix sums with a leading zero, length ``n + 1``."""
    Y = np.asarray(Y, dtype=float)
    out = np.zeros(Y.shape[:-1] + (Y.shape[-1] + 1,))
    np.cumsum(Y, axis=-1, out=out[..., 1:])
    return out


def cusum_1d(prefix, s: int, e: int, t):
    """Univariate CUSUM of ``(s, e]`` at split(s) ``t`` from a prefix-sum array."""
    prefix = np.asarray(prefix, dtype=float)
    check_split(s, e, t, prefix.shape[-1] - 1)
    t = np.asarray(t, dtype=int)
    wl, wr = cusum_weights(s, e, t)
    val = wl * (prefix[..., t] - prefix[..., s]) - wr * (prefix[..., e] - prefix[..., t])
    return float(val) if np.ndim(val) == 0 else val
