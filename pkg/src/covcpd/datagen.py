"""Synthetic series with piecewise-constant covariance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cusum import PSD_RTOL, SegmentModel
from .errors import ContractError

NOISE_FAMILIES = ("gaussian", "scaled_rademacher")


def child_seed(seed: int, *path: int) -> int:
    """Deterministic child seed for ``(seed, *path)``, e.g. ``(seed, cell, trial)``.

    Uses :class:`numpy.random.SeedSequence`, so streams are independent of
    how trials are distributed over workers.
    """
    return int(np.random.SeedSequence([int(seed), *map(int, path)]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _rng(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def covariance_factor(S: np.ndarray, segment: int = 0) -> np.ndarray:
    """Lower factor ``L`` with ``L L^T = S``.

    Near-PSD input (min eigenvalue within ``-1e-10 * ||S||_op``) gets a
    ``1e-10 * ||S||_op`` jitter before Cholesky; exactly singular input falls
    back to the symmetric square root.
    """
    w = np.linalg.eigvalsh(S)
    scale = float(np.max(np.abs(w))) if w.size else 0.0
    if scale == 0.0:
        return np.zeros_like(S)
    if w[0] < -PSD_RTOL * scale:
        raise ContractError(f"segment {segment}: covariance is not positive semidefinite (min eig {w[0]:.3g})")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        pass
    try:
        return np.linalg.cholesky(S + PSD_RTOL * scale * np.eye(len(S)))
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(S)
        return V * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class GenSpec:
    model: SegmentModel
    noise_family: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.noise_family not in NOISE_FAMILIES:
            raise ContractError(f"noise_family must be one of {NOISE_FAMILIES}, got {self.noise_family!r}")


def gen_series(spec: GenSpec) -> np.ndarray:
    """Draw ``X_i = L_k z_i`` with ``z_i`` standard normal or Rademacher."""
    model = spec.model
    rng = np.random.default_rng(spec.seed)
    factors = [covariance_factor(S, k) for k, S in enumerate(model.sigmas)]
    if spec.noise_family == "gaussian":
        Z = rng.standard_normal((model.n, model.p))
    else:
        Z = rng.choice(np.array([-1.0, 1.0]), size=(model.n, model.p))
    X = np.empty_like(Z)
    b = model.bounds
    for k, L in enumerate(factors):
        X[b[k]:b[k + 1]] = Z[b[k]:b[k + 1]] @ L.T
    return X


def spiked_cov(sigma2: float, kappa: float, u) -> np.ndarray:
    """``sigma2 * I + kappa * u u^T``."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-12:
        raise ContractError("u must have unit norm")
    return sigma2 * np.eye(len(u)) + kappa * np.outer(u, u)


def rademacher_direction(p: int, rng=None) -> np.ndarray:
    if p < 1:
        raise ContractError("p must be positive")
    return _rng(rng).choice(np.array([-1.0, 1.0]), size=p) / math.sqrt(p)


def hard_instance(n: int, p: int, delta: int, kappa: float, sigma2: float = 1.0,
                  side: str = "early", rng=None, enforce_class: bool = True):
    """Single spiked-covariance change, the two-point lower-bound construction.

    ``side="early"``: the first ``delta`` rows have covariance
    ``sigma2 I + kappa u u^T`` and the rest ``sigma2 I``. ``side="late"``:
    the last ``delta`` rows carry the spike. ``u`` is a fresh Rademacher
    direction. The class constraints ``2 <= delta <= n/3`` and
    ``kappa <= sigma2/4`` are checked unless ``enforce_class=False``.

    Returns ``(X, model)``.
    """
    if side not in ("early", "late"):
        raise ContractError(f"side must be 'early' or 'late', got {side!r}")
    if not (sigma2 > 0 and kappa > 0):
        raise ContractError("sigma2 and kappa must be positive")
    if not 2 <= delta <= n / 3:
        raise ContractError(f"class constraint violated: need 2 <= delta <= n/3, got delta={delta}, n={n}")
    if enforce_class and kappa > sigma2 / 4:
        raise ContractError(f"class constraint violated: need kappa <= sigma2/4, got kappa={kappa}, sigma2={sigma2}")
    rng = _rng(rng)
    u = rademacher_direction(p, rng)
    spiked = spiked_cov(sigma2, kappa, u)
    flat = sigma2 * np.eye(p)
    if side == "early":
        model = SegmentModel(n, (delta,), (spiked, flat))
    else:
        model = SegmentModel(n, (n - delta,), (flat, spiked))
    seed = int(rng.integers(2**63 - 1))
    return gen_series(GenSpec(model, "gaussian", seed)), model


def alternating_model(n: int, p: int, n_changes: int, sigma2: float, kappa: float) -> SegmentModel:
    """Equispaced changes alternating between ``sigma2 I`` and ``(sigma2 + kappa) I``."""
    cps = tuple(round(k * n / (n_changes + 1)) for k in range(1, n_changes + 1))
    levels = [sigma2 + (kappa if k % 2 else 0.0) for k in range(n_changes + 1)]
    return SegmentModel(n, cps, tuple(lv * np.eye(p) for lv in levels))
