"""Seeded Monte Carlo experiments.

Every trial is a pure function of its cell parameters and a child seed
``child_seed(seed, cell_index, trial)``, so results do not depend on the
number of workers. Rows come back in (cell, trial) order.
"""

from __future__ import annotations

import csv
import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import bsop as _bsop
from . import wbsip as _wbsip
from .cusum import SegmentModel
from .datagen import GenSpec, alternating_model, child_seed, gen_series, hard_instance
from .errors import ContractError
from .evaluation import compare

SCENARIOS = ("detect", "rate_sweep", "phase_sweep", "interval_coverage")
ALGORITHMS = ("bsop", "wbsip", "oracle")

RATE_COLUMNS = ["n", "p", "delta", "kappa", "sigma2", "M", "trial", "seed", "k_true", "k_est",
                "matched_error", "hausdorff", "runtime_ms", "error"]
PHASE_COLUMNS = ["n", "p", "delta", "kappa", "sigma2", "ratio", "side", "in_class", "trial", "seed",
                 "true_cp", "est_cps", "k_est", "hausdorff", "normalized_error", "runtime_ms", "error"]
COVERAGE_COLUMNS = ["n", "delta", "K", "M", "trials", "seed", "hits", "frequency", "bound",
                    "binom_se", "runtime_ms", "error"]


_GRIDS = ("n", "p", "delta", "kappa", "sigma2", "M", "ratios")
_NUMERIC = {"n": int, "p": int, "delta": int, "kappa": float, "sigma2": float, "M": int, "ratios": float,
            "n_changes": int, "trials": int, "seed": int, "tau": float, "delta_margin": int,
            "margin_scale": float, "inner_margin_scale": float, "max_interval_len": int, "c_tau": float,
            "workers": int}


@dataclass
class ExperimentConfig:
    scenario: str = "rate_sweep"
    algorithm: str = "wbsip"
    data: Optional[str] = None
    n: list = field(default_factory=lambda: [1000])
    p: list = field(default_factory=lambda: [10])
    delta: list = field(default_factory=list)
    kappa: list = field(default_factory=lambda: [1.5])
    sigma2: list = field(default_factory=lambda: [1.0])
    M: list = field(default_factory=lambda: [300])
    ratios: list = field(default_factory=list)
    n_changes: int = 2
    noise_family: str = "gaussian"
    trials: int = 1
    seed: int = 0
    out: Optional[str] = None
    oracle_params: bool = False
    tau: Optional[float] = None
    delta_margin: Optional[int] = None
    margin_scale: float = 1.0
    inner_margin_scale: Optional[float] = None
    max_interval_len: Optional[int] = None
    c_tau: float = 1.0
    timing: bool = True
    workers: Optional[int] = None

    def __post_init__(self):
        self._coerce()
        self.validate()

    def _coerce(self) -> None:
        # YAML 1.1 reads "1.0e18" as a string; normalize numeric fields up front
        try:
            for name, kind in _NUMERIC.items():
                v = getattr(self, name)
                if v is None:
                    continue
                if name in _GRIDS:
                    v = v if isinstance(v, (list, tuple)) else [v]
                    setattr(self, name, [kind(float(x)) if kind is int else kind(x) for x in v])
                else:
                    setattr(self, name, kind(float(v)) if kind is int else kind(v))
        except (TypeError, ValueError) as exc:
            raise ContractError(f"bad numeric value in config: {exc}") from None

    def validate(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ContractError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.algorithm not in ALGORITHMS:
            raise ContractError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.trials < 1:
            raise ContractError("trials must be at least 1")
        for name in ("n", "p", "kappa", "sigma2", "M"):
            grid = getattr(self, name)
            if not isinstance(grid, (list, tuple)):
                grid = [grid]
                setattr(self, name, grid)
            if not grid and self.scenario != "detect":
                raise ContractError(f"grid {name!r} must be nonempty")
        for name in ("n", "p", "sigma2"):
            if any(not v > 0 for v in getattr(self, name)):
                raise ContractError(f"grid {name!r} must be positive")
        if any(v < 0 for v in self.M):
            raise ContractError("grid 'M' must be nonnegative")
        if self.scenario == "rate_sweep" and any(not v > 0 for v in self.kappa):
            raise ContractError("kappa must be positive")
        if self.scenario == "phase_sweep":
            if not self.ratios or any(not r > 0 for r in self.ratios):
                raise ContractError("phase_sweep needs a nonempty grid of positive ratios")
            if any(not v > 0 for v in self.kappa):
                raise ContractError("kappa must be positive")
        if self.scenario == "interval_coverage" and not self.delta:
            raise ContractError("interval_coverage needs a spacing grid 'delta'")
        if self.tau is not None and not self.tau > 0:
            raise ContractError("tau must be positive")
        if self.margin_scale <= 0:
            raise ContractError("margin_scale must be positive")

    @classmethod
    def from_mapping(cls, d: dict) -> "ExperimentConfig":
        """Build from a possibly nested mapping; section names are ignored."""
        flat = {}

        def walk(m):
            for k, v in m.items():
                if isinstance(v, dict):
                    walk(v)
                else:
                    flat[k] = v

        walk(d)
        known = {f.name for f in fields(cls)}
        unknown = set(flat) - known
        if unknown:
            raise ContractError(f"unknown config keys: {sorted(unknown)}")
        return cls(**flat)


def worker_count(cfg: ExperimentConfig) -> int:
    env = os.environ.get("COVCPD_THREADS")
    if env:
        return max(1, int(env))
    return cfg.workers or os.cpu_count() or 1


def _run_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks), chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------- parameters

ORACLE_TAU_FRACTION = 0.4
ORACLE_DELTA_MULT = 3.0
ORACLE_INNER_MARGIN = 2.0


def oracle_wbsip_params(model: SegmentModel, n_half: int) -> dict:
    """Ground-truth tuning for wild segmentation on the half-length series.

    ``tau`` sits at ``ORACLE_TAU_FRACTION`` of the way from ``B^2 sqrt(ln n)``
    to ``kappa sqrt(Delta)``; ``delta`` is ``ORACLE_DELTA_MULT`` times
    ``B^4 ln n / kappa^2`` capped at ``Delta / 3``. ``B^2`` is the largest
    covariance operator norm and ``Delta`` the half-scale spacing. The inner
    scan margin is widened to ``ORACLE_INNER_MARGIN * ln n``.
    """
    B2 = model.max_op_norm
    kappa = model.kappa
    spacing = model.spacing / 2
    lo = B2 * math.sqrt(math.log(n_half))
    hi = kappa * math.sqrt(spacing)
    eps = B2**2 * math.log(n_half) / kappa**2
    return {"tau": lo + ORACLE_TAU_FRACTION * (hi - lo),
            "delta": max(1, int(min(ORACLE_DELTA_MULT * eps, spacing / 3))),
            "inner_margin_scale": ORACLE_INNER_MARGIN}


def oracle_bsop_tau(model: SegmentModel) -> float:
    """Midpoint of ``(B^2 sqrt(p ln n), kappa Delta / sqrt(n))``."""
    n, p = model.n, model.p
    lo = model.max_op_norm * math.sqrt(p * math.log(n))
    hi = model.kappa * model.spacing / math.sqrt(n)
    return 0.5 * (lo + hi)


def run_algorithm(X, cfg: ExperimentConfig, model: Optional[SegmentModel], M: int, seed: int):
    """Run the configured detector; returns a :class:`DetectionResult` on the scale of ``X``."""
    if cfg.algorithm == "oracle":
        if model is None:
            raise ContractError("the oracle algorithm needs the true number of change points")
        return _bsop.known_k_detect(X, len(model.change_points), cfg.margin_scale)
    if cfg.algorithm == "bsop":
        tau = cfg.tau
        if tau is None:
            tau = oracle_bsop_tau(model) if cfg.oracle_params and model is not None else _bsop.auto_tau(X, cfg.c_tau)
        res = _bsop.bsop_detect(X, _bsop.BsopParams(float(tau), cfg.margin_scale))
        res.params["oracle_params"] = bool(cfg.oracle_params and cfg.tau is None)
        return res
    tau, delta, max_len = cfg.tau, cfg.delta_margin, cfg.max_interval_len
    inner = cfg.inner_margin_scale
    if cfg.oracle_params and model is not None:
        op = oracle_wbsip_params(model, X.shape[0] // 2)
        tau = op["tau"] if tau is None else tau
        delta = op["delta"] if delta is None else delta
        inner = op["inner_margin_scale"] if inner is None else inner
    res = _wbsip.run_wbsip(X, M, seed=seed, tau=tau, delta=delta, margin_scale=cfg.margin_scale,
                       max_interval_len=max_len, c_tau=cfg.c_tau, inner_margin_scale=inner)
    res.params["oracle_params"] = bool(cfg.oracle_params)
    return res


# ---------------------------------------------------------------- rate sweep

def rate_cells(cfg: ExperimentConfig):
    return list(itertools.product(cfg.n, cfg.p, cfg.kappa, cfg.sigma2, cfg.M))


def rate_trial(cfg: ExperimentConfig, cell_index: int, trial: int) -> dict:
    n, p, kappa, sigma2, M = rate_cells(cfg)[cell_index]
    seed = child_seed(cfg.seed, cell_index, trial)
    model = alternating_model(int(n), int(p), cfg.n_changes, float(sigma2), float(kappa))
    row = {"n": n, "p": p, "delta": model.spacing, "kappa": kappa, "sigma2": sigma2,
           "M": M if cfg.algorithm == "wbsip" else "", "trial": trial, "seed": seed,
           "k_true": len(model.change_points), "k_est": "", "matched_error": "", "hausdorff": "",
           "runtime_ms": "", "error": ""}
    t0 = time.perf_counter()
    try:
        X = gen_series(GenSpec(model, cfg.noise_family, seed))
        res = run_algorithm(X, cfg, model, int(M), child_seed(seed, 1))
        rep = compare(model.change_points, res.change_points, int(n))
        row.update(k_est=rep.k_est, hausdorff=rep.hausdorff,
                   matched_error="" if rep.matched_error is None else rep.matched_error)
    except Exception as exc:  # recorded per row; the sweep continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        row["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    return row


def rate_sweep(cfg: ExperimentConfig) -> list[dict]:
    tasks = [(cfg, c, t) for c in range(len(rate_cells(cfg))) for t in range(cfg.trials)]
    return _run_tasks(rate_trial, tasks, worker_count(cfg))


# ---------------------------------------------------------------- phase sweep

def phase_cells(cfg: ExperimentConfig):
    spacings = cfg.delta or [None]
    return list(itertools.product(cfg.n, cfg.p, cfg.sigma2, spacings, cfg.ratios))


def phase_kappa(ratio: float, spacing: int, p: int, sigma2: float) -> float:
    """Jump size giving ``spacing * kappa^2 / (sigma2^2 p) = ratio``."""
    return sigma2 * math.sqrt(ratio * p / spacing)


def phase_trial(cfg: ExperimentConfig, cell_index: int, trial: int) -> dict:
    n, p, sigma2, spacing, ratio = phase_cells(cfg)[cell_index]
    n, p = int(n), int(p)
    spacing = int(spacing) if spacing else n // 3
    kappa = phase_kappa(ratio, spacing, p, sigma2)
    in_class = kappa <= sigma2 / 4 and spacing >= sigma2**2 * p / (33 * kappa**2)
    seed = child_seed(cfg.seed, cell_index, trial)
    rng = np.random.default_rng(seed)
    side = "early" if rng.integers(2) == 0 else "late"
    row = {"n": n, "p": p, "delta": spacing, "kappa": kappa, "sigma2": sigma2, "ratio": ratio,
           "side": side, "in_class": int(in_class), "trial": trial, "seed": seed, "true_cp": "",
           "est_cps": "", "k_est": "", "hausdorff": "", "normalized_error": "", "runtime_ms": "", "error": ""}
    t0 = time.perf_counter()
    try:
        X, model = hard_instance(n, p, spacing, kappa, sigma2, side, rng, enforce_class=False)
        res = run_algorithm(X, cfg, model, int(cfg.M[0]), child_seed(seed, 1))
        rep = compare(model.change_points, res.change_points, n)
        row.update(true_cp=model.change_points[0], est_cps=";".join(map(str, res.change_points)),
                   k_est=rep.k_est, hausdorff=rep.hausdorff, normalized_error=rep.normalized_error)
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        row["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    return row


def phase_sweep(cfg: ExperimentConfig) -> list[dict]:
    tasks = [(cfg, c, t) for c in range(len(phase_cells(cfg))) for t in range(cfg.trials)]
    return _run_tasks(phase_trial, tasks, worker_count(cfg))


# ---------------------------------------------------------------- interval coverage

def coverage_bound(n: int, spacing: int, M: int) -> float:
    """``1 - exp(log(n / Delta) - M Delta^2 / (16 n^2))``."""
    return 1.0 - math.exp(math.log(n / spacing) - M * spacing**2 / (16 * n**2))


def covers_all(intervals: np.ndarray, change_points, spacing: float) -> bool:
    """Every change point has an interval with start in ``[eta - 3D/4, eta - D/2]`` and end in ``[eta + D/2, eta + 3D/4]``."""
    if len(intervals) == 0:
        return len(change_points) == 0
    a, b = intervals[:, 0], intervals[:, 1]
    for eta in change_points:
        ok = (a >= eta - 0.75 * spacing) & (a <= eta - 0.5 * spacing) & (b >= eta + 0.5 * spacing) & (b <= eta + 0.75 * spacing)
        if not ok.any():
            return False
    return True


def coverage_cells(cfg: ExperimentConfig):
    return list(itertools.product(cfg.n, cfg.delta, cfg.M))


def coverage_cell(cfg: ExperimentConfig, cell_index: int) -> dict:
    n, spacing, M = (int(v) for v in coverage_cells(cfg)[cell_index])
    K = cfg.n_changes
    seed = child_seed(cfg.seed, cell_index)
    row = {"n": n, "delta": spacing, "K": K, "M": M, "trials": cfg.trials, "seed": seed, "hits": "",
           "frequency": "", "bound": "", "binom_se": "", "runtime_ms": "", "error": ""}
    t0 = time.perf_counter()
    try:
        if (K + 1) * spacing > n:
            raise ContractError(f"{K} changes with spacing {spacing} do not fit in n={n}")
        cps = [k * spacing for k in range(1, K + 1)]
        hits = 0
        for trial in range(cfg.trials):
            iv = _wbsip.draw_intervals(n, M, child_seed(seed, trial)).intervals
            hits += covers_all(iv, cps, spacing)
        freq = hits / cfg.trials
        row.update(hits=hits, frequency=freq, bound=coverage_bound(n, spacing, M),
                   binom_se=math.sqrt(freq * (1 - freq) / cfg.trials))
    except Exception as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    if cfg.timing:
        row["runtime_ms"] = round(1000 * (time.perf_counter() - t0), 3)
    return row


def interval_coverage(cfg: ExperimentConfig) -> list[dict]:
    tasks = [(cfg, c) for c in range(len(coverage_cells(cfg)))]
    return _run_tasks(coverage_cell, tasks, worker_count(cfg))


# ---------------------------------------------------------------- output and replay

COLUMNS = {"rate_sweep": RATE_COLUMNS, "phase_sweep": PHASE_COLUMNS, "interval_coverage": COVERAGE_COLUMNS}
RUNNERS = {"rate_sweep": rate_sweep, "phase_sweep": phase_sweep, "interval_coverage": interval_coverage}


def write_rows(rows, columns, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({c: r.get(c, "") for c in columns})


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def replay(cfg: ExperimentConfig, row: dict) -> dict:
    """Recompute one CSV row from its grid values, trial index and seed.

    The row's seed must match the seed derived from ``cfg`` for that cell;
    a mismatch means the config differs from the one that produced the file.
    """
    if cfg.scenario == "rate_sweep":
        cells = rate_cells(cfg)
        key = (int(row["n"]), int(row["p"]), float(row["kappa"]), float(row["sigma2"]))
        match = [i for i, c in enumerate(cells) if (int(c[0]), int(c[1]), float(c[2]), float(c[3])) == key
                 and (row["M"] == "" or int(c[4]) == int(row["M"]))]
        fn, args = rate_trial, lambda i: (cfg, i, int(row["trial"]))
    elif cfg.scenario == "phase_sweep":
        cells = phase_cells(cfg)
        match = [i for i, c in enumerate(cells) if int(c[0]) == int(row["n"]) and int(c[1]) == int(row["p"])
                 and float(c[2]) == float(row["sigma2"]) and math.isclose(float(c[4]), float(row["ratio"]))
                 and (c[3] is None or int(c[3]) == int(row["delta"]))]
        fn, args = phase_trial, lambda i: (cfg, i, int(row["trial"]))
    elif cfg.scenario == "interval_coverage":
        cells = coverage_cells(cfg)
        match = [i for i, c in enumerate(cells) if (int(c[0]), int(c[1]), int(c[2])) == (int(row["n"]), int(row["delta"]), int(row["M"]))]
        fn, args = coverage_cell, lambda i: (cfg, i)
    else:
        raise ContractError(f"scenario {cfg.scenario!r} has no replayable rows")
    for i in match:
        out = fn(*args(i))
        if int(out["seed"]) == int(row["seed"]):
            return out
    raise ContractError("no grid cell of this config reproduces the row's seed")


def summarize_rate(rows) -> dict:
    """Per-n share of trials with the right count and median matched error."""
    out = {}
    for n in sorted({int(r["n"]) for r in rows}):
        sub = [r for r in rows if int(r["n"]) == n and r["error"] == ""]
        k_ok = [int(r["k_est"]) == int(r["k_true"]) for r in sub]
        errs = [float(r["matched_error"]) for r in sub if r["matched_error"] != ""]
        out[n] = {"trials": len(sub), "frac_k_correct": float(np.mean(k_ok)) if k_ok else float("nan"),
                  "median_matched_error": float(np.median(errs)) if errs else float("nan")}
    return out


def summarize_phase(rows) -> dict:
    """Mean normalized error per ``(p, ratio)``."""
    out: dict = {}
    for r in rows:
        if r["error"]:
            continue
        out.setdefault((int(r["p"]), float(r["ratio"])), []).append(float(r["normalized_error"]))
    return {k: float(np.mean(v)) for k, v in sorted(out.items())}


def config_dict(cfg: ExperimentConfig) -> dict:
    return asdict(cfg)
