import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covcpd.cusum import SegmentModel, project_series
from covcpd.datagen import GenSpec, gen_series
from covcpd.errors import ContractError
from covcpd.evaluation import oracle_1d_argmax
from covcpd.wbsip import (NO_INTERVALS_WARNING, IntervalSet, WbsipParams, default_delta, draw_intervals,
                          index_map, pc_directions, run_wbsip, split_series, wbsip_detect)


def spiked_change(n, p, eta, kappa, seed):
    lo = np.eye(p)
    hi = np.eye(p)
    hi[0, 0] += kappa
    return gen_series(GenSpec(SegmentModel(n, (eta,), (lo, hi)), seed=seed))


# ---------------------------------------------------------------- intervals

def test_draw_intervals_shape_and_bounds():
    iv = draw_intervals(50, 200, rng=1)
    assert iv.intervals.shape == (200, 2)
    a, b = iv.intervals.T
    assert np.all(a >= 0) and np.all(b <= 50) and np.all(b - a >= 2)
    assert iv.seed == 1


def test_draw_intervals_zero_and_determinism():
    assert len(draw_intervals(30, 0, rng=0)) == 0
    assert np.array_equal(draw_intervals(100, 40, rng=5).intervals, draw_intervals(100, 40, rng=5).intervals)
    assert not np.array_equal(draw_intervals(100, 40, rng=5).intervals, draw_intervals(100, 40, rng=6).intervals)


def test_draw_intervals_max_len():
    iv = draw_intervals(200, 100, rng=2, max_len=10)
    assert np.all(np.diff(iv.intervals, axis=1) <= 10)
    with pytest.raises(ContractError):
        draw_intervals(200, 5, rng=2, max_len=1)


def test_default_delta():
    assert default_delta(1000) == min(math.ceil(math.log(1000) ** 2), 100) == 48
    assert default_delta(50) == 5


# ---------------------------------------------------------------- split

def test_split_series_positions():
    Z = np.arange(1.0, 7.0)[:, None]
    W, X, to_orig = split_series(Z)
    assert W.ravel().tolist() == [2.0, 4.0, 6.0]
    assert X.ravel().tolist() == [1.0, 3.0, 5.0]
    assert index_map(3) == 6 and to_orig(1) == 2


def test_split_series_odd_length_and_minimum():
    W, X, _ = split_series(np.arange(7.0))
    assert W.shape == X.shape == (3, 1)
    with pytest.raises(ContractError):
        split_series(np.ones((3, 2)))


# ---------------------------------------------------------------- directions

def test_short_interval_gets_zero_direction(rng):
    W = rng.standard_normal((100, 2))
    U = pc_directions(W, IntervalSet(np.array([[0, 10], [0, 100]])))
    assert np.array_equal(U[0], [0.0, 0.0])
    assert np.linalg.norm(U[1]) == pytest.approx(1.0)


def test_direction_finds_spike():
    W = spiked_change(4000, 4, 2000, 3.0, seed=4)
    U = pc_directions(W, IntervalSet(np.array([[0, 4000]])))
    assert abs(U[0, 0]) > 0.97


# ---------------------------------------------------------------- detection

def test_huge_tau_empty(rng):
    Z = rng.standard_normal((400, 2))
    res = run_wbsip(Z, 50, seed=0, tau=1e18, delta=5)
    assert res.change_points == []


def test_empty_interval_set(rng):
    X = rng.standard_normal((100, 2))
    res = wbsip_detect(X, X.copy(), draw_intervals(100, 0), WbsipParams(1.0, 3))
    assert res.change_points == [] and NO_INTERVALS_WARNING in res.warnings


def test_single_change_detected():
    Z = spiked_change(1200, 3, 600, 4.0, seed=10)
    res = run_wbsip(Z, 100, seed=1, tau=None, delta=None, c_tau=2.0)
    assert len(res.change_points) >= 1
    assert min(abs(c - 600) for c in res.change_points) <= 40
    assert set(res.params["auto_filled"]) == {"tau", "delta"}
    assert all(c % 2 == 0 for c in res.change_points)


def test_inner_scans_match_direct_oracle():
    Z = spiked_change(600, 3, 300, 3.0, seed=12)
    W, X, _ = split_series(Z)
    n = X.shape[0]
    params = WbsipParams(tau=4.0, delta=5)
    res = wbsip_detect(X, W, draw_intervals(n, 30, rng=3), params, trace=True)
    U = res.extras["directions"]
    margin = params.inner_scale * math.log(n)
    checked = 0
    for row in res.trace:
        if row["b_m"] < 0:
            continue
        b, a = oracle_1d_argmax(project_series(X, U[row["m"]]), row["s_m"], row["e_m"], margin)
        assert row["b_m"] == b
        assert row["a_m"] == pytest.approx(a, rel=1e-9, abs=1e-12)
        checked += 1
    assert checked > 0


def test_detections_stay_delta_inside():
    Z = spiked_change(800, 2, 400, 4.0, seed=21)
    res = run_wbsip(Z, 80, seed=2, tau=3.0, delta=6)
    for r in res.records:
        s, e = r.interval
        assert s + 2 * 6 < r.location < e - 2 * 6


@settings(max_examples=10)
@given(st.integers(0, 2**31), st.sampled_from([0.1, 7.0]))
def test_scale_equivariance(seed, c):
    Z = spiked_change(400, 2, 180, 3.0, seed)
    base = run_wbsip(Z, 40, seed=seed, tau=3.0, delta=5).change_points
    assert run_wbsip(c * Z, 40, seed=seed, tau=c**2 * 3.0, delta=5).change_points == base


def test_params_echo():
    Z = spiked_change(300, 2, 150, 3.0, seed=1)
    res = run_wbsip(Z, 20, seed=4, tau=2.5, delta=4)
    assert res.params["tau"] == 2.5 and res.params["delta"] == 4
    assert res.params["M"] == 20 and res.params["seed"] == 4 and res.params["N"] == 300


def test_params_contract():
    with pytest.raises(ContractError):
        WbsipParams(tau=-1.0, delta=1)
    with pytest.raises(ContractError):
        WbsipParams(tau=1.0, delta=-2)
    with pytest.raises(ContractError):
        WbsipParams(tau=1.0, delta=1, inner_margin_scale=0.0)
