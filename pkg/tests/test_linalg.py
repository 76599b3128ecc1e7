import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from covcpd.errors import NumericalError
from covcpd.linalg import max_iterations, op_norm_eig, op_norms, outer


def test_outer_examples():
    assert np.array_equal(outer([0, 0]), np.zeros((2, 2)))
    assert np.array_equal(outer([1, 2]), [[1, 2], [2, 4]])
    assert np.array_equal(outer([3]), [[9]])


def test_outer_rejects_nonfinite():
    with pytest.raises(ValueError):
        outer([1.0, np.nan])


def test_op_norm_diagonal():
    lam, v = op_norm_eig(np.diag([3.0, -5.0, 1.0]))
    assert lam == pytest.approx(5.0)
    assert np.allclose(v, [0, 1, 0])


def test_op_norm_zero_matrix_returns_e1():
    lam, v = op_norm_eig(np.zeros((2, 2)))
    assert lam == 0.0
    assert np.array_equal(v, [1.0, 0.0])


def closed_form_2x2(a, b, d):
    # largest eigenvalue of [[a, b], [b, d]] and its eigenvector
    mid, rad = (a + d) / 2, math.hypot((a - d) / 2, b)
    lam = mid + rad
    v = np.array([b, lam - a]) if b != 0 else np.array([1.0, 0.0])
    return lam, v / np.linalg.norm(v)


def test_op_norm_2x2_against_closed_form():
    lam_ref, v_ref = closed_form_2x2(2.0, 1.0, 2.0)
    lam, v = op_norm_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    assert lam_ref == pytest.approx(3.0)
    assert lam == pytest.approx(lam_ref, rel=1e-12)
    assert np.allclose(v, v_ref, atol=1e-12)
    assert np.allclose(v, np.array([1, 1]) / math.sqrt(2))


def test_sign_convention_first_nonzero_positive():
    lam, v = op_norm_eig(-np.outer([0.0, -1.0, 2.0], [0.0, -1.0, 2.0]))
    assert lam == pytest.approx(5.0)
    assert v[0] == 0.0 or abs(v[0]) < 1e-12
    assert v[1] > 0


sym_mats = st.integers(1, 6).flatmap(
    lambda p: arrays(np.float64, (p, p), elements=st.floats(-10, 10, allow_nan=False))
).map(lambda A: (A + A.T) / 2)


@given(sym_mats, st.integers(0, 2**32 - 1))
def test_quadratic_form_bounded_by_op_norm(S, seed):
    lam, _ = op_norm_eig(S)
    u = np.random.default_rng(seed).standard_normal(S.shape[0])
    u /= np.linalg.norm(u)
    assert abs(u @ S @ u) <= lam + 1e-10 * np.linalg.norm(S) + 1e-300


@given(sym_mats, st.floats(-100, 100, allow_nan=False).filter(lambda c: abs(c) > 1e-3))
def test_op_norm_scale_equivariance(S, c):
    lam, v = op_norm_eig(S)
    lam_c, v_c = op_norm_eig(c * S)
    assert lam_c == pytest.approx(abs(c) * lam, rel=1e-10, abs=1e-10)
    assert abs(v_c @ (c * S) @ v_c) == pytest.approx(lam_c, rel=1e-9, abs=1e-9)


@given(sym_mats)
def test_maximizer_attains_norm(S):
    lam, v = op_norm_eig(S)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert abs(v @ S @ v) >= lam * (1 - 1e-10) - 1e-12


def char_poly_eigs(S):
    # Faddeev-LeVerrier coefficients, then polynomial roots
    p = S.shape[0]
    coeffs = [1.0]
    M = np.zeros_like(S)
    for k in range(1, p + 1):
        M = S @ M + coeffs[-1] * np.eye(p)
        coeffs.append(-np.trace(S @ M) / k)
    return np.real(np.roots(coeffs))


def test_op_norm_matches_char_poly_oracle(rng):
    for _ in range(300):
        p = int(rng.integers(1, 7))
        A = rng.standard_normal((p, p))
        S = (A + A.T) / 2
        ref = np.max(np.abs(char_poly_eigs(S)))
        assert op_norm_eig(S)[0] == pytest.approx(ref, rel=1e-8)


def test_power_iteration_matches_dense(rng):
    p = 80
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    w = np.linspace(-1.0, 1.0, p)
    w[0] = -6.0
    S = (Q * w) @ Q.T
    S = (S + S.T) / 2
    lam_p, v_p = op_norm_eig(S, method="power")
    lam_d, v_d = op_norm_eig(S, method="dense")
    assert lam_p == pytest.approx(6.0, rel=1e-9)
    assert lam_p == pytest.approx(lam_d, rel=1e-9)
    assert abs(v_p @ v_d) == pytest.approx(1.0, abs=1e-6)


def test_power_iteration_nonconvergence_is_loud(rng):
    p = 70
    w = np.linspace(0.5, 1.0, p)
    with pytest.raises(NumericalError):
        op_norm_eig(np.diag(w), method="power", max_iter=3)


def test_iteration_cap_formula():
    assert max_iterations(100) == int(10 * 100 * math.log(100) + 1000)


def test_op_norms_batch_matches_single(rng):
    stack = rng.standard_normal((20, 4, 4))
    stack = stack + stack.transpose(0, 2, 1)
    expected = [op_norm_eig(S)[0] for S in stack]
    assert np.allclose(op_norms(stack), expected, rtol=1e-12)
