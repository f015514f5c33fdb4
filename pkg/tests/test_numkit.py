import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from rmpflab.numkit import (finite_diff_directional, finite_diff_grad, finite_diff_jacobian,
                            pseudo_inverse_apply, rel_err, sym_eig_bounds)
from rmpflab.policies import softmax_potential


def test_pinv_identity():
    np.testing.assert_allclose(pseudo_inverse_apply(np.eye(2), [2.0, 3.0]), [2.0, 3.0])


def test_pinv_truncates_null_direction():
    np.testing.assert_allclose(pseudo_inverse_apply(np.diag([1.0, 0.0]), [2.0, 3.0]), [2.0, 0.0])


def test_pinv_scalar():
    np.testing.assert_allclose(pseudo_inverse_apply(np.array([[5.0]]), [1.0]), [0.2])


def test_pinv_zero_matrix_gives_zero():
    np.testing.assert_array_equal(pseudo_inverse_apply(np.zeros((3, 3)), np.ones(3)), np.zeros(3))


def test_pinv_rejects_nonfinite():
    with pytest.raises(ValueError):
        pseudo_inverse_apply(np.eye(2), [np.nan, 1.0])
    with pytest.raises(ValueError):
        pseudo_inverse_apply(np.ones((2, 3)), [1.0, 1.0])


finite = st.floats(-10, 10, allow_nan=False)


@given(arrays(float, (3, 3), elements=finite), arrays(float, 3, elements=finite))
def test_pinv_matches_numpy_lstsq(A, f):
    M = A @ A.T
    got = pseudo_inverse_apply(M, f)
    ref = np.linalg.pinv(M, rcond=1e-10) @ f
    np.testing.assert_allclose(got, ref, atol=1e-6 * (1 + np.linalg.norm(ref)))


@given(arrays(float, (3, 3), elements=finite), arrays(float, 3, elements=finite))
def test_pinv_solution_is_least_squares(A, f):
    M = A @ A.T + np.eye(3)
    a = pseudo_inverse_apply(M, f)
    np.testing.assert_allclose(M @ a, f, atol=1e-8 * (1 + np.linalg.norm(f)) * np.linalg.cond(M))


def test_fd_grad_quadratic():
    g = finite_diff_grad(lambda x: 0.5 * x @ x, np.array([1.0, 2.0]), h=1e-5)
    np.testing.assert_allclose(g, [1.0, 2.0], atol=1e-8)


def test_fd_grad_constant():
    np.testing.assert_array_equal(finite_diff_grad(lambda x: 3.0, np.array([1.0, 2.0])), [0.0, 0.0])


def test_fd_grad_softmax_potential():
    g = finite_diff_grad(lambda x: softmax_potential(x, 1.0), np.array([1.0, 0.0]), order=4)
    np.testing.assert_allclose(g, [np.tanh(1.0), 0.0], atol=1e-8)


def test_fd_jacobian_linear():
    A = np.array([[1.0, 2.0, 0.5], [-1.0, 0.0, 3.0]])
    np.testing.assert_allclose(finite_diff_jacobian(lambda x: A @ x, np.ones(3)), A, atol=1e-10)


def test_fd_jacobian_reciprocal():
    np.testing.assert_allclose(finite_diff_jacobian(lambda q: 1.0 / q, np.array([2.0])), [[-0.25]], atol=1e-8)


def test_fd_jacobian_identity():
    np.testing.assert_allclose(finite_diff_jacobian(lambda x: x, np.zeros(3)), np.eye(3), atol=1e-10)


def test_fd_order4_more_accurate():
    x = np.array([0.3])
    exact = np.cos(0.3)
    e2 = abs(finite_diff_directional(np.sin, x, np.ones(1), h=1e-2, order=2)[0] - exact)
    e4 = abs(finite_diff_directional(np.sin, x, np.ones(1), h=1e-2, order=4)[0] - exact)
    assert e4 < 1e-3 * e2


def test_sym_eig_bounds_uses_symmetric_part():
    lo, hi = sym_eig_bounds(np.array([[1.0, 4.0], [0.0, 1.0]]))
    np.testing.assert_allclose([lo, hi], [-1.0, 3.0])


def test_rel_err_floor():
    assert rel_err([1e-13], [0.0]) == pytest.approx(0.1)
    assert rel_err([1.0, 1.0], [1.0, 1.0]) == 0.0
