import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rmpflab.gds import potential_jacobian_asymmetry
from rmpflab.numkit import finite_diff_grad
from rmpflab.policies import (AttractorParams, CollisionParams, JointLimitDomainError,
                              JointLimitParams, attractor_curvature_accel, attractor_leaf,
                              attractor_metric, attractor_potential_grad, attractor_potential_value,
                              barrier_1d_leaf, collision_leaf, collision_u, collision_w,
                              cspace_damper_leaf, jointlimit_diag, jointlimit_leaf,
                              jointlimit_metric_diag, soft_normalize, softmax_potential)
from rmpflab.rmp import RmpTree
from rmpflab.taskmaps import identity_map


# -- collision -----------------------------------------------------------------------------

@pytest.mark.parametrize("s, w, dw", [(1.0, 0.0, 0.0), (0.5, 0.5, -3.0), (2.0, 0.0, 0.0)])
def test_collision_w_examples(s, w, dw):
    got = collision_w(s, 1.0)
    np.testing.assert_allclose(got, (w, dw), atol=1e-15)


def test_collision_u_examples():
    assert collision_u(0.0, 1.0) == (0.0, 0.0)
    assert collision_u(2.0, 1.0) == (0.0, 0.0)
    np.testing.assert_allclose(collision_u(-1.0, 1.0)[0], 1.0 - np.exp(-0.5), rtol=1e-12)


@given(st.floats(-3.0, -1e-3), st.floats(0.1, 2.0))
def test_collision_du_matches_finite_difference(sd, sigma):
    h = 1e-6 * max(1.0, abs(sd))
    fd = (collision_u(sd + h, sigma)[0] - collision_u(sd - h, sigma)[0]) / (2 * h)
    np.testing.assert_allclose(collision_u(sd, sigma)[1], fd, rtol=1e-5, atol=1e-9)


def test_collision_leaf_worked_example():
    leaf = collision_leaf(CollisionParams(r_w=1.0, sigma=1.0, alpha=1.0, eta_damp=0.0))
    s, sd = np.array([0.5]), np.array([-1.0])
    u = 1.0 - np.exp(-0.5)
    np.testing.assert_allclose(leaf.metric(s, sd), [[0.5 * u]], rtol=1e-12)
    c = leaf.curvature_terms(s, sd)
    np.testing.assert_allclose(c.Xi, [[0.5 * -1.0 * 0.5 * -np.exp(-0.5)]], rtol=1e-12)
    np.testing.assert_allclose(c.xi, [0.5 * u * -3.0], rtol=1e-12)
    np.testing.assert_allclose(leaf.potential_grad(s), [-1.5], rtol=1e-12)
    rmp = leaf.natural_rmp(s, sd)
    np.testing.assert_allclose(rmp.f, [2.09021], atol=1e-5)
    np.testing.assert_allclose(rmp.M, [[0.34837]], atol=1e-5)


def test_collision_leaf_inert_when_leaving():
    leaf = collision_leaf(CollisionParams(r_w=1.0, alpha=0.0, eta_damp=1.0))
    rmp = leaf.natural_rmp(np.array([0.5]), np.array([0.4]))
    np.testing.assert_array_equal(rmp.M, [[0.0]])
    np.testing.assert_array_equal(rmp.f, [0.0])


@given(st.floats(1e-3, 0.99), st.floats(-3.0, 3.0))
def test_collision_fast_path_matches_generic(s, sd):
    leaf = collision_leaf(CollisionParams(r_w=1.0, sigma=0.7, alpha=0.3, eta_damp=0.5, epsilon=0.01))
    x, xd = np.array([s]), np.array([sd])
    fast = leaf.natural_rmp(x, xd)
    from rmpflab.gds import gds_natural_rmp
    ref = gds_natural_rmp(leaf, x, xd)
    np.testing.assert_allclose(fast.f, ref.f, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(fast.M, ref.M, rtol=1e-12, atol=1e-12)


@given(st.floats(1e-3, 1.5), st.floats(-3.0, 3.0))
def test_collision_Xi_nonnegative(s, sd):
    c = collision_leaf(CollisionParams(r_w=1.0)).curvature_terms(np.array([s]), np.array([sd]))
    assert c.Xi[0, 0] >= -1e-12


@given(st.floats(0.05, 0.95), st.floats(-2.0, -0.05))
def test_collision_curvature_oracle(s, sd):
    leaf = collision_leaf(CollisionParams(r_w=1.0, sigma=0.5, alpha=1e-3))
    a = leaf.curvature_terms(np.array([s]), np.array([sd]))
    n = leaf.fd_curvature_terms(np.array([s]), np.array([sd]), h=1e-7)
    np.testing.assert_allclose(a.Xi, n.Xi, rtol=1e-4, atol=1e-9)
    np.testing.assert_allclose(a.xi, n.xi, rtol=1e-4, atol=1e-9)


def test_collision_params_validation():
    with pytest.raises(ValueError):
        CollisionParams(r_w=0.0)
    with pytest.raises(ValueError):
        CollisionParams(alpha=-1.0)


# -- attractor -----------------------------------------------------------------------------

def test_soft_normalize():
    np.testing.assert_array_equal(soft_normalize(np.zeros(2), 1.0), np.zeros(2))
    np.testing.assert_allclose(soft_normalize(np.array([3.0, 4.0]), 1.0), [0.6, 0.8], atol=1e-3)


def test_softmax_gradient_examples():
    np.testing.assert_array_equal(attractor_potential_grad(np.zeros(2), 1.0), np.zeros(2))
    np.testing.assert_allclose(attractor_potential_grad(np.array([1.0, 0.0]), 1.0), [np.tanh(1.0), 0.0])
    assert np.linalg.norm(attractor_potential_grad(np.array([10.0, 0.0]), 1.0)) > 0.999


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_softmax_gradient_is_gradient(x, y):
    p = np.array([x, y])
    if np.linalg.norm(p) < 1e-2:
        return
    fd = finite_diff_grad(lambda z: softmax_potential(z, 2.0), p, h=1e-6, order=4)
    np.testing.assert_allclose(attractor_potential_grad(p, 2.0), fd, atol=1e-7)


def test_uniform_metric_limits():
    p = AttractorParams(w_u=10.0, w_l=1.0, sigma_gamma=0.5)
    np.testing.assert_allclose(attractor_metric(np.zeros(2), p), 10.0 * np.eye(2))
    np.testing.assert_allclose(attractor_metric(np.array([5.0, 0.0]), p), np.eye(2), atol=1e-6)


def test_stretch_metric_at_goal():
    p = AttractorParams(w_u=10.0, metric_kind="stretch", eps_stretch=1e-2)
    np.testing.assert_allclose(attractor_metric(np.zeros(2), p), 10.0 * 1.01 * np.eye(2))


def test_attractor_equilibrium_at_goal():
    leaf = attractor_leaf(AttractorParams())
    rmp = leaf.natural_rmp(np.zeros(2), np.zeros(2))
    np.testing.assert_array_equal(rmp.f, np.zeros(2))


def test_attractor_constant_weight_no_curvature():
    p = AttractorParams(w_u=2.0, w_l=2.0)
    np.testing.assert_allclose(attractor_curvature_accel(np.array([0.4, 1.0]), np.array([1.0, 2.0]), p),
                               np.zeros(2), atol=1e-15)


def test_attractor_curvature_worked_example():
    p = AttractorParams(w_u=2.0, w_l=1.0, sigma_gamma=1.0)
    x, xd = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    closed = attractor_curvature_accel(x, xd, p)
    np.testing.assert_allclose(closed, [-0.18877, 0.0], atol=1e-5)
    leaf = attractor_leaf(p)
    G = leaf.metric(x, xd)
    fd = -np.linalg.solve(G, leaf.fd_curvature_terms(x, xd, h=1e-6).xi)
    np.testing.assert_allclose(closed, fd, atol=1e-4)


@pytest.mark.parametrize("kind", ["uniform", "stretch"])
def test_attractor_potential_value_matches_gradient(kind):
    p = AttractorParams(metric_kind=kind, sigma_gamma=0.7)
    leaf = attractor_leaf(p)
    x = np.array([0.6, -0.4])
    fd = finite_diff_grad(lambda z: attractor_potential_value(z, p), x, h=1e-5, order=4)
    np.testing.assert_allclose(leaf.potential_grad(x), fd, rtol=1e-6, atol=1e-8)


def test_attractor_forcing_is_integrable():
    p = AttractorParams(sigma_gamma=0.8)
    leaf = attractor_leaf(p)
    assert potential_jacobian_asymmetry(leaf.potential_grad, np.array([0.3, 0.7])) < 1e-4


# -- joint limits ----------------------------------------------------------------------------

def test_jointlimit_midpoint():
    p = JointLimitParams(l_l=(-1.0, 0.0), l_u=(1.0, 2.0), lam=0.5)
    A, xi = jointlimit_diag(np.array([0.0, 1.0]), np.zeros(2), p)
    np.testing.assert_allclose(A, 0.5 * np.eye(2))
    np.testing.assert_allclose(xi, np.zeros(2))


def test_jointlimit_blows_up_near_limit():
    p = JointLimitParams(l_l=(0.0,), l_u=(1.0,))
    a_far = jointlimit_metric_diag(np.array([0.5]), np.array([1.0]), p)[0][0]
    a_near = jointlimit_metric_diag(np.array([0.999]), np.array([5.0]), p)[0][0]
    assert a_near > 1e4 * a_far


def test_jointlimit_domain_error():
    p = JointLimitParams(l_l=(0.0,), l_u=(1.0,))
    with pytest.raises(JointLimitDomainError):
        jointlimit_diag(np.array([1.0]), np.zeros(1), p)


def test_jointlimit_leaf_equilibrium_and_1dof():
    p = JointLimitParams(l_l=(-1.0, -2.0), l_u=(1.0, 2.0), lam=0.25)
    rmp = jointlimit_leaf(p).natural_rmp(np.zeros(2), np.zeros(2))
    np.testing.assert_allclose(rmp.f, np.zeros(2))
    np.testing.assert_allclose(rmp.M, 0.25 * np.eye(2))
    p1 = JointLimitParams(l_l=(0.0,), l_u=(1.0,), q0=(0.5,), lam=1.0)
    rmp1 = jointlimit_leaf(p1).natural_rmp(np.array([0.5]), np.zeros(1))
    np.testing.assert_allclose(rmp1.M, [[1.0]])
    np.testing.assert_allclose(rmp1.f, [0.0])


@given(st.floats(0.02, 0.98), st.floats(-3.0, 3.0))
def test_jointlimit_velocity_monotone(s, qd):
    p = JointLimitParams(l_l=(0.0,), l_u=(1.0,))
    _, _, da_dqd = jointlimit_metric_diag(np.array([s]), np.array([qd]), p)
    assert qd * da_dqd[0] >= -1e-12


@given(st.floats(0.02, 0.98), st.floats(-2.0, 2.0))
def test_jointlimit_partials_match_finite_differences(s, qd):
    p = JointLimitParams(l_l=(0.0,), l_u=(1.0,), sigma=0.3)
    q, v = np.array([s]), np.array([qd])
    a, da_dq, da_dqd = jointlimit_metric_diag(q, v, p)
    h = 1e-7
    fd_q = (jointlimit_metric_diag(q + h, v, p)[0] - jointlimit_metric_diag(q - h, v, p)[0]) / (2 * h)
    fd_v = (jointlimit_metric_diag(q, v + h, p)[0] - jointlimit_metric_diag(q, v - h, p)[0]) / (2 * h)
    np.testing.assert_allclose(da_dq, fd_q, rtol=1e-5, atol=1e-6 * (1 + abs(a[0])))
    np.testing.assert_allclose(da_dqd, fd_v, rtol=1e-5, atol=1e-6 * (1 + abs(a[0])))


# -- damper and 1-D leaf --------------------------------------------------------------------

def test_cspace_damper():
    leaf = cspace_damper_leaf(3, lambda_m=0.0, c=2.0)
    qd = np.array([1.0, -2.0, 0.5])
    rmp = leaf.natural_rmp(np.zeros(3), qd)
    np.testing.assert_allclose(rmp.f, -2.0 * qd)
    np.testing.assert_array_equal(rmp.M, np.zeros((3, 3)))
    tree = RmpTree(3)
    tree.add("damp", identity_map(3), cspace_damper_leaf(3, lambda_m=0.5, c=2.0))
    np.testing.assert_allclose(tree.evaluate(np.zeros(3), qd)[0], -4.0 * qd)


def test_barrier_leaf_variants():
    lin = barrier_1d_leaf(1.0, "linear").damping(np.array([2.0]), np.array([3.0]))
    nl = barrier_1d_leaf(1.0, "nonlinear").damping(np.array([2.0]), np.array([3.0]))
    np.testing.assert_allclose(lin, [[1.5]])
    np.testing.assert_allclose(nl, [[5.5]])
    with pytest.raises(ValueError):
        barrier_1d_leaf(1.0, "cubic")


@pytest.mark.parametrize("c", [0.5, 3.0])
def test_metric_scaling_homogeneity(c):
    base = collision_leaf(CollisionParams(r_w=1.0, alpha=0.2, eta_damp=0.4))
    x, xd = np.array([0.4]), np.array([-0.8])
    r1 = base.natural_rmp(x, xd)
    scaled = collision_leaf(CollisionParams(r_w=1.0, alpha=0.2, eta_damp=0.4))
    m, d, g = scaled.metric, scaled.damping, scaled.potential_grad
    cf = scaled.curvature_fn
    from rmpflab.gds import CurvaturePair, GdsLeaf, gds_natural_rmp
    leaf = GdsLeaf(1, lambda a, b: c * m(a, b), lambda a, b: c * d(a, b), lambda a: c * g(a),
                   curvature_fn=lambda a, b: CurvaturePair(c * cf(a, b).Xi, c * cf(a, b).xi))
    r2 = gds_natural_rmp(leaf, x, xd)
    np.testing.assert_allclose(r2.f, c * r1.f, rtol=1e-13)
    np.testing.assert_allclose(r2.M, c * r1.M, rtol=1e-13)
