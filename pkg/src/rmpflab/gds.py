"""Geometric dynamical system leaves and their curvature terms.

A GDS on a task space with coordinate ``x`` reads

    (G + Xi_G) xddot + xi_G = -grad Phi - B xdot

with ``Xi_G = 1/2 sum_i xdot_i d_xdot g_i`` and
``xi_G = Gdot_x xdot - 1/2 grad_x (xdot^T G xdot)``.
"""

from dataclasses import dataclass

import numpy as np

from .numkit import FD_STEP, finite_diff_directional, finite_diff_jacobian
from .rmp import NaturalRmp


@dataclass
class CurvaturePair:
    Xi: np.ndarray
    xi: np.ndarray


def _metric_partials(metric, x, xdot, wrt, h, order):
    """Tensor ``T[j, i, k] = d G_ji / d wrt_k``."""
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    m = x.size
    eye = np.eye(m)
    T = np.empty((m, m, m))
    for k in range(m):
        if wrt == "x":
            T[:, :, k] = finite_diff_directional(lambda z: metric(z, xdot), x, eye[k], h, order)
        else:
            T[:, :, k] = finite_diff_directional(lambda z: metric(x, z), xdot, eye[k], h, order)
    return T


def curvature_Xi(metric, x, xdot, h=FD_STEP, order=2):
    """``Xi_G(x, xdot)`` by central differences of the metric in ``xdot``."""
    xdot = np.asarray(xdot, dtype=float)
    T = _metric_partials(metric, x, xdot, "xdot", h, order)
    return 0.5 * np.einsum("jik,i->jk", T, xdot)


def curvature_xi(metric, x, xdot, h=FD_STEP, order=2):
    """``xi_G(x, xdot)`` by central differences of the metric in ``x``."""
    xdot = np.asarray(xdot, dtype=float)
    T = _metric_partials(metric, x, xdot, "x", h, order)
    Gdot_x = np.einsum("jik,k->ji", T, xdot)
    grad_quad = np.einsum("i,ijk,j->k", xdot, T, xdot)
    return Gdot_x @ xdot - 0.5 * grad_quad


def coriolis_matrix(metric, x, xdot, h=FD_STEP, order=2):
    """``C_ij = sum_k xdot_k Gamma_ijk`` from Christoffel symbols of the first kind.

    ``Gamma_ijk = 1/2 (d_k G_ij + d_j G_ik - d_i G_jk)``; the metric is read at fixed ``xdot``.
    """
    xdot = np.asarray(xdot, dtype=float)
    T = _metric_partials(metric, x, xdot, "x", h, order)  # T[i, j, k] = d_k G_ij
    gamma = 0.5 * (T + np.transpose(T, (0, 2, 1)) - np.transpose(T, (2, 0, 1)))
    return np.einsum("ijk,k->ij", gamma, xdot)


class GdsLeaf:
    """A leaf policy given by a metric, a damping matrix and a potential.

    Parameters
    ----------
    dim : int
        Task-space dimension.
    metric, damping : callable ``(x, xdot) -> (dim, dim)``
    potential_grad : callable ``x -> (dim,)``
    potential_value : callable ``x -> float``, optional
        Needed only for energy / Lyapunov diagnostics.
    curvature_fn : callable ``(x, xdot) -> CurvaturePair``, optional
        Closed-form curvature; finite differences are used otherwise.
    velocity_free : bool
        The metric ignores ``xdot``; ``Xi`` is then identically zero.
    curvature : bool
        ``False`` drops ``Xi`` and ``xi`` (ablation).
    """

    def __init__(self, dim, metric, damping, potential_grad, potential_value=None,
                 curvature_fn=None, velocity_free=False, curvature=True, h=FD_STEP,
                 name="gds"):
        self.dim = int(dim)
        self.metric = metric
        self.damping = damping
        self.potential_grad = potential_grad
        self.potential_value = potential_value
        self.curvature_fn = curvature_fn
        self.velocity_free = velocity_free
        self.curvature = curvature
        self.h = h
        self.name = name

    def __repr__(self):
        return f"GdsLeaf({self.name}, dim={self.dim})"

    @property
    def curvature_mode(self):
        return "analytic" if self.curvature_fn is not None else "finite-difference"

    def curvature_terms(self, x, xdot):
        if self.curvature_fn is not None:
            return self.curvature_fn(x, xdot)
        return self.fd_curvature_terms(x, xdot)

    def fd_curvature_terms(self, x, xdot, h=None):
        h = self.h if h is None else h
        if self.velocity_free:
            Xi = np.zeros((self.dim, self.dim))
        else:
            Xi = curvature_Xi(self.metric, x, xdot, h)
        return CurvaturePair(Xi, curvature_xi(self.metric, x, xdot, h))

    def natural_rmp(self, x, xdot):
        return gds_natural_rmp(self, x, xdot)


def gds_natural_rmp(leaf, x, xdot):
    """``f = -xi_G - grad Phi - B xdot``, ``M = G + Xi_G``."""
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    G = np.atleast_2d(leaf.metric(x, xdot))
    f = -np.atleast_1d(leaf.potential_grad(x)) - np.atleast_2d(leaf.damping(x, xdot)) @ xdot
    if not leaf.curvature:
        return NaturalRmp(f, G)
    c = leaf.curvature_terms(x, xdot)
    return NaturalRmp(f - c.xi, G + c.Xi)


def constant(matrix):
    """Wrap a constant matrix as a ``(x, xdot) -> matrix`` callable."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    return lambda x, xdot: matrix


def pulled_back_metric(leaf_maps, x, xdot):
    """``sum J_i^T G_i(y_i, ydot_i) J_i`` for ``[(task_map, leaf)]``; used by oracles."""
    G = 0.0
    for tmap, leaf in leaf_maps:
        J = tmap.jacobian(x)
        y = tmap.value(x)
        G = G + J.T @ np.atleast_2d(leaf.metric(y, J @ xdot)) @ J
    return G


def potential_jacobian_asymmetry(grad_field, x, h=FD_STEP):
    """Max |J - J^T| of the Jacobian of a vector field (integrability test)."""
    J = finite_diff_jacobian(grad_field, x, h)
    return float(np.max(np.abs(J - J.T)))
