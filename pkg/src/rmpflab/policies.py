"""Concrete leaf RMPs: barrier collision avoidance, attractors, joint limits and a C-space damper."""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .gds import CurvaturePair, GdsLeaf
from .rmp import NaturalRmp

S_MIN = 1e-6


# -- collision avoidance on a 1-D distance space ---------------------------------------------

@dataclass(frozen=True)
class CollisionParams:
    r_w: float = 1.0
    sigma: float = 0.5
    alpha: float = 1e-3
    eta_damp: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        if self.r_w <= 0 or self.sigma <= 0:
            raise ValueError("r_w and sigma must be positive")
        if self.alpha < 0 or self.eta_damp < 0 or self.epsilon < 0:
            raise ValueError("alpha, eta_damp and epsilon must be non-negative")


def collision_w(s, r_w, s_min=S_MIN):
    """Barrier weight ``(r_w - s)_+^2 / s`` and its derivative in ``s``."""
    s = max(float(s), s_min)
    if s >= r_w:
        return 0.0, 0.0
    return (r_w - s) ** 2 / s, 1.0 - r_w * r_w / (s * s)


def collision_w_dd(s, r_w, s_min=S_MIN):
    s = max(float(s), s_min)
    return 0.0 if s >= r_w else 2.0 * r_w * r_w / s ** 3


def collision_u(sdot, sigma):
    """Velocity gate ``1 - exp(-sdot^2 / 2 sigma^2)`` for ``sdot < 0`` (else 0) and its derivative."""
    if sdot >= 0:
        return 0.0, 0.0
    e = np.exp(-sdot * sdot / (2.0 * sigma * sigma))
    return 1.0 - e, (sdot / (sigma * sigma)) * e


def collision_leaf(params=CollisionParams(), curvature=True):
    """Barrier RMP on a distance coordinate ``s`` with metric ``g = w(s) (u(sdot) + epsilon)``.

    Damping is ``eta_damp * g`` so the leaf goes fully inert (zero force and inertia) when
    the distance is not shrinking and ``epsilon = 0``.
    """
    p = params

    def parts(s, sd):
        w, dw = collision_w(s[0], p.r_w)
        u, du = collision_u(sd[0], p.sigma)
        return w, dw, u + p.epsilon, du

    def metric(s, sd):
        w, _, u, _ = parts(s, sd)
        return np.array([[w * u]])

    def damping(s, sd):
        w, _, u, _ = parts(s, sd)
        return np.array([[p.eta_damp * w * u]])

    def potential_grad(s):
        w, dw = collision_w(s[0], p.r_w)
        return np.array([p.alpha * w * dw])

    def potential_value(s):
        w, _ = collision_w(s[0], p.r_w)
        return 0.5 * p.alpha * w * w

    def curvature_fn(s, sd):
        w, dw, u, du = parts(s, sd)
        v = sd[0]
        return CurvaturePair(np.array([[0.5 * v * w * du]]), np.array([0.5 * u * dw * v * v]))

    leaf = CollisionLeaf(1, metric, damping, potential_grad, potential_value,
                         curvature_fn=curvature_fn, curvature=curvature, name="collision")
    leaf.params = p
    return leaf


class CollisionLeaf(GdsLeaf):
    """Collision GDS with a scalar closed-form ``natural_rmp`` (same result, less overhead)."""

    def natural_rmp(self, x, xdot):
        p = self.params
        s, v = float(x[0]), float(xdot[0])
        w, dw = collision_w(s, p.r_w)
        if w == 0.0:
            return NaturalRmp(np.zeros(1), np.zeros((1, 1)))
        u, du = collision_u(v, p.sigma)
        g = w * (u + p.epsilon)
        f = -p.alpha * w * dw - p.eta_damp * g * v
        m = g
        if self.curvature:
            f -= 0.5 * (u + p.epsilon) * dw * v * v
            m += 0.5 * v * w * du
        return NaturalRmp(np.array([f]), np.array([[m]]))


def orbit_collision_leaf(epsilon=1e-6, alpha=0.0, damping=0.0, curvature=True, s_min=S_MIN):
    """Distance-space leaf of the 2-D particle studies.

    Metric ``w(x) u(xdot)`` with ``w = 1/x^4`` and ``u = epsilon + min(0, xdot) xdot``;
    barrier potential ``alpha w^2 / 2``; damping ``damping * w * u``.
    """
    def w_parts(x):
        x = max(float(x), s_min)
        return x ** -4, -4.0 * x ** -5

    def u_parts(v):
        m = min(0.0, v)
        return epsilon + m * v, 2.0 * m

    def metric(s, sd):
        return np.array([[w_parts(s[0])[0] * u_parts(sd[0])[0]]])

    def damp(s, sd):
        return np.array([[damping * w_parts(s[0])[0] * u_parts(sd[0])[0]]])

    def potential_grad(s):
        w, dw = w_parts(s[0])
        return np.array([alpha * w * dw])

    def potential_value(s):
        return 0.5 * alpha * w_parts(s[0])[0] ** 2

    def curvature_fn(s, sd):
        w, dw = w_parts(s[0])
        u, du = u_parts(sd[0])
        v = sd[0]
        return CurvaturePair(np.array([[0.5 * v * w * du]]), np.array([0.5 * v * v * u * dw]))

    return GdsLeaf(1, metric, damp, potential_grad, potential_value,
                   curvature_fn=curvature_fn, curvature=curvature, name="orbit_collision")


# -- attractors -----------------------------------------------------------------------------

@dataclass(frozen=True)
class AttractorParams:
    eta_softmax: float = 10.0
    w_u: float = 10.0
    w_l: float = 1.0
    sigma_gamma: float = 1.0
    sigma_alpha: float = 1.0
    eps_stretch: float = 1e-2
    damp: float = 1.0
    metric_kind: str = "uniform"
    potential_kind: str = "softmax"

    def __post_init__(self):
        if self.eta_softmax <= 0 or self.sigma_gamma <= 0 or self.sigma_alpha <= 0:
            raise ValueError("eta_softmax, sigma_gamma and sigma_alpha must be positive")
        if not 0 <= self.w_l <= self.w_u:
            raise ValueError("need 0 <= w_l <= w_u")
        if self.eps_stretch <= 0 or self.damp < 0:
            raise ValueError("eps_stretch must be positive and damp non-negative")
        if self.metric_kind not in ("uniform", "stretch"):
            raise ValueError(f"unknown metric_kind {self.metric_kind!r}")
        if self.potential_kind not in ("softmax", "softnorm"):
            raise ValueError(f"unknown potential_kind {self.potential_kind!r}")


def soft_norm_h(gamma, alpha):
    """``h(gamma) = gamma + log(1 + exp(-2 alpha gamma)) / alpha``."""
    return gamma + np.log1p(np.exp(-2.0 * alpha * gamma)) / alpha


def soft_normalize(v, alpha):
    """``v / h(|v|)``; tends to the unit vector for large ``v`` and to 0 smoothly at 0."""
    v = np.asarray(v, dtype=float)
    return v / soft_norm_h(np.linalg.norm(v), alpha)


def softmax_slope(r, eta):
    """``s(r) = (1 - e^{-2 eta r}) / (1 + e^{-2 eta r})``, i.e. ``tanh(eta r)``."""
    e = np.exp(-2.0 * eta * r)
    return (1.0 - e) / (1.0 + e)


def softmax_potential(x, eta):
    r = np.linalg.norm(x)
    return r + np.log1p(np.exp(-2.0 * eta * r)) / eta


def attractor_potential_grad(x, eta_softmax):
    """Gradient ``s(|x|) x_hat`` of the eta-scaled softmax potential; 0 at the origin."""
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x)
    if r == 0.0:
        return np.zeros_like(x)
    return softmax_slope(r, eta_softmax) * x / r


def _radial_slope(r, p):
    """kappa(r) with grad Phi_tilde = kappa(|x|) x_hat."""
    if p.potential_kind == "softmax":
        return softmax_slope(r, p.eta_softmax)
    return r / soft_norm_h(r, p.eta_softmax)


def _shaping_grad(x, p):
    r = np.linalg.norm(x)
    if r == 0.0:
        return np.zeros_like(x)
    return _radial_slope(r, p) * x / r


def attractor_weight(x, p):
    """``w(x) = (w_u - w_l) gamma(x) + w_l`` and its gradient."""
    x = np.asarray(x, dtype=float)
    gamma = np.exp(-(x @ x) / (2.0 * p.sigma_gamma ** 2))
    w = (p.w_u - p.w_l) * gamma + p.w_l
    return w, -(p.w_u - p.w_l) * gamma / p.sigma_gamma ** 2 * x


def attractor_metric(x, params):
    x = np.asarray(x, dtype=float)
    w, _ = attractor_weight(x, params)
    if params.metric_kind == "uniform":
        return w * np.eye(x.size)
    a = np.exp(-(x @ x) / (2.0 * params.sigma_alpha ** 2))
    g = _shaping_grad(x, params)
    return w * ((1.0 - a) * np.outer(g, g) + (a + params.eps_stretch) * np.eye(x.size))


def _radial_metric_factor(r, p):
    """Scalar c(r) with ``M(x) grad Phi_tilde = c(|x|) grad Phi_tilde``."""
    w = (p.w_u - p.w_l) * np.exp(-r * r / (2.0 * p.sigma_gamma ** 2)) + p.w_l
    if p.metric_kind == "uniform":
        return w
    a = np.exp(-r * r / (2.0 * p.sigma_alpha ** 2))
    k = _radial_slope(r, p)
    return w * ((1.0 - a) * k * k + a + p.eps_stretch)


@lru_cache(maxsize=None)
def _radial_potential_cached(r, p):
    val, _ = quad(lambda t: _radial_metric_factor(t, p) * _radial_slope(t, p), 0.0, r,
                  epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def attractor_potential_value(x, params):
    """Potential whose gradient is ``M(x) grad Phi_tilde``; zero at the goal.

    Both fields are radial, so the potential is a 1-D line integral from the goal.
    """
    r = float(np.linalg.norm(x))
    return _radial_potential_cached(r, params)


def attractor_leaf(params=AttractorParams(), dim=2, curvature=True):
    """Attractor GDS on ``y = x - goal``.

    The resulting motion is ``xddot = -grad Phi_tilde - damp * xdot - M^-1 xi_M``:
    the potential gradient is ``M grad Phi_tilde`` and damping ``damp * w(x) I``.
    """
    p = params

    def metric(x, xd):
        return attractor_metric(x, p)

    def damping(x, xd):
        w, _ = attractor_weight(x, p)
        return p.damp * w * np.eye(np.size(x))

    def potential_grad(x):
        return attractor_metric(x, p) @ _shaping_grad(np.asarray(x, dtype=float), p)

    def potential_value(x):
        return attractor_potential_value(x, p)

    curvature_fn = None
    if p.metric_kind == "uniform":
        def curvature_fn(x, xd):
            _, gw = attractor_weight(x, p)
            n = np.size(x)
            xi = (np.outer(xd, xd) - 0.5 * (xd @ xd) * np.eye(n)) @ gw
            return CurvaturePair(np.zeros((n, n)), xi)

    leaf = GdsLeaf(dim, metric, damping, potential_grad, potential_value,
                   curvature_fn=curvature_fn, velocity_free=True, curvature=curvature,
                   name=f"attractor_{p.metric_kind}")
    leaf.params = p
    return leaf


def attractor_curvature_accel(x, xdot, params):
    """Closed form ``1/2 |xdot|^2 H_xdot[grad log w]`` of ``-M_uni^-1 xi_M``."""
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    w, gw = attractor_weight(x, params)
    glog = gw / w
    nv = np.linalg.norm(xdot)
    if nv == 0.0:
        return np.zeros_like(x)
    vh = xdot / nv
    return 0.5 * nv * nv * (glog - 2.0 * vh * (vh @ glog))


# -- joint limits ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointLimitParams:
    l_l: tuple
    l_u: tuple
    q0: tuple = None
    sigma: float = 0.1
    lam: float = 0.25
    eta_p: float = 1.0
    eta_d: float = 2.0

    def __post_init__(self):
        lo = np.asarray(self.l_l, dtype=float)
        hi = np.asarray(self.l_u, dtype=float)
        if lo.shape != hi.shape or np.any(lo >= hi):
            raise ValueError("joint limits need l_l < l_u for every joint")
        if self.sigma <= 0 or self.lam <= 0 or self.eta_p < 0 or self.eta_d < 0:
            raise ValueError("invalid joint-limit gains")
        object.__setattr__(self, "l_l", tuple(lo))
        object.__setattr__(self, "l_u", tuple(hi))
        q0 = 0.5 * (lo + hi) if self.q0 is None else np.asarray(self.q0, dtype=float)
        object.__setattr__(self, "q0", tuple(q0))


class JointLimitDomainError(ValueError):
    pass


def _jl_b(q, qd, p):
    """Per-joint ``b`` with partial derivatives in q and qdot."""
    lo = np.asarray(p.l_l)
    hi = np.asarray(p.l_u)
    if np.any(q <= lo) or np.any(q >= hi):
        raise JointLimitDomainError("joint angle at or beyond its limit")
    span = hi - lo
    s = (q - lo) / span
    d = 4.0 * s * (1.0 - s)
    dd_ds = 4.0 * (1.0 - 2.0 * s)
    two_s2 = 2.0 * p.sigma ** 2
    qp = np.maximum(qd, 0.0)
    qm = np.minimum(qd, 0.0)
    eu = np.exp(-qp * qp / two_s2)
    el = np.exp(-qm * qm / two_s2)
    au, al = 1.0 - eu, 1.0 - el
    dau = qp / p.sigma ** 2 * eu
    dal = qm / p.sigma ** 2 * el
    b = s * (au * d + 1.0 - au) + (1.0 - s) * (al * d + 1.0 - al)
    db_dq = ((au * d + 1.0 - au) - (al * d + 1.0 - al) + (s * au + (1.0 - s) * al) * dd_ds) / span
    db_dqd = s * (d - 1.0) * dau + (1.0 - s) * (d - 1.0) * dal
    return b, db_dq, db_dqd


def jointlimit_metric_diag(q, qd, p):
    """Diagonal ``a = lam / b^2`` and its partials ``da/dq``, ``da/dqdot``."""
    b, db_dq, db_dqd = _jl_b(np.asarray(q, dtype=float), np.asarray(qd, dtype=float), p)
    a = p.lam / (b * b)
    k = -2.0 * p.lam / b ** 3
    return a, k * db_dq, k * db_dqd


def jointlimit_diag(q, qdot, params):
    """``(A, xi_A)`` with ``xi_A = diag(1/2 dA_ii/dq_i qdot_i^2)``."""
    qdot = np.asarray(qdot, dtype=float)
    a, da_dq, _ = jointlimit_metric_diag(q, qdot, params)
    return np.diag(a), 0.5 * da_dq * qdot * qdot


class JointLimitLeaf(GdsLeaf):
    """Joint-limit RMP ``[A qddot_l, A]`` on the configuration space (identity edge).

    ``qddot_l = eta_p (q0 - q) - eta_d qdot - A^-1 xi_A``.  The inertia is ``A`` itself,
    so the leaf is not a GDS in the strict sense; its metric still satisfies the
    velocity-monotonicity condition that keeps ``Xi_A`` positive semidefinite.
    """

    def __init__(self, params, curvature=True):
        p = params
        n = len(p.l_l)
        self.params = p
        q0 = np.asarray(p.q0)

        def metric(q, qd):
            return np.diag(jointlimit_metric_diag(q, qd, p)[0])

        def damping(q, qd):
            return p.eta_d * metric(q, qd)

        def potential_grad(q):
            # the posture spring is scaled by A at evaluation time; see natural_rmp
            return p.eta_p * (np.asarray(q) - q0)

        def curvature_fn(q, qd):
            qd = np.asarray(qd, dtype=float)
            _, da_dq, da_dqd = jointlimit_metric_diag(q, qd, p)
            return CurvaturePair(np.diag(0.5 * qd * da_dqd), 0.5 * da_dq * qd * qd)

        super().__init__(n, metric, damping, potential_grad, None, curvature_fn=curvature_fn,
                         curvature=curvature, name="joint_limit")

    def natural_rmp(self, q, qdot):
        p = self.params
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        a, da_dq, _ = jointlimit_metric_diag(q, qdot, p)
        force = a * (p.eta_p * (np.asarray(p.q0) - q) - p.eta_d * qdot)
        if self.curvature:
            force = force - 0.5 * da_dq * qdot * qdot
        return NaturalRmp(force, np.diag(a))


def jointlimit_leaf(params, curvature=True):
    return JointLimitLeaf(params, curvature=curvature)


# -- configuration-space damper -------------------------------------------------------------

def cspace_damper_leaf(dim, lambda_m=0.0, c=1.0):
    """``G = lambda_m I``, ``B = c I``, ``Phi = 0``; keeps the root damping positive definite."""
    if lambda_m < 0 or c <= 0:
        raise ValueError("need lambda_m >= 0 and c > 0")
    G = lambda_m * np.eye(dim)
    B = c * np.eye(dim)
    return GdsLeaf(dim, lambda x, xd: G, lambda x, xd: B, lambda x: np.zeros(dim),
                   lambda x: 0.0, curvature_fn=lambda x, xd: CurvaturePair(np.zeros((dim, dim)), np.zeros(dim)),
                   velocity_free=True, name="cspace_damper")


def quadratic_leaf(dim, target, metric=1.0, damping=1.0, curvature=True):
    """Constant-metric spring-damper ``G = metric I``, ``Phi = metric/2 |x - target|^2``."""
    target = np.asarray(target, dtype=float)
    G = metric * np.eye(dim)
    B = damping * np.eye(dim)
    return GdsLeaf(dim, lambda x, xd: G, lambda x, xd: B,
                   lambda x: metric * (np.asarray(x) - target),
                   lambda x: 0.5 * metric * float((np.asarray(x) - target) @ (np.asarray(x) - target)),
                   curvature_fn=lambda x, xd: CurvaturePair(np.zeros((dim, dim)), np.zeros(dim)),
                   velocity_free=True, curvature=curvature, name="quadratic")


def barrier_1d_leaf(x0, damping_variant="linear", curvature=True):
    """The 1-D barrier-space leaf: ``G = 1``, ``Phi = (x - x0)^2 / 2``.

    ``damping_variant`` selects ``B = 1 + 1/x`` ("linear") or ``B = 1 + xdot^2/x`` ("nonlinear").
    """
    if damping_variant not in ("linear", "nonlinear"):
        raise ValueError(f"unknown damping variant {damping_variant!r}")

    def damping(x, xd):
        if damping_variant == "linear":
            return np.array([[1.0 + 1.0 / x[0]]])
        return np.array([[1.0 + xd[0] ** 2 / x[0]]])

    return GdsLeaf(1, lambda x, xd: np.ones((1, 1)), damping,
                   lambda x: np.array([x[0] - x0]), lambda x: 0.5 * (x[0] - x0) ** 2,
                   curvature_fn=lambda x, xd: CurvaturePair(np.zeros((1, 1)), np.zeros(1)),
                   velocity_free=True, curvature=curvature, name="barrier_1d")
