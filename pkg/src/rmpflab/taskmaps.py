"""Differentiable task maps: value, Jacobian and the curvature vector ``Jdot @ xdot``."""

from dataclasses import dataclass, field

import numpy as np

from .numkit import FD_STEP, finite_diff_directional, finite_diff_jacobian


class TaskMapDomainError(ValueError):
    """A task map was evaluated outside its domain."""


class TaskMap:
    """A smooth map ``psi`` from an ``input_dim`` space to an ``output_dim`` space.

    ``jacobian`` and ``jdot_xdot`` are optional; missing derivatives fall back to
    central differences of the value (and of the Jacobian along ``xdot``).
    """

    def __init__(self, input_dim, output_dim, value, jacobian=None, jdot_xdot=None,
                 name="map", h=FD_STEP, fused=None):
        self.input_dim = int(input_dim)
        self.output_dim = int(output_dim)
        self._value = value
        self._jacobian = jacobian
        self._jdot_xdot = jdot_xdot
        self.name = name
        self.h = h
        # optional ``(x, xdot) -> (y, J, Jdot xdot)`` sharing work between the three
        self._fused = fused

    def __repr__(self):
        return f"TaskMap({self.name}: R^{self.input_dim} -> R^{self.output_dim})"

    def value(self, x):
        return np.atleast_1d(np.asarray(self._value(np.asarray(x, dtype=float)), dtype=float))

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self._jacobian is not None:
            J = np.asarray(self._jacobian(x), dtype=float)
            return J.reshape(self.output_dim, self.input_dim)
        return finite_diff_jacobian(self.value, x, self.h).reshape(self.output_dim, self.input_dim)

    def jdot_xdot(self, x, xdot):
        x = np.asarray(x, dtype=float)
        xdot = np.asarray(xdot, dtype=float)
        if self._jdot_xdot is not None:
            return np.atleast_1d(np.asarray(self._jdot_xdot(x, xdot), dtype=float))
        dJ = finite_diff_directional(self.jacobian, x, xdot, self.h)
        return dJ @ xdot

    def apply(self, x, xdot):
        """Pushforward of a state: ``(y, ydot, J, Jdot xdot)``."""
        x = np.asarray(x, dtype=float)
        xdot = np.asarray(xdot, dtype=float)
        if x.shape != (self.input_dim,) or xdot.shape != (self.input_dim,):
            raise ValueError(f"{self.name}: expected state of dim {self.input_dim}, "
                             f"got {x.shape} and {xdot.shape}")
        if self._fused is not None:
            y, J, jdot = self._fused(x, xdot)
            return y, J @ xdot, J, jdot
        y = self.value(x)
        J = self.jacobian(x)
        return y, J @ xdot, J, self.jdot_xdot(x, xdot)


def taskmap_apply(task_map, x, xdot):
    return task_map.apply(x, xdot)


def identity_map(dim):
    eye = np.eye(dim)
    return TaskMap(dim, dim, lambda x: x.copy(), lambda x: eye,
                   lambda x, xd: np.zeros(dim), name="identity")


def offset_map(target):
    """``y = x - target``."""
    target = np.asarray(target, dtype=float)
    dim = target.size
    eye = np.eye(dim)
    return TaskMap(dim, dim, lambda x: x - target, lambda x: eye,
                   lambda x, xd: np.zeros(dim), name="offset")


def linear_map(A, b=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    return TaskMap(A.shape[1], A.shape[0], lambda x: A @ x + b, lambda x: A,
                   lambda x, xd: np.zeros(A.shape[0]), name="linear")


def _check_nonzero(q):
    if q[0] == 0.0:
        raise TaskMapDomainError("reciprocal map is undefined at q = 0")


def reciprocal_map():
    """Barrier-type 1-D map ``x = 1/q``."""
    def value(q):
        _check_nonzero(q)
        return np.array([1.0 / q[0]])

    def jac(q):
        _check_nonzero(q)
        return np.array([[-1.0 / q[0] ** 2]])

    def jdot(q, qd):
        _check_nonzero(q)
        return np.array([2.0 * qd[0] ** 2 / q[0] ** 3])

    return TaskMap(1, 1, value, jac, jdot, name="reciprocal")


def scalar_map(phi, dphi, d2phi, name="scalar"):
    """1-D map from a scalar function with known first and second derivatives."""
    return TaskMap(
        1, 1,
        lambda q: np.array([phi(q[0])]),
        lambda q: np.array([[dphi(q[0])]]),
        lambda q, qd: np.array([d2phi(q[0]) * qd[0] ** 2]),
        name=name,
    )


def sphere_distance_map(center, radius=0.0):
    """Signed distance ``|x - center| - radius`` to a sphere (circle in 2-D)."""
    center = np.asarray(center, dtype=float)
    if radius < 0:
        raise ValueError("radius must be >= 0")
    dim = center.size

    def _offset(x):
        d = x - center
        r = np.sqrt(d @ d)
        if r == 0.0:
            raise TaskMapDomainError("distance direction undefined at the sphere center")
        return d, r

    def value(x):
        _, r = _offset(x)
        return np.array([r - radius])

    def jac(x):
        d, r = _offset(x)
        return (d / r).reshape(1, dim)

    def jdot(x, xd):
        d, r = _offset(x)
        radial = (d / r) @ xd
        return np.array([(xd @ xd - radial * radial) / r])

    def fused(x, xd):
        d, r = _offset(x)
        n = d / r
        radial = n @ xd
        return np.array([r - radius]), n.reshape(1, dim), np.array([(xd @ xd - radial * radial) / r])

    return TaskMap(dim, 1, value, jac, jdot, name="sphere_distance", fused=fused)


def compose_maps(outer, inner):
    """``outer o inner`` with the chain rule for J and for the curvature vector."""
    if inner.output_dim != outer.input_dim:
        raise ValueError(f"cannot compose {outer} after {inner}: dimension mismatch")

    def value(x):
        return outer.value(inner.value(x))

    def jac(x):
        return outer.jacobian(inner.value(x)) @ inner.jacobian(x)

    def jdot(x, xd):
        y = inner.value(x)
        Ji = inner.jacobian(x)
        yd = Ji @ xd
        return outer.jacobian(y) @ inner.jdot_xdot(x, xd) + outer.jdot_xdot(y, yd)

    return TaskMap(inner.input_dim, outer.output_dim, value, jac, jdot,
                   name=f"{outer.name}∘{inner.name}")


@dataclass
class PlanarArm:
    """Serial planar chain with revolute joints; the base sits at ``base``.

    ``control_points`` lists (link index, fraction along that link).
    """

    link_lengths: list
    control_points: list = field(default_factory=list)
    base: tuple = (0.0, 0.0)

    def __post_init__(self):
        self.link_lengths = [float(v) for v in self.link_lengths]
        if not self.link_lengths or min(self.link_lengths) <= 0:
            raise ValueError("link lengths must be positive")
        if not self.control_points:
            self.control_points = [(len(self.link_lengths) - 1, 1.0)]
        pts = []
        for link, frac in self.control_points:
            if not 0 <= int(link) < len(self.link_lengths):
                raise ValueError(f"control point link index {link} out of range")
            if not 0.0 <= float(frac) <= 1.0:
                raise ValueError(f"control point fraction {frac} outside [0, 1]")
            pts.append((int(link), float(frac)))
        self.control_points = pts

    @property
    def dof(self):
        return len(self.link_lengths)

    def _segments(self, point_index):
        link, frac = self.control_points[point_index]
        lengths = np.array(self.link_lengths[: link + 1])
        lengths[-1] *= frac
        return lengths

    def point_map(self, point_index):
        return arm_control_point_map(self, point_index)

    def tip_map(self):
        return arm_control_point_map(self, len(self.control_points) - 1)


def arm_control_point_map(arm, point_index):
    """Workspace position of one control point as a function of the joint angles."""
    if not 0 <= point_index < len(arm.control_points):
        raise IndexError(f"control point {point_index} does not exist")
    seg = arm._segments(point_index)
    n = seg.size
    dof = arm.dof
    base = np.asarray(arm.base, dtype=float)

    def value(q):
        th = np.cumsum(q[:n])
        return base + np.array([seg @ np.cos(th), seg @ np.sin(th)])

    def jac(q):
        th = np.cumsum(q[:n])
        # column k collects every segment at or after joint k
        cx = np.cumsum((-seg * np.sin(th))[::-1])[::-1]
        cy = np.cumsum((seg * np.cos(th))[::-1])[::-1]
        J = np.zeros((2, dof))
        J[0, :n] = cx
        J[1, :n] = cy
        return J

    def jdot(q, qd):
        th = np.cumsum(q[:n])
        thd = np.cumsum(qd[:n])
        w = seg * thd * thd
        return -np.array([w @ np.cos(th), w @ np.sin(th)])

    def fused(q, qd):
        th = np.cumsum(q[:n])
        c, s = np.cos(th), np.sin(th)
        y = base + np.array([seg @ c, seg @ s])
        J = np.zeros((2, dof))
        J[0, :n] = np.cumsum((-seg * s)[::-1])[::-1]
        J[1, :n] = np.cumsum((seg * c)[::-1])[::-1]
        thd = np.cumsum(qd[:n])
        w = seg * thd * thd
        return y, J, -np.array([w @ c, w @ s])

    return TaskMap(dof, 2, value, jac, jdot, name=f"arm_point{point_index}", fused=fused)
