"""Controlled 1-D and 2-D studies of curvature terms and of ``Jdot qdot`` in the pullback."""

from dataclasses import dataclass, field

import numpy as np

from ..policies import AttractorParams, attractor_leaf, barrier_1d_leaf, orbit_collision_leaf
from ..rmp import RmpTree
from ..taskmaps import offset_map, reciprocal_map, sphere_distance_map
from .integrate import SimSettings, simulate, tree_energy, tree_policy


# -- 1-D barrier example --------------------------------------------------------------------

def exp1d_tree(x0, use_jdot=True, damping_variant="linear"):
    """``q`` in R, task map ``x = 1/q``, leaf GDS ``G = 1``, ``Phi = (x - x0)^2 / 2``."""
    tree = RmpTree(1, use_jdot=use_jdot)
    tree.add("x", reciprocal_map(), barrier_1d_leaf(x0, damping_variant))
    return tree


def exp1d_designed_accel(x0, damping_variant="linear"):
    """Acceleration of the designed task-space GDS, ``x'' = -(x - x0) - B x'``."""
    leaf = barrier_1d_leaf(x0, damping_variant)

    def accel(x, xd):
        return -leaf.potential_grad(x) - leaf.damping(x, xd) @ xd
    return accel


def to_task_1d(q, qd):
    """``(q, qdot) -> (x, xdot)`` for ``x = 1/q``."""
    q = np.asarray(q, dtype=float)
    return 1.0 / q, -np.asarray(qd, dtype=float) / (q * q)


def to_config_1d(x, xd):
    x = np.asarray(x, dtype=float)
    return 1.0 / x, -np.asarray(xd, dtype=float) / (x * x)


@dataclass
class Exp1dResult:
    runs: dict
    fan: dict
    grids: dict

    def task_trajectory(self, key):
        tr = self.runs[key].trajectory
        x, xd = to_task_1d(tr.q[:, 0], tr.qdot[:, 0])
        return tr.t, x, xd


def exp1d_variants():
    """Variant name -> (use_jdot, damping_variant, runs in task coordinates)."""
    return {
        "designed": (None, "linear", True),
        "with_jdot": (True, "linear", False),
        "no_jdot": (False, "linear", False),
        "nonlinear_designed": (None, "nonlinear", True),
        "nonlinear_no_jdot": (False, "nonlinear", False),
    }


def exp1d_task_accel(variant, x0):
    """Task-space acceleration field ``(x, xdot) -> xddot`` actually produced by a variant."""
    use_jdot, damping, designed = exp1d_variants()[variant]
    if designed:
        return exp1d_designed_accel(x0, damping)
    tree = exp1d_tree(x0, use_jdot, damping)
    rmap = reciprocal_map()

    def accel(x, xd):
        q, qd = to_config_1d(x, xd)
        qdd = tree.evaluate(q, qd)[0]
        return rmap.jacobian(q) @ qdd + rmap.jdot_xdot(q, qd)
    return accel


def phase_grid(accel, x_range, xd_range, n):
    """Rows ``x, xdot, xddot`` on an ``n`` x ``n`` grid (phase-portrait data)."""
    rows = []
    for x in np.linspace(x_range[0], x_range[1], n):
        for xd in np.linspace(xd_range[0], xd_range[1], n):
            try:
                a = float(accel(np.array([x]), np.array([xd]))[0])
            except (ValueError, ArithmeticError):
                a = np.nan
            rows.append((x, xd, a))
    return np.array(rows)


def run_exp1d(x0, q0, qd0, settings, fan=(), grid_n=0, x_range=(0.25, 3.0), xd_range=(-2.0, 2.0)):
    """All 1-D variants from one initial configuration state.

    ``designed`` variants integrate the task-space GDS directly in ``x``; the others run
    the RMP-tree in ``q``.  ``fan`` holds extra ``(q0, qd0)`` pairs for phase portraits.
    """
    runs = {}
    for name, (use_jdot, damping, designed) in exp1d_variants().items():
        runs[name] = _run_variant(name, use_jdot, damping, designed, x0, q0, qd0, settings)
    fan_runs = {}
    for i, (fq, fqd) in enumerate(fan):
        for name, (use_jdot, damping, designed) in exp1d_variants().items():
            fan_runs[(name, i)] = _run_variant(name, use_jdot, damping, designed, x0, fq, fqd, settings)
    grids = {}
    if grid_n:
        for name in exp1d_variants():
            grids[name] = phase_grid(exp1d_task_accel(name, x0), x_range, xd_range, grid_n)
    return Exp1dResult(runs, fan_runs, grids)


def _run_variant(name, use_jdot, damping, designed, x0, q0, qd0, settings):
    if designed:
        leaf = barrier_1d_leaf(x0, damping)
        accel = exp1d_designed_accel(x0, damping)

        def energy(x, xd):
            return 0.5 * float(xd @ xd), leaf.potential_value(x)
        xi, xdi = to_task_1d(q0, qd0)
        return simulate(accel, [xi], [xdi], settings, energy=energy)
    tree = exp1d_tree(x0, use_jdot, damping)
    return simulate(tree_policy(tree), [q0], [qd0], settings, energy=tree_energy(tree))


# -- 2-D particle studies -------------------------------------------------------------------

@dataclass
class Obstacle2d:
    center: tuple
    radius: float


def exp2d_tree(obstacle, goal=None, epsilon=1e-6, alpha=0.0, collision_damping=0.0,
               curvature=True, use_jdot=True, attractor=None, attractor_potential=True):
    """Point particle in the plane: obstacle leaf on the distance, optional goal attractor.

    ``attractor_potential=False`` keeps only the attractor metric (for geodesic checks).
    """
    tree = RmpTree(2, use_jdot=use_jdot)
    tree.add("obstacle", sphere_distance_map(obstacle.center, obstacle.radius),
             orbit_collision_leaf(epsilon=epsilon, alpha=alpha, damping=collision_damping,
                                  curvature=curvature))
    if goal is not None:
        p = attractor if attractor is not None else AttractorParams()
        leaf = attractor_leaf(p, dim=2, curvature=curvature)
        if not attractor_potential:
            leaf.potential_grad = lambda y: np.zeros(2)
            leaf.potential_value = lambda y: 0.0
            leaf.damping = lambda y, yd: np.zeros((2, 2))
        tree.add("goal", offset_map(goal), leaf)
    return tree


def orbit_fan(count, start_x, spread, speed, heading=(1.0, 0.0)):
    """Initial states on a vertical segment at ``start_x``, all moving along ``heading``."""
    heading = np.asarray(heading, dtype=float)
    heading = heading / np.linalg.norm(heading)
    ys = np.linspace(-spread, spread, count) if count > 1 else np.zeros(1)
    return [(np.array([start_x, y]), speed * heading) for y in ys]


def obstacle_distance_fn(obstacle):
    c = np.asarray(obstacle.center, dtype=float)
    return lambda q: float(np.linalg.norm(q - c) - obstacle.radius)


def run_exp2d(tree, starts, settings, obstacle, goal=None):
    """Integrate every start; returns a list of :class:`TrialResult`."""
    dist = obstacle_distance_fn(obstacle)
    goal_dist = None
    if goal is not None:
        g = np.asarray(goal, dtype=float)
        goal_dist = lambda q: float(np.linalg.norm(q - g))  # noqa: E731
    out = []
    for q0, qd0 in starts:
        out.append(simulate(tree_policy(tree), q0, qd0, settings, energy=tree_energy(tree),
                            min_dist=dist, goal_dist=goal_dist))
    return out


def vector_field_grid(tree, x_range, y_range, n, velocity):
    """Rows ``x, y, qdd_x, qdd_y`` at a fixed velocity (NaN inside the obstacle)."""
    rows = []
    v = np.asarray(velocity, dtype=float)
    for x in np.linspace(x_range[0], x_range[1], n):
        for y in np.linspace(y_range[0], y_range[1], n):
            q = np.array([x, y])
            try:
                a = tree.evaluate(q, v)[0]
            except Exception:
                a = np.full(2, np.nan)
            rows.append((x, y, a[0], a[1]))
    return np.array(rows)


def straight_line_deviation(traj):
    """Max distance of recorded positions from the line ``q0 + t qdot0``."""
    pred = traj.q[0] + np.outer(traj.t - traj.t[0], traj.qdot[0])
    return float(np.max(np.linalg.norm(traj.q - pred, axis=1)))


def monotone_into_collision(traj):
    """Obstacle distance strictly decreases until it becomes negative."""
    d = traj.min_dist
    hit = np.nonzero(d < 0)[0]
    if hit.size == 0:
        return False
    return bool(np.all(np.diff(d[: hit[0] + 1]) < 0))
