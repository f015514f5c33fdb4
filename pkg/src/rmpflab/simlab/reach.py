"""Desk-scale reaching-through-clutter suite: a planar arm, circular obstacles, RMPflow and PF baselines."""

import math
from dataclasses import dataclass, field

import numpy as np

from ..gds import CurvaturePair, GdsLeaf
from ..policies import (AttractorParams, CollisionParams, JointLimitParams, attractor_leaf,
                        attractor_weight, collision_leaf, collision_w, cspace_damper_leaf, jointlimit_leaf)
from ..rmp import RmpTree
from ..taskmaps import (PlanarArm, arm_control_point_map, identity_map, offset_map,
                        sphere_distance_map)
from .integrate import SimSettings, simulate, tree_energy, tree_policy

PF_SCALINGS = {"baseline": (1.0, 1.0), "low": (3.0, 10.0), "med": (5.0, 50.0), "high": (10.0, 100.0)}
PF_KINDS = ("basic", "nonlinear")


@dataclass
class Scene:
    name: str
    obstacles: list  # [(center, radius)]


@dataclass
class PfBaselineSpec:
    kind: str = "basic"
    scaling: str = "baseline"

    def __post_init__(self):
        if self.kind not in PF_KINDS:
            raise ValueError(f"unknown PF kind {self.kind!r}")
        if self.scaling not in PF_SCALINGS:
            raise ValueError(f"unknown PF scaling {self.scaling!r}")

    @property
    def weights(self):
        return PF_SCALINGS[self.scaling]

    @property
    def label(self):
        return f"pf_{self.kind}_{self.scaling}"


@dataclass
class ReachParams:
    """Gains shared by RMPflow and the baselines (weights match across methods)."""

    collision: CollisionParams = field(default_factory=lambda: CollisionParams(
        r_w=0.2, sigma=0.5, alpha=1e-2, eta_damp=1.0))
    attractor: AttractorParams = field(default_factory=lambda: AttractorParams(
        eta_softmax=10.0, w_u=10.0, w_l=1.0, sigma_gamma=0.2, sigma_alpha=0.2, damp=2.0,
        metric_kind="uniform"))
    attractor_gain: float = 4.0
    joint_limit_lambda: float = 0.25
    joint_limit_sigma: float = 0.1
    joint_limits: tuple = (-2.8, 2.8)
    damper: float = 0.05
    pf_contact_clearance: float = 0.02
    pf_repulsion: float = 4.0
    pf_cspace_weight: float = 0.01
    pf_gamma_p: float = 1.0
    pf_gamma_d: float = 2.0


def make_arm(link_lengths=(0.4, 0.35, 0.25), control_points=((0, 1.0), (1, 0.5), (1, 1.0), (2, 1.0))):
    return PlanarArm(list(link_lengths), [tuple(c) for c in control_points])


def _gain_scaled(leaf, gain):
    """Scale the potential gradient of a leaf by ``gain`` (stiffer attractor)."""
    base_grad, base_val = leaf.potential_grad, leaf.potential_value
    leaf.potential_grad = lambda y: gain * base_grad(y)
    leaf.potential_value = lambda y: gain * base_val(y)
    return leaf


def rmpflow_tree(arm, scene, target, params=ReachParams(), q_rest=None):
    """Collision leaves on every (control point, obstacle) distance, attractor on the tip,
    joint limits and a C-space damper."""
    tree = RmpTree(arm.dof)
    for k in range(len(arm.control_points)):
        cp = tree.add(f"cp{k}", arm_control_point_map(arm, k))
        for j, (center, radius) in enumerate(scene.obstacles):
            cp.add(f"obs{j}", sphere_distance_map(center, radius), collision_leaf(params.collision))
    tip = tree.add("tip", arm_control_point_map(arm, len(arm.control_points) - 1))
    tip.add("goal", offset_map(target), _gain_scaled(attractor_leaf(params.attractor, dim=2),
                                                      params.attractor_gain))
    lo, hi = params.joint_limits
    jl = JointLimitParams(l_l=(lo,) * arm.dof, l_u=(hi,) * arm.dof, q0=q_rest,
                          sigma=params.joint_limit_sigma, lam=params.joint_limit_lambda)
    tree.add("joint_limits", identity_map(arm.dof), jointlimit_leaf(jl))
    tree.add("damper", identity_map(arm.dof), cspace_damper_leaf(arm.dof, 0.0, params.damper))
    return tree


def pf_max_weight(params):
    """``w_o^max``: the barrier weight of the RMPflow collision leaf at the contact clearance."""
    return collision_w(params.pf_contact_clearance, params.collision.r_w)[0]


def pf_obstacle_leaf(center_radius, w_max, repulsion, r_w, nonlinear):
    """Isotropic obstacle leaf on the control-point offset ``y = x - center``.

    Metric ``w I`` with ``w = w_max`` (basic kind) or the RMPflow barrier weight clipped to
    ``w_max`` (nonlinear kind), and a bounded repulsive acceleration
    ``repulsion ((r_w - s)_+/r_w)^2`` along the outward normal.  No curvature terms.
    """
    _, radius = center_radius

    def proximity(y):
        r = float(np.linalg.norm(y))
        s = r - radius
        return s, max(0.0, r_w - s) / r_w, y / r if r > 0 else np.zeros_like(y)

    def metric(y, yd):
        s, _, _ = proximity(y)
        w = min(collision_w(s, r_w)[0], w_max) if nonlinear else w_max
        return w * np.eye(2)

    def force(y):
        _, p, n = proximity(y)
        return metric(y, None) @ (repulsion * p * p * n)

    leaf = GdsLeaf(2, metric, lambda y, yd: np.zeros((2, 2)), lambda y: -force(y),
                   curvature=False, velocity_free=True, name="pf_obstacle")
    return leaf


def pf_attractor_leaf(attractor, gain, nonlinear):
    """Attractor with the shared softmax potential and an isotropic metric."""
    p = attractor

    def weight(y):
        return attractor_weight(y, p)[0] if nonlinear else p.w_u

    def metric(y, yd):
        return weight(y) * np.eye(2)

    def potential_grad(y):
        from ..policies import attractor_potential_grad
        return weight(y) * gain * attractor_potential_grad(y, p.eta_softmax)

    return GdsLeaf(2, metric, lambda y, yd: p.damp * weight(y) * np.eye(2), potential_grad,
                   curvature=False, velocity_free=True, name="pf_attractor")


def pf_posture_leaf(dim, weight, gamma_p, gamma_d, q_rest):
    q_rest = np.asarray(q_rest, dtype=float)
    G = weight * np.eye(dim)
    return GdsLeaf(dim, lambda q, qd: G, lambda q, qd: gamma_d * G,
                   lambda q: weight * gamma_p * (np.asarray(q) - q_rest),
                   lambda q: 0.5 * weight * gamma_p * float((np.asarray(q) - q_rest) @ (np.asarray(q) - q_rest)),
                   curvature_fn=lambda q, qd: CurvaturePair(np.zeros((dim, dim)), np.zeros(dim)),
                   velocity_free=True, name="pf_posture")


def pf_baseline_tree(spec, arm, scene, target, params=ReachParams(), q_rest=None):
    """Potential-field baseline: isotropic control-point leaves, curvature terms dropped."""
    obs_scale, c_scale = spec.weights
    nonlinear = spec.kind == "nonlinear"
    tree = RmpTree(arm.dof, use_jdot=True)
    r_w = params.collision.r_w
    for k in range(len(arm.control_points)):
        cp = tree.add(f"cp{k}", arm_control_point_map(arm, k))
        for j, (center, radius) in enumerate(scene.obstacles):
            cp.add(f"obs{j}", offset_map(center),
                   pf_obstacle_leaf((center, radius), obs_scale * pf_max_weight(params),
                                    params.pf_repulsion, r_w, nonlinear))
    tip = tree.add("tip", arm_control_point_map(arm, len(arm.control_points) - 1))
    tip.add("goal", offset_map(target), pf_attractor_leaf(params.attractor, params.attractor_gain,
                                                          nonlinear))
    q_rest = np.zeros(arm.dof) if q_rest is None else q_rest
    tree.add("posture", identity_map(arm.dof),
             pf_posture_leaf(arm.dof, c_scale * params.pf_cspace_weight, params.pf_gamma_p,
                             params.pf_gamma_d, q_rest))
    return tree


def sample_targets(scene, count, rng, radius_range, angle_range, margin, arm=None):
    """Targets in a polar sector, rejecting points within ``margin`` of any obstacle surface."""
    out = []
    tries = 0
    while len(out) < count:
        tries += 1
        if tries > 10000 * count:
            raise RuntimeError("could not sample enough targets; sector too cluttered")
        r = rng.uniform(*radius_range)
        a = rng.uniform(*angle_range)
        p = np.array([r * math.cos(a), r * math.sin(a)])
        if all(np.linalg.norm(p - np.asarray(c)) - rad > margin for c, rad in scene.obstacles):
            out.append(p)
    return out


def control_point_distance_fn(arm, scene):
    maps = [arm_control_point_map(arm, k) for k in range(len(arm.control_points))]
    obs = [(np.asarray(c, dtype=float), float(r)) for c, r in scene.obstacles]

    def fn(q):
        pts = [m.value(q) for m in maps]
        return min(float(np.linalg.norm(p - c) - r) for p in pts for c, r in obs)
    return fn


def method_labels(methods):
    return [m if isinstance(m, str) else m.label for m in methods]


def build_tree(method, arm, scene, target, params, q_rest):
    if method == "rmpflow":
        return rmpflow_tree(arm, scene, target, params, q_rest)
    return pf_baseline_tree(method, arm, scene, target, params, q_rest)


def run_reach_trial(method, arm, scene, target, q_start, settings, params=ReachParams(), q_rest=None):
    tree = build_tree(method, arm, scene, target, params, q_rest)
    tip = arm.tip_map()
    goal = np.asarray(target, dtype=float)
    return simulate(tree_policy(tree), q_start, np.zeros(arm.dof), settings,
                    energy=None, min_dist=control_point_distance_fn(arm, scene),
                    goal_dist=lambda q: float(np.linalg.norm(tip.value(q) - goal)))


METRIC_NAMES = ("time_to_goal", "cspace_path_length", "min_goal_distance",
                "collision_intensity", "collision_failure")


def summarize(results):
    """Mean and standard deviation per metric; collision intensity over colliding trials only."""
    ms = [r.metrics for r in results]
    cols = {
        "time_to_goal": np.array([m.time_to_goal for m in ms]),
        "cspace_path_length": np.array([m.cspace_path_length for m in ms]),
        "min_goal_distance": np.array([m.min_goal_distance for m in ms]),
        "collision_intensity": np.array([m.collision_intensity for m in ms if m.collided]),
        "collision_failure": np.array([1.0 if m.collided else 0.0 for m in ms]),
    }
    out = {}
    for k in METRIC_NAMES:
        v = cols[k]
        v = v[np.isfinite(v)]
        out[k] = {"mean": float(v.mean()) if v.size else 0.0,
                  "std": float(v.std()) if v.size else 0.0, "n": int(v.size)}
    out["trials"] = len(ms)
    out["failed"] = sum(1 for m in ms if m.failed)
    return out


@dataclass
class SuiteTrial:
    scene: str
    method: str
    index: int
    target: np.ndarray
    result: object

    @property
    def filename(self):
        return f"{self.scene}_{self.method}_{self.index:02d}.csv"


@dataclass
class SuiteResult:
    targets: dict
    trials: list
    summary: dict


def _trial_job(args):
    method, arm, scene, target, q_start, settings, params, q_rest = args
    return run_reach_trial(method, arm, scene, target, q_start, settings, params, q_rest)


def suite_targets(scenes, per_scene, seed, radius_range, angle_range, margin):
    """One target list per scene from a single seeded generator, shared by every method."""
    rng = np.random.default_rng(seed)
    return {sc.name: sample_targets(sc, per_scene, rng, radius_range, angle_range, margin)
            for sc in scenes}


def run_suite(arm, scenes, targets, methods, q_start, settings, params=ReachParams(),
              q_rest=None, jobs=1):
    """Run every (scene, target, method) trial and summarise per method.

    Trials are independent; with ``jobs > 1`` they run in worker processes and are
    collected back in submission order, so results do not depend on scheduling.
    """
    jobs_list = []
    keys = []
    for sc in scenes:
        for i, tgt in enumerate(targets[sc.name]):
            for m in methods:
                label = m if isinstance(m, str) else m.label
                keys.append((sc.name, label, i, np.asarray(tgt)))
                jobs_list.append((m, arm, sc, np.asarray(tgt), np.asarray(q_start, dtype=float),
                                  settings, params, q_rest))
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_trial_job, jobs_list))
    else:
        results = [_trial_job(a) for a in jobs_list]
    trials = [SuiteTrial(s, m, i, t, r) for (s, m, i, t), r in zip(keys, results)]
    summary = {}
    for label in method_labels(methods):
        summary[label] = summarize([t.result for t in trials if t.method == label])
    return SuiteResult(targets, trials, summary)


def summary_rows(summary):
    """Flat rows ``method, metric, mean, std, n`` for CSV output."""
    rows = []
    for method, stats in summary.items():
        for k in METRIC_NAMES:
            rows.append((method, k, stats[k]["mean"], stats[k]["std"], stats[k]["n"]))
    return rows
