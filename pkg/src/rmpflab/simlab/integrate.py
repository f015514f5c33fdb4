"""RK4 integration of a closed-loop acceleration policy, trajectories and trial metrics."""

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass
class SimState:
    t: float
    q: np.ndarray
    qdot: np.ndarray


@dataclass
class SimSettings:
    dt: float = 1e-3
    record_dt: float = 1e-2
    timeout: float = 5.0
    v_eps: float = 1e-3
    a_eps: float = 1e-3
    hold: float = 0.1
    stop_on_convergence: bool = True
    stop_on_collision: bool = False

    def __post_init__(self):
        if self.dt <= 0 or self.record_dt <= 0 or self.timeout <= 0:
            raise ValueError("dt, record_dt and timeout must be positive")
        if self.record_dt < self.dt:
            raise ValueError("record_dt must be at least dt")


class PolicyError(RuntimeError):
    """Policy evaluation failed; ``state`` holds the state it was called at."""

    def __init__(self, state, cause):
        super().__init__(f"policy failed at t={state.t:.6g}: {cause}")
        self.state = state
        self.cause = cause


def _eval(policy, t, q, qd):
    try:
        a = np.asarray(policy(q, qd), dtype=float)
    except Exception as exc:
        raise PolicyError(SimState(t, q, qd), exc) from exc
    return a


def rk4_step(policy, q, qdot, dt, t=0.0):
    """One classical RK4 step of ``(q, qdot)' = (qdot, policy(q, qdot))``.

    Returns the new ``(q, qdot)`` and the acceleration at the start of the step.
    """
    a1 = _eval(policy, t, q, qdot)
    q2, v2 = q + 0.5 * dt * qdot, qdot + 0.5 * dt * a1
    a2 = _eval(policy, t, q2, v2)
    q3, v3 = q + 0.5 * dt * v2, qdot + 0.5 * dt * a2
    a3 = _eval(policy, t, q3, v3)
    q4, v4 = q + dt * v3, qdot + dt * a3
    a4 = _eval(policy, t, q4, v4)
    q_new = q + dt / 6.0 * (qdot + 2.0 * v2 + 2.0 * v3 + v4)
    v_new = qdot + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return q_new, v_new, a1


def integrate_step(policy, state, dt):
    """Advance a :class:`SimState` by one RK4 step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    q, v, _ = rk4_step(policy, np.asarray(state.q, float), np.asarray(state.qdot, float), dt, state.t)
    return SimState(state.t + dt, q, v)


def tree_policy(tree):
    """Adapt an :class:`RmpTree` to a ``(q, qdot) -> qddot`` callable."""
    return lambda q, qd: tree.evaluate(q, qd)[0]


@dataclass
class Trajectory:
    """Recorded samples; ``V`` / ``K`` / ``min_dist`` are NaN where not available."""

    t: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray
    V: np.ndarray
    K: np.ndarray
    min_dist: np.ndarray

    def __len__(self):
        return self.t.size

    @property
    def dof(self):
        return self.q.shape[1]

    def header(self):
        n = self.dof
        return (["t"] + [f"q{i}" for i in range(n)] + [f"qd{i}" for i in range(n)]
                + ["V", "K", "min_dist"])

    def rows(self):
        return np.column_stack([self.t, self.q, self.qdot, self.V, self.K, self.min_dist])

    def to_csv(self, path=None):
        """Write ``t,q0..,qd0..,V,K,min_dist`` with 17 significant digits.

        Returns the text when ``path`` is None.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([format(float(v), ".17g") for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        with open(path, "w", newline="") as fh:
            fh.write(text)
        return None

    @classmethod
    def from_csv(cls, text):
        lines = list(csv.reader(io.StringIO(text)))
        head, data = lines[0], np.array([[float(v) for v in r] for r in lines[1:]])
        n = (len(head) - 4) // 2
        if head != ["t"] + [f"q{i}" for i in range(n)] + [f"qd{i}" for i in range(n)] + ["V", "K", "min_dist"]:
            raise ValueError(f"unexpected trajectory header {head}")
        return cls(data[:, 0], data[:, 1:1 + n], data[:, 1 + n:1 + 2 * n],
                   np.full((data.shape[0], n), np.nan), data[:, -3], data[:, -2], data[:, -1])


@dataclass
class TrialMetrics:
    time_to_goal: float = math.nan
    cspace_path_length: float = 0.0
    min_goal_distance: float = math.nan
    collision_intensity: float = 0.0
    collided: bool = False
    timed_out: bool = False
    converged: bool = False
    failed: bool = False
    reason: str = ""
    steps: int = 0

    def to_dict(self):
        return asdict(self)


@dataclass
class TrialResult:
    trajectory: Trajectory
    metrics: TrialMetrics
    step_V: np.ndarray = field(default=None)


def simulate(policy, q0, qdot0, settings=SimSettings(), energy=None, min_dist=None,
             goal_dist=None, track_step_V=False):
    """Integrate from ``(q0, qdot0)`` until convergence, collision stop or timeout.

    Parameters
    ----------
    policy : callable ``(q, qdot) -> qddot``
    energy : callable ``(q, qdot) -> (K, Phi or None)``, optional
    min_dist : callable ``q -> float``, smallest obstacle distance (collision when < 0)
    goal_dist : callable ``q -> float``, task-space distance to the goal
    track_step_V : keep ``V`` after every integration step (not only at records)
    """
    s = settings
    q = np.array(q0, dtype=float)
    v = np.array(qdot0, dtype=float)
    n_steps = int(round(s.timeout / s.dt))
    rec_every = max(1, int(round(s.record_dt / s.dt)))
    hold_steps = max(1, int(round(s.hold / s.dt)))

    rec = {k: [] for k in ("t", "q", "qdot", "qddot", "V", "K", "d")}
    step_V = []
    m = TrialMetrics()
    calm = 0
    in_collision_steps = 0
    path = 0.0

    def diagnostics(q, v):
        K = V = math.nan
        if energy is not None:
            K, phi = energy(q, v)
            V = K + phi if phi is not None else math.nan
        d = min_dist(q) if min_dist is not None else math.nan
        return V, K, d

    def record(t, q, v, a, diag):
        rec["t"].append(t)
        rec["q"].append(q.copy())
        rec["qdot"].append(v.copy())
        rec["qddot"].append(a.copy())
        rec["V"].append(diag[0])
        rec["K"].append(diag[1])
        rec["d"].append(diag[2])

    t = 0.0
    step = 0
    a = None
    diag = diagnostics(q, v)
    if track_step_V:
        step_V.append(diag[0])
    if goal_dist is not None:
        m.min_goal_distance = goal_dist(q)
    try:
        while True:
            a = _eval(policy, t, q, v)
            if step % rec_every == 0:
                record(t, q, v, a, diag)
            if not (np.all(np.isfinite(a)) and np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
                m.failed, m.reason = True, f"non-finite state at t={t:.6g}"
                break
            if np.linalg.norm(v) < s.v_eps and np.linalg.norm(a) < s.a_eps:
                calm += 1
            else:
                calm = 0
            if calm >= hold_steps and not m.converged:
                m.converged = True
                m.time_to_goal = max(0.0, t - (hold_steps - 1) * s.dt)
                if s.stop_on_convergence:
                    break
            if step >= n_steps:
                m.timed_out = not m.converged
                if m.timed_out:
                    m.time_to_goal = t
                break
            speed0 = np.linalg.norm(v)
            q, v, _ = rk4_step(policy, q, v, s.dt, t)
            step += 1
            t = step * s.dt
            path += 0.5 * s.dt * (speed0 + np.linalg.norm(v))
            diag = diagnostics(q, v)
            if track_step_V:
                step_V.append(diag[0])
            if goal_dist is not None:
                m.min_goal_distance = min(m.min_goal_distance, goal_dist(q))
            if min_dist is not None and diag[2] < 0:
                in_collision_steps += 1
                m.collided = True
                if s.stop_on_collision:
                    a = _eval(policy, t, q, v)
                    record(t, q, v, a, diag)
                    break
    except PolicyError as exc:
        m.failed, m.reason = True, str(exc)
    except FloatingPointError as exc:
        m.failed, m.reason = True, f"floating point error at t={t:.6g}: {exc}"
    if rec["t"] and rec["t"][-1] != t and a is not None and not m.failed:
        record(t, q, v, a, diag)

    m.steps = step
    m.cspace_path_length = path
    m.collision_intensity = in_collision_steps / step if step else 0.0
    shape = (len(rec["t"]), q.size)
    traj = Trajectory(
        np.array(rec["t"], dtype=float), np.array(rec["q"], dtype=float).reshape(shape),
        np.array(rec["qdot"], dtype=float).reshape(shape),
        np.array(rec["qddot"], dtype=float).reshape(shape),
        np.array(rec["V"], dtype=float), np.array(rec["K"], dtype=float),
        np.array(rec["d"], dtype=float),
    )
    return TrialResult(traj, m, np.array(step_V, dtype=float) if track_step_V else None)


def tree_energy(tree):
    """``(q, qdot) -> (K, Phi)`` from the leaves of a tree."""
    def energy(q, qd):
        K, phi, _ = tree.energy(q, qd)
        return K, phi
    return energy


def lyapunov_rate_errors(tree, traj, h=1e-6):
    """``|Vdot + qdot^T B qdot|`` at every recorded sample, ``Vdot`` by differencing along the flow."""
    errs = []
    for q, qd, qdd in zip(traj.q, traj.qdot, traj.qddot):
        Kp, Pp, _ = tree.energy(q + h * qd, qd + h * qdd)
        Km, Pm, _ = tree.energy(q - h * qd, qd - h * qdd)
        _, _, diss = tree.energy(q, qd)
        vdot = ((Kp + Pp) - (Km + Pm)) / (2.0 * h)
        errs.append(abs(vdot + diss))
    return np.array(errs)
