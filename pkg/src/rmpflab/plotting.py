"""Static figures written next to the CSV/JSON artifacts (Agg backend, deterministic bytes)."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_SAVE = {"dpi": 100, "metadata": {"Software": None}}


def _save(fig, path):
    fig.savefig(path, format="png", **_SAVE)
    plt.close(fig)


def plot_exp1d(result, x0, path):
    """Phase portraits and integral curves of the 1-D variants in task coordinates."""
    from .simlab.experiments import to_task_1d

    panels = [("designed", "designed"), ("with_jdot", "with Jdot qdot"),
              ("no_jdot", "without Jdot qdot"), ("nonlinear_no_jdot", "nonlinear damping, no Jdot qdot")]
    fig, axes = plt.subplots(1, 4, figsize=(16, 4), sharey=True)
    for ax, (key, title) in zip(axes, panels):
        grid = result.grids.get(key)
        if grid is not None and grid.size:
            n = int(round(np.sqrt(grid.shape[0])))
            X = grid[:, 0].reshape(n, n)
            V = grid[:, 1].reshape(n, n)
            A = grid[:, 2].reshape(n, n)
            ax.streamplot(X.T, V.T, V.T, np.nan_to_num(A.T), color="0.7", density=0.8,
                          linewidth=0.6, arrowsize=0.6)
        curves = [result.runs[key]] + [r for (k, _), r in sorted(result.fan.items()) if k == key]
        for res in curves:
            tr = res.trajectory
            if key in ("designed", "nonlinear_designed"):
                x, xd = tr.q[:, 0], tr.qdot[:, 0]
            else:
                x, xd = to_task_1d(tr.q[:, 0], tr.qdot[:, 0])
            keep = np.isfinite(x) & np.isfinite(xd) & (np.abs(x) < 10) & (np.abs(xd) < 10)
            ax.plot(x[keep], xd[keep], color="tab:blue", lw=1.0)
            if keep.any():
                ax.plot(x[keep][0], xd[keep][0], "ko", ms=3)
                ax.plot(x[keep][-1], xd[keep][-1], "rx", ms=5)
        ax.axvline(x0, color="0.5", ls=":", lw=0.8)
        ax.set_title(title, fontsize=9)
        ax.set_xlabel("x")
        if grid is not None and grid.size:
            ax.set_xlim(grid[:, 0].min(), grid[:, 0].max())
            ax.set_ylim(grid[:, 1].min(), grid[:, 1].max())
    axes[0].set_ylabel("xdot")
    fig.tight_layout()
    _save(fig, path)


def plot_exp2d(variant_results, obstacle, path, goal=None):
    """One panel per variant: obstacle, start markers and particle paths."""
    names = list(variant_results)
    fig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 4), squeeze=False)
    for ax, name in zip(axes[0], names):
        ax.add_patch(plt.Circle(obstacle.center, obstacle.radius, color="0.6"))
        for res in variant_results[name]:
            q = res.trajectory.q
            ax.plot(q[:, 0], q[:, 1], color="tab:blue", lw=0.9)
            ax.plot(q[0, 0], q[0, 1], "ko", ms=3)
            v = res.trajectory.qdot[0]
            ax.arrow(q[0, 0], q[0, 1], 0.3 * v[0], 0.3 * v[1], head_width=0.06, color="k")
        if goal is not None:
            ax.plot(goal[0], goal[1], "s", color="tab:red", ms=6)
        ax.set_aspect("equal")
        ax.set_xlim(-3.5, 3.5)
        ax.set_ylim(-3.5, 3.5)
        ax.set_title(name, fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def plot_reach_summary(summary, path):
    """Bar chart of mean and one standard deviation per metric and method."""
    from .simlab.reach import METRIC_NAMES

    methods = list(summary)
    fig, axes = plt.subplots(1, len(METRIC_NAMES), figsize=(4 * len(METRIC_NAMES), 4))
    xs = np.arange(len(methods))
    for ax, metric in zip(axes, METRIC_NAMES):
        means = [summary[m][metric]["mean"] for m in methods]
        stds = [summary[m][metric]["std"] for m in methods]
        ax.bar(xs, means, yerr=stds, color="tab:blue", capsize=3)
        ax.set_xticks(xs)
        ax.set_xticklabels(methods, rotation=60, ha="right", fontsize=7)
        ax.set_title(metric.replace("_", " "), fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def plot_reach_scene(arm, scene, targets, trials, path):
    """Scene geometry, targets and end-effector paths for every method."""
    methods = sorted({t.method for t in trials})
    fig, axes = plt.subplots(1, len(methods), figsize=(4 * len(methods), 4), squeeze=False)
    tip = arm.tip_map()
    for ax, m in zip(axes[0], methods):
        for c, r in scene.obstacles:
            ax.add_patch(plt.Circle(c, r, color="0.6"))
        for tgt in targets:
            ax.plot(tgt[0], tgt[1], "rx", ms=4)
        for t in trials:
            if t.method != m or t.scene != scene.name:
                continue
            p = np.array([tip.value(q) for q in t.result.trajectory.q])
            ax.plot(p[:, 0], p[:, 1], lw=0.7, color="tab:red" if t.result.metrics.collided else "tab:blue")
        ax.set_aspect("equal")
        ax.set_xlim(-1.0, 1.0)
        ax.set_ylim(-0.5, 1.0)
        ax.set_title(f"{scene.name}: {m}", fontsize=8)
    fig.tight_layout()
    _save(fig, path)
