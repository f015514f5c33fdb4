"""Command line entry point: ``rmpflab run|reach|verify``."""

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import config as cfgmod
from .config import ConfigError

log = logging.getLogger("rmpflab")


def _clean(obj):
    """JSON-safe copy: numpy to builtins, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else format(float(v), ".17g") for v in row) + "\n")


def _settings(integ, **kw):
    from .simlab.integrate import SimSettings
    return SimSettings(dt=integ.dt, record_dt=integ.record_dt, timeout=integ.timeout, **kw)


# -- run: exp1d / exp2d ---------------------------------------------------------------------

def run_exp1d(cfg, out, figures):
    from .simlab.experiments import exp1d_tree, run_exp1d as run, to_task_1d
    from .simlab.integrate import lyapunov_rate_errors

    st = _settings(cfg.integrator, stop_on_convergence=False)
    res = run(cfg.x0, cfg.q0, cfg.qd0, st, fan=cfg.fan, grid_n=cfg.grid_n,
              x_range=cfg.x_range, xd_range=cfg.xd_range)
    for name, r in res.runs.items():
        r.trajectory.to_csv(os.path.join(out, f"exp1d_{name}.csv"))
    for (name, i), r in sorted(res.fan.items()):
        r.trajectory.to_csv(os.path.join(out, f"exp1d_{name}_fan{i:02d}.csv"))
    for name, grid in res.grids.items():
        write_rows(os.path.join(out, f"exp1d_phase_{name}.csv"), ["x", "xdot", "xddot"], grid)

    def task_x(key):
        tr = res.runs[key].trajectory
        if key.endswith("designed"):
            return tr.q[:, 0]
        return to_task_1d(tr.q[:, 0], tr.qdot[:, 0])[0]

    metrics = {}
    for key, (use_jdot, damping) in {"with_jdot": (True, "linear"), "no_jdot": (False, "linear"),
                                     "nonlinear_no_jdot": (False, "nonlinear")}.items():
        tree = exp1d_tree(cfg.x0, use_jdot, damping)
        r = res.runs[key]
        x = task_x(key)
        ref = task_x("designed" if damping == "linear" else "nonlinear_designed")
        n = min(x.size, ref.size)
        ok = not r.metrics.failed and n > 0
        metrics[key] = {
            "final_task_error": abs(float(x[-1]) - cfg.x0) if ok else math.nan,
            "max_lyapunov_rate_error":
                float(np.max(lyapunov_rate_errors(tree, r.trajectory))) if ok else math.nan,
            "sup_task_deviation_from_designed":
                float(np.max(np.abs(x[:n] - ref[:n]))) if ok else math.nan,
            "failed": r.metrics.failed,
            "reason": r.metrics.reason,
        }
    write_json(os.path.join(out, "exp1d_metrics.json"), {"x0": cfg.x0, "variants": metrics})
    if figures:
        from .plotting import plot_exp1d
        plot_exp1d(res, cfg.x0, os.path.join(out, "exp1d.png"))
    return 0


def exp2d_starts(cfg):
    from .simlab.experiments import orbit_fan
    if cfg.starts:
        return [(np.array(p, dtype=float), np.array(v, dtype=float)) for p, v in cfg.starts]
    f = cfg.fan
    return orbit_fan(f.count, f.start_x, f.spread, f.speed, f.heading)


def run_exp2d(cfg, out, figures):
    from .policies import AttractorParams
    from .simlab.experiments import (Obstacle2d, exp2d_tree, monotone_into_collision, run_exp2d as run,
                                     straight_line_deviation, vector_field_grid)

    ob = Obstacle2d(tuple(cfg.obstacle.center), cfg.obstacle.radius)
    att = AttractorParams(**cfg.attractor.model_dump())
    st = _settings(cfg.integrator, stop_on_convergence=False, stop_on_collision=cfg.stop_on_collision)
    starts = exp2d_starts(cfg)
    results = {}
    metrics = {}
    for var in cfg.variants:
        tree = exp2d_tree(ob, goal=cfg.goal, epsilon=cfg.epsilon, alpha=var.alpha,
                          collision_damping=cfg.collision_damping,
                          curvature=not var.disable_curvature, use_jdot=not var.disable_jdot,
                          attractor=att)
        runs = run(tree, starts, st, ob, goal=cfg.goal)
        results[var.name] = runs
        per = []
        for i, r in enumerate(runs):
            tr = r.trajectory
            tr.to_csv(os.path.join(out, f"exp2d_{var.name}_{i:02d}.csv"))
            empty = len(tr) == 0
            per.append({
                "min_obstacle_distance": math.nan if empty else float(np.nanmin(tr.min_dist)),
                "collided": r.metrics.collided,
                "straight_line_deviation": math.nan if empty else straight_line_deviation(tr),
                "monotone_into_collision": False if empty else monotone_into_collision(tr),
                "min_goal_distance": r.metrics.min_goal_distance,
                "failed": r.metrics.failed,
                "reason": r.metrics.reason,
            })
        metrics[var.name] = per
        if cfg.field_n:
            grid = vector_field_grid(tree, cfg.field_range[0], cfg.field_range[1], cfg.field_n,
                                     cfg.field_velocity)
            write_rows(os.path.join(out, f"exp2d_{var.name}_field.csv"), ["x", "y", "qdd_x", "qdd_y"], grid)
    write_json(os.path.join(out, "exp2d_metrics.json"), metrics)
    if figures:
        from .plotting import plot_exp2d
        plot_exp2d(results, ob, os.path.join(out, "exp2d.png"), goal=cfg.goal)
    return 0


# -- reach ----------------------------------------------------------------------------------

def reach_setup(cfg, methods_filter=None):
    from .policies import AttractorParams, CollisionParams
    from .simlab.reach import PfBaselineSpec, ReachParams, Scene, make_arm

    g = cfg.gains
    params = ReachParams(
        collision=CollisionParams(**g.collision.model_dump()),
        attractor=AttractorParams(**g.attractor.model_dump()),
        attractor_gain=g.attractor_gain, joint_limit_lambda=g.joint_limit_lambda,
        joint_limit_sigma=g.joint_limit_sigma, joint_limits=tuple(g.joint_limits), damper=g.damper,
        pf_contact_clearance=g.pf_contact_clearance, pf_repulsion=g.pf_repulsion,
        pf_cspace_weight=g.pf_cspace_weight, pf_gamma_p=g.pf_gamma_p, pf_gamma_d=g.pf_gamma_d)
    arm = make_arm(cfg.arm.link_lengths, cfg.arm.control_points)
    scenes = [Scene(s.name, [(tuple(o.center), o.radius) for o in s.obstacles]) for s in cfg.scenes]
    methods = []
    for m in cfg.methods:
        meth = "rmpflow" if m.method == "rmpflow" else PfBaselineSpec(m.method[3:], m.scaling)
        label = meth if isinstance(meth, str) else meth.label
        if methods_filter and label not in methods_filter:
            continue
        methods.append(meth)
    return arm, scenes, methods, params


def run_reach(cfg, out, figures, jobs=1, methods_filter=None):
    from .simlab.reach import run_suite, suite_targets, summary_rows

    arm, scenes, methods, params = reach_setup(cfg, methods_filter)
    if not methods:
        raise ConfigError(f"no configured method matches {methods_filter}")
    t = cfg.targets
    targets = suite_targets(scenes, t.per_scene, cfg.seed, t.radius_range, t.angle_range, t.margin)
    st = _settings(cfg.integrator)
    q_rest = None if cfg.q_rest is None else np.array(cfg.q_rest)
    suite = run_suite(arm, scenes, targets, methods, cfg.q_start, st, params, q_rest, jobs=jobs)
    if cfg.write_trajectories:
        for tr in suite.trials:
            tr.result.trajectory.to_csv(os.path.join(out, tr.filename))
    trials = [{"scene": tr.scene, "method": tr.method, "target_index": tr.index,
               "target": tr.target, **tr.result.metrics.to_dict()} for tr in suite.trials]
    write_json(os.path.join(out, "reach_summary.json"), {
        "seed": cfg.seed,
        "targets": {k: [list(map(float, p)) for p in v] for k, v in targets.items()},
        "summary": suite.summary,
        "trials": trials,
    })
    write_rows(os.path.join(out, "reach_summary.csv"), ["method", "metric", "mean", "std", "n"],
               [(m, k, mean, std, str(n)) for m, k, mean, std, n in summary_rows(suite.summary)])
    if figures:
        from .plotting import plot_reach_scene, plot_reach_summary
        plot_reach_summary(suite.summary, os.path.join(out, "reach_summary.png"))
        for sc in scenes:
            plot_reach_scene(arm, sc, targets[sc.name], suite.trials,
                             os.path.join(out, f"reach_{sc.name}.png"))
    return 0


# -- verify ---------------------------------------------------------------------------------

def run_verify(selectors, out, seed=None):
    from .verify import run_checks

    reports = run_checks(selectors, seed=seed)
    payload = [r.to_dict() for r in reports]
    if out:
        write_json(os.path.join(out, "verify_report.json"), payload)
    print(json.dumps(_clean(payload), indent=2, sort_keys=True))
    return 0 if all(r.ok for r in reports) else 1


# -- argument handling ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="rmpflab", description="RMPflow experiments and checks")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required, help="experiment config (JSON)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--jobs", type=int, default=1, help="parallel trials (reach)")

    run = sub.add_parser("run", help="run a 1-D or 2-D experiment")
    common(run)
    run.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    reach = sub.add_parser("reach", help="run the reaching suite")
    common(reach)
    reach.add_argument("--method", action="append", default=None,
                       help="restrict to a method label (e.g. rmpflow, pf_basic_low); repeatable")
    reach.add_argument("--no-figures", action="store_true", help="skip PNG figures")
    ver = sub.add_parser("verify", help="run numerical checks")
    common(ver, config_required=False)
    ver.add_argument("--select", action="append", default=None,
                     help="check name or 'all' (repeatable; default all)")
    return p


def _setup_logging():
    level = os.environ.get("RMPFLAB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            from .verify import CHECKS
            selectors = args.select or ["all"]
            seed = args.seed
            if args.config:
                cfg = cfgmod.load_config(args.config)
                if not isinstance(cfg, cfgmod.VerifyCfg):
                    raise ConfigError(f"verify needs a config of kind 'verify', got {cfg.kind!r}")
                if args.select is None:
                    selectors = cfg.checks
                seed = cfg.seed if seed is None else seed
            unknown = [s for s in selectors if s != "all" and s not in CHECKS]
            if unknown:
                raise ConfigError(f"unknown check selector(s): {', '.join(unknown)}; "
                                  f"choose from all, {', '.join(CHECKS)}")
            os.makedirs(args.out, exist_ok=True)
            return run_verify(selectors, args.out, seed)

        cfg = cfgmod.load_config(args.config)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        figures = not args.no_figures
        if args.command == "run" and cfg.kind not in ("exp1d", "exp2d"):
            raise ConfigError(f"'run' handles exp1d/exp2d configs, got {cfg.kind!r}")
        if args.command == "reach" and cfg.kind != "reach":
            raise ConfigError(f"'reach' needs a config of kind 'reach', got {cfg.kind!r}")
    except ConfigError as exc:
        print(f"rmpflab: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"rmpflab: {exc}", file=sys.stderr)
        return 2

    os.makedirs(args.out, exist_ok=True)
    started = time.monotonic()
    try:
        if args.command == "run":
            status = (run_exp1d if cfg.kind == "exp1d" else run_exp2d)(cfg, args.out, figures)
        else:
            status = run_reach(cfg, args.out, figures, jobs=args.jobs, methods_filter=args.method)
    except ConfigError as exc:
        print(f"rmpflab: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        log.debug("runtime failure", exc_info=True)
        print(f"rmpflab: run failed: {exc}", file=sys.stderr)
        return 1
    log.info("%s finished in %.1f s", args.command, time.monotonic() - started)
    return status


if __name__ == "__main__":
    sys.exit(main())
