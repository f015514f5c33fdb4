"""Closed-loop simulation, controlled experiments and the reaching suite."""

from .integrate import (SimSettings, SimState, Trajectory, TrialMetrics, TrialResult, integrate_step,
                        rk4_step, simulate, tree_energy, tree_policy)

__all__ = ["SimSettings", "SimState", "Trajectory", "TrialMetrics", "TrialResult", "integrate_step",
           "rk4_step", "simulate", "tree_energy", "tree_policy"]
