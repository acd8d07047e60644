"""Hitting times under the proposal: linear in b for alpha = 2.5, infinite mean for alpha = 1.2.

Run: python3 demos/hitting_times.py
"""
import numpy as np

from tailwalk import ExperimentConfig, analysis, run_experiment

cfg = ExperimentConfig.from_dict({"command": "hitting", "step": "C", "c": 0.0, "seed": 3,
                                  "replications": 20_000, "b_grid": [4, 16, 64, 256]})
rep = run_experiment(cfg)
print("config C:   b    mean tau   accept prob   PV estimate   ratio")
for r in rep.rows:
    print(f"      {r['b']:6g}  {r['mean_tau']:9.2f}   {r['accept_probability']:.3e}"
          f"   {r['pv']:.3e}   {r['pv_ratio']:.3f}")
print(f"  linear fit slope {rep.estimates['tau_slope']:.3f}, R2 {rep.estimates['tau_r2']:.4f}\n")

guard = 10 ** 5
cfg = ExperimentConfig.from_dict({"command": "hitting", "step": "A", "b": 10.0, "c": "auto",
                                  "seed": 3, "replications": 2000, "guard": guard})
rep = run_experiment(cfg)
tau = np.array([p.tau for p in rep.paths[10.0]], dtype=float)
print(f"config A, b=10, guard {guard}: guard hits {rep.diagnostics['guard_hits']}")
for n in (250, 500, 1000, 2000):
    print(f"  N={n:5d}  running mean {tau[:n].mean():10.1f}  max {tau[:n].max():8.0f}")
print(f"  Hill tail index (censored at the guard): "
      f"{analysis.hill_estimator(tau, tau.size // 2, censor_at=guard):.3f}")
