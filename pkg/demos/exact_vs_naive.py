"""Exact conditional draws by acceptance-rejection against plain rejection.

Both arms sample the walk given that it crosses b = 1 within 10^4 steps;
the two samples of tau and of the overshoot should be indistinguishable.

Run: python3 demos/exact_vs_naive.py
"""
from tailwalk import ExperimentConfig, run_experiment

for step, c in (("C", 0.0), ("A", "auto")):
    cfg = ExperimentConfig.from_dict({"command": "crosscheck", "step": step, "b": 1.0, "c": c,
                                      "seed": 7, "replications": 2000, "horizon": 10_000})
    e = run_experiment(cfg).estimates
    print(f"config {step}: c={e['c_resolved']:g}")
    print(f"  acceptance rate {e['ar_rate']:.4f} +- {e['ar_rate_se']:.4f}  "
          f"naive crossing rate {e['naive_rate']:.4f} +- {e['naive_rate_se']:.4f}  z={e['rate_z']:.2f}")
    print(f"  KS tau {e['ks_tau']:.4f} (p={e['ks_tau_pvalue']:.3f})  "
          f"KS overshoot {e['ks_overshoot']:.4f} (p={e['ks_overshoot_pvalue']:.3f})")
