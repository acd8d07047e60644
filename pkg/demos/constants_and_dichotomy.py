"""Where the proposal stops being direct: the threshold integral, K_alpha and D(t).

Run: python3 demos/constants_and_dichotomy.py
"""
import numpy as np

from tailwalk import CONFIG_A, CONFIG_B, analysis

print("alpha   threshold   K_alpha    2(a-1)A(a) - 2^a")
for alpha in np.arange(1.1, 2.0, 0.1):
    print(f"{alpha:4.1f}  {analysis.threshold_integral(alpha):+.6f}  {analysis.k_alpha(alpha):+.6f}"
          f"  {analysis.k_alpha_identity(alpha):+.6f}")
print(f"root of the threshold integral: {analysis.threshold_root():.10f}\n")

# D(t) = P(X + Z > t) - P(Z > t): negative for alpha < 3/2, positive above
for name, law in (("A (alpha=1.2)", CONFIG_A), ("B (alpha=1.8)", CONFIG_B)):
    print(f"config {name}, K_alpha = {analysis.k_alpha(law.alpha):+.5f}")
    for t in 10.0 ** np.arange(4, 17, 3):
        d = analysis.tail_difference(law, t, fallback="direct")
        print(f"  t={t:8.0e}  D(t)={d:+.4e}  D/(R sf)={analysis.k_ratio(law, t):+.5f}")
