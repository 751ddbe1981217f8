"""Sharp control time against earlier sufficient times.

All times are normalised by t0. The sharp one is the smallest at every speed,
and the gap grows quickly as the boundary speed approaches the wave speed.
"""
import numpy as np

from movingwave.domain import literature_times

print(f"{'ell':>5} {'T0 (sharp)':>12} {'T1':>12} {'T2':>12} {'T3':>12}")
for ell in (0.1, 0.2, 0.3, 0.5, 0.7):
    lt = literature_times(ell)
    print(f"{ell:5.2f} {lt.T0_norm:12.5g} {lt.T1:12.5g} {lt.T2:12.5g} {lt.T3:12.5g}")

grid = np.linspace(0.01, 0.99, 99)
ordered = all(t.T0_norm <= t.T2 * (1 + 1e-12) and t.T2 <= t.T3 <= t.T1
              for t in map(literature_times, grid))
print(f"T0 <= T2 <= T3 <= T1 on a 99-point speed grid: {ordered}")
