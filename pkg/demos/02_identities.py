"""Energy identities and bounds for one data set.

The energy is not conserved on the growing interval, but t*E(t) plus a
weighted cross term is: it equals the flux constant S at every time. The
suite below checks that identity and the weighted trace identities over
whole log-periods, together with the bounds that follow from them.
"""
import numpy as np

from movingwave import make_domain
from movingwave import spectral as sp
from movingwave.diagnostics import energy, run_identity_suite

d = make_domain(0.5, 2.0)
sol = sp.random_coefficients(d, 12, np.random.default_rng(1))
print(f"S = {sol.S:.12g}")
for t in (2.0, 6.0, 18.0, 54.0):
    E = energy(sol, t)
    print(f"t={t:5g}  E={E:.6e}  t*E={t * E:.6e}  bracket [{sol.S / 1.5:.6e}, {sol.S / 0.5:.6e}]")

report = run_identity_suite(sol)
print()
print(report.to_text(), end="")
worst = max(r.rel_residual for r in report.records if r.kind == "==")
print(f"largest identity residual: {worst:.2e}")
