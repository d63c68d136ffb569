"""A short tour of renewalkit: delay, neutral and renewal equations.

Run with ``python3 demos/walkthrough.py``.
"""

import numpy as np

from renewalkit import neutral, renewal, rfde, stability
from renewalkit.measures import Grid, GridFunction, HalfLineMeasure
from renewalkit.resolvent import resolvent_l1
from renewalkit.semigroup import CumulativeHistory, HistoryFunction

h = 0.01
g1 = Grid(1.0, h)
one = HistoryFunction.constant([1.0], h)

# -- retarded equation x'(t) = -x(t - 1) -------------------------------------
sys = rfde.RFDESystem(HalfLineMeasure.dirac(g1, 1.0, -1.0), 3.0)
x = rfde.solve_ivp(sys, one)
print("x'(t) = -x(t-1), x = 1 on [-1, 0]")
for t in (1.0, 2.0, 3.0):
    print(f"  x({t:.0f}) = {x(t).item(): .6f}")

for a in (-0.5, 1.0):
    v = stability.rfde_stability_full(HalfLineMeasure.dirac(g1, 1.0, a))
    extra = f", witness root {v['witness_root'][0]:.10f}" if "witness_root" in v else ""
    print(f"  zeta = {a:+} delta_1: {v['verdict']}{extra}")

# -- neutral equation d/dt(x - 0.5 int x(t - s) ds) = -x(t) ----------------------
eta = HalfLineMeasure.from_density(g1, lambda s: 0.5 + 0 * s)
zeta = HalfLineMeasure.dirac(g1, 0.0, -1.0)
nsys = neutral.NFDESystem(eta, zeta, 20.0)
xn = neutral.solve_nfde(nsys, one)
print("\nneutral example")
print(f"  x(20) = {xn(20.0).item():.3e}")
print(f"  verdict: {stability.nfde_stability_verdict(eta, zeta)['verdict']}")

# -- renewal equation: cell division -------------------------------------------
L = HalfLineMeasure.dirac(g1, 1.0, 2.0)
rsys = renewal.RESystem(L, 3.0)
B = renewal.cumulative_births(rsys, CumulativeHistory.dirac_at_zero(h))
print("\ncell division (every cell splits in two at age 1)")
print("  cumulative births:", [float(B(t).item()) for t in (1.0, 2.0, 3.0)])
v = stability.re_stability_verdict(L)
print(f"  verdict: {v['verdict']}, growth rate {v['witness_root'][0]:.6f} (ln 2 = {np.log(2):.6f})")

# -- resolvent of the unit kernel ----------------------------------------------
g = Grid(2.0, 0.001)
k = GridFunction(g, (g.t < 1.0).astype(float), (g.t <= 1.0).astype(float))  # values, left limits
r = resolvent_l1(k)
print("\nresolvent of k = 1 on [0, 1]")
print(f"  r(0.5) = {r(0.5).item():.6f}  (e^0.5 = {np.exp(0.5):.6f})")
print(f"  r(2)   = {r(2.0).item():.6f}  (e (e - 2) = {np.e * (np.e - 2):.6f})")
