"""Damping laws and the concave calibration functions h0 and h.

Each law g comes with envelope constants (m, eta) bounding it against the
identity at infinity and a strictly increasing h0 that dominates the
near-origin dissipation:  h0(g(s) s) >= eps0 (s^2 + g(s)^2).  With the
damper mass over one control window, h = I + mass * h0(I / mass) converts
observed dissipation into energy.
"""

import numpy as np

from wavedecay import Grid, build_damper, control_time_1d, implicit_damp_solve, make_h, make_law

# %% the three built-in laws near the origin and at infinity
s = np.array([0.01, 0.1, 0.5, 1.0, 2.0, 5.0])
for kind, kwargs in (("linear", {}), ("sublinear", {"r0": 0.5}), ("superlinear", {})):
    law = make_law(kind, **kwargs)
    with np.errstate(under="ignore"):
        vals = law.g(s)
    print(f"{kind:12s} m={law.m:.3f} eta={law.eta}  g(s) =",
          np.array2string(vals, precision=4))

# %% h0 choices: power for sublinear, inverted s^{3/2} e^{-1/s} for superlinear
sub = make_law("sublinear", r0=0.5)
sup = make_law("superlinear")
print(f"sublinear   h0(0.25) = {sub.h0(0.25):.5f}  (= 0.25^(2/3))")
print(f"superlinear h0_inv(0.5) = {sup.h0_inverse(0.5):.5f}, "
      f"h0 of that = {sup.h0(sup.h0_inverse(0.5)):.5f}")

# %% h built from a damper mass, and its bisection inverse
grid = Grid.line(1.0, 200)
damper = build_damper(grid, [(0.3, 0.7)], 1.0, 2 * grid.dx)
T = 1.25 * control_time_1d(grid, [(0.3, 0.7)]).t_min
mass = damper.mass(T)
h = make_h(sub, mass)
print(f"damper mass over (0,T)xM: {mass:.4f}")
for y in (0.01, 0.5, 3.0):
    x = h.inverse(y)
    print(f"h_inverse({y}) = {x:.6g}, round trip h(x) = {h(x):.6g}")

# %% the implicit solve used by the time stepper: v + w g(v) = rhs
for law, label in ((make_law("linear"), "linear"), (sub, "sublinear")):
    v = implicit_damp_solve(law, 1.0, 1.0)
    print(f"{label}: v + g(v) = 1 gives v = {v:.6f}")
