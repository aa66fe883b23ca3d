"""The convex conjugate pair (psi, psi*) of the nonlinear forcing magnitude.

psi(s) = (1/2T) h^{-1}(s^2 / (8 C_T e^T)) on s >= 0; its conjugate
psi*(s) = sup_y [s y - psi(y)] enters Gamma(t) = 2 ||f||^2 + psi*(||f||).
For sublinear laws the small-argument branch of psi* behaves like s^{1+r0};
for the superlinear law it is bounded by C (s |ln s|^{-1/2} + s^2).
"""

import math

import numpy as np

from wavedecay import ForcingTerm, conjugate, gamma_nonlinear, make_h, make_law, rho_exponential

T, C_T = 1.0, 1.0

# %% a quadratic sanity case: identity h0 gives h = 2 I and closed forms
pair_quad = conjugate(T, C_T, make_h(make_law("linear"), 3.0))
a = 1.0 / (32.0 * T * C_T * math.exp(T))
for s in (0.5, 2.0):
    print(f"quadratic case s={s}: psi = {pair_quad.psi(s):.6f} "
          f"(exact {a * s * s:.6f}), psi* = {pair_quad.psi_star(s):.4f} "
          f"(exact {s * s / (4 * a):.4f})")

# %% Fenchel-Young on random pairs
pair = conjugate(T, C_T, make_h(make_law("sublinear", r0=0.5), 1.0))
rng = np.random.default_rng(3)
s, y = rng.uniform(0, 10, 2000), rng.uniform(0, 10, 2000)
gap = s * y - pair.psi(y) - np.array([pair.psi_star(float(v)) for v in s])
print(f"Fenchel-Young worst violation over 2000 pairs: {np.max(gap):.2e}")

# %% small-argument growth of psi* for the sublinear law
ss = np.geomspace(1e-4, 1e-3, 10)
vals = np.array([pair.psi_star(float(x)) for x in ss])
slope = np.polyfit(np.log(ss), np.log(vals), 1)[0]
print(f"sublinear psi* small-argument log-log slope: {slope:.3f} (expect 1 + r0 = 1.5)")

# %% superlinear law: logarithmically corrected envelope
sup_pair = conjugate(T, C_T, make_h(make_law("superlinear"), 1.0))
basis = lambda x: x * abs(math.log(x)) ** -0.5 + x * x
ratios = [sup_pair.psi_star(float(x)) / basis(x) for x in np.geomspace(1e-6, 0.1, 10)]
print(f"superlinear psi* / (s |ln s|^-1/2 + s^2) over [1e-6, 0.1]: "
      f"within [{min(ratios):.3f}, {max(ratios):.3f}]")

# %% Gamma for an exponentially decaying force
g = gamma_nonlinear(ForcingTerm(rho_exponential(1.0, 1.0)), pair)
for t in (0.0, 1.0, 3.0):
    print(f"Gamma({t}) = {g(t):.6f}")
