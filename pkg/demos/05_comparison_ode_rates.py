"""The comparison ODE dS/dt + p(S) = Gamma and its decay-rate classification.

Decay rates of the energy bound are read off the scalar ODE: linear p gives
the exponential/critical/polynomial table, power-law p (sublinear damping)
gives polynomial rates with a saturation threshold, and the flat superlinear
p yields 1/log decay.
"""

import numpy as np

from wavedecay import (GammaProfile, OdeProblem, classify, discrete_iteration,
                       dominance_check, envelope, fit_decay, linear_rate_table,
                       solve_ode)

poly = lambda M, th: GammaProfile(
    lambda t: M * np.power(1.0 + np.asarray(t, dtype=float), -th))

# %% closed forms reproduced by the integrator
prob = OdeProblem.linear_bound(1.0, 1.0,
                                 GammaProfile(lambda t: np.exp(-2.0 * np.asarray(t))),
                                 1.0)
ts, S = solve_ode(prob, 4.0, 0.05)
print(f"linear forced: S(1) = {np.interp(1.0, ts, S):.6f} "
      f"(closed form 2/e - 1/e^2 = {2 / np.e - np.exp(-2.0):.6f})")

# %% the linear rate table
for C, theta in ((2.0, 1.0), (1.0, 1.0), (0.5, 2.0)):
    v = linear_rate_table(C, "exponential", theta, 1.0, T=1.0, s0=1.0)
    print(f"C={C}, exponential theta={theta}: case {v.case}, "
          f"envelope rate {v.params['rate']}")
v = linear_rate_table(0.5, "polynomial", 2.0, 1.0, T=1.0, s0=1.0)
print(f"C=0.5, polynomial theta=2: exponent {v.params['exponent']}")

# %% sublinear pipeline rates: theta below/above the saturation threshold 3
p32 = lambda s: np.asarray(s, dtype=float) ** 1.5
for theta, label in ((2.0, "2 r0 theta/(1+r0) = 4/3"), (5.0, "saturated 2 r0/(1-r0) = 2")):
    ts, S = solve_ode(OdeProblem(p=p32, gamma=poly(1.0, theta), s0=1.0), 1e3, 0.25)
    fit = fit_decay(ts, S, window=(100.0, 1e3), model="polynomial")
    cls = classify(p32, poly(1.0, theta), 1.0, horizon=1e3)
    print(f"theta={theta}: fitted exponent {fit.params['exponent']:.3f} ({label}); "
          f"classified {cls.case} / {cls.model} "
          f"exponent {cls.params.get('exponent', float('nan')):.3f}")
    y = np.asarray(cls.bound(ts[1:]), dtype=float)
    print(f"  classifier envelope dominates S: "
          f"{dominance_check(S[1:], y, ts[1:]).passed}")

# %% superlinear damping: S ln t stays bounded
psup = lambda s: np.maximum(np.asarray(s, dtype=float), 1e-300) ** 1.5 * np.exp(
    -1.0 / np.maximum(np.asarray(s, dtype=float), 1e-300))
ts, S = solve_ode(OdeProblem(p=psup, gamma=poly(1.0, 2.0), s0=1.0), 1e4, 2.0)
mask = ts >= 100.0
prod = S[mask] * np.log(ts[mask])
print(f"superlinear: S * ln t over [1e2, 1e4] stays in "
      f"[{prod.min():.3f}, {prod.max():.3f}]")

# %% the window iteration dominated by the ODE solution
T = 0.8
g = poly(0.5, 2.0)
prob = OdeProblem.linear_bound(T, 2.0, g, 1.0)
steps = 12
ts, S = solve_ode(prob, steps * T, T / 20.0)
deltas = [g.window(m * T, T) for m in range(steps)]
seq = discrete_iteration(1.0, lambda s: T * prob.p(s), deltas, steps=steps)
s_at = np.interp(np.arange(steps + 1) * T, ts, S)
print(f"window iteration: min(S(mT) - W_m) = {np.min(s_at - seq):.3e} (>= 0)")

# %% and the envelope built from S
curve = envelope(ts, S, g, T)
print(f"envelope at t = {curve.times[0]:.2f}..{curve.times[-1]:.2f}: "
      f"B(T) = {curve.values[0]:.3f}")
