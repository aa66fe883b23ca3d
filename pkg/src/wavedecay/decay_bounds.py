"""Comparison-ODE machinery for the energy bounds: the forced scalar ODE
dS/dt + p(S) = Gamma(t), the window envelope built from its solution, the
discrete window iteration it dominates, decay-rate classification of the
bound, and pointwise dominance checks between curves.

All rate statements live on the bound side; the wave solver supplies the
measured curves these bounds are checked against."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fitting import fit_decay_auto
from .forcing import GammaProfile
from .numerics import invert_increasing, quad

__all__ = [
    "OdeProblem",
    "BoundCurve",
    "DecayClassification",
    "DominanceResult",
    "LinearRateVerdict",
    "solve_ode",
    "envelope",
    "discrete_iteration",
    "classify",
    "dominance_check",
    "linear_rate_table",
    "power_law_minorant",
]


def _as_gamma(gamma):
    if gamma is None:
        return GammaProfile.zero()
    if isinstance(gamma, GammaProfile):
        return gamma
    return GammaProfile(lambda t: np.asarray(gamma(t), dtype=float))


@dataclass
class OdeProblem:
    """Forced comparison ODE dS/dt + p(S) = Gamma(t), S(0) = s0 >= 0.

    ``p`` is the dissipation map: increasing with p(0) = 0.  The two bound
    pipelines build their problems through :meth:`linear_bound`
    (p(S) = S / (T C_T)) and :meth:`nonlinear_bound`
    (p(S) = h^{-1}(S / K) / (4T))."""

    p: Callable
    gamma: GammaProfile
    s0: float
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.s0 < 0:
            raise ValueError("initial value must be nonnegative")
        self.gamma = _as_gamma(self.gamma)
        if abs(float(self.p(0.0))) > 1e-12:
            raise ValueError("dissipation map must vanish at 0")
        probes = np.linspace(0.0, max(self.s0, 1.0), 9)
        vals = np.array([float(self.p(x)) for x in probes])
        if np.any(np.diff(vals) < -1e-12):
            raise ValueError("dissipation map must be increasing")

    def rhs(self, t, y):
        return float(self.gamma(t)) - float(self.p(max(y, 0.0)))

    @classmethod
    def linear_bound(cls, T, c_t, gamma, s0):
        if T <= 0 or c_t < 1.0:
            raise ValueError("need T > 0 and C_T >= 1")
        rate = 1.0 / (T * c_t)
        return cls(p=lambda s: rate * s, gamma=gamma, s0=float(s0),
                   constants={"T": T, "C_T": c_t})

    @classmethod
    def nonlinear_bound(cls, T, h, K, gamma, s0, c_t=None):
        if T <= 0:
            raise ValueError("need T > 0")
        if c_t is not None and K < c_t:
            raise ValueError("K must be at least C_T")
        scale = 1.0 / (4.0 * T)
        h_inv = h.inverse_fast()
        return cls(p=lambda s: scale * h_inv(s / K), gamma=gamma, s0=float(s0),
                   constants={"T": T, "K": K, "C_T": c_t})


def _rk4(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def solve_ode(problem, horizon, dt, rtol=1e-8):
    """Integrate the comparison ODE on the uniform output grid k * dt.

    Classical fourth-order steps with step-halving error control: each trial
    step is compared against two half steps and accepted when the difference
    (scaled by 1/15) meets the relative tolerance.  The state is kept
    nonnegative; a step that would cross zero is retried on halved steps and
    finally clamped, which is exact in the sense that p(0) = 0 makes 0
    invariant under Gamma = 0.
    """
    if dt <= 0:
        raise ValueError("output spacing dt must be positive")
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    f = problem.rhs
    n = max(int(round(horizon / dt)), 0)
    times = np.arange(n + 1) * dt
    values = np.empty(n + 1)
    y = float(problem.s0)
    values[0] = y
    h_min_factor = 1e-12
    for k in range(n):
        t = times[k]
        t_end = times[k + 1]
        h = dt
        while t < t_end - 1e-14 * dt:
            h = min(h, t_end - t)
            h_min = h_min_factor * dt
            y_full = _rk4(f, t, y, h)
            y_half = _rk4(f, t + 0.5 * h, _rk4(f, t, y, 0.5 * h), 0.5 * h)
            err = abs(y_half - y_full) / 15.0
            tol = rtol * max(abs(y_half), abs(y), 1e-280)
            if (err <= tol and y_half >= 0.0) or h <= h_min:
                t += h
                y = max(y_half, 0.0)
                if err < tol / 32.0:
                    h = min(2.0 * h, dt)
            else:
                h *= 0.5
        values[k + 1] = y
    return times, values


@dataclass
class BoundCurve:
    """Envelope factor * e^T * (S(t - T) + gamma_factor * window(t - T)) on t >= T."""

    times: np.ndarray
    values: np.ndarray
    factor: float
    gamma_factor: float
    T: float

    def at(self, t):
        return np.interp(t, self.times, self.values)


def envelope(s_times, s_values, gamma, T, factor=4.0, gamma_factor=1.0):
    """Build the window envelope from a sampled ODE solution.

    ``s_times`` / ``s_values`` sample S on [0, horizon - T]; the curve is
    returned on [T, horizon].  ``factor`` scales e^T (default 4) and
    ``gamma_factor`` scales the forcing window term.
    """
    if T <= 0:
        raise ValueError("window length T must be positive")
    s_times = np.asarray(s_times, dtype=float)
    s_values = np.asarray(s_values, dtype=float)
    if s_times.size == 0:
        raise ValueError("horizon is below T: no envelope domain")
    gamma = _as_gamma(gamma)
    amp = factor * math.exp(T)
    if gamma.is_zero():
        windows = np.zeros_like(s_times)
    else:
        windows = np.array([gamma.window(t, T) for t in s_times])
    values = amp * (s_values + gamma_factor * windows)
    return BoundCurve(times=s_times + T, values=values, factor=factor,
                      gamma_factor=gamma_factor, T=T)


def _check_increasing(fn, grid, what):
    vals = np.array([float(fn(x)) for x in grid])
    if np.any(np.diff(vals) < -1e-10 * (1.0 + np.max(np.abs(vals)))):
        raise ValueError(f"{what} must be increasing on the needed range")
    return vals


def discrete_iteration(w0, ell, deltas, steps=None):
    """Extremal window sequence W_{m+1} = W_m + delta_m - ell(W_m + delta_m).

    ``deltas`` is a scalar or a sequence of window integrals, one per step.
    Both ell and I - ell must be increasing with ell(0) = 0; the matching
    ODE solution sampled at window endpoints dominates this sequence.
    """
    if steps is None:
        if np.isscalar(deltas):
            raise ValueError("steps must be given for a scalar delta")
        steps = len(deltas)
    deltas = np.broadcast_to(np.asarray(deltas, dtype=float), (steps,))
    if abs(float(ell(0.0))) > 1e-12:
        raise ValueError("ell(0) must vanish")
    reach = float(w0) + float(np.max(deltas, initial=0.0)) if steps else float(w0)
    grid = np.linspace(0.0, max(2.0 * reach, 1e-6), 129)
    _check_increasing(ell, grid, "ell")
    _check_increasing(lambda s: s - float(ell(s)), grid, "I - ell")
    out = np.empty(steps + 1)
    out[0] = float(w0)
    for m in range(steps):
        z = out[m] + deltas[m]
        out[m + 1] = z - float(ell(z))
    return out


@dataclass
class DominanceResult:
    passed: bool
    max_violation: float
    at_index: int
    at_time: Optional[float]

    def __bool__(self):
        return self.passed


def dominance_check(s_values, y_values, times=None, tol=None):
    """Verify y >= s - tol pointwise on a common sample grid.

    Default tolerance is 1e-8 * (1 + max s).  Reports the largest violation
    and where it happens.
    """
    s = np.asarray(s_values, dtype=float)
    y = np.asarray(y_values, dtype=float)
    if s.shape != y.shape:
        raise ValueError("curves must share a sample grid")
    if tol is None:
        tol = 1e-8 * (1.0 + float(np.max(s, initial=0.0)))
    gap = s - y
    idx = int(np.argmax(gap)) if gap.size else 0
    worst = float(gap[idx]) if gap.size else 0.0
    at_time = float(times[idx]) if times is not None and gap.size else None
    return DominanceResult(passed=worst <= tol, max_violation=max(worst, 0.0),
                           at_index=idx, at_time=at_time)


# ---------------------------------------------------------------------------
# decay classification

@dataclass
class DecayClassification:
    case: str  # unforced | forced-subdominant | forced-dominant | unclassified
    model: Optional[str]
    params: dict
    admissibility: dict
    bound: Optional[Callable]
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {"case": self.case, "model": self.model, "params": self.params,
                "admissibility": self.admissibility, "diagnostics": self.diagnostics}


def _psi_table(p, upper, lower, n=400):
    """Cumulative integral psi(x) = int_x^upper ds / p(s) on a log grid,
    integrated in the log variable to keep the singular endpoint accurate."""
    xs = np.geomspace(lower, upper, n)[::-1]  # decreasing from upper
    psi = np.zeros(n)
    for k in range(1, n):
        a, b = xs[k], xs[k - 1]
        psi[k] = psi[k - 1] + quad(
            lambda u: math.exp(u) / float(p(math.exp(u))), math.log(a), math.log(b),
            rtol=1e-10)
    return xs[::-1], psi[::-1]  # increasing x, decreasing psi


def _psi_inverse_factory(p, upper, t_max):
    """Monotone inverse of psi built by extending the table until it covers t_max."""
    lower = upper * 1e-3
    for _ in range(60):
        xs, psi = _psi_table(p, upper, lower)
        if psi[0] >= t_max * 1.01 or lower < 1e-280:
            break
        lower *= 1e-2
    psi_desc = psi[::-1]
    xs_desc = xs[::-1]

    def inverse(t):
        t = np.asarray(t, dtype=float)
        vals = np.interp(np.clip(t, 0.0, psi_desc[-1]), psi_desc, np.log(xs_desc))
        out = np.exp(vals)
        out = np.where(t <= 0.0, upper, out)
        return float(out) if out.ndim == 0 else out

    return inverse


def _name_curve(bound, t_lo, t_hi, n=240):
    ts = np.geomspace(max(t_lo, 1e-6), t_hi, n)
    ys = np.asarray(bound(ts), dtype=float)
    good = ys > 0
    if np.count_nonzero(good) < 20:
        return None, {}
    fit = fit_decay_auto(ts[good], ys[good], (float(ts[good][0]), float(ts[good][-1])))
    return fit.model, {**fit.params, "fit_residual": fit.residual_normalized}


def estimate_homogeneity_constant(p, upper, k_max=1e4, n=40):
    """Numeric infimum of p(Kx) / (p(K) p(x)) over [1, k_max] x (0, upper]."""
    ks = np.geomspace(1.0, k_max, n)
    xs = np.geomspace(upper * 1e-6, upper, n)
    best = math.inf
    for K in ks:
        pk = float(p(K))
        if pk <= 0:
            continue
        for x in xs:
            px = float(p(x))
            if px <= 0:
                continue
            best = min(best, float(p(K * x)) / (pk * px))
    if not math.isfinite(best) or best <= 0:
        raise ValueError("homogeneity constant could not be estimated")
    return best


def _default_c_grid():
    return list(np.logspace(-4, 2, 25))


def classify(p, gamma, s0, *, horizon=1e4, c_grid=None, kappa_max=1e6,
             n_samples=400, name_window=None):
    """Classify the decay of solutions of dS/dt + p(S) <= Gamma.

    Gamma identically zero gives the unforced bound psi^{-1}(t) with
    psi(x) = int_x^{s0} ds/p(s).  Strictly positive Gamma is routed by the
    sign pattern of d/dt p^{-1}(Gamma) + c Gamma: admissible (c, kappa) with
    the differential inequality strictly negative yield the subdominant bound
    kappa psi^{-1}(c t); the reversed inequality yields the dominant bound
    kappa p^{-1}(Gamma(t)).  Mixed sign patterns of Gamma itself, or no
    admissible pair, come back unclassified with diagnostics.
    """
    gamma = _as_gamma(gamma)
    ts = np.concatenate([[0.0], np.geomspace(1e-3, horizon, n_samples - 1)])
    gvals = np.asarray(gamma(ts), dtype=float)
    diagnostics = {}

    if np.all(gvals == 0.0):
        if s0 <= 0:
            zero = lambda t: np.zeros_like(np.asarray(t, dtype=float))
            return DecayClassification("unforced", None, {"note": "zero initial value"},
                                       {}, zero)
        inverse = _psi_inverse_factory(p, s0, horizon)
        model, params = _name_curve(inverse, horizon * 1e-2, horizon)
        return DecayClassification("unforced", model, params, {}, inverse,
                                   {"horizon": horizon})
    if np.any(gvals <= 0.0):
        return DecayClassification("unclassified", None, {},
                                   {}, None, {"reason": "Gamma changes sign or vanishes"})

    # p^{-1}(Gamma) on the sample grid, and r(t) = -d/dt p^{-1}(Gamma) / Gamma
    upper = max(float(s0), 1.0)
    pinv_hint = upper

    def p_inverse(y):
        return invert_increasing(lambda x: float(p(x)), float(y), hi_hint=pinv_hint)

    phi = np.array([p_inverse(g) for g in gvals])
    dphi = np.gradient(phi, ts)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = -dphi / gvals
    r_interior = r[1:-1]
    diagnostics["r_min"] = float(np.min(r_interior))
    diagnostics["r_max"] = float(np.max(r_interior))
    # trend of r decides which differential inequality can hold for ALL t:
    # growing r kills "c >= r everywhere" beyond any finite sample horizon,
    # shrinking r kills the strict "c < r everywhere"
    n_edge = max(4, len(r_interior) // 10)
    r_early = float(np.median(r_interior[:n_edge]))
    r_late = float(np.median(r_interior[-n_edge:]))
    r_increasing = r_late > 1.2 * r_early
    r_decreasing = r_late < 0.8 * r_early
    diagnostics["r_trend"] = ("increasing" if r_increasing
                              else "decreasing" if r_decreasing else "flat")

    scan_range = max(float(s0), float(phi[0]), 1e-12)
    m_const = estimate_homogeneity_constant(p, scan_range)
    diagnostics["m"] = m_const

    grid = sorted(set((c_grid or _default_c_grid())
                      + [0.95 * diagnostics["r_min"], 1.05 * diagnostics["r_max"]]))
    grid = [c for c in grid if c > 0 and math.isfinite(c)]

    def find_kappa(c):
        kappa = max(1.0, float(s0) / max(float(phi[0]), 1e-300))
        for _ in range(80):
            if m_const * float(p(kappa)) - kappa * c - 1.0 >= 0.0 and kappa * phi[0] >= s0:
                return kappa
            kappa *= 2.0
            if kappa > kappa_max:
                return None
        return None

    # forced-dominant: d/dt p^{-1}(Gamma) + c Gamma >= 0, i.e. c >= r everywhere
    dominant_candidates = [] if r_increasing else grid
    for c in dominant_candidates:
        if c < diagnostics["r_max"]:
            continue
        kappa = find_kappa(c)
        if kappa is None:
            continue

        def bound_fn(t, k=kappa):
            arr = np.atleast_1d(np.asarray(gamma(t), dtype=float))
            vals = np.array([k * p_inverse(g) for g in arr])
            return float(vals[0]) if np.ndim(t) == 0 else vals.reshape(np.shape(t))

        window = name_window or (horizon * 1e-2, horizon)
        model, params = _name_curve(bound_fn, *window)
        adm = {"c": c, "kappa": kappa, "m": m_const,
               "differential_condition": True, "kappa_condition": True,
               "initial_condition": bool(kappa * phi[0] >= s0)}
        return DecayClassification("forced-dominant", model, params, adm, bound_fn,
                                   diagnostics)

    # forced-subdominant: strict inequality c < r everywhere; a ratio that
    # keeps shrinking admits no single c > 0 below it for all times
    feasible = [] if r_decreasing else \
        [c for c in grid if c <= diagnostics["r_min"] * (1.0 - 1e-9)]
    for c in sorted(feasible, reverse=True):
        kappa = find_kappa(c)
        if kappa is None:
            continue
        inverse = _psi_inverse_factory(p, float(phi[0]), c * horizon)

        def bound_fn(t, k=kappa, cc=c, inv=inverse):
            return k * inv(cc * np.asarray(t, dtype=float))

        window = name_window or (horizon * 1e-2, horizon)
        model, params = _name_curve(bound_fn, *window)
        adm = {"c": c, "kappa": kappa, "m": m_const,
               "differential_condition": True, "kappa_condition": True,
               "initial_condition": bool(kappa * phi[0] >= s0)}
        return DecayClassification("forced-subdominant", model, params, adm, bound_fn,
                                   diagnostics)

    return DecayClassification("unclassified", None, {}, {}, None,
                               {**diagnostics, "reason": "no admissible (c, kappa) found"})


# ---------------------------------------------------------------------------
# closed-form rate table for the linear dissipation map

@dataclass
class LinearRateVerdict:
    case: str   # exp-fast | exp-critical | exp-slow | polynomial
    model: str  # exponential | exponential-critical | polynomial
    params: dict
    s_bound: Callable
    envelope: Callable  # valid on t >= T

    def to_dict(self):
        return {"case": self.case, "model": self.model, "params": self.params}


def _poly_exp_sup(alpha, theta):
    # sup_t (1+t)^theta exp(-alpha t); maximum at t = theta/alpha - 1 when positive
    if alpha <= 0:
        raise ValueError("need a positive decay rate")
    t_star = theta / alpha - 1.0
    if t_star <= 0:
        return 1.0
    return (theta / alpha) ** theta * math.exp(-(theta - alpha))


def linear_rate_table(C, kind, theta, M, T, s0=0.0, envelope_factor=4.0,
                      gamma_factor=1.0):
    """Closed-form envelopes for dS/dt + C S = Gamma via the integrating factor.

    kind = "exponential": Gamma <= M e^{-theta t}; the verdict splits on C
    versus theta (rate theta, critical (1+t) e^{-theta t}, or rate C).
    kind = "polynomial":  Gamma <= M (1+t)^{-theta}, theta > 1; verdict
    exponent theta with a constructive coefficient.
    Returned envelopes bound envelope_factor e^T (S(t-T) + gamma_factor *
    window) for t >= T.
    """
    if C <= 0 or M < 0 or T <= 0:
        raise ValueError("need C > 0, M >= 0, T > 0")
    amp = envelope_factor * math.exp(T)

    if kind == "exponential":
        if theta <= 0:
            raise ValueError("exponential Gamma needs theta > 0")
        window_coeff = M * (math.exp(theta * T) - 1.0) / theta  # times e^{-theta t}
        if C > theta:
            c_s = s0 + M / (C - theta)
            s_bound = lambda t: c_s * np.exp(-theta * np.asarray(t, dtype=float))
            coeff = amp * (c_s * math.exp(theta * T) + gamma_factor * window_coeff)
            env = lambda t: coeff * np.exp(-theta * np.asarray(t, dtype=float))
            return LinearRateVerdict("exp-fast", "exponential",
                                     {"rate": theta, "coefficient": coeff},
                                     s_bound, env)
        if C == theta:
            c_s = s0 + M
            s_bound = lambda t: c_s * (1.0 + np.asarray(t, dtype=float)) * np.exp(
                -theta * np.asarray(t, dtype=float))

            def env(t):
                t = np.asarray(t, dtype=float)
                return amp * (c_s * (1.0 + (t - T)) * np.exp(-theta * (t - T))
                              + gamma_factor * window_coeff * np.exp(-theta * t))

            return LinearRateVerdict("exp-critical", "exponential-critical",
                                     {"rate": theta, "coefficient": amp * c_s},
                                     s_bound, env)
        c_s = s0 + M / (theta - C)
        s_bound = lambda t: c_s * np.exp(-C * np.asarray(t, dtype=float))

        def env(t):
            t = np.asarray(t, dtype=float)
            return amp * (c_s * np.exp(-C * (t - T))
                          + gamma_factor * window_coeff * np.exp(-theta * t))

        return LinearRateVerdict("exp-slow", "exponential",
                                 {"rate": C, "coefficient": amp * c_s * math.exp(C * T)},
                                 s_bound, env)

    if kind == "polynomial":
        if theta <= 1:
            raise ValueError("polynomial Gamma needs theta > 1 for an integrable force")
        c_s = (s0 * _poly_exp_sup(C, theta)
               + M * (_poly_exp_sup(0.5 * C, theta) / (theta - 1.0) + 2.0**theta / C))
        s_bound = lambda t: c_s * np.power(1.0 + np.asarray(t, dtype=float), -theta)
        coeff = amp * (c_s + gamma_factor * T * M)
        env = lambda t: coeff * np.power(1.0 + np.asarray(t, dtype=float) - T, -theta)
        return LinearRateVerdict("polynomial", "polynomial",
                                 {"exponent": theta, "coefficient": coeff},
                                 s_bound, env)

    raise ValueError(f"unknown Gamma kind {kind!r}")


def power_law_minorant(p, s_lo, s_hi, n=80):
    """Fit p from below by C s^gamma on [s_lo, s_hi]: log-log least squares for
    the exponent, then the coefficient is shrunk until the power law sits
    under p on the sampled range.  Returns (C, gamma, callable)."""
    xs = np.geomspace(s_lo, s_hi, n)
    ps = np.array([float(p(x)) for x in xs])
    if np.any(ps <= 0):
        raise ValueError("dissipation map must be positive on the fit range")
    slope = np.polyfit(np.log(xs), np.log(ps), 1)[0]
    gamma_exp = float(slope)
    coeff = float(np.min(ps / xs**gamma_exp))

    def p_tilde(s):
        s = np.asarray(s, dtype=float)
        out = coeff * np.power(np.maximum(s, 0.0), gamma_exp)
        return float(out) if out.ndim == 0 else out

    return coeff, gamma_exp, p_tilde
