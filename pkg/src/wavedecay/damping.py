"""Scalar damping laws g, their envelope constants, and the concave calibration
functions h0 and h used to convert observed dissipation into energy bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .numerics import invert_increasing

__all__ = ["DampingLaw", "HFunction", "make_law", "make_h", "implicit_damp_solve"]


@dataclass(frozen=True)
class DampingLaw:
    """Monotone scalar damping nonlinearity with its calibration data.

    ``g`` is continuous, odd for the built-in kinds, increasing, g(0) = 0.
    ``m`` and ``eta`` bound g at infinity: (1/m) s^2 <= g(s) s <= m s^2 for
    |s| > eta.  ``h0`` is strictly increasing with h0(0) = 0 and dominates
    the near-origin dissipation: h0(g(s) s) >= eps0 (s^2 + g(s)^2) on
    |s| <= eta for some eps0 > 0.
    """

    kind: str
    g: Callable
    m: float
    eta: float
    h0: Callable
    h0_inverse: Callable
    params: dict = field(default_factory=dict)

    def is_linear(self):
        return self.kind == "linear"


@dataclass(frozen=True)
class HFunction:
    """h = I + mass * h0(I / mass) for a damper mass over one control window.

    h(0) = 0, h is strictly increasing and h(x) >= x, so its inverse exists
    on [0, inf) and satisfies h_inverse(y) <= y.
    """

    law: DampingLaw
    mass: float

    def __call__(self, x):
        if np.ndim(x) == 0:
            xv = float(x)
            return xv + self.mass * float(self.law.h0(xv / self.mass))
        x = np.asarray(x, dtype=float)
        return x + self.mass * self.law.h0(x / self.mass)

    def inverse(self, y):
        """Monotone bisection with geometric bracket growth; h(x) >= x gives
        the initial upper bracket x <= y."""
        y = float(y)
        if y <= 0.0:
            return 0.0
        return invert_increasing(self, y, hi_hint=y, iters=100)

    def inverse_fast(self, n=6000, x_lo=1e-250, x_hi=1e12):
        """Interpolated inverse for hot loops (around 1e-8 relative accuracy
        on the tabulated range, exact bisection below it).  The contractual
        evaluator stays :meth:`inverse`."""
        from scipy.interpolate import PchipInterpolator

        xs = np.geomspace(x_lo, x_hi, n)
        ys = np.array([float(self(x)) for x in xs])
        keep = np.concatenate([[True], np.diff(np.log(ys)) > 1e-12])
        interp = PchipInterpolator(np.log(ys[keep]), np.log(xs[keep]))
        y_min, y_max = ys[keep][0], ys[keep][-1]

        def fast(y):
            y = float(y)
            if y <= 0.0:
                return 0.0
            if y < y_min or y > y_max:
                return self.inverse(y)
            return math.exp(float(interp(math.log(y))))

        return fast


def _g_linear(s):
    return np.asarray(s, dtype=float)


def _g_sublinear(r0):
    def g(s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        inner = np.sign(s) * np.power(a, r0, where=a > 0, out=np.zeros_like(a))
        return np.where(a <= 1.0, inner, s)

    return g


def _g_superlinear(s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        core = np.where(a > 0, np.exp(-1.0 / np.where(a > 0, a * a, 1.0)), 0.0)
    inner = np.sign(s) * s * s * core
    # linear continuation beyond |s| = 1 matching g(1) = exp(-1)
    return np.where(a <= 1.0, inner, s * np.exp(-1.0))


def _superlinear_h0_inverse(s):
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out = np.where(s > 0, np.power(np.maximum(s, 1e-300), 1.5)
                       * np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
    return float(out) if out.ndim == 0 else out


def _superlinear_h0_scalar(y):
    if y <= 0.0:
        return 0.0
    return invert_increasing(lambda s: float(_superlinear_h0_inverse(s)), y,
                             hi_hint=1.0, iters=140)


class _SuperlinearH0:
    """Inverse of s -> s^{3/2} exp(-1/s), interpolated on a log-log table.

    In log coordinates the graph w = 1.5 sigma - exp(-sigma) (sigma = ln s)
    is smooth and strictly increasing, so a dense monotone interpolant of
    sigma(w) reproduces the inverse to around 1e-9 relative accuracy; the
    deep tail below the table uses the asymptote 1/s ~ -ln y.
    """

    def __init__(self, n=1600, sigma_lo=math.log(2e-3), sigma_hi=math.log(1e8)):
        sigma = np.linspace(sigma_lo, sigma_hi, n)
        w = 1.5 * sigma - np.exp(-sigma)
        self.w = w
        self.sigma = sigma

    def _scalar(self, y):
        if y <= 0.0:
            return 0.0
        ly = math.log(y)
        if ly < self.w[0]:
            s = -1.0 / ly
            for _ in range(3):
                s = 1.0 / (-ly + 1.5 * math.log(s))
            return s
        if ly > self.w[-1]:
            # s^{3/2} dominates at large arguments
            return math.exp((ly + math.exp(-self.sigma[-1])) / 1.5)
        return math.exp(float(np.interp(ly, self.w, self.sigma)))

    def __call__(self, y):
        if np.ndim(y) == 0:
            return self._scalar(float(y))
        arr = np.asarray(y, dtype=float)
        return np.array([self._scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)


def _table_law(s_table, g_table, m, eta):
    s_table = np.asarray(s_table, dtype=float)
    g_table = np.asarray(g_table, dtype=float)
    if s_table.ndim != 1 or s_table.shape != g_table.shape or s_table.size < 2:
        raise ValueError("table law needs matching 1D arrays of at least 2 points")
    if s_table[0] < 0 or np.any(np.diff(s_table) <= 0):
        raise ValueError("table abscissae must be nonnegative and strictly increasing")
    if np.any(np.diff(g_table) < 0) or np.any(g_table < 0):
        raise ValueError("non-monotone user table")
    if s_table[0] > 0:
        s_table = np.concatenate([[0.0], s_table])
        g_table = np.concatenate([[0.0], g_table])
    s_max, g_max = s_table[-1], g_table[-1]
    end_slope = g_max / s_max if s_max > 0 else 1.0

    def g(s):
        s = np.asarray(s, dtype=float)
        a = np.abs(s)
        inside = np.interp(a, s_table, g_table)
        out = np.where(a <= s_max, inside, end_slope * a)
        return np.sign(s) * out

    # h0 built so that h0(g(s) s) = s^2 + g(s)^2 on the tabulated range:
    # both maps are increasing in |s|, which makes h0 increasing with h0(0) = 0.
    d = s_table * g_table
    q = s_table**2 + g_table**2
    keep = np.concatenate([[True], np.diff(d) > 0])
    d, q = d[keep], q[keep]

    def h0(y):
        y = np.asarray(y, dtype=float)
        inside = np.interp(y, d, q)
        out = np.where(y <= d[-1], inside, q[-1] + (y - d[-1]) * (q[-1] / max(d[-1], 1e-300)))
        return float(out) if out.ndim == 0 else out

    def h0_inverse(z):
        z = np.asarray(z, dtype=float)
        inside = np.interp(z, q, d)
        out = np.where(z <= q[-1], inside, d[-1] + (z - q[-1]) * (d[-1] / max(q[-1], 1e-300)))
        return float(out) if out.ndim == 0 else out

    if m is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = g_table[1:] / s_table[1:]
        tail = ratios[s_table[1:] > eta] if eta is not None else ratios[-3:]
        if tail.size == 0:
            tail = ratios[-1:]
        m = max(float(np.max(tail)), 1.0 / float(np.min(tail)), 1.0)
    if eta is None:
        eta = float(s_table[-1])
    return g, h0, h0_inverse, float(m), float(eta)


def make_law(kind, **params):
    """Build one of the supported damping laws.

    kind = "linear":       g(s) = s, h0 = identity.
    kind = "sublinear":    g(s) = sign(s) |s|^r0 for |s| <= 1, g(s) = s beyond
                           (continuous at 1), r0 in (0, 1);
                           h0(s) = s^(2 r0 / (1 + r0)).
    kind = "superlinear":  g(s) = sign(s) s^2 exp(-1/s^2) for |s| < 1, linear
                           continuation beyond; h0 given through its inverse
                           h0^{-1}(s) = s^(3/2) exp(-1/s), inverted numerically.
    kind = "table":        user table s >= 0, g >= 0 (odd extension); h0 is
                           assembled from the tabulated dissipation s*g(s).
    """
    if kind == "linear":
        ident = lambda x: float(x) if np.ndim(x) == 0 else np.asarray(x, dtype=float) + 0.0
        return DampingLaw(kind="linear", g=_g_linear, m=1.0, eta=1.0,
                          h0=ident, h0_inverse=ident)

    if kind == "sublinear":
        r0 = params.get("r0")
        if r0 is None or not (0.0 < r0 < 1.0):
            raise ValueError("sublinear law needs r0 in (0, 1)")
        q = 2.0 * r0 / (1.0 + r0)

        def h0(x):
            if np.ndim(x) == 0:
                xv = float(x)
                return xv**q if xv > 0.0 else 0.0
            return np.power(np.maximum(np.asarray(x, dtype=float), 0.0), q)

        def h0_inverse(y):
            if np.ndim(y) == 0:
                yv = float(y)
                return yv ** (1.0 / q) if yv > 0.0 else 0.0
            return np.power(np.maximum(np.asarray(y, dtype=float), 0.0), 1.0 / q)

        return DampingLaw(kind="sublinear", g=_g_sublinear(r0), m=1.0, eta=1.0,
                          h0=h0, h0_inverse=h0_inverse, params={"r0": float(r0)})

    if kind == "superlinear":
        return DampingLaw(kind="superlinear", g=_g_superlinear,
                          m=float(np.e), eta=1.0,
                          h0=_SuperlinearH0(),
                          h0_inverse=_superlinear_h0_inverse)

    if kind == "table":
        g, h0, h0_inv, m, eta = _table_law(params["s"], params["g"],
                                           params.get("m"), params.get("eta"))
        return DampingLaw(kind="table", g=g, m=m, eta=eta,
                          h0=h0, h0_inverse=h0_inv)

    raise ValueError(f"unknown damping law kind: {kind!r}")


def make_h(law, damper_mass):
    """h = I + mass * h0(I / mass); the inverse is computed by bracketed
    monotone bisection (see HFunction.inverse)."""
    if damper_mass <= 0:
        raise ValueError("damper mass must be positive")
    return HFunction(law=law, mass=float(damper_mass))


def implicit_damp_solve(law, weight, rhs, tol_factor=1e-12):
    """Solve v + weight * g(v) = rhs for the unique root v.

    ``weight`` (= dt * a_i >= 0) and ``rhs`` may be scalars or equally shaped
    arrays; the root lies in [min(0, rhs), max(0, rhs)] because the left side
    is increasing and vanishes at 0.  Residuals satisfy
    |v + weight g(v) - rhs| <= tol_factor * (1 + |rhs|).
    """
    scalar = np.isscalar(weight) and np.isscalar(rhs)
    w = np.asarray(weight, dtype=float)
    r = np.asarray(rhs, dtype=float)
    w, r = np.broadcast_arrays(w, r)
    if np.any(w < 0):
        raise ValueError("damping weight must be nonnegative")

    if law.is_linear():
        v = r / (1.0 + w)
        return float(v) if scalar else v.copy()

    v = np.where(w == 0.0, r, 0.0)
    active = w > 0.0
    if np.any(active):
        wa = w[active]
        ra = r[active]
        lo = np.minimum(0.0, ra)
        hi = np.maximum(0.0, ra)
        tol = tol_factor * (1.0 + np.abs(ra))
        # safeguarded secant (Illinois) on the bracketed monotone residual;
        # f_lo <= 0 <= f_hi holds because v + w g(v) - r vanishes inside
        f_lo = lo + wa * law.g(lo) - ra
        f_hi = hi + wa * law.g(hi) - ra
        denom = f_hi - f_lo
        va = np.where(denom > 0, (lo * f_hi - hi * f_lo) / np.where(denom > 0, denom, 1.0),
                      0.5 * (lo + hi))
        side = np.zeros_like(va)
        for _ in range(120):
            res = va + wa * law.g(va) - ra
            if np.all(np.abs(res) <= tol):
                break
            pos = res > 0.0
            f_lo = np.where(pos & (side > 0), 0.5 * f_lo, f_lo)
            f_hi = np.where(~pos & (side < 0), 0.5 * f_hi, f_hi)
            hi = np.where(pos, va, hi)
            f_hi = np.where(pos, res, f_hi)
            lo = np.where(pos, lo, va)
            f_lo = np.where(pos, f_lo, res)
            side = np.where(pos, 1.0, -1.0)
            denom = f_hi - f_lo
            ok = denom > 0
            va = np.where(ok, (lo * f_hi - hi * f_lo) / np.where(ok, denom, 1.0),
                          0.5 * (lo + hi))
            va = np.clip(va, lo, hi)
            if np.all(hi - lo <= 1e-17 * (1.0 + np.abs(ra))):
                break
        v[active] = va
    return float(v) if scalar else v
