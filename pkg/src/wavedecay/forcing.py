"""External force profiles, the forcing magnitude Gamma(t) that drives the
comparison ODEs, and the convex conjugate pair (psi, psi*) used to absorb the
force-velocity coupling in the nonlinear pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .numerics import concave_max, quad, quad_to_infinity

__all__ = [
    "ForcingTerm",
    "GammaProfile",
    "ConjugatePair",
    "gamma_linear",
    "gamma_nonlinear",
    "conjugate",
    "window_integral",
    "rho_zero",
    "rho_exponential",
    "rho_polynomial",
    "rho_table",
]


# ---------------------------------------------------------------------------
# time profiles for the separable force f(t, x) = rho(t) * phi(x)

def rho_zero():
    return lambda t: np.zeros_like(np.asarray(t, dtype=float))


def rho_exponential(amplitude, rate):
    if rate <= 0:
        raise ValueError("exponential profile needs a positive rate")
    return lambda t: amplitude * np.exp(-rate * np.asarray(t, dtype=float))


def rho_polynomial(amplitude, power):
    # square integrability of rho on (0, inf) requires power > 1/2
    if power <= 0.5:
        raise ValueError("polynomial profile needs power > 1/2 so the force is square integrable")
    return lambda t: amplitude * np.power(1.0 + np.asarray(t, dtype=float), -power)


def rho_table(times, values):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("tabulated profile times must be strictly increasing")
    return lambda t: np.interp(np.asarray(t, dtype=float), times, values,
                               left=values[0], right=values[-1])


class ForcingTerm:
    """Separable force f(t, x) = rho(t) * phi(x) with phi normalized to unit
    L2 norm on the grid it is bound to, so that ||f(t, .)|| = |rho(t)| exactly
    at the discrete level."""

    def __init__(self, rho: Callable, shape: Callable | np.ndarray | None = None,
                 kind: str = "custom"):
        self.rho = rho
        self.shape = shape
        self.kind = kind

    def bind(self, grid):
        if self.shape is None:
            if grid.dimension == 1:
                x = grid.coordinates()[0]
                phi = np.sin(np.pi * x / grid.lengths[0])
            else:
                x, y = grid.coordinates()
                phi = (np.sin(np.pi * x / grid.lengths[0])
                       * np.sin(np.pi * y / grid.lengths[1]))
        elif callable(self.shape):
            phi = np.asarray(self.shape(*grid.coordinates()), dtype=float)
        else:
            phi = np.asarray(self.shape, dtype=float)
            if phi.shape != grid.shape:
                raise ValueError("tabulated force shape does not match the grid")
        phi = phi.copy()
        grid.apply_dirichlet(phi)
        norm = math.sqrt(float(np.sum(phi**2)) * grid.cell_measure)
        if norm == 0.0:
            raise ValueError("force spatial shape vanishes identically")
        return BoundForcing(rho=self.rho, phi=phi / norm, kind=self.kind)

    @classmethod
    def zero(cls):
        return cls(rho_zero(), kind="zero")

    def is_zero(self):
        return self.kind == "zero"


@dataclass
class BoundForcing:
    """Force evaluated on grid nodes; phi carries unit discrete L2 norm."""

    rho: Callable
    phi: np.ndarray
    kind: str = "custom"

    def values(self, t):
        return float(self.rho(t)) * self.phi

    def norm(self, t):
        return np.abs(self.rho(t))

    def norm_sq(self, t):
        r = self.rho(t)
        return r * r

    def is_zero(self):
        return self.kind == "zero"


# ---------------------------------------------------------------------------
# Gamma profiles

class GammaProfile:
    """Nonnegative forcing magnitude Gamma(t) feeding the comparison ODEs."""

    def __init__(self, fn: Callable, kind: str = "custom", diverged: bool = False):
        self._fn = fn
        self.kind = kind
        self.diverged = diverged

    def __call__(self, t):
        out = self._fn(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def window(self, t, width, rtol=1e-9):
        return window_integral(self, t, width, rtol=rtol)

    def l1_norm(self, rtol=1e-9):
        """Integral of Gamma over (0, inf)."""
        return quad_to_infinity(lambda s: self(s), 0.0, rtol=rtol)

    @classmethod
    def zero(cls):
        return cls(lambda t: np.zeros_like(np.asarray(t, dtype=float)), kind="zero")

    def is_zero(self):
        return self.kind == "zero"


def gamma_linear(f: ForcingTerm | BoundForcing, c1t: float) -> GammaProfile:
    """Gamma(t) = C_1T * ||f(t, .)||^2 for the linear-damping bound."""
    if c1t < 1.0:
        raise ValueError("C_1T must be at least 1")
    if f.is_zero():
        return GammaProfile.zero()
    rho = f.rho

    def fn(t):
        r = rho(t)
        return c1t * r * r

    return GammaProfile(fn, kind="linear")


def gamma_nonlinear(f: ForcingTerm | BoundForcing, pair: "ConjugatePair") -> GammaProfile:
    """Gamma(t) = 2 ||f(t, .)||^2 + psi*(||f(t, .)||) for the nonlinear bound."""
    if f.is_zero():
        return GammaProfile.zero()
    rho = f.rho
    table = pair.psi_star_table()

    def fn(t):
        r = np.abs(rho(t))
        return 2.0 * r * r + table(r)

    return GammaProfile(fn, kind="nonlinear", diverged=pair.diverged)


def window_integral(gamma, t, width, rtol=1e-9):
    """Adaptive quadrature of Gamma over [t, t + width]."""
    if width <= 0:
        raise ValueError("window width must be positive")
    if t < 0:
        raise ValueError("window start must be nonnegative")
    if isinstance(gamma, GammaProfile) and gamma.is_zero():
        return 0.0
    fn = gamma if callable(gamma) else gamma
    return quad(lambda s: float(fn(s)), t, t + width, rtol=rtol)


# ---------------------------------------------------------------------------
# convex conjugate pair

class ConjugatePair:
    """psi(s) = (1/2T) h^{-1}(s^2 / (8 C_T e^T)) on s >= 0 (+inf on s < 0) and
    its convex conjugate psi*(s) = sup_{y >= 0} [s y - psi(y)].

    The supremum is computed by an expanding-bracket ternary search on the
    concave objective; it is finite for every finite s because h(x) >= x
    forces psi to grow quadratically at infinity.
    """

    def __init__(self, T, c_t, h):
        if T <= 0:
            raise ValueError("window length T must be positive")
        if c_t < 1.0:
            raise ValueError("C_T must be at least 1")
        # reject a non-increasing h up front
        probes = np.array([0.5, 1.0, 2.0, 4.0])
        vals = np.array([h(p) for p in probes])
        if np.any(np.diff(vals) <= 0):
            raise ValueError("h must be strictly increasing")
        self.T = float(T)
        self.c_t = float(c_t)
        self.h = h
        self.scale = 8.0 * self.c_t * math.exp(self.T)
        self.diverged = False
        self._table = None

    def psi(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim == 0:
            sv = float(s)
            if sv < 0:
                return math.inf
            return self.h.inverse(sv * sv / self.scale) / (2.0 * self.T)
        return np.array([self.psi(float(v)) for v in s])

    def _objective(self, s):
        # y parametrized as y = sqrt(scale * h(x)) so that psi(y) = x / (2T);
        # the substitution keeps the search in terms of the cheap forward h.
        def obj(x):
            return s * math.sqrt(self.scale * float(self.h(x))) - x / (2.0 * self.T)

        return obj

    def psi_star(self, s):
        """Numeric supremum sup_{y>=0} [s y - psi(y)] (vectorized over s)."""
        arr = np.asarray(s, dtype=float)
        if arr.ndim > 0:
            return np.array([self.psi_star(float(v)) for v in arr.ravel()]).reshape(arr.shape)
        sv = float(arr)
        if sv <= 0.0:
            return 0.0
        x, val, diverged = concave_max(self._objective(sv), hi_hint=1.0)
        if diverged:
            self.diverged = True
            return math.inf
        return max(val, 0.0)

    def psi_star_table(self, n=400, s_lo=1e-12, s_hi=1e6):
        """Monotone log-log interpolant of psi* built from the parametric
        graph of psi (touching slopes against touching values); used as the
        fast path when Gamma is evaluated many times."""
        if self._table is not None:
            return self._table
        xs = np.logspace(-14, 10, n)
        s_vals = np.empty(n)
        f_vals = np.empty(n)
        for i, x in enumerate(xs):
            hx = float(self.h(x))
            dx = 1e-6 * x
            hp = (float(self.h(x + dx)) - float(self.h(max(x - dx, 0.0)))) / (dx + min(dx, x))
            y = math.sqrt(self.scale * hx)
            dy_dx = self.scale * hp / (2.0 * y)
            if dy_dx <= 0 or not np.isfinite(dy_dx):
                s_vals[i] = np.nan
                f_vals[i] = np.nan
                continue
            # touching slope of psi at y, and the exact conjugate value there:
            # psi(y) = x / (2T)  =>  dpsi/dy = (1 / 2T) / (dy/dx)
            s_vals[i] = (1.0 / (2.0 * self.T)) / dy_dx
            f_vals[i] = s_vals[i] * y - x / (2.0 * self.T)
        good = (s_vals > 0) & (f_vals > 0) & np.isfinite(s_vals) & np.isfinite(f_vals)
        s_vals, f_vals = s_vals[good], f_vals[good]
        order = np.argsort(s_vals)
        s_vals, f_vals = s_vals[order], f_vals[order]
        keep = np.concatenate([[True], np.diff(np.log(s_vals)) > 1e-12])
        s_vals, f_vals = s_vals[keep], f_vals[keep]
        interp = PchipInterpolator(np.log(s_vals), np.log(f_vals), extrapolate=True)
        lo, hi = s_vals[0], s_vals[-1]

        def table(s):
            s = np.asarray(s, dtype=float)
            scalar = s.ndim == 0
            s = np.atleast_1d(s)
            out = np.zeros_like(s)
            pos = s > 0
            out[pos] = np.exp(interp(np.log(np.clip(s[pos], lo, hi))))
            # extrapolate with the boundary log-log slope beyond the table
            low = pos & (s < lo)
            if np.any(low):
                slope = float(interp.derivative()(math.log(lo)))
                out[low] = math.exp(float(interp(math.log(lo)))) * (s[low] / lo) ** slope
            high = pos & (s > hi)
            if np.any(high):
                slope = float(interp.derivative()(math.log(hi)))
                out[high] = math.exp(float(interp(math.log(hi)))) * (s[high] / hi) ** slope
            return float(out[0]) if scalar else out

        self._table = table
        return table


def conjugate(T, c_t, h) -> ConjugatePair:
    """Build the conjugate pair for the nonlinear forcing magnitude."""
    return ConjugatePair(T, c_t, h)
