"""Scalar numerical building blocks: monotone inversion, concave maximization,
adaptive quadrature. Shared by the damping, forcing and bound modules."""

from __future__ import annotations

import numpy as np
from scipy import integrate

_TINY = 1e-300


def invert_increasing(fn, target, lo=0.0, hi_hint=1.0, iters=120):
    """Solve fn(x) = target for a strictly increasing fn on [lo, inf).

    The upper bracket grows geometrically from ``hi_hint`` and the lower one
    shrinks toward ``lo``; the root is then pinned by bisection.  Derivative
    free, so fn may have corners (or vanish extremely fast near 0).
    """
    if target <= fn(lo):
        return lo
    hi = max(hi_hint, lo + _TINY)
    for _ in range(1200):
        if fn(hi) >= target:
            break
        hi *= 2.0
    else:
        raise ValueError("invert_increasing: no upper bracket found")
    low = lo
    probe = hi
    for _ in range(1200):
        probe *= 0.5
        if probe <= lo + _TINY:
            break
        if fn(probe) < target:
            low = probe
            break
        hi = probe
    for _ in range(iters):
        mid = 0.5 * (low + hi)
        if mid <= low or mid >= hi:
            break
        if fn(mid) < target:
            low = mid
        else:
            hi = mid
    return 0.5 * (low + hi)


def concave_max(objective, hi_hint=1.0, iters=260, grow_limit=400):
    """Maximize a concave objective on [0, inf).

    Expands the bracket by doubling until the objective stops improving, then
    runs a ternary search.  Returns ``(argmax, value, diverged)`` where
    ``diverged`` flags an objective still increasing at an astronomically
    large argument (the supremum is then treated as +inf).
    """
    b = max(hi_hint, 1e-8)
    f_prev = objective(b)
    for _ in range(grow_limit):
        f_next = objective(2.0 * b)
        if f_next <= f_prev or not np.isfinite(f_next):
            break
        b *= 2.0
        f_prev = f_next
        if b > 1e150:
            return b, f_prev, True
    lo, hi = 0.0, 2.0 * b
    for _ in range(iters):
        if hi - lo <= 1e-13 * (1.0 + hi):
            break
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if objective(m1) < objective(m2):
            lo = m1
        else:
            hi = m2
    x = 0.5 * (lo + hi)
    return x, objective(x), False


def quad(fn, a, b, rtol=1e-9):
    """Adaptive quadrature of fn over [a, b] with relative tolerance rtol.

    Roundoff-attainment warnings are demoted: integrands with kinks (e.g.
    squared tabulated profiles) cap the reachable tolerance near machine
    precision without affecting the callers' headroom.
    """
    import warnings

    if b <= a:
        return 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, b, epsrel=rtol, epsabs=1e-300, limit=400)
    return val


def quad_to_infinity(fn, a=0.0, rtol=1e-9):
    """Adaptive quadrature over [a, inf); slow-tail warnings are demoted since
    callers only need a scale, not full precision."""
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(fn, a, np.inf, epsrel=rtol, epsabs=1e-14, limit=400)
    return val


def linear_fit(x, y):
    """Least squares line y ~ intercept + slope*x. Returns (slope, intercept, rms)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), float(coef[1]), rms
