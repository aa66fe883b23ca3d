"""Discrete spatial domains (interval / rectangle) with homogeneous Dirichlet
boundaries, localized damper coefficient profiles, and the 1D geometric
control time of a damper support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "DamperProfile",
    "ControlTime",
    "build_damper",
    "control_time_1d",
    "ray_traced_control_time",
]

_MIN_CELLS = 8


@dataclass(frozen=True)
class Grid:
    """Uniform grid on (0, L) or (0, Lx) x (0, Ly), unit wave speed.

    ``cells`` counts subintervals per axis; each axis carries ``cells + 1``
    nodes including the two boundary nodes, which always hold the value 0.
    """

    lengths: tuple
    cells: tuple

    def __post_init__(self):
        if len(self.lengths) not in (1, 2) or len(self.lengths) != len(self.cells):
            raise ValueError("grid must be 1D or 2D with matching lengths/cells")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("grid lengths must be positive")
        if any(int(n) != n or n < _MIN_CELLS for n in self.cells):
            raise ValueError(f"grid needs at least {_MIN_CELLS} cells per axis")

    @classmethod
    def line(cls, length=1.0, cells=400):
        return cls((float(length),), (int(cells),))

    @classmethod
    def rectangle(cls, lx, ly, nx, ny):
        return cls((float(lx), float(ly)), (int(nx), int(ny)))

    @property
    def dimension(self):
        return len(self.lengths)

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.lengths, self.cells))

    @property
    def dx(self):
        return self.spacing[0]

    @property
    def shape(self):
        return tuple(n + 1 for n in self.cells)

    def axes(self):
        """Node coordinates along each axis."""
        return tuple(
            np.linspace(0.0, L, n + 1) for L, n in zip(self.lengths, self.cells)
        )

    def coordinates(self):
        """Node coordinate arrays shaped like a nodal field."""
        if self.dimension == 1:
            return (self.axes()[0],)
        return np.meshgrid(*self.axes(), indexing="ij")

    def zeros(self):
        return np.zeros(self.shape)

    @property
    def cell_measure(self):
        m = 1.0
        for h in self.spacing:
            m *= h
        return m

    def apply_dirichlet(self, field):
        """Zero the boundary nodes of a nodal field in place."""
        if self.dimension == 1:
            field[0] = 0.0
            field[-1] = 0.0
        else:
            field[0, :] = 0.0
            field[-1, :] = 0.0
            field[:, 0] = 0.0
            field[:, -1] = 0.0
        return field


@dataclass(frozen=True)
class DamperProfile:
    """Nonnegative damping coefficient a(x) on grid nodes.

    ``support`` keeps the declared union of intervals (1D) or axis-aligned
    rectangles (2D) on which the coefficient is positive; ``smoothing`` is
    the width of the cubic ramp used to mollify the indicator.
    """

    grid: Grid
    values: np.ndarray
    support: tuple
    amplitude: float
    smoothing: float

    def __post_init__(self):
        self.values.flags.writeable = False

    def mass(self, window_length):
        """Space-time damper mass over a window of the given length,
        window_length * integral of a(x) dx (nodal quadrature)."""
        return float(window_length) * float(np.sum(self.values)) * self.grid.cell_measure

    @property
    def max_value(self):
        return float(np.max(self.values))


@dataclass(frozen=True)
class ControlTime:
    """Minimal time for every unit-speed reflected ray to enter the damper support."""

    t_min: float
    method: str  # "closed-form" | "ray-traced"


def _ramp(t):
    # piecewise-cubic smoothstep, 0 below 0 and 1 above 1
    t = np.clip(t, 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def _interval_indicator(x, a, b, smoothing):
    if smoothing <= 0.0:
        return ((x > a) & (x < b)).astype(float)
    s = min(smoothing, 0.5 * (b - a))
    return np.minimum(_ramp((x - a) / s), _ramp((b - x) / s))


def _check_intervals(intervals, length, what="interval"):
    cleaned = []
    for iv in intervals:
        a, b = float(iv[0]), float(iv[1])
        if not (0.0 <= a < b <= length):
            raise ValueError(f"{what} ({a}, {b}) does not lie inside (0, {length})")
        cleaned.append((a, b))
    return tuple(cleaned)


def build_damper(grid, support, amplitude=1.0, smoothing=0.0):
    """Build a damper profile a = amplitude * (mollified indicator of the support).

    ``support`` is a list of (a, b) intervals in 1D or of (x0, x1, y0, y1)
    rectangles in 2D.  An empty support is rejected: damping has to act
    somewhere for any control time to exist.  ``smoothing`` is the ramp
    width; 0 gives the sharp indicator of the open set.
    """
    support = tuple(tuple(float(c) for c in piece) for piece in support)
    if len(support) == 0:
        raise ValueError("damper support is empty")
    if amplitude <= 0:
        raise ValueError("damper amplitude must be positive")
    if smoothing < 0:
        raise ValueError("smoothing width must be nonnegative")

    if grid.dimension == 1:
        ivs = _check_intervals(support, grid.lengths[0])
        x = grid.axes()[0]
        ind = np.zeros_like(x)
        for a, b in ivs:
            ind = np.maximum(ind, _interval_indicator(x, a, b, smoothing))
        values = amplitude * ind
        support = ivs
    else:
        x, y = grid.coordinates()
        ind = np.zeros(grid.shape)
        rects = []
        for rect in support:
            if len(rect) != 4:
                raise ValueError("2D support pieces must be (x0, x1, y0, y1)")
            (x0, x1) = _check_intervals([(rect[0], rect[1])], grid.lengths[0], "rectangle x-side")[0]
            (y0, y1) = _check_intervals([(rect[2], rect[3])], grid.lengths[1], "rectangle y-side")[0]
            rects.append((x0, x1, y0, y1))
            piece = _interval_indicator(x, x0, x1, smoothing) * _interval_indicator(y, y0, y1, smoothing)
            ind = np.maximum(ind, piece)
        values = amplitude * ind
        support = tuple(rects)

    return DamperProfile(grid=grid, values=values, support=support,
                         amplitude=float(amplitude), smoothing=float(smoothing))


def _entry_times(starts, direction, intervals, length):
    """Entry time into the open set for unit-speed rays with endpoint reflection.

    A reflected trajectory on [0, L] unfolds to a straight line of period 2L;
    the support pulls back to its own copy plus the mirrored copy (2L-b, 2L-a).
    """
    period = 2.0 * length
    x0 = np.asarray(starts, dtype=float)
    if direction < 0:
        x0 = period - x0
    pulled = [(a, b) for a, b in intervals]
    pulled += [(period - b, period - a) for a, b in intervals]
    best = np.full(x0.shape, np.inf)
    for k in (0, 1, 2):
        for a, b in pulled:
            lo = a + k * period
            hi = b + k * period
            t = np.where(hi > x0, np.maximum(lo - x0, 0.0), np.inf)
            best = np.minimum(best, t)
    return best


def ray_traced_control_time(grid, support, n_rays=10_000):
    """Brute-force control time: worst entry time over sampled rays (x0, +-1)."""
    if grid.dimension != 1:
        raise ValueError("ray tracing is only supported in 1D")
    length = grid.lengths[0]
    ivs = _check_intervals(support, length)
    if len(ivs) == 0:
        raise ValueError("damper support is empty")
    starts = np.linspace(0.0, length, n_rays)
    worst = 0.0
    for direction in (+1, -1):
        worst = max(worst, float(np.max(_entry_times(starts, direction, ivs, length))))
    return ControlTime(t_min=max(worst, 1e-9), method="ray-traced")


def control_time_1d(grid, support):
    """Minimal T such that every reflected unit-speed ray on [0, L] enters the
    support before time T.  Single intervals admit the closed form
    2 * max(a, L - b); unions fall back to the ray tracer."""
    if grid.dimension != 1:
        raise ValueError("control time computation is only supported in 1D; "
                         "supply the control time explicitly for 2D domains")
    length = grid.lengths[0]
    ivs = _check_intervals(support, length)
    if len(ivs) == 0:
        raise ValueError("damper support is empty")
    if len(ivs) == 1:
        a, b = ivs[0]
        t = 2.0 * max(a, length - b)
        return ControlTime(t_min=max(t, 1e-9), method="closed-form")
    return ray_traced_control_time(grid, ivs)
