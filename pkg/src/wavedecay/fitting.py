"""Decay-rate fitting on linearizing transforms: ln E vs t (exponential),
ln E vs ln(1+t) (polynomial) and 1/E vs ln t (inverse logarithm)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import linear_fit

__all__ = ["FitResult", "fit_decay", "fit_decay_auto", "MODELS"]

MODELS = ("exponential", "polynomial", "inverse-log")

_MIN_SAMPLES = 20


@dataclass
class FitResult:
    model: str
    params: dict
    residual: float
    residual_normalized: float
    window: tuple

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        if self.model == "exponential":
            return self.params["coefficient"] * np.exp(-self.params["rate"] * t)
        if self.model == "polynomial":
            return self.params["coefficient"] * np.power(1.0 + t, -self.params["exponent"])
        return 1.0 / (self.params["intercept"] + self.params["slope"] * np.log(t))

    @property
    def main_parameter(self):
        return {"exponential": self.params.get("rate"),
                "polynomial": self.params.get("exponent"),
                "inverse-log": self.params.get("slope")}[self.model]

    def to_dict(self):
        return {"model": self.model, "params": self.params,
                "residual": self.residual,
                "residual_normalized": self.residual_normalized,
                "window": list(self.window)}


def _select_window(times, values, window):
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        mask = np.ones(times.shape, dtype=bool)
        window = (float(times[0]), float(times[-1]))
    else:
        t0, t1 = window
        mask = (times >= t0) & (times <= t1)
    t = times[mask]
    e = values[mask]
    if t.size < _MIN_SAMPLES:
        raise ValueError(f"fit window holds {t.size} samples, need at least {_MIN_SAMPLES}")
    if np.any(e <= 0):
        raise ValueError("fit window contains nonpositive values")
    return t, e, (float(t[0]), float(t[-1]))


def _fit_one(t, e, model, window):
    if model == "exponential":
        slope, intercept, rms = linear_fit(t, np.log(e))
        params = {"rate": -slope, "coefficient": float(np.exp(min(intercept, 700.0)))}
        spread = float(np.std(np.log(e)))
    elif model == "polynomial":
        slope, intercept, rms = linear_fit(np.log1p(t), np.log(e))
        params = {"exponent": -slope, "coefficient": float(np.exp(min(intercept, 700.0)))}
        spread = float(np.std(np.log(e)))
    elif model == "inverse-log":
        if np.any(t <= 0):
            raise ValueError("inverse-log fit needs strictly positive times")
        if np.any(e < 1e-280):
            raise ValueError("values too small for the inverse transform")
        slope, intercept, rms = linear_fit(np.log(t), 1.0 / e)
        params = {"slope": slope, "intercept": intercept}
        spread = float(np.std(1.0 / e))
    else:
        raise ValueError(f"unknown fit model {model!r}")
    return FitResult(model=model, params=params, residual=rms,
                     residual_normalized=rms / (spread + 1e-300), window=window)


def fit_decay(trace_or_times, values=None, window=None, model=None):
    """Least-squares decay fit on the linearizing transform of the model.

    Accepts an EnergyTrace or explicit (times, values).  With ``model`` None,
    all applicable models are fitted and the smallest normalized transformed
    residual wins.  Needs at least 20 positive samples inside the window.
    """
    if values is None:
        times = trace_or_times.times
        values = trace_or_times.energy
    else:
        times = trace_or_times
    t, e, actual_window = _select_window(times, values, window)
    if model is not None:
        return _fit_one(t, e, model, actual_window)
    return fit_decay_auto(t, e, actual_window)


def fit_decay_auto(t, e, window):
    results = []
    for model in MODELS:
        try:
            results.append(_fit_one(t, e, model, window))
        except ValueError:
            continue
    if not results:
        raise ValueError("no fit model is applicable to the window")
    return min(results, key=lambda r: r.residual_normalized)
