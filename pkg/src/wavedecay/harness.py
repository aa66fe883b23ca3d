"""Scenario configuration, experiment orchestration and verdicts.

A scenario JSON describes grid, damper, damping law, forcing, initial data,
numerics and constant overrides.  ``run_experiment`` drives the full loop:
simulate, calibrate the observability constants, build the forcing magnitude,
integrate the comparison ODE, build the envelope, check dominance of the
measured energy, classify the bound's decay and fit both curves."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import decay_bounds, observability, wave_solver
from .damping import make_h, make_law
from .decay_bounds import (OdeProblem, dominance_check, envelope, linear_rate_table,
                           power_law_minorant, solve_ode)
from .fitting import FitResult, fit_decay
from .forcing import (ForcingTerm, conjugate, gamma_linear, gamma_nonlinear,
                      rho_exponential, rho_polynomial, rho_table)
from .geometry import Grid, build_damper, control_time_1d
from .observability import EnsembleConfig, estimate_linear_constant, estimate_nonlinear_constant
from .wave_solver import run as run_wave

__all__ = ["Scenario", "ConfigError", "PipelineError", "VerificationVerdict",
           "fit_decay", "run_experiment", "load_scenario"]


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage, message):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# configuration


def _take(d, key, default=None):
    return d.get(key, default) if d else default


@dataclass
class Scenario:
    name: str = "scenario"
    grid: dict = field(default_factory=lambda: {"dimension": 1, "length": 1.0, "cells": 400})
    damper: dict = field(default_factory=lambda: {"intervals": [[0.3, 0.7]],
                                                  "amplitude": 1.0, "smoothing": None})
    law: dict = field(default_factory=lambda: {"kind": "linear"})
    forcing: dict = field(default_factory=lambda: {"profile": "zero"})
    initial: dict = field(default_factory=lambda: {"kind": "mode", "mode": 1, "amplitude": 1.0})
    numerics: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    ensemble: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    seed: Optional[int] = None

    _FIELDS = ("name", "grid", "damper", "law", "forcing", "initial",
               "numerics", "constants", "ensemble", "fit", "seed")

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - set(cls._FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: data[k] for k in cls._FIELDS if k in data}
        scenario = cls(**kwargs)
        scenario.validate()
        return scenario

    def to_dict(self):
        out = {}
        for name in self._FIELDS:
            value = getattr(self, name)
            out[name] = value
        return out

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    # ---- resolved accessors -------------------------------------------------

    def validate(self):
        self.build_grid()
        law_kind = _take(self.law, "kind", "linear")
        if law_kind not in ("linear", "sublinear", "superlinear", "table"):
            raise ConfigError(f"unknown law kind {law_kind!r}")
        if law_kind == "sublinear":
            r0 = _take(self.law, "r0")
            if r0 is None or not (0 < r0 < 1):
                raise ConfigError("sublinear law needs r0 in (0, 1)")
        profile = _take(self.forcing, "profile", "zero")
        if profile not in ("zero", "exponential", "polynomial", "table"):
            raise ConfigError(f"unknown forcing profile {profile!r}")
        horizon = _take(self.numerics, "horizon", 10.0)
        if horizon <= 0:
            raise ConfigError("horizon must be positive")
        return self

    def build_grid(self):
        g = self.grid
        dim = _take(g, "dimension", 1)
        try:
            if dim == 1:
                return Grid.line(_take(g, "length", 1.0), _take(g, "cells", 400))
            if dim == 2:
                lx, ly = _take(g, "lengths", (1.0, 1.0))
                nx, ny = _take(g, "cells", (64, 64))
                return Grid.rectangle(lx, ly, nx, ny)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        raise ConfigError("grid dimension must be 1 or 2")

    def build_damper(self, grid):
        d = self.damper
        smoothing = _take(d, "smoothing")
        if smoothing is None:
            smoothing = 2.0 * min(grid.spacing)
        support = _take(d, "intervals") if grid.dimension == 1 else _take(d, "rectangles")
        if support is None:
            raise ConfigError("damper support is missing for this dimension")
        try:
            return build_damper(grid, support, _take(d, "amplitude", 1.0), smoothing)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_law(self):
        kind = _take(self.law, "kind", "linear")
        try:
            if kind == "sublinear":
                return make_law("sublinear", r0=self.law["r0"])
            if kind == "table":
                path = _take(self.law, "path")
                if path is None:
                    raise ConfigError("table law needs a path to a CSV of (s, g)")
                data = np.loadtxt(path, delimiter=",", skiprows=1)
                return make_law("table", s=data[:, 0], g=data[:, 1],
                                m=_take(self.law, "m"), eta=_take(self.law, "eta"))
            return make_law(kind)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def build_forcing(self, amplitude=None):
        f = self.forcing
        profile = _take(f, "profile", "zero")
        amp = amplitude if amplitude is not None else _take(f, "amplitude", 1.0)
        shape = self._forcing_shape()
        try:
            if profile == "zero":
                return ForcingTerm.zero()
            if profile == "exponential":
                return ForcingTerm(rho_exponential(amp, _take(f, "rate", 1.0)),
                                   shape, kind="exponential")
            if profile == "polynomial":
                return ForcingTerm(rho_polynomial(amp, _take(f, "power", 1.0)),
                                   shape, kind="polynomial")
            data = np.loadtxt(_take(f, "path"), delimiter=",", skiprows=1)
            return ForcingTerm(rho_table(data[:, 0], amp * data[:, 1]), shape,
                               kind="table")
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from None

    def _forcing_shape(self):
        mode = _take(self.forcing, "mode", 1)
        if isinstance(mode, (list, tuple)):
            kx, ky = mode
        else:
            kx = ky = mode

        def shape(*coords):
            if len(coords) == 1:
                x = coords[0]
                return np.sin(kx * np.pi * x / x.max())
            x, y = coords
            return np.sin(kx * np.pi * x / x.max()) * np.sin(ky * np.pi * y / y.max())

        return shape

    def build_initial(self, grid, rng=None):
        spec = self.initial
        kind = _take(spec, "kind", "mode")
        if kind == "mode":
            k = _take(spec, "mode", 1)
            amp = _take(spec, "amplitude", 1.0)
            if grid.dimension == 1:
                x = grid.coordinates()[0]
                u0 = amp * np.sin(k * np.pi * x / grid.lengths[0])
            else:
                kx, ky = k if isinstance(k, (list, tuple)) else (k, k)
                x, y = grid.coordinates()
                u0 = amp * (np.sin(kx * np.pi * x / grid.lengths[0])
                            * np.sin(ky * np.pi * y / grid.lengths[1]))
            return u0, np.zeros(grid.shape)
        if kind == "random":
            rng = rng or np.random.default_rng(self.resolved_seed())
            return observability.random_sine_data(
                grid, _take(spec, "modes", 16), rng, _take(spec, "energy", 1.0))
        if kind == "table":
            if grid.dimension != 1:
                raise ConfigError("tabulated initial data is only supported in 1D")
            data = np.loadtxt(_take(spec, "path"), delimiter=",", skiprows=1)
            if data.shape[0] != grid.shape[0]:
                raise ConfigError("tabulated initial data does not match the grid")
            return data[:, 0].copy(), data[:, 1].copy()
        raise ConfigError(f"unknown initial data kind {kind!r}")

    def resolved_seed(self, override=None):
        if override is not None:
            return int(override)
        if self.seed is not None:
            return int(self.seed)
        env = os.environ.get("WAVEDECAY_SEED")
        return int(env) if env else 0

    def dt(self, grid):
        explicit = _take(self.numerics, "dt")
        if explicit is not None:
            return float(explicit)
        return _take(self.numerics, "dt_factor", 0.45) * wave_solver.cfl_limit(grid) / 0.9

    @property
    def horizon(self):
        return float(_take(self.numerics, "horizon", 10.0))

    def control_window(self, grid, damper):
        """Working window length T: override, or the geometric control time
        with a safety margin (user supplied in 2D)."""
        override = _take(self.constants, "T")
        if override is not None:
            return float(override)
        margin = _take(self.constants, "gcc_margin", 1.25)
        if grid.dimension == 1:
            t_min = control_time_1d(grid, damper.support).t_min
        else:
            t_min = _take(self.constants, "control_time")
            if t_min is None:
                raise ConfigError("2D scenarios must supply constants.control_time")
        return margin * float(t_min)


def load_scenario(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
    return Scenario.from_dict(data)


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class VerificationVerdict:
    dominance_passed: bool
    max_violation: float
    violation_time: Optional[float]
    fit_measured: Optional[FitResult]
    fit_bound: Optional[FitResult]
    predicted_model: Optional[str]
    predicted_params: dict
    prediction_source: Optional[str]
    admissibility: dict
    agreement: Optional[bool]
    agreement_reason: str
    constants: dict
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "dominance": {"passed": self.dominance_passed,
                          "max_violation": self.max_violation,
                          "violation_time": self.violation_time},
            "fit_measured": self.fit_measured.to_dict() if self.fit_measured else None,
            "fit_bound": self.fit_bound.to_dict() if self.fit_bound else None,
            "prediction": {"model": self.predicted_model,
                           "params": self.predicted_params,
                           "source": self.prediction_source,
                           "admissibility": self.admissibility},
            "agreement": self.agreement,
            "agreement_reason": self.agreement_reason,
            "constants": self.constants,
            "diagnostics": self.diagnostics,
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")


def _write_curve_csv(path, columns):
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([f"{v:.17g}" for v in row])


# ---------------------------------------------------------------------------
# pipeline


def _stage(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ConfigError, PipelineError):
        raise
    except Exception as exc:
        raise PipelineError(stage, str(exc)) from exc


def calibrate_constants(scenario, grid, damper, law, T, seed=None):
    """Observability calibration, honoring constant overrides from the config."""
    consts = scenario.constants
    overrides = {k: consts.get(k) for k in ("C_T", "C_1T", "K")}
    ens = scenario.ensemble
    forcing_factory = None
    if _take(scenario.forcing, "profile", "zero") != "zero":
        forcing_factory = lambda amp: scenario.build_forcing(amplitude=amp)
    config = EnsembleConfig(
        n_runs=_take(ens, "runs", 32), n_modes=_take(ens, "modes", 16),
        seed=scenario.resolved_seed(seed),
        horizon=_take(ens, "horizon"),
        amplitude_range=tuple(_take(ens, "amplitude_range", (1e-3, 1.0))),
        forcing_factory=forcing_factory,
        safety=_take(consts, "safety", 2.0),
    )
    out = {"T": T}
    reports = {}
    if law.is_linear():
        if overrides["C_T"] is not None and overrides["C_1T"] is not None:
            out["C_T"] = float(overrides["C_T"])
            out["C_1T"] = float(overrides["C_1T"])
        else:
            rep = estimate_linear_constant(grid, damper, T, config)
            reports["linear"] = rep
            out["C_T"] = float(overrides["C_T"] or rep.chain["c_t"])
            out["C_1T"] = float(overrides["C_1T"] or rep.chain["c_1t"])
    else:
        if overrides["C_T"] is not None:
            out["C_T"] = float(overrides["C_T"])
        else:
            rep = estimate_nonlinear_constant(
                grid, damper, law, make_h(law, damper.mass(T)), T, config)
            reports["nonlinear"] = rep
            out["C_T"] = float(rep.constant)
        out["K"] = overrides["K"]  # resolved after Gamma is known
    return out, config, reports


def _resolve_k(consts, gamma, e0):
    if consts.get("K") is not None:
        return float(consts["K"])
    l1 = 0.0 if gamma.is_zero() else gamma.l1_norm()
    return 4.0 * max(consts["C_T"], e0 + l1)


def _fit_window_default(T, horizon):
    return (max(2.0 * T, 0.5 * horizon), horizon)


def _bound_sufficiently_decayed(times, values, window):
    mask = (times >= window[0]) & (times <= window[1])
    vals = values[mask]
    if vals.size < 20 or np.any(vals <= 0):
        return False
    return float(vals[0]) / float(vals[-1]) >= math.e


def run_experiment(scenario, out_dir=None, seed=None):
    """Full verification pipeline for one scenario.

    Returns (verdict, artifacts) where artifacts maps names to file paths
    when ``out_dir`` is given (curves as CSV, verdict and constants as JSON).
    """
    artifacts = {}
    grid = _stage("build", scenario.build_grid)
    damper = _stage("build", scenario.build_damper, grid)
    law = _stage("build", scenario.build_law)
    forcing = _stage("build", scenario.build_forcing)
    T = _stage("control-time", scenario.control_window, grid, damper)
    horizon = scenario.horizon
    if horizon < 2.0 * T:
        raise ConfigError(f"horizon {horizon} must be at least 2 T = {2 * T}")
    dt = scenario.dt(grid)

    rng = np.random.default_rng(scenario.resolved_seed(seed))
    u0, v0 = _stage("build", scenario.build_initial, grid, rng)
    trace = _stage("simulate", run_wave, grid, damper, law, forcing, u0, v0,
                   horizon, dt)
    e0 = trace.initial_energy

    consts, ens_config, reports = _stage("calibrate", calibrate_constants,
                                         scenario, grid, damper, law, T, seed)

    # forcing magnitude
    pair = None
    if law.is_linear():
        gamma = _stage("gamma", gamma_linear, forcing, consts["C_1T"])
    else:
        h = make_h(law, damper.mass(T))
        pair = _stage("gamma", conjugate, T, consts["C_T"], h)
        gamma = _stage("gamma", gamma_nonlinear, forcing, pair)
        consts["K"] = _stage("gamma", _resolve_k, consts, gamma, e0)
        consts["mass"] = h.mass

    # comparison ODE on the dominance window and on a long fitting horizon
    if law.is_linear():
        problem = OdeProblem.linear_bound(T, consts["C_T"], gamma, e0)
    else:
        problem = OdeProblem.nonlinear_bound(T, h, consts["K"], gamma, e0,
                                               c_t=consts["C_T"])
    spacing = float(trace.times[1] - trace.times[0]) if len(trace.times) > 1 else dt
    s_times, s_values = _stage("bound", solve_ode, problem, horizon - T,
                               max(spacing, (horizon - T) / 4000.0))
    ode_horizon = float(_take(scenario.numerics, "ode_horizon",
                              max(1e4, 20.0 * horizon)))
    long_times, long_values = _stage("bound", solve_ode, problem, ode_horizon,
                                     ode_horizon / 4000.0)
    factor = _take(scenario.constants, "envelope_factor", 4.0)
    gfactor = _take(scenario.constants, "gamma_window_factor", 2.0)
    bound_curve = _stage("bound", envelope, s_times, s_values, gamma, T,
                         factor, gfactor)

    # dominance of the measured energy under the envelope
    measured = np.interp(bound_curve.times, trace.times, trace.energy)
    dom = _stage("dominance", dominance_check, measured, bound_curve.values,
                 bound_curve.times)

    # classification of the bound's decay
    prediction_source = None
    predicted_model = None
    predicted_params = {}
    admissibility = {}
    diagnostics = {"stage_reports": {k: v.chain for k, v in reports.items()}}
    gamma_kind = _take(scenario.forcing, "profile", "zero")
    long_window = (ode_horizon / 10.0, ode_horizon)
    if law.is_linear():
        prediction_source = "rate-table"
        C = 1.0 / (T * consts["C_T"])
        if gamma.is_zero():
            predicted_model = "exponential"
            predicted_params = {"rate": C, "coefficient": 4.0 * math.exp(T) * e0}
        else:
            amp = _take(scenario.forcing, "amplitude", 1.0)
            if gamma_kind == "exponential":
                verdict_t = _stage("classify", linear_rate_table, C, "exponential",
                                   2.0 * _take(scenario.forcing, "rate", 1.0),
                                   consts["C_1T"] * amp**2, T, e0, factor, gfactor)
            elif gamma_kind == "polynomial":
                verdict_t = _stage("classify", linear_rate_table, C, "polynomial",
                                   2.0 * _take(scenario.forcing, "power", 1.0),
                                   consts["C_1T"] * amp**2, T, e0, factor, gfactor)
            else:
                verdict_t = None
            if verdict_t is not None:
                predicted_model = verdict_t.model
                predicted_params = verdict_t.params
                diagnostics["rate_table_case"] = verdict_t.case
    else:
        prediction_source = "classifier"
        if gamma.is_zero():
            cls = _stage("classify", decay_bounds.classify, problem.p, gamma, e0,
                         horizon=ode_horizon, name_window=long_window)
        else:
            s_lo = max(float(np.min(long_values[long_values > 0], initial=e0)) * 0.5,
                       1e-12)
            s_hi = max(float(np.max(long_values)), e0) * 2.0
            _, _, p_tilde = _stage("classify", power_law_minorant, problem.p,
                                   s_lo, s_hi)
            cls = _stage("classify", decay_bounds.classify, p_tilde, gamma, e0,
                         horizon=ode_horizon, name_window=long_window)
        predicted_model = cls.model
        predicted_params = cls.params
        admissibility = cls.admissibility
        diagnostics["classification_case"] = cls.case
        if cls.case in ("forced-subdominant", "forced-dominant") and cls.bound is not None:
            cls_curve = np.asarray(cls.bound(long_times[1:]), dtype=float)
            cdom = dominance_check(long_values[1:], cls_curve, long_times[1:])
            diagnostics["classifier_dominance"] = {
                "passed": cdom.passed, "max_violation": cdom.max_violation}

    # decay fits
    fit_spec = scenario.fit
    window = tuple(_take(fit_spec, "window") or _fit_window_default(T, horizon))
    model = _take(fit_spec, "model")
    fit_measured = None
    try:
        fit_measured = _stage("fit", fit_decay, trace.times, trace.energy,
                              window, model)
    except (ValueError, PipelineError) as exc:
        diagnostics["fit_measured_skipped"] = str(exc)
    fit_bound = None
    try:
        fit_bound = _stage("fit", fit_decay, long_times, long_values,
                           long_window, None)
    except (ValueError, PipelineError) as exc:
        diagnostics["fit_bound_skipped"] = str(exc)

    # agreement: the fitted bound decay must match the classifier prediction
    tolerance = _take(fit_spec, "tolerance", 0.2)
    agreement = None
    reason = ""
    if predicted_model is None or fit_bound is None:
        reason = "no prediction or no bound fit available"
    elif not _bound_sufficiently_decayed(long_times, long_values, long_window):
        reason = "bound has not decayed enough over the fit window to identify a rate"
    elif not dom.passed:
        agreement = False
        reason = "envelope fails to dominate the measured energy"
    else:
        base_model = predicted_model.replace("exponential-critical", "exponential")
        same_model = fit_bound.model == base_model
        pred_main = {"exponential": predicted_params.get("rate"),
                     "polynomial": predicted_params.get("exponent"),
                     "inverse-log": predicted_params.get("slope")}.get(base_model)
        if pred_main is None or not same_model:
            agreement = bool(same_model)
            reason = ("bound fit matches the predicted model"
                      if same_model else
                      f"bound fit model {fit_bound.model} differs from predicted {predicted_model}")
        else:
            rel = abs(fit_bound.main_parameter - pred_main) / abs(pred_main)
            agreement = rel <= tolerance
            reason = f"relative parameter gap {rel:.3g} vs tolerance {tolerance}"

    verdict = VerificationVerdict(
        dominance_passed=dom.passed, max_violation=dom.max_violation,
        violation_time=dom.at_time,
        fit_measured=fit_measured, fit_bound=fit_bound,
        predicted_model=predicted_model, predicted_params=predicted_params,
        prediction_source=prediction_source, admissibility=admissibility,
        agreement=agreement, agreement_reason=reason,
        constants={k: v for k, v in consts.items() if v is not None},
        diagnostics=diagnostics,
    )

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            "trace": os.path.join(out_dir, "trace.csv"),
            "ode": os.path.join(out_dir, "ode.csv"),
            "ode_long": os.path.join(out_dir, "ode_long.csv"),
            "envelope": os.path.join(out_dir, "envelope.csv"),
            "verdict": os.path.join(out_dir, "verdict.json"),
            "constants": os.path.join(out_dir, "constants.json"),
            "scenario": os.path.join(out_dir, "scenario.json"),
        }
        trace.to_csv(paths["trace"])
        _write_curve_csv(paths["ode"], {"t": s_times, "S": s_values})
        _write_curve_csv(paths["ode_long"], {"t": long_times, "S": long_values})
        _write_curve_csv(paths["envelope"],
                         {"t": bound_curve.times, "B": bound_curve.values,
                          "E_measured": measured})
        verdict.to_json(paths["verdict"])
        with open(paths["constants"], "w") as fh:
            json.dump(verdict.constants, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
        scenario.to_json(paths["scenario"])
        if pair is not None:
            paths["psi_table"] = os.path.join(out_dir, "psi_table.csv")
            s_grid = np.geomspace(1e-6, 10.0, 200)
            table = pair.psi_star_table()
            _write_curve_csv(paths["psi_table"],
                             {"s": s_grid, "psi": pair.psi(s_grid),
                              "psi_star": table(s_grid)})
        artifacts = paths

    return verdict, artifacts
