"""End-to-end verification of the nonlinear pipeline on a forced sublinear
scenario (coarse, fast settings of the shipped sublinear_poly scenario).

Pipeline: simulate -> calibrate constants -> build Gamma through the convex
conjugate -> integrate the comparison ODE -> envelope -> dominance check of
the measured energy -> classify the bound's decay -> fit both curves.
"""

import json

from wavedecay import Scenario, run_experiment

scenario = Scenario.from_dict({
    "name": "sublinear_poly_demo",
    "grid": {"dimension": 1, "length": 1.0, "cells": 100},
    "damper": {"intervals": [[0.3, 0.7]], "amplitude": 1.0, "smoothing": None},
    "law": {"kind": "sublinear", "r0": 0.5},
    "forcing": {"profile": "polynomial", "amplitude": 0.5,
                "power": 4.0 / 3.0, "mode": 1},
    "initial": {"kind": "mode", "mode": 1, "amplitude": 1.0},
    "numerics": {"horizon": 30.0, "ode_horizon": 1e9},
    "ensemble": {"runs": 4, "modes": 6},
    "seed": 7,
})

verdict, artifacts = run_experiment(scenario, out_dir="sublinear_poly_demo_report")

print(f"dominance: {'pass' if verdict.dominance_passed else 'FAIL'} "
      f"(max violation {verdict.max_violation:.2e})")
print(f"measured energy fit: {verdict.fit_measured.model} "
      f"{verdict.fit_measured.params}")
print(f"bound fit over the tail: {verdict.fit_bound.model}, "
      f"exponent {verdict.fit_bound.main_parameter:.4f}")
print(f"classifier: {verdict.diagnostics.get('classification_case')} -> "
      f"{verdict.predicted_model}, predicted exponent "
      f"{verdict.predicted_params.get('exponent'):.4f} (expect 4/3)")
print(f"agreement: {verdict.agreement} ({verdict.agreement_reason})")
print(f"constants: {json.dumps({k: round(v, 4) for k, v in verdict.constants.items()})}")
print(f"artifacts: {sorted(artifacts)}")
