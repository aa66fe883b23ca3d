import json
import os

import pytest

SCENARIO_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")

SHIPPED = [
    "linear_unforced",
    "linear_poly_forced",
    "linear_exp_forced",
    "sublinear_poly",
    "sublinear_poly_fast",
    "superlinear_unforced",
    "twod_linear",
]


def scenario_path(name):
    return os.path.join(SCENARIO_DIR, f"{name}.json")


@pytest.fixture(scope="session")
def scenarios():
    from wavedecay.harness import load_scenario

    return {name: load_scenario(scenario_path(name)) for name in SHIPPED}
