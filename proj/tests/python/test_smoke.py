import math
import os
import pathlib

import numpy as np
import pytest

import isaacslab

SCENARIOS = pathlib.Path(__file__).resolve().parents[2] / "scenarios"

SINE_HEAT = """
[model]
kind = "game"
d = 1
m = 1
T = 1
[dynamics]
b = ["0"]
f1 = ["u1_1 - u2_1"]
sigma = ["0.5"]
[cost]
l = "u2_1^2/2 - u1_1^2/2"
g = "sin(x1)"
[controls.u1]
lo = [-1]
hi = [1]
points = [21]
[controls.u2]
lo = [-1]
hi = [1]
points = [21]
"""


@pytest.fixture(scope="module")
def spec():
    return isaacslab.load_spec(SINE_HEAT)


@pytest.fixture(scope="module")
def field(spec):
    grid = isaacslab.Grid([math.pi / 2 - 2 * math.pi], [math.pi / 2 + 2 * math.pi], [201], 321, 1.0)
    return isaacslab.solve(spec, grid)


def test_expression_round_trip():
    e = isaacslab.Expression("-2^2 + x1 * max(s, 1)")
    assert e.evaluate({"x1": 3.0, "s": 0.5}) == pytest.approx(-1.0)
    assert e.free_vars() == {"x1", "s"}
    again = isaacslab.Expression(str(e))
    assert again.evaluate({"x1": 3.0, "s": 2.0}) == e.evaluate({"x1": 3.0, "s": 2.0})


def test_expression_errors():
    with pytest.raises(isaacslab.ExprError):
        isaacslab.Expression("1 + (2 *")
    with pytest.raises(isaacslab.ExprError):
        isaacslab.Expression("log(x1)").evaluate({"x1": -1.0})
    assert issubclass(isaacslab.ExprError, isaacslab.Error)


def test_spec_and_hamiltonian(spec):
    assert spec.kind == "game"
    assert (spec.d, spec.m, spec.T) == (1, 1, 1.0)
    assert spec.n_controls1 == 21
    h = isaacslab.hamiltonian(spec, 0.0, [0.0], [0.6])
    assert h["lower"] == pytest.approx(0.0, abs=1e-12)
    assert h["upper"] == pytest.approx(0.0, abs=1e-12)
    assert h["gap"] == pytest.approx(0.0, abs=1e-12)
    assert isaacslab.h0_cv(spec, 0.0, [0.0], [1.0], [0.5], [0.0]) == pytest.approx(0.5 - 0.125)
    with pytest.raises(isaacslab.ConfigError):
        isaacslab.hamiltonian(spec, 0.0, [0.0, 1.0], [0.6])


def test_bad_spec():
    with pytest.raises(isaacslab.ConfigError):
        isaacslab.load_spec("[model]\nkind = \"game\"\n")


def test_solve_matches_heat_solution(field):
    assert field.equation == "bi-upper"
    values = field.values
    assert isinstance(values, np.ndarray)
    assert values.shape == (321, 201)
    assert field.interpolate(0.0, [math.pi / 2]) == pytest.approx(math.exp(-0.125), abs=2e-3)
    assert field.gradient(0.0, [math.pi / 2])[0] == pytest.approx(0.0, abs=2e-3)


def test_stability_error(spec):
    grid = isaacslab.Grid([-3.0], [3.0], [201], 3, 1.0)
    assert isaacslab.min_time_levels(spec, grid) > 3
    with pytest.raises(isaacslab.SolverError):
        isaacslab.solve(spec, grid)


def test_payoff_and_saddle(spec, field):
    p = isaacslab.payoff(spec, "0", "0", 0.0, [math.pi / 2], paths=4000, steps=50, seed=3)
    assert abs(p["mean"] - math.exp(-0.125)) <= 4 * p["standard_error"]
    a = isaacslab.payoff(spec, "star", "star", 0.0, [math.pi / 2], paths=500, steps=20, seed=5, field=field)
    b = isaacslab.payoff(spec, "star", "star", 0.0, [math.pi / 2], paths=500, steps=20, seed=5, field=field, workers=3)
    assert a == b
    r = isaacslab.verify_saddle(spec, field, ["1", "-1"], ["1"], 0.0, [math.pi / 2], paths=3000, steps=50)
    assert r["passed"]
    assert len(r["deviations"]) == 3


def test_cli(tmp_path, monkeypatch):
    monkeypatch.delenv("ISAACSLAB_OUT", raising=False)
    code, out, err = isaacslab.run_cli(["validate", str(SCENARIOS / "sine_heat.cfg"), "--out", str(tmp_path)])
    assert code == 0, err
    assert (tmp_path / "manifest.json").exists()
    code, _, _ = isaacslab.run_cli(["no-such-command"])
    assert code == 1
    assert os.path.isdir(tmp_path)
