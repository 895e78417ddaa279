import json
import os
import pathlib

import numpy as np
import pytest

import swapgrid

DATA = pathlib.Path(os.environ.get("SWAPGRID_DATA_DIR", pathlib.Path(__file__).parents[2] / "data"))


def six_bus():
    grid = swapgrid.Grid.from_file(str(DATA / "six_bus_feeder.json"))
    scenario = swapgrid.Scenario.from_file(str(DATA / "six_bus_binding.json"))
    return grid, scenario


def relaxed_reference(feeder: dict, scenario: dict) -> float:
    """Joint SOCP relaxation written directly from the documents and solved
    with Clarabel through cvxpy."""
    cp = pytest.importorskip("cvxpy")
    base = feeder["base_mva"]
    buses = feeder["buses"]
    lines = feeder["lines"]
    idx = {b["id"]: i for i, b in enumerate(buses)}
    n, e = len(buses), len(lines)
    r_mw = scenario["r_mw"]
    alpha = scenario["alpha_per_km"]
    evs, stations = scenario["evs"], scenario["stations"]

    v = cp.Variable(n)
    l = cp.Variable(e, nonneg=True)
    P = cp.Variable(e)
    Q = cp.Variable(e)
    pg = cp.Variable(n)
    qg = cp.Variable(n)
    u = cp.Variable((len(evs), len(stations)), nonneg=True)

    cons = [u <= 1, cp.sum(u, axis=1) == 1]
    travel = 0
    for a, ev in enumerate(evs):
        for j, st in enumerate(stations):
            d = np.hypot(ev["x"] - st["x"], ev["y"] - st["y"])
            if d > ev["gamma"] * ev["charge"]:
                cons.append(u[a, j] == 0)
            travel += alpha * d * u[a, j]
    cons.append(cp.sum(u, axis=0) <= np.array([st["m"] for st in stations]))

    station_load = np.zeros(n, dtype=object)
    for j, st in enumerate(stations):
        station_load[idx[st["bus"]]] = (r_mw * (st["M"] - st["m"]) + r_mw * cp.sum(u[:, j])) / base

    cost = travel
    for i, b in enumerate(buses):
        if b["id"] == feeder["root"]:
            cons.append(v[i] == feeder["v_root"])
        else:
            cons += [v[i] >= b["v_min"], v[i] <= b["v_max"]]
        g = b.get("generator")
        if g:
            cons += [pg[i] >= g["p_min"] / base, pg[i] <= g["p_max"] / base]
            cons += [qg[i] >= g["q_min"] / base, qg[i] <= g["q_max"] / base]
            cost += g["cost_quadratic"] * cp.square(pg[i] * base) + g["cost_linear"] * pg[i] * base
        else:
            cons += [pg[i] == 0, qg[i] == 0]

    for i, b in enumerate(buses):
        p_in = pg[i] - b["p_bg"] / base - station_load[i]
        q_in = qg[i] - b["q_bg"] / base
        for k, ln in enumerate(lines):
            if idx[ln["to"]] == i:
                p_in += P[k] - ln["r"] * l[k]
                q_in += Q[k] - ln["x"] * l[k]
            if idx[ln["from"]] == i:
                p_in -= P[k]
                q_in -= Q[k]
        cons += [p_in == 0, q_in == 0]

    for k, ln in enumerate(lines):
        f, t = idx[ln["from"]], idx[ln["to"]]
        z2 = ln["r"] ** 2 + ln["x"] ** 2
        cons.append(v[t] == v[f] - 2 * (ln["r"] * P[k] + ln["x"] * Q[k]) + z2 * l[k])
        cons.append(cp.SOC(v[f] + l[k], cp.hstack([2 * P[k], 2 * Q[k], v[f] - l[k]])))
        cons.append(cp.norm(cp.hstack([P[k], Q[k]])) <= ln["s_max"] / base)

    prob = cp.Problem(cp.Minimize(cost), cons)
    prob.solve(solver=cp.CLARABEL)
    assert prob.status == "optimal"
    return prob.value


def test_centralized_matches_clarabel():
    grid, scenario = six_bus()
    ours = swapgrid.solve_centralized(grid, scenario)
    feeder = json.loads((DATA / "six_bus_feeder.json").read_text())
    scen = json.loads((DATA / "six_bus_binding.json").read_text())
    ref = relaxed_reference(feeder, scen)
    assert ours["objective"] == pytest.approx(ref, rel=1e-6)
    assert swapgrid.exactness(grid, ours["flow"])["exact"]


def test_random_fixture_matches_clarabel():
    grid, scenario = swapgrid.random_fixture(3)
    ours = swapgrid.solve_centralized(grid, scenario)
    ref = relaxed_reference(json.loads(grid.to_json()), json.loads(scenario.to_json()))
    assert ours["objective"] == pytest.approx(ref, rel=1e-6)


def test_distributed_runs_agree_with_centralized():
    grid, scenario = six_bus()
    central = swapgrid.solve_centralized(grid, scenario)
    admm = swapgrid.run_admm(grid, scenario, session=True)
    assert admm["converged"]
    assert admm["objective"] == pytest.approx(central["objective"], rel=1e-3)
    assert swapgrid.audit_privacy(admm["messages"], "admm")["ok"]

    dual = swapgrid.run_dual(grid, scenario)
    assert dual["objective"] == pytest.approx(central["objective"], rel=5e-3)
    assert dual["dual_value"] <= central["objective"] + 1e-6
    u = dual["u"]
    assert u.shape == (scenario.num_evs, scenario.num_stations)
    np.testing.assert_allclose(u.sum(axis=1), 1.0, atol=1e-9)


def test_enumeration_and_rounding():
    grid, scenario = six_bus()
    best = swapgrid.enumerate_binary(grid, scenario)
    central = swapgrid.solve_centralized(grid, scenario)
    assert central["objective"] <= best["objective"] * (1 + 1e-6)
    gap = swapgrid.rounding_gap(grid, scenario, central["u"])
    assert 0.0 <= gap["gap"] <= 0.01
    assert swapgrid.count_critical(best["u"]) == 0


def test_audit_catches_leak():
    line = {"round": 0, "from": "ev:0", "to": "ev:1", "tag": "EvChoice", "payload": {"station": 1}}
    report = swapgrid.audit_privacy(json.dumps(line) + "\n", "dual")
    assert not report["ok"]
    assert report["violations"][0]["rule"] == "d"


def test_errors_become_value_errors():
    with pytest.raises(ValueError, match="schema violation"):
        swapgrid.Grid.from_json('{"format": "swapgrid-feeder/1"}')
