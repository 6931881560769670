from dataclasses import replace

import numpy as np
import pytest

import oracles
from pemfc1d.cell_model import CellDefinition, Equilibrated
from pemfc1d.properties import lambda_eq
from pemfc1d.solver import (InfeasibleOperatingPoint, Simulator, SolverConfig,
                            polarization_sweep)


def quiet_cell():
    """No crossover and no short circuit: zero internal current at open circuit."""
    cell = CellDefinition()
    return replace(cell, electro=replace(cell.electro, crossover=False, short_circuit=False))


@pytest.fixture(scope="module")
def sim():
    return Simulator(CellDefinition())


@pytest.fixture(scope="module")
def steady_1e4(sim):
    y, rep, diag = sim.solve_steady(sim.initial(Equilibrated(0.5)), 1e4)
    return y, rep, diag


def test_config_validation():
    with pytest.raises(ValueError, match="dt_min"):
        SolverConfig(dt_init=1.0, dt_max=0.1)
    with pytest.raises(ValueError):
        SolverConfig(newton_tol=0.0)


def test_coloring_covers_every_column(sim):
    cols = np.sort(np.concatenate(sim.groups))
    assert np.array_equal(cols, np.arange(sim.n))
    for g in sim.groups:
        rows = sim.pattern[:, g]
        assert np.all(rows.sum(axis=1) <= 1)


def test_implicit_euler_on_linear_decay():
    s = Simulator(CellDefinition())
    k = 3.0
    s.rhs = lambda y, i_fc, drive: -k * y
    y0 = np.linspace(1.0, 2.0, s.n)
    y1, _, _ = s.implicit_euler(y0, 0.2, 0.0, (0.0, 0.0))
    np.testing.assert_allclose(y1, oracles.implicit_euler_decay(y0, k, 0.2), rtol=1e-10)


def test_rest_state_is_a_fixed_point():
    s = Simulator(quiet_cell())
    y0 = s.initial(Equilibrated(0.5))
    y1, _, _ = s.implicit_euler(y0, 10.0, 0.0, (0.0, 0.0))
    np.testing.assert_allclose(y1, y0, rtol=1e-9, atol=1e-12)


def test_zero_current_state_constant_over_100_s():
    s = Simulator(quiet_cell())
    y0 = s.initial(Equilibrated(0.5))
    res = s.run_transient(y0, [(0.0, 0.0)], 100.0, dt_max=10.0)
    np.testing.assert_allclose(res.states[-1], y0, rtol=1e-8, atol=1e-12)


def test_steady_at_open_circuit_keeps_equilibrium_water():
    s = Simulator(quiet_cell())
    y, rep, diag = s.solve_steady(s.initial(Equilibrated(0.5)), 0.0)
    lam = y[s.tr.sl["lam"]][s.tr.lam_mem]
    np.testing.assert_allclose(lam, lambda_eq(0.5, 353.15), rtol=1e-9)
    assert diag["residual"] < s.cfg.steady_residual_tol


def test_step_change_depletes_cathode_oxygen(sim):
    y0, _, _ = sim.solve_steady(sim.initial(Equilibrated(0.5)), 0.0)
    times = np.arange(0.5, 10.01, 0.5)
    res = sim.run_transient(y0, [(0.0, 1e4)], 10.0, output_times=times)
    o2 = [sim.tr.cl_means(y)["o2_ccl"] for y in res.states]
    assert np.all(np.diff(o2) < 0)
    y_ss, _, _ = sim.solve_steady(res.states[-1], 1e4)
    assert o2[-1] > sim.tr.cl_means(y_ss)["o2_ccl"] * 0.999


def test_steady_state_reproduced_by_long_transient(sim, steady_1e4):
    y, rep, _ = steady_1e4
    res = sim.run_transient(y, [(0.0, 1e4)], 200.0, dt_max=50.0)
    drive = sim.drive_from(res.reports[-1])
    r = sim.steady_residual(res.states[-1], 1e4, drive)
    assert r < 2 * sim.cfg.steady_residual_tol
    assert res.reports[-1].U_cell == pytest.approx(rep.U_cell, abs=1e-7)


def test_explicit_euler_reference_goes_negative(sim, steady_1e4):
    y, _, _ = steady_1e4
    out = sim.explicit_euler(y, 0.01, 60.0, 1e4)
    assert out["diverged"]
    assert np.min(out["y"][sim.s_idx]) < 0


def test_starvation_is_infeasible(sim, steady_1e4):
    y, rep, _ = steady_1e4
    with pytest.raises(InfeasibleOperatingPoint):
        sim.solve_steady(y, 1e5, report=rep)


def test_sweep_requires_increasing_currents():
    with pytest.raises(ValueError):
        polarization_sweep(CellDefinition(), [1e3, 5e2])
