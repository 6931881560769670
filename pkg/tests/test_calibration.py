from dataclasses import replace

import numpy as np
import pytest

import oracles
from pemfc1d.calibration import (CalibrationProblem, fit, load_polarization_csv,
                                 write_fit_report)
from pemfc1d.cell_model import CellDefinition, ConfigurationError
from pemfc1d.solver import polarization_sweep

CURRENTS = [2000.0, 4000.0, 6000.0, 8000.0]
R_TRUE = 3e-6
WEIGHTS = [1.0, 2.0, 1.0, 0.5]
NOISE = [1e-4, -2e-4, 5e-5, 0.0]


@pytest.fixture(scope="module")
def linear_case():
    """Without the short circuit the steady state does not depend on R_e,
    so U is exactly linear in R_e."""
    cell = CellDefinition()
    cell = replace(cell, electro=replace(cell.electro, short_circuit=False))
    U0 = np.array([r.U_cell for r in polarization_sweep(cell, CURRENTS)])
    U = U0 - np.array(CURRENTS) * R_TRUE + np.array(NOISE)
    return cell, U0, U


def data_rows(U, weights=WEIGHTS, order=None):
    rows = [(i, u, w) for i, u, w in zip(CURRENTS, U, weights)]
    return [rows[k] for k in order] if order is not None else rows


def test_single_resistance_matches_closed_form(linear_case):
    cell, U0, U = linear_case
    res = fit(CalibrationProblem(cell, data_rows(U), {"R_e": 0.0}))
    slope = oracles.least_squares_slope(CURRENTS, list(U0 - U), WEIGHTS)
    assert res.converged
    assert abs(res.params["R_e"] - slope) < 1e-10
    assert res.rms < res.initial_rms


def test_row_order_and_weight_scale_do_not_matter(linear_case):
    cell, _, U = linear_case
    base = fit(CalibrationProblem(cell, data_rows(U), {"R_e": 0.0})).params["R_e"]
    shuffled = fit(CalibrationProblem(cell, data_rows(U, order=[2, 0, 3, 1]),
                                      {"R_e": 0.0})).params["R_e"]
    doubled = fit(CalibrationProblem(cell, data_rows(U, [2 * w for w in WEIGHTS]),
                                     {"R_e": 0.0})).params["R_e"]
    assert shuffled == pytest.approx(base, rel=1e-6)
    assert doubled == pytest.approx(base, rel=1e-6)


def test_problem_validation():
    cell = CellDefinition()
    rows = [(1e3, 0.8), (2e3, 0.75), (3e3, 0.7), (4e3, 0.65)]
    with pytest.raises(ConfigurationError, match="unknown"):
        CalibrationProblem(cell, rows, {"sigma": 1.0})
    with pytest.raises(ConfigurationError, match="data points"):
        CalibrationProblem(cell, rows[:3], {"i0": None, "R_e": 0.0})
    with pytest.raises(ConfigurationError):
        CalibrationProblem(cell, rows + [(-1.0, 0.9)], {"R_e": 0.0})
    with pytest.raises(ConfigurationError):
        CalibrationProblem(cell, rows, {})
    prob = CalibrationProblem(cell, rows, {"R_e": 0.0}, bounds={"R_e": (1e-5, 1e-6)})
    with pytest.raises(ConfigurationError, match="lower < upper"):
        prob.bounds_of("R_e")
    lim = CalibrationProblem(cell, rows, {"i_lim": 2e4})
    assert lim.bounds_of("i_lim")[0] == pytest.approx(1.01 * 4e3)


def test_all_infeasible_start_is_a_configuration_error():
    rows = [(2e5, 0.3), (3e5, 0.2)]
    with pytest.raises(ConfigurationError, match="infeasible"):
        fit(CalibrationProblem(CellDefinition(), rows, {"R_e": 0.0}))


def test_csv_loader(tmp_path):
    f = tmp_path / "pol.csv"
    f.write_text("i_A_per_m2,U_V,weight\n1000,0.8,2\n2000,0.75,\n")
    assert load_polarization_csv(f) == [(1000.0, 0.8, 2.0), (2000.0, 0.75, 1.0)]
    bad = tmp_path / "bad.csv"
    bad.write_text("i,U\n1,2\n")
    with pytest.raises(ConfigurationError, match="i_A_per_m2"):
        load_polarization_csv(bad)


def test_fit_report_files(linear_case, tmp_path):
    cell, _, U = linear_case
    res = fit(CalibrationProblem(cell, data_rows(U), {"R_e": 0.0}))
    files = write_fit_report(res, tmp_path)
    assert [p.name for p in files] == ["fit_report.csv", "fit_trace.csv", "fit_summary.txt"]
    lines = (tmp_path / "fit_report.csv").read_text().splitlines()
    assert lines[0] == "parameter,value,at_bound,sensitivity"
    assert lines[1].startswith("R_e,")
