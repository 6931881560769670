import csv

import numpy as np
import pytest

from pemfc1d.cell_model import CellDefinition
from pemfc1d.cli import main
from pemfc1d.scenario_io import (LEDGER_COLUMNS, ScenarioError, Steady, Sweep, format_resolved,
                                 parse_scenario, props_table, run_scenario, write_results)


def scenario(tmp_path, text, name="case.txt"):
    f = tmp_path / name
    f.write_text(text)
    return f


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


SWEEP = "run.kind = sweep\nrun.currents = 1000, 2000, 3000\n"
TRANSIENT = "run.kind = transient\nrun.profile = 0:0, 0.2:5000\nrun.t_end = 1.0\noutput.every = 0.5\n"


def test_empty_file_gives_defaults(tmp_path):
    scn = parse_scenario(scenario(tmp_path, ""))
    assert scn.cell == CellDefinition()
    assert isinstance(scn.run, Steady)


def test_invalid_value_names_constraint(tmp_path):
    with pytest.raises(ScenarioError, match=r"geometry\.H_mem > 0"):
        parse_scenario(scenario(tmp_path, "geometry.H_mem = -1\n"))


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ScenarioError, match="geometry.H_foo"):
        parse_scenario(scenario(tmp_path, "geometry.H_foo = 1\n"))
    with pytest.raises(ScenarioError, match="section"):
        parse_scenario(scenario(tmp_path, "weather.sun = 1\n"))


def test_override_is_echoed(tmp_path):
    scn = parse_scenario(scenario(tmp_path, "operating.Phi_c_des = 0.6  # humid cathode\n"))
    assert scn.cell.operating.Phi_c_des == 0.6
    assert "operating.Phi_c_des = 0.6\n" in format_resolved(scn.resolved)


def test_resolved_config_round_trips(tmp_path):
    first = parse_scenario(scenario(tmp_path, SWEEP + "mesh.gdl = 6\nelectro.R_e = 1e-6\n"))
    text = format_resolved(first.resolved)
    second = parse_scenario(scenario(tmp_path, text, "echo.txt"))
    assert second.resolved == first.resolved
    assert format_resolved(second.resolved) == text


def test_props_table_shape():
    header, data = props_table("lambda_eq", 0.0, 3.0, 31)
    assert data.shape == (31, len(header))
    assert np.all(np.diff(data[:, 1]) >= -1e-9)


@pytest.fixture(scope="module")
def sweep_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("sweep")
    scn = parse_scenario(scenario(d, SWEEP))
    return scn, run_scenario(scn)


def test_sweep_of_three_currents(sweep_run, tmp_path):
    scn, res = sweep_run
    assert isinstance(scn.run, Sweep)
    write_results(res, tmp_path)
    rows = read_csv(tmp_path / "polarization.csv")
    assert len(rows) == 4
    assert rows[0] == ["i", "U", "U_eq", "eta_c", "R_p", "i_n", "dV_conc", "feasible"]
    assert all(r[-1] == "1" for r in rows[1:])


def test_rerun_is_byte_identical(sweep_run, tmp_path):
    scn, res = sweep_run
    write_results(res, tmp_path / "a")
    write_results(run_scenario(scn), tmp_path / "b")
    for name in ("polarization.csv", "resolved_config.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_transient_ledger_rows_balance(tmp_path):
    scn = parse_scenario(scenario(tmp_path, TRANSIENT))
    write_results(run_scenario(scn), tmp_path / "out")
    rows = read_csv(tmp_path / "out" / "ledger.csv")
    assert tuple(rows[0]) == LEDGER_COLUMNS
    assert [float(r[0]) for r in rows[1:]] == [0.0, 0.5, 1.0]
    for r in rows[1:]:
        v = [float(x) for x in r[1:]]
        for k in range(3):
            stored, gain, loss, prod, clipped, imb = v[6 * k:6 * k + 6]
            assert stored - gain + loss - prod - clipped == pytest.approx(imb, abs=1e-12)
    ts = read_csv(tmp_path / "out" / "timeseries.csv")
    assert ts[0][0] == "t" and ts[0][1] == "lambda:ACL:0"
    assert len(ts) == 4


# ---------------------------------------------------------------- command line

def test_cli_exit_codes(tmp_path, capsys):
    ok = scenario(tmp_path, SWEEP, "ok.txt")
    bad = scenario(tmp_path, "geometry.H_mem = -1\n", "bad.txt")
    starve = scenario(tmp_path, "run.kind = steady\nrun.i_fc = 1e5\n", "starve.txt")
    assert main(["--quiet", "validate", str(ok)]) == 0
    assert main(["--quiet", "validate", str(bad)]) == 2
    assert main(["--quiet", "run", str(ok)]) == 2  # a sweep needs the sweep command
    assert main(["--quiet", "validate", str(tmp_path / "missing.txt")]) == 2
    assert main(["--quiet", "--out", str(tmp_path / "s"), "run", str(starve)]) == 3
    err = capsys.readouterr().err
    assert "geometry.H_mem > 0" in err and "infeasible" in err


def test_cli_props_table(tmp_path):
    out = tmp_path / "p"
    assert main(["--quiet", "--out", str(out), "props-table", "p_sat", "--from", "300",
                 "--to", "360", "--points", "7"]) == 0
    rows = read_csv(out / "props_p_sat.csv")
    assert len(rows) == 8
