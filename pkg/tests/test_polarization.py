import math
from dataclasses import replace

import numpy as np
import pytest

import oracles
from pemfc1d import polarization as pol
from pemfc1d.constants import K_E_T0
from pemfc1d.cell_model import (CellDefinition, Electro, Equilibrated, OverpotentialConfig,
                                build_mesh, initial_state, pack)
from pemfc1d.properties import DomainError
from pemfc1d.transport import Transport

T80 = 353.15
RT80 = oracles.R * T80


def state(cell=None, phi=1.0):
    cell = cell or CellDefinition()
    mesh = build_mesh(cell)
    return Transport(cell, mesh), pack(initial_state(cell, mesh, Equilibrated(phi)))


def with_electro(**kw):
    cell = CellDefinition()
    return replace(cell, electro=replace(cell.electro, **kw))


# ---------------------------------------------------------------- pieces

def test_equilibrium_potential_examples():
    T = 298.15
    unit = 1e5 / (oracles.R * T)
    assert pol.equilibrium_potential(unit, unit, T) == pytest.approx(1.229, abs=1e-12)
    u80 = 1e5 / RT80
    assert pol.equilibrium_potential(u80, u80, T80) == pytest.approx(1.18225, abs=1e-10)
    drop = pol.equilibrium_potential(u80, u80, T80) - pol.equilibrium_potential(u80, u80 / 2, T80)
    assert drop == pytest.approx(RT80 / (4 * oracles.F) * math.log(2), rel=1e-9)
    assert drop == pytest.approx(5.27e-3, rel=0.01)
    with pytest.raises(DomainError, match="starved"):
        pol.equilibrium_potential(0.0, 1.0, T80)


def test_tafel_overpotential_examples():
    assert pol.tafel_overpotential(3.0, 3.0, 0.5, T80) == 0.0
    eta = pol.tafel_overpotential(100.0, 1.0, 0.5, T80)
    assert eta == pytest.approx(oracles.tafel_delta(1.0, 100.0, T80, 0.5), rel=1e-12)
    assert eta == pytest.approx(0.280, abs=1e-3)
    shift = pol.tafel_overpotential(1000.0, 1.0, 0.5, T80) - eta
    assert shift == pytest.approx(RT80 / (0.5 * oracles.F) * math.log(10), rel=1e-12)
    with pytest.raises(DomainError):
        pol.tafel_overpotential(0.0, 1.0, 0.5, T80)


def test_flooding_factor_in_extended_mode():
    el = Electro()
    only_flood = OverpotentialConfig(mode="extended", use_a_plus=False, use_roughness=False,
                                     use_temperature_activation=False)
    dry = pol.exchange_current(3.39, T80, el, only_flood, 10.0, 0.0)
    wet = pol.exchange_current(3.39, T80, el, only_flood, 10.0, 0.3)
    assert wet / dry == pytest.approx(0.7 ** 1.5, rel=1e-12)
    assert wet / dry == pytest.approx(0.586, abs=1e-3)


def test_a_plus_root_selection():
    for lam in (0.5, 3.0, 14.0):
        a = pol.a_plus(lam, T80)
        assert 0 < a <= 1
    # K_e = 1 exactly (reference temperature, K_e0 = 1): analytic limit
    assert pol.a_plus(3.0, K_E_T0, K_e0=1.0) == 0.75
    near = pol.a_plus(3.0, K_E_T0, K_e0=1.0 + 1e-7)
    assert near == pytest.approx(0.75, rel=1e-6)


def test_short_circuit_examples():
    assert pol.short_circuit_resistance(101325.0, 101325.0) == pytest.approx(1.79e-2)
    out = pol.internal_current(0.8, 101325.0, 101325.0)
    assert out["i_sc"] == pytest.approx(44.7, rel=1e-3)
    assert out["i_n"] == out["i_sc"]
    i_h2, i_o2 = pol.crossover_currents(1e-14, 1e-14, 0.0, 0.0, T80, 2.5e-5)
    assert i_h2 == i_o2 == 0.0


def test_proton_resistance_examples():
    dx_m = np.full(5, 5e-6)
    dx_c = np.full(5, 2e-6)
    r_mem = pol.proton_resistance(np.full(5, 14.0), dx_m, np.full(5, 14.0), np.zeros(5), T80,
                                  0.25, 1.5)
    sigma = oracles.springer_sigma(14.0, T80)
    assert r_mem == pytest.approx(2.5e-5 / sigma, rel=1e-12)
    assert r_mem == pytest.approx(2.01e-6, rel=0.01)
    total = pol.proton_resistance(np.full(5, 14.0), dx_m, np.full(5, 14.0), dx_c, T80, 0.25, 1.5)
    assert total == pytest.approx(2.5e-5 / sigma + 1e-5 / (0.25 / 1.5 * sigma) / 3, rel=1e-12)
    assert total == pytest.approx(3.62e-6, rel=0.01)


def test_concentration_loss_examples():
    assert pol.concentration_loss(0.0, T80, 2e4) == 0.0
    assert pol.concentration_loss(1e4, T80, 2e4) == pytest.approx(10.5e-3, rel=0.01)
    with pytest.raises(pol.LimitingCurrentError):
        pol.concentration_loss(2e4, T80, 2e4)


# ---------------------------------------------------------------- assembled voltage

def test_open_circuit_is_finite_and_below_equilibrium():
    tr, y = state()
    rep = pol.cell_voltage(tr, y, 0.0)
    assert rep.i_n > 0
    assert np.isfinite(rep.U_cell) and rep.U_cell < rep.U_eq
    assert 1.0 <= rep.i_n <= 500.0


def test_fixed_point_residual():
    tr, y = state()
    rep = pol.cell_voltage(tr, y, 5e3)
    resid = rep.U_cell - (rep.U_eq - rep.eta_c - rep.dV_ohmic_p - rep.dV_ohmic_e - rep.dV_conc)
    assert abs(resid) < 1e-10


def test_no_spurious_losses_at_floor():
    tr, y = state(with_electro(crossover=False, short_circuit=False))
    rep = pol.cell_voltage(tr, y, 0.0)
    assert rep.i_n == 0.0
    i0 = 2.0 * (tr.cl_means(y)["o2_ccl"] / 3.39)
    expected = rep.U_eq - pol.tafel_overpotential(pol.I_N_FLOOR, i0, 0.5, T80)
    assert rep.U_cell == pytest.approx(expected, abs=1e-10)


def test_ohmic_linearity_without_short_circuit():
    a = pol.cell_voltage(*state(with_electro(short_circuit=False)), 1e4)
    b = pol.cell_voltage(*state(with_electro(short_circuit=False, R_e=1e-6)), 1e4)
    assert a.U_cell - b.U_cell == pytest.approx(0.010, abs=1e-9)


def test_ohmic_shift_with_short_circuit_is_close_to_ten_millivolts():
    # the short-circuit current follows U, so eta shifts slightly as well
    a = pol.cell_voltage(*state(), 1e4)
    b = pol.cell_voltage(*state(with_electro(R_e=1e-6)), 1e4)
    assert a.U_cell - b.U_cell == pytest.approx(0.010, rel=0.01)


def test_voltage_decreases_with_current_at_fixed_state():
    tr, y = state()
    U = [pol.cell_voltage(tr, y, i).U_cell for i in np.linspace(100, 1.5e4, 40)]
    assert np.all(np.diff(U) < 0)


def test_concentration_loss_is_additive():
    cell = CellDefinition()
    cell = replace(cell, electro=replace(cell.electro, i_lim=2e4, short_circuit=False),
                   overpotential=OverpotentialConfig(concentration_loss_enabled=True))
    tr, y = state(cell)
    on = pol.cell_voltage(tr, y, 1e4)
    off = pol.cell_voltage(*state(with_electro(i_lim=2e4, short_circuit=False)), 1e4)
    assert off.U_cell - on.U_cell == pytest.approx(RT80 / (2 * oracles.F) * math.log(2),
                                                   abs=1e-9)
