"""Cell voltage: equilibrium potential, cathode overpotential, internal
currents, ohmic and concentration losses."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants as c
from .cell_model import Electro, OverpotentialConfig
from .properties import DomainError, PropertyConfig, _proton_conductivity

I_N_FLOOR = 1e-3  # A/m^2, keeps the open-circuit logarithm finite
FP_TOL = 1e-10
FP_MAX_ITER = 50
FP_DAMPING = 0.5


class VoltageError(RuntimeError):
    """The voltage fixed point did not converge."""


class LimitingCurrentError(DomainError):
    """Current density at or above the limiting current."""


@dataclass(frozen=True)
class VoltageReport:
    U_eq: float
    eta_c: float
    dV_ohmic_p: float
    dV_ohmic_e: float
    dV_conc: float
    U_cell: float
    i_n: float
    i_sc: float
    i_co_H2: float
    i_co_O2: float
    R_p: float
    iterations: int = 0


def equilibrium_potential(C_H2_acl, C_O2_ccl, T, E0=1.229, P_ref=1e5):
    """Reversible cell potential with the anode taken as reference, V."""
    if C_H2_acl <= 0 or C_O2_ccl <= 0:
        raise DomainError("catalyst-layer concentrations must be > 0 (cell starved)")
    RT = c.R * T
    return (E0 - c.E0_SLOPE * (T - c.E0_T0)
            + RT / (2.0 * c.F) * (np.log(RT * C_H2_acl / P_ref)
                                  + 0.5 * np.log(RT * C_O2_ccl / P_ref)))


def a_plus(lam, T, K_e0=6.2, dH0=5.23e4):
    """Activity of solvated protons in the ionomer."""
    K_e = K_e0 * np.exp(-dH0 / c.R * (1.0 / T - 1.0 / c.K_E_T0))
    q = 1.0 - 1.0 / K_e
    if abs(q) < 1e-12:
        return lam / (lam + 1.0)
    b = lam + 1.0
    return (b - np.sqrt(b * b - 4.0 * lam * q)) / (2.0 * q)


def exchange_current(C_O2_ccl, T, el: Electro, cfg: OverpotentialConfig,
                     lam_ccl=None, s_ccl=0.0):
    """Cathode exchange current density, A/m^2."""
    ratio = (C_O2_ccl / el.C_O2_ref) ** el.kappa_c
    if cfg.mode == "tafel":
        return el.i0_c_ref * ratio
    i0 = el.i0_353_ref * ratio
    if cfg.use_a_plus:
        if lam_ccl is None:
            raise DomainError("extended overpotential needs the CCL water content")
        i0 *= a_plus(lam_ccl, T, el.K_e0, el.dH0) ** (1.0 - 2.0 * el.alpha_c)
    if cfg.use_flooding_factor:
        i0 *= (1.0 - s_ccl) ** 1.5
    if cfg.use_roughness:
        i0 *= el.r_f_electrode
    if cfg.use_temperature_activation:
        i0 *= np.exp(el.E_act / c.R * (1.0 / c.T_REF_353 - 1.0 / T))
    return i0


def tafel_overpotential(i_total, i0, alpha_c, T):
    if i_total <= 0:
        raise DomainError("i_fc + i_n must be > 0")
    if i0 <= 0:
        raise DomainError("exchange current must be > 0 (cell starved)")
    return c.R * T / (alpha_c * c.F) * np.log(i_total / i0)


def overpotential(i_fc, i_n, C_O2_ccl, T, el: Electro,
                  cfg: OverpotentialConfig = OverpotentialConfig(), lam_ccl=None, s_ccl=0.0):
    """Cathode activation overpotential, V."""
    if C_O2_ccl <= 0:
        raise DomainError("C_O2 in the CCL must be > 0 (cell starved)")
    i0 = exchange_current(C_O2_ccl, T, el, cfg, lam_ccl, s_ccl)
    return tafel_overpotential(i_fc + i_n, i0, el.alpha_c, T)


def short_circuit_resistance(P_agc, P_cgc):
    if P_agc <= 0 or P_cgc <= 0:
        raise DomainError("channel pressures must be > 0")
    return (c.R_SC_REF * (P_agc / c.P_ATM) ** c.R_SC_EXP_ANODE
            * (P_cgc / c.P_ATM) ** c.R_SC_EXP_CATHODE)


def crossover_currents(k_h2, k_o2, C_H2_acl, C_O2_ccl, T, H_mem):
    """Equivalent current densities of permeated H2 and O2, A/m^2."""
    RT = c.R * T
    i_h2 = 2.0 * c.F * k_h2 * RT * max(C_H2_acl, 0.0) / H_mem
    i_o2 = 4.0 * c.F * k_o2 * RT * max(C_O2_ccl, 0.0) / H_mem
    return i_h2, i_o2


def internal_current(U_cell, P_agc, P_cgc, i_co_H2=0.0, i_co_O2=0.0, short_circuit=True):
    """Total internal current density and its parts, A/m^2."""
    i_sc = U_cell / short_circuit_resistance(P_agc, P_cgc) if short_circuit else 0.0
    return {"i_n": i_co_H2 + i_co_O2 + i_sc, "i_sc": i_sc,
            "i_co_H2": i_co_H2, "i_co_O2": i_co_O2}


def proton_resistance(lam_mem, dx_mem, lam_ccl, dx_ccl, T, eps_mc, tau,
                      cfg: PropertyConfig = PropertyConfig()):
    """Ionic resistance of the membrane plus one third of the CCL, Ohm m^2."""
    s_mem = _proton_conductivity(np.maximum(lam_mem, 0.0), T, cfg)
    s_ccl = _proton_conductivity(np.maximum(lam_ccl, 0.0), T, cfg)
    if np.any(s_mem <= 0) or np.any(s_ccl <= 0):
        raise DomainError("proton conductivity vanished (fully dry ionomer)")
    return float(np.sum(dx_mem / s_mem) + np.sum(dx_ccl / ((eps_mc / tau) * s_ccl)) / 3.0)


def concentration_loss(i_fc, T, i_lim):
    """Empirical concentration overvoltage, V."""
    if i_fc < 0:
        raise DomainError("i_fc must be >= 0")
    if i_fc >= i_lim:
        raise LimitingCurrentError(f"i_fc = {i_fc:g} reaches the limiting current {i_lim:g}")
    return c.R * T / (2.0 * c.F) * np.log(i_lim / (i_lim - i_fc))


def solve_voltage(U_eq, eta_fn, ohmic, dV_conc, i_sc_of, U0=None):
    """Damped fixed point U = U_eq - eta(i_sc(U)) - ohmic - dV_conc.

    Returns (U, iterations). eta_fn takes i_sc; i_sc_of maps U to i_sc.
    """
    def g(U):
        return U_eq - eta_fn(i_sc_of(U)) - ohmic - dV_conc

    U = g(U_eq) if U0 is None else U0
    for k in range(1, FP_MAX_ITER + 1):
        step = g(U) - U
        if abs(step) < FP_TOL:
            return U, k
        U = U + FP_DAMPING * step
    raise VoltageError(f"voltage fixed point did not converge, residual {abs(step):.3e} V")


def cell_voltage(tr, y, i_fc: float, U0=None) -> VoltageReport:
    """Voltage report for packed state y using the Transport helper tr."""
    if i_fc < 0:
        raise DomainError("i_fc must be >= 0")
    cell = tr.cell
    el, cfg, T = cell.electro, cell.overpotential, tr.T
    m = tr.cl_means(y)
    U_eq = equilibrium_potential(m["h2_acl"], m["o2_ccl"], T, el.E0, el.P_ref)
    k_h2, k_o2 = tr.permeabilities(m["lam_mem"])
    i_h2, i_o2 = crossover_currents(k_h2, k_o2, m["h2_acl"], m["o2_ccl"], T, tr.H_mem)
    lam = y[tr.sl["lam"]]
    R_p = proton_resistance(lam[tr.lam_mem], tr.lam_dx[tr.lam_mem], lam[tr.lam_ccl],
                            tr.lam_dx[tr.lam_ccl], T, cell.ccl.eps_mc, cell.ccl.tau,
                            cell.properties)
    dV_conc = 0.0
    if cfg.concentration_loss_enabled:
        dV_conc = concentration_loss(i_fc, T, el.i_lim)
    i0 = exchange_current(m["o2_ccl"], T, el, cfg, m["lam_ccl"], m["s_ccl"])
    if i0 <= 0:
        raise DomainError("exchange current vanished (cell starved or flooded)")
    cv_agc, h2_agc = y[tr.sl["cv"]][0], y[tr.sl["h2"]][0]
    cv_cgc, o2_cgc, n2 = y[tr.sl["cv"]][-1], y[tr.sl["o2"]][-1], y[-1]
    P_a = (cv_agc + h2_agc) * tr.RT
    P_c = (cv_cgc + o2_cgc + n2) * tr.RT
    r_sc = short_circuit_resistance(P_a, P_c) if el.short_circuit else np.inf

    def eta_fn(i_sc):
        i_tot = i_fc + i_h2 + i_o2 + i_sc
        if i_fc == 0.0 and i_tot < I_N_FLOOR:
            i_tot = I_N_FLOOR
        return tafel_overpotential(i_tot, i0, el.alpha_c, T)

    ohmic = i_fc * (R_p + el.R_e)
    U, its = solve_voltage(U_eq, eta_fn, ohmic, dV_conc, lambda U: U / r_sc, U0)
    i_sc = U / r_sc
    return VoltageReport(U_eq=float(U_eq), eta_c=float(eta_fn(i_sc)), dV_ohmic_p=i_fc * R_p,
                         dV_ohmic_e=i_fc * el.R_e, dV_conc=float(dV_conc), U_cell=float(U),
                         i_n=float(i_h2 + i_o2 + i_sc), i_sc=float(i_sc), i_co_H2=float(i_h2),
                         i_co_O2=float(i_o2), R_p=R_p, iterations=its)
