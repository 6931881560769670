"""Fluxes, volumetric sources and channel boundary flows for a given state.

Sign conventions: every face flux is positive in the +x direction, i.e.
from anode to cathode. Volumetric sources are positive when they add to the
balance they are named after (S_sorp adds to lambda and removes from C_v,
S_vl adds to s and removes from C_v, S_prod adds to lambda).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constants as c
from .cell_model import ANODE, CATHODE, CellDefinition, Mesh1D, StateLayout, StateVector, pack
from .properties import (_crossover_permeability, _d_cap_prefactor, _d_cap_shape,
                         _d_lambda, _lambda_eq, _p_sat, _porous_factor, _rho_water,
                         _sorption_rate, _water_activity, binary_diffusivity, lambda_liquid_eq,
                         sherwood)


class StateError(RuntimeError):
    """The state is outside the physical domain of the boundary model."""


@dataclass
class BoundaryFlows:
    """Channel inlet/outlet flows, mol per m^2 of channel cross-section per s."""

    v_in_a: float
    v_out_a: float
    h2_in: float
    h2_out: float
    v_in_c: float
    v_out_c: float
    o2_in: float
    o2_out: float
    n2_in: float
    n2_out: float
    P_agc: float
    P_cgc: float


@dataclass
class FluxSourceFields:
    J_mem: np.ndarray  # interior lambda faces
    J_cap_an: np.ndarray  # liquid faces, anode side incl. GC face (first entry)
    J_cap_ca: np.ndarray  # liquid faces, cathode side incl. GC face (last entry)
    J_v_an: np.ndarray  # gas faces incl. GC face, anode
    J_v_ca: np.ndarray
    J_h2: np.ndarray
    J_o2: np.ndarray
    S_sorp: np.ndarray  # per CL cell, ACL then CCL
    S_prod: np.ndarray  # per CL cell, ACL then CCL
    S_vl: np.ndarray  # per electrode cell
    S_h2_cons: np.ndarray  # per ACL cell
    S_o2_cons: np.ndarray  # per CCL cell
    S_h2_co: float
    S_o2_co: float
    flows: BoundaryFlows


def _face_mean(vL, vR, dxL, dxR, interface):
    """Arithmetic mean within a layer, flux-continuous harmonic mean across layers."""
    arith = 0.5 * (vL + vR)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        harm = (dxL + dxR) / (dxL / vL + dxR / vR)
    harm = np.where((vL > 0) & (vR > 0), harm, 0.0)
    return np.where(interface, harm, arith)


class Transport:
    """Precomputed geometry and materials for fast evaluation on packed states."""

    def __init__(self, cell: CellDefinition, mesh: Mesh1D):
        self.cell, self.mesh = cell, mesh
        self.layout = StateLayout.from_mesh(mesh)
        self.sl = self.layout.slices
        g, op = cell.geometry, cell.operating
        T = op.T_fc
        self.T = T
        self.RT = c.R * T
        self.p_sat = float(_p_sat(T))
        self.c_sat = self.p_sat / self.RT
        self.rho_w = float(_rho_water(T))
        self.conc = cell.membrane.conc
        self.lam_l_eq = float(lambda_liquid_eq(T))

        reg = np.array(mesh.region)
        dx = mesh.dx
        lam_cells = mesh.cells("ACL", "MEM", "CCL")
        el_cells = np.concatenate([mesh.cells(*ANODE), mesh.cells(*CATHODE)])
        n_an, n_ca = self.layout.n_an, self.layout.n_ca
        self.n_an, self.n_ca = n_an, n_ca
        self.n_cl = int(np.sum(reg == "ACL"))

        # dissolved water
        lreg = reg[lam_cells]
        self.lam_dx = dx[lam_cells]
        self.lam_d = 0.5 * (self.lam_dx[1:] + self.lam_dx[:-1])
        eps_mc = np.where(lreg == "ACL", cell.acl.eps_mc,
                          np.where(lreg == "CCL", cell.ccl.eps_mc, 1.0))
        self.lam_cap = self.conc * eps_mc
        self.lam_acl = np.flatnonzero(lreg == "ACL")
        self.lam_mem = np.flatnonzero(lreg == "MEM")
        self.lam_ccl = np.flatnonzero(lreg == "CCL")
        self.lam_cl = np.concatenate([self.lam_acl, self.lam_ccl])

        # electrode cells (s, C_v): anode block then cathode block
        ereg = reg[el_cells]
        self.el_dx = dx[el_cells]
        self.el_reg = ereg
        pcs = [cell.layer(r) for r in ereg]
        self.eps = np.array([p.eps for p in pcs])
        self.el_acl = np.flatnonzero(ereg == "ACL")
        self.el_ccl = np.flatnonzero(ereg == "CCL")
        self.el_cl = np.concatenate([self.el_acl, self.el_ccl])
        self.is_cl = np.isin(ereg, ("ACL", "CCL"))
        self.tau = np.array([p.tau for p in pcs])
        layer_kind = ["CL" if r in ("ACL", "CCL") else "GDL" for r in ereg]
        self.porous = np.array([_porous_factor(k, p) for k, p in zip(layer_kind, pcs)])
        self.dcap_pref = np.array([_d_cap_prefactor(p, T) for p in pcs])
        self.e_cap = np.array([p.e_cap for p in pcs])

        def side(lo, hi):
            sdx = self.el_dx[lo:hi]
            sreg = ereg[lo:hi]
            return (sdx[:-1], sdx[1:], 0.5 * (sdx[:-1] + sdx[1:]), sreg[:-1] != sreg[1:])

        self.f_an = side(0, n_an)
        self.f_ca = side(n_an, n_an + n_ca)

        self.D_an = float(binary_diffusivity("H2O_H2", T, op.P_a_des))
        self.D_ca = float(binary_diffusivity("H2O_O2", T, op.P_c_des))
        sh = sherwood(g.W_gc, g.H_gc)
        self.h_an = sh * self.D_an / g.H_gc
        self.h_ca = sh * self.D_ca / g.H_gc
        self.Deff_an0 = self.D_an * self.porous[:n_an]
        self.Deff_ca0 = self.D_ca * self.porous[n_an:]

        self.HW = g.H_gc * g.W_gc
        self.V_gc = g.V_gc
        self.A = g.A_act
        self.H_cl = g.H_cl
        self.H_mem = g.H_mem
        el = cell.electro
        self.gamma_cond, self.gamma_evap = el.gamma_cond, el.gamma_evap
        self.crossover = el.crossover

    # ------------------------------------------------------------ helpers

    def split(self, y):
        sl = self.sl
        cv = y[sl["cv"]]
        h2 = y[sl["h2"]]
        o2 = y[sl["o2"]]
        return (y[sl["lam"]], y[sl["s"]], cv[1:-1], cv[0], cv[-1],
                h2[1:], h2[0], o2[:-1], o2[-1], y[-1])

    def cl_means(self, y):
        """Width-weighted CL/MEM averages: C_H2 (ACL), C_O2 (CCL), lambda (MEM, CCL), s (CCL)."""
        lam, s, cv, _, _, h2, _, o2, _, _ = self.split(y)
        w_a = self.el_dx[self.el_acl]
        w_c = self.el_dx[self.el_ccl]
        a_idx = self.el_acl
        c_idx = self.el_ccl - self.n_an
        return {
            "h2_acl": float(np.dot(h2[a_idx], w_a) / w_a.sum()),
            "o2_ccl": float(np.dot(o2[c_idx], w_c) / w_c.sum()),
            "lam_mem": float(np.dot(lam[self.lam_mem], self.lam_dx[self.lam_mem])
                             / self.lam_dx[self.lam_mem].sum()),
            "lam_ccl": float(np.dot(lam[self.lam_ccl], self.lam_dx[self.lam_ccl])
                             / self.lam_dx[self.lam_ccl].sum()),
            "s_ccl": float(np.dot(s[self.el_ccl], w_c) / w_c.sum()),
        }

    def permeabilities(self, lam_mem):
        if not self.crossover:
            return 0.0, 0.0
        lm = max(lam_mem, 0.0)
        k_h2 = float(_crossover_permeability("H2", lm, self.lam_l_eq, self.T, self.cell.membrane))
        k_o2 = float(_crossover_permeability("O2", lm, self.lam_l_eq, self.T, self.cell.membrane))
        return k_h2, k_o2

    # ------------------------------------------------------------ pieces

    def membrane_water_flux(self, lam, i_fc):
        props = self.cell.properties
        lam_c = np.maximum(lam, 0.0)
        D = _d_lambda(lam_c, self.T, props)
        lam_f = 0.5 * (lam[1:] + lam[:-1])
        D_f = 0.5 * (D[1:] + D[:-1])
        return c.N_DRAG * i_fc / c.F * lam_f - self.conc * D_f * np.diff(lam) / self.lam_d

    def sorption_source(self, lam, s, cv):
        lam_cl = np.maximum(lam[self.lam_cl], 0.0)
        a_w = _water_activity(np.maximum(cv[self.el_cl], 0.0),
                              np.clip(s[self.el_cl], 0.0, 1.0), self.T, self.cell.properties)
        leq = _lambda_eq(a_w, self.T, self.cell.properties)
        gam = _sorption_rate(lam_cl, leq, self.T, self.H_cl, self.cell.membrane)
        return gam * self.conc * (leq - lam[self.lam_cl])

    def crossover_sources(self, h2_acl, o2_ccl, lam_mem):
        k_h2, k_o2 = self.permeabilities(lam_mem)
        g_h2 = max(h2_acl, 0.0) / self.H_mem
        g_o2 = max(o2_ccl, 0.0) / self.H_mem
        s_h2 = k_h2 * self.RT / self.H_cl * g_h2
        s_o2 = k_o2 * self.RT / self.H_cl * g_o2
        return {"S_H2_co": s_h2, "S_O2_co": s_o2,
                "S_H2_wasted": -2.0 * s_o2, "S_O2_wasted": -0.5 * s_h2}

    def production_source(self, i_fc, i_sc, co):
        n = self.n_cl
        acl = np.full(n, 2.0 * co["S_O2_co"])
        ccl = np.full(n, (i_fc + i_sc) / (2.0 * c.F * self.H_cl) + co["S_H2_co"])
        return np.concatenate([acl, ccl])

    def consumption_sources(self, i_fc, i_sc, co):
        s_h2 = -(i_fc + i_sc) / (2.0 * c.F * self.H_cl) - co["S_H2_co"] + co["S_H2_wasted"]
        s_o2 = -(i_fc + i_sc) / (4.0 * c.F * self.H_cl) - co["S_O2_co"] + co["S_O2_wasted"]
        return np.full(self.n_cl, s_h2), np.full(self.n_cl, s_o2)

    def capillary_flux(self, s):
        """Liquid fluxes; anode array starts with the GC face, cathode ends with it."""
        s_c = np.clip(s, 0.0, 1.0)
        n = self.n_an
        out = []
        for lo, hi, f in ((0, n, self.f_an), (n, len(s), self.f_ca)):
            ss = s_c[lo:hi]
            pref, e = self.dcap_pref[lo:hi], self.e_cap[lo:hi]
            dxL, dxR, d, iface = f
            sbar = 0.5 * (ss[1:] + ss[:-1])
            DL = pref[:-1] * _d_cap_shape(sbar, e[:-1])
            DR = pref[1:] * _d_cap_shape(sbar, e[1:])
            out.append(-_face_mean(DL, DR, dxL, dxR, iface) * np.diff(s[lo:hi]) / d)
        # Dirichlet s = 0 at the GDL/GC faces through a ghost value
        s0, s1 = s_c[0], s_c[-1]
        D0 = self.dcap_pref[0] * _d_cap_shape(0.5 * s0, self.e_cap[0])
        D1 = self.dcap_pref[-1] * _d_cap_shape(0.5 * s1, self.e_cap[-1])
        j_gc_an = -D0 * s[0] / (0.5 * self.el_dx[0])
        j_gc_ca = D1 * s[-1] / (0.5 * self.el_dx[-1])
        return (np.concatenate([[j_gc_an], out[0], [0.0]]),
                np.concatenate([[0.0], out[1], [j_gc_ca]]))

    def phase_change_source(self, s, cv, c_gas):
        s_c = np.clip(s, 0.0, 1.0)
        cv_c = np.maximum(cv, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_v = np.where(c_gas > 0, cv_c / c_gas, 0.0)
        dc = cv - self.c_sat
        cond = self.gamma_cond * self.eps * (1.0 - s_c) * x_v * dc
        evap = self.gamma_evap * self.eps * s_c * (self.rho_w / c.M_H2O) * self.RT * dc
        return np.where(dc > 0, cond, evap)

    def gas_flux(self, conc_side, deff_side, f, h, c_gc, anode: bool):
        dxL, dxR, d, _ = f
        # harmonic everywhere so a blocked cell (s = 1) closes both of its faces
        D_f = _face_mean(deff_side[:-1], deff_side[1:], dxL, dxR, True)
        inner = -D_f * np.diff(conc_side) / d
        if anode:
            return np.concatenate([[h * (c_gc - conc_side[0])], inner, [0.0]])
        return np.concatenate([[0.0], inner, [h * (conc_side[-1] - c_gc)]])

    def boundary_flows(self, cv_agc, h2_agc, cv_cgc, o2_cgc, n2, i_fc, i_n):
        op = self.cell.operating
        RT, ps = self.RT, self.p_sat
        P_a = (cv_agc + h2_agc) * RT
        P_c = (cv_cgc + o2_cgc + n2) * RT
        if P_a <= op.Phi_a_des * ps or P_c <= op.Phi_c_des * ps:
            raise StateError("GC fully saturated: P_gc <= Phi_des * P_sat")
        area = self.A / self.HW
        i_tot = i_fc + i_n
        h2_in = area * op.S_a * i_tot / (2.0 * c.F)
        o2_in = area * op.S_c * i_tot / (4.0 * c.F)
        v_in_a = op.Phi_a_des * ps / (P_a - op.Phi_a_des * ps) * h2_in
        v_in_c = op.Phi_c_des * ps / (P_c - op.Phi_c_des * ps) / op.y_O2_ext * o2_in
        n2_in = (1.0 - op.y_O2_ext) / op.y_O2_ext * o2_in

        def outlet(parts, P, P_des):
            tot = sum(max(p, 0.0) for p, _ in parts)
            if tot <= 0:
                return [0.0] * len(parts)
            x = [max(p, 0.0) / tot for p, _ in parts]
            M = sum(xi * m for xi, (_, m) in zip(x, parts))
            n_out = op.k_em_in * max(P - P_des, 0.0) / (M * self.HW)
            return [xi * n_out for xi in x]

        v_out_a, h2_out = outlet([(cv_agc, c.M_H2O), (h2_agc, c.M_H2)], P_a, op.P_a_des)
        v_out_c, o2_out, n2_out = outlet([(cv_cgc, c.M_H2O), (o2_cgc, c.M_O2), (n2, c.M_N2)],
                                         P_c, op.P_c_des)
        return BoundaryFlows(v_in_a, v_out_a, h2_in, h2_out, v_in_c, v_out_c,
                             o2_in, o2_out, n2_in, n2_out, P_a, P_c)

    # ------------------------------------------------------------ assembly

    def evaluate(self, y, i_fc, i_sc, i_n) -> FluxSourceFields:
        """All fluxes and sources for the packed state y."""
        lam, s, cv, cv_agc, cv_cgc, h2, h2_agc, o2, o2_cgc, n2 = self.split(y)
        n = self.n_an
        m = self.cl_means(y)
        co = self.crossover_sources(m["h2_acl"], m["o2_ccl"], m["lam_mem"])

        J_mem = self.membrane_water_flux(lam, i_fc)
        S_sorp = self.sorption_source(lam, s, cv)
        S_prod = self.production_source(i_fc, i_sc, co)
        J_cap_an, J_cap_ca = self.capillary_flux(s)

        c_gas = np.concatenate([cv[:n] + h2, cv[n:] + o2 + n2])
        S_vl = self.phase_change_source(s, cv, c_gas)

        flood = (1.0 - np.clip(s, 0.0, 1.0))
        flood = np.where(self.is_cl, flood ** self.tau, flood ** 2)
        deff_an = self.Deff_an0 * flood[:n]
        deff_ca = self.Deff_ca0 * flood[n:]
        J_v_an = self.gas_flux(cv[:n], deff_an, self.f_an, self.h_an, cv_agc, True)
        J_v_ca = self.gas_flux(cv[n:], deff_ca, self.f_ca, self.h_ca, cv_cgc, False)
        J_h2 = self.gas_flux(h2, deff_an, self.f_an, self.h_an, h2_agc, True)
        J_o2 = self.gas_flux(o2, deff_ca, self.f_ca, self.h_ca, o2_cgc, False)
        S_h2, S_o2 = self.consumption_sources(i_fc, i_sc, co)
        flows = self.boundary_flows(cv_agc, h2_agc, cv_cgc, o2_cgc, n2, i_fc, i_n)
        return FluxSourceFields(J_mem, J_cap_an, J_cap_ca, J_v_an, J_v_ca, J_h2, J_o2,
                                S_sorp, S_prod, S_vl, S_h2, S_o2,
                                co["S_H2_co"], co["S_O2_co"], flows)

    def rhs(self, y, i_fc, i_sc, i_n) -> np.ndarray:
        """Time derivative of the packed state."""
        fs = self.evaluate(y, i_fc, i_sc, i_n)
        lam, s, cv, cv_agc, cv_cgc, h2, h2_agc, o2, o2_cgc, n2 = self.split(y)
        n = self.n_an
        dx = self.el_dx
        out = np.empty_like(y)
        sl = self.sl

        # dissolved water
        J = np.concatenate([[0.0], fs.J_mem, [0.0]])
        src = -np.diff(J) / self.lam_dx
        src[self.lam_cl] += fs.S_sorp + fs.S_prod
        out[sl["lam"]] = src / self.lam_cap

        # liquid water
        div_cap = np.concatenate([np.diff(fs.J_cap_an), np.diff(fs.J_cap_ca)]) / dx
        ds = (-div_cap + c.M_H2O * fs.S_vl) / (self.rho_w * self.eps)
        out[sl["s"]] = ds

        # gas species in the electrodes: eps(1-s) dC/dt - eps C ds/dt = RHS
        gas_cap = self.eps * (1.0 - np.minimum(s, 1.0 - 1e-12))
        div_v = np.concatenate([np.diff(fs.J_v_an), np.diff(fs.J_v_ca)]) / dx
        rv = -div_v - fs.S_vl
        rv[self.el_cl] -= fs.S_sorp
        dcv = (rv + self.eps * cv * ds) / gas_cap

        rh = -np.diff(fs.J_h2) / dx[:n]
        rh[self.el_acl] += fs.S_h2_cons
        dh2 = (rh + self.eps[:n] * h2 * ds[:n]) / gas_cap[:n]

        ro = -np.diff(fs.J_o2) / dx[n:]
        ro[self.el_ccl - n] += fs.S_o2_cons
        do2 = (ro + self.eps[n:] * o2 * ds[n:]) / gas_cap[n:]

        # lumped channels
        f = fs.flows
        HW, A, V = self.HW, self.A, self.V_gc
        d_cv_agc = ((f.v_in_a - f.v_out_a) * HW - A * fs.J_v_an[0]) / V
        d_cv_cgc = ((f.v_in_c - f.v_out_c) * HW + A * fs.J_v_ca[-1]) / V
        d_h2_agc = ((f.h2_in - f.h2_out) * HW - A * fs.J_h2[0]) / V
        d_o2_cgc = ((f.o2_in - f.o2_out) * HW + A * fs.J_o2[-1]) / V
        d_n2 = (f.n2_in - f.n2_out) * HW / V

        cvs = out[sl["cv"]]
        cvs[0], cvs[1:-1], cvs[-1] = d_cv_agc, dcv, d_cv_cgc
        h2s = out[sl["h2"]]
        h2s[0], h2s[1:] = d_h2_agc, dh2
        o2s = out[sl["o2"]]
        o2s[:-1], o2s[-1] = do2, d_o2_cgc
        out[-1] = d_n2
        return out

    # ------------------------------------------------------------ bookkeeping

    def inventories(self, y) -> dict:
        """Stored moles per m^2 of active area: water (all phases), H2, O2."""
        lam, s, cv, cv_agc, cv_cgc, h2, h2_agc, o2, o2_cgc, n2 = self.split(y)
        n = self.n_an
        dx = self.el_dx
        gas = self.eps * (1.0 - s) * dx
        vol = self.V_gc / self.A
        water = (np.dot(self.lam_cap * lam, self.lam_dx)
                 + np.dot(self.rho_w * self.eps * s / c.M_H2O, dx)
                 + np.dot(gas, cv) + (cv_agc + cv_cgc) * vol)
        return {"water": float(water),
                "h2": float(np.dot(gas[:n], h2) + h2_agc * vol),
                "o2": float(np.dot(gas[n:], o2) + o2_cgc * vol)}

    def exchange_rates(self, y, i_fc, i_sc, i_n) -> dict:
        """Boundary and reaction rates per m^2 of active area, mol/(m^2 s)."""
        fs = self.evaluate(y, i_fc, i_sc, i_n)
        f = fs.flows
        k = self.HW / self.A
        liq_out = (-fs.J_cap_an[0] + fs.J_cap_ca[-1]) / c.M_H2O
        react = (i_fc + i_sc) / (2.0 * c.F)
        return {
            "water_in": (f.v_in_a + f.v_in_c) * k,
            "water_out": (f.v_out_a + f.v_out_c) * k + liq_out,
            "water_prod": react + self.H_cl * (fs.S_h2_co + 2.0 * fs.S_o2_co),
            "h2_in": f.h2_in * k, "h2_out": f.h2_out * k,
            "h2_cons": react + self.H_cl * (fs.S_h2_co + 2.0 * fs.S_o2_co),
            "o2_in": f.o2_in * k, "o2_out": f.o2_out * k,
            "o2_cons": 0.5 * react + self.H_cl * (fs.S_o2_co + 0.5 * fs.S_h2_co),
        }


# ---------------------------------------------------------------- state-level API

def fields_for(cell: CellDefinition, mesh: Mesh1D, state: StateVector,
               i_fc: float, i_sc: float = 0.0, i_n: float = 0.0) -> FluxSourceFields:
    """Evaluate every flux and source for a structured state."""
    return Transport(cell, mesh).evaluate(pack(state), i_fc, i_sc, i_n)
