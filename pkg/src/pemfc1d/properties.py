"""Closed-form property correlations for the membrane-electrode assembly.

All functions are pure and accept scalars or numpy arrays. Public functions
check their domain and raise :class:`DomainError`; the underscore-prefixed
kernels skip the checks and are what the transport assembly calls in its
inner loop.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import constants as c


class DomainError(ValueError):
    """Input outside the validity domain of a correlation."""


D_LAMBDA_VARIANTS = ("kulikovsky", "springer", "motupally")
LAMBDA_EQ_VARIANTS = ("hinatsu_bao", "springer_bao")
CONDUCTIVITY_VARIANTS = ("springer", "ramousse")
ACTIVITY_MODELS = ("vapour_plus_liquid", "rh_only")


@dataclass(frozen=True)
class PropertyConfig:
    d_lambda_variant: str = "kulikovsky"
    lambda_eq_variant: str = "hinatsu_bao"
    conductivity_variant: str = "springer"
    k_shape: float = 2.0
    activity_model: str = "vapour_plus_liquid"

    def __post_init__(self):
        _check_choice("d_lambda_variant", self.d_lambda_variant, D_LAMBDA_VARIANTS)
        _check_choice("lambda_eq_variant", self.lambda_eq_variant, LAMBDA_EQ_VARIANTS)
        _check_choice("conductivity_variant", self.conductivity_variant,
                      CONDUCTIVITY_VARIANTS)
        _check_choice("activity_model", self.activity_model, ACTIVITY_MODELS)
        if not self.k_shape > 0:
            raise DomainError("properties.k_shape > 0")


@dataclass(frozen=True)
class MembraneConstants:
    rho_mem: float = 1980.0  # kg/m^3
    M_eq: float = 1.1  # kg/mol
    V_w: float = c.M_H2O / 1000.0  # m^3/mol, molar volume of liquid water

    def __post_init__(self):
        for name in ("rho_mem", "M_eq", "V_w"):
            if not getattr(self, name) > 0:
                raise DomainError(f"membrane.{name} > 0")

    @property
    def V_mem(self) -> float:
        return self.M_eq / self.rho_mem

    @property
    def conc(self) -> float:
        """Sulfonic site density rho_mem / M_eq, mol/m^3."""
        return self.rho_mem / self.M_eq


# Fitted compression/tortuosity parameters for carbon-paper GDLs, keyed by
# nominal porosity then direction: (alpha, beta1, beta2).
TSB_ALPHA = {"through": 0.785, "in": 0.521}
TSB_BETA = {
    0.6: {"in": (-5.07, -2.05), "through": (-3.60, -1.59)},
    0.73: {"in": (-3.51, -1.04), "through": (-2.60, -0.90)},
}


def tsb_fit(eps: float, direction: str = "through") -> tuple[float, float, float]:
    """Return (alpha, beta1, beta2) for the tabulated porosity nearest to eps."""
    if direction not in TSB_ALPHA:
        raise DomainError(f"direction must be one of {tuple(TSB_ALPHA)}")
    key = min(TSB_BETA, key=lambda e: abs(e - eps))
    b1, b2 = TSB_BETA[key][direction]
    return TSB_ALPHA[direction], b1, b2


@dataclass(frozen=True)
class PorousConstants:
    """Structural constants of one porous layer (GDL or CL)."""

    eps: float = 0.6
    eps_p: float = 0.11
    tau: float = 1.5
    alpha_fit: float = 0.785
    beta1: float = -3.60
    beta2: float = -1.59
    eps_c: float = 0.2
    r_f_fiber: float = 4.6e-6
    e_cap: float = 4.0
    theta_c: float = 120.0  # degrees
    eps_mc: float = 0.0  # ionomer volume fraction, CL only
    K0: float | None = None  # permeability override, m^2

    def __post_init__(self):
        if not 0 < self.eps_p < self.eps < 1:
            raise DomainError("porous: 0 < eps_p < eps < 1 (eps <= eps_p is below percolation threshold)")
        if not 0 <= self.eps_c <= 0.5:
            raise DomainError("porous.eps_c in [0, 0.5]")
        if not self.tau > 0 or not self.r_f_fiber > 0:
            raise DomainError("porous.tau > 0 and porous.r_f_fiber > 0")
        if not 0 <= self.eps_mc < 1:
            raise DomainError("porous.eps_mc in [0, 1)")
        if 0.1 <= self.eps <= 0.4 and self.e_cap != 3:
            raise DomainError("porous.e_cap = 3 when eps in [0.1, 0.4]")
        if 0.6 <= self.eps <= 0.8 and not 4 <= self.e_cap <= 5:
            raise DomainError("porous.e_cap in [4, 5] when eps in [0.6, 0.8]")
        if self.K0 is not None and not self.K0 > 0:
            raise DomainError("porous.K0 > 0")


def default_gdl(**kw) -> PorousConstants:
    return replace(PorousConstants(), **kw)


def default_cl(**kw) -> PorousConstants:
    base = PorousConstants(eps=0.3, eps_c=0.0, e_cap=3.0, theta_c=120.0, eps_mc=0.25)
    return replace(base, **kw)


_range_warned = False


def _warn_lambda_range(lam) -> None:
    global _range_warned
    if not _range_warned and np.any(np.asarray(lam) > c.LAMBDA_MAX_FIT):
        _range_warned = True
        warnings.warn("water content above 17: membrane correlations are "
                      "extrapolated", RuntimeWarning, stacklevel=3)


def _check_choice(name, value, allowed):
    if value not in allowed:
        raise DomainError(f"properties.{name} must be one of {allowed}, got {value!r}")


def _check_range(name, x, lo=None, hi=None, lo_open=False, hi_open=False):
    a = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} must be finite")
    if lo is not None and np.any(a <= lo if lo_open else a < lo):
        raise DomainError(f"{name} must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and np.any(a >= hi if hi_open else a > hi):
        raise DomainError(f"{name} must be {'<' if hi_open else '<='} {hi}")


def _poly(coeffs, x):
    out = 0.0
    for k in reversed(coeffs):
        out = out * x + k
    return out


# ---------------------------------------------------------------- water

def p_sat(T):
    """Saturated vapour pressure of water, Pa."""
    _check_range("T", T, *c.PSAT_T_RANGE)
    return _p_sat(T)


def _p_sat(T):
    return c.P_ATM * 10.0 ** _poly(c.PSAT_COEFFS, np.asarray(T) - c.T_ZERO_C)


def liquid_water_density(T):
    """Liquid water density, kg/m^3."""
    _check_range("T", T, 273.0, 373.0, lo_open=True, hi_open=True)
    return _rho_water(T)


def _rho_water(T):
    tc = np.asarray(T) - c.T_ZERO_C
    return _poly(c.RHO_NUM_COEFFS, tc) / (1.0 + c.RHO_DEN_COEFF * tc)


def liquid_viscosity_dynamic(T):
    """Liquid water dynamic viscosity, Pa s."""
    _check_range("T", T, 273.0, 373.0, lo_open=True, hi_open=True)
    return _mu_water(T)


def _mu_water(T):
    return c.MU_A * 10.0 ** (c.MU_B / (np.asarray(T) - c.MU_C))


def liquid_viscosity_kinematic(T):
    """Liquid water kinematic viscosity, m^2/s."""
    _check_range("T", T, 273.0, 373.0, lo_open=True, hi_open=True)
    return _mu_water(T) / _rho_water(T)


def surface_tension(T):
    """Water/air surface tension, N/m."""
    _check_range("T", T, 273.0, c.SIGMA_TC, hi_open=True)
    return _surface_tension(T)


def _surface_tension(T):
    x = (c.SIGMA_TC - np.asarray(T)) / c.SIGMA_TC
    return c.SIGMA_B * x ** c.SIGMA_MU * (1.0 + c.SIGMA_BB * x)


# ---------------------------------------------------------------- membrane

def water_activity(C_v, s, T, cfg: PropertyConfig = PropertyConfig()):
    """Water activity in the CL pores from vapour concentration and saturation."""
    _check_range("C_v", C_v, 0.0)
    _check_range("s", s, 0.0, 1.0)
    return _water_activity(C_v, s, T, cfg)


def _water_activity(C_v, s, T, cfg):
    c_sat = _p_sat(T) / (c.R * T)
    rh = np.asarray(C_v) / c_sat
    if cfg.activity_model == "rh_only":
        return np.clip(rh, 0.0, 1.0)
    return np.clip(rh + 2.0 * np.asarray(s), 0.0, 3.0)


def lambda_eq(a_w, T, cfg: PropertyConfig = PropertyConfig()):
    """Equilibrium water content of the ionomer for activity a_w."""
    _check_range("a_w", a_w, 0.0, 3.0)
    return _lambda_eq(a_w, T, cfg)


def _lambda_eq(a_w, T, cfg):
    a = np.asarray(a_w)
    if cfg.lambda_eq_variant == "hinatsu_bao":
        cubic, base, rise = c.HINATSU_CUBIC, c.HINATSU_LIQ, c.HINATSU_RISE
    else:
        cubic, base, rise = c.SPRINGER_CUBIC, c.SPRINGER_LIQ, c.SPRINGER_RISE
    th = np.tanh(c.BAO_SHARPNESS * (a - 1.0))
    vap = _poly(cubic, a)
    liq = base + rise * (1.0 - np.exp(-cfg.k_shape * (a - 1.0)))
    return 0.5 * vap * (1.0 - th) + 0.5 * liq * (1.0 + th)


def lambda_liquid_eq(T):
    """Water content in equilibrium with liquid water (Hinatsu), T in K."""
    return _poly(c.LAMBDA_LIQ_COEFFS, np.asarray(T) - c.T_ZERO_C)


def d_lambda(lam, T, cfg: PropertyConfig = PropertyConfig()):
    """Diffusion coefficient of dissolved water in the ionomer, m^2/s."""
    _check_range("lambda", lam, 0.0)
    _warn_lambda_range(lam)
    return _d_lambda(lam, T, cfg)


def _d_lambda(lam, T, cfg):
    lam = np.asarray(lam, dtype=float)
    v = cfg.d_lambda_variant
    if v == "kulikovsky":
        return c.D_KULIKOVSKY * (lam / 25.0) ** 0.15 * (1.0 + np.tanh((lam - 2.5) / 1.4))
    if v == "springer":
        arr = np.exp(c.D_SPRINGER_ACT * (1.0 / c.D_SPRINGER_T0 - 1.0 / T))
        cubic = _poly(c.D_SPRINGER_CUBIC, lam)
        return np.select(
            [lam <= 2, lam <= 3, lam <= 4],
            [np.full_like(lam, c.D_SPRINGER_DRY),
             1e-10 * arr * (0.87 * (3 - lam) + 2.95 * (lam - 2)),
             1e-10 * arr * (2.95 * (4 - lam) + 1.642454 * (lam - 3))],
            1e-10 * arr * cubic)
    arr = np.exp(-c.D_MOTUPALLY_ACT / T)
    return np.where(lam < 3,
                    c.D_MOTUPALLY_LOW * lam * (np.exp(0.28 * lam) - 1.0) * arr,
                    c.D_MOTUPALLY_HIGH * lam * (161.0 * np.exp(-lam) + 1.0) * arr)


def water_volume_fraction(lam, consts: MembraneConstants = MembraneConstants()):
    """Volume fraction of water in the swollen ionomer."""
    lv = np.asarray(lam) * consts.V_w
    return lv / (consts.V_mem + lv)


def sorption_rate(lam, lam_eq, T, H_cl, consts: MembraneConstants = MembraneConstants()):
    """Sorption rate coefficient gamma (absorption or desorption), 1/s."""
    _check_range("lambda", lam, 0.0)
    _check_range("H_cl", H_cl, 0.0, lo_open=True)
    return _sorption_rate(lam, lam_eq, T, H_cl, consts)


def _sorption_rate(lam, lam_eq, T, H_cl, consts):
    k = np.where(np.asarray(lam) <= lam_eq, c.GAMMA_ABS, c.GAMMA_DES)
    arr = np.exp(c.SORP_ACT * (1.0 / c.SORP_T0 - 1.0 / T))
    return k * water_volume_fraction(lam, consts) / H_cl * arr


def proton_conductivity(lam, T, cfg: PropertyConfig = PropertyConfig()):
    """Proton conductivity of the ionomer, S/m."""
    _check_range("lambda", lam, 0.0)
    _warn_lambda_range(lam)
    return _proton_conductivity(lam, T, cfg)


def _proton_conductivity(lam, T, cfg):
    lam = np.asarray(lam, dtype=float)
    if cfg.conductivity_variant == "springer":
        arr = np.exp(c.SIGMA_SPRINGER_ACT * (1.0 / c.SIGMA_SPRINGER_T0 - 1.0 / T))
        a, b = c.SIGMA_SPRINGER
        return np.where(lam >= 1.0, a * lam + b, c.SIGMA_SPRINGER_DRY) * arr
    k3, k2, k1 = c.SIGMA_RAMOUSSE
    e0, ek, e1 = c.SIGMA_RAMOUSSE_EA
    ea = e0 * np.exp(ek * lam) + e1
    return (k3 * lam ** 3 + k2 * lam ** 2 + k1 * lam) * np.exp(
        ea * (1.0 / c.SIGMA_RAMOUSSE_T0 - 1.0 / T))


def crossover_permeability(gas: str, lam, lam_l_eq, T,
                           consts: MembraneConstants = MembraneConstants()):
    """Permeability of H2 or O2 through the hydrated ionomer, mol/(m s Pa)."""
    _check_range("lambda", lam, 0.0)
    if gas not in ("H2", "O2"):
        raise DomainError("gas must be 'H2' or 'O2'")
    return _crossover_permeability(gas, lam, lam_l_eq, T, consts)


def _crossover_permeability(gas, lam, lam_l_eq, T, consts):
    if gas == "H2":
        (k0, k1), kl, (ev, el) = c.K_H2_VAP, c.K_H2_LIQ, c.K_H2_ACT
    else:
        (k0, k1), kl, (ev, el) = c.K_O2_VAP, c.K_O2_LIQ, c.K_O2_ACT
    inv = 1.0 / c.K_PERM_T0 - 1.0 / T
    fv = water_volume_fraction(lam, consts)
    vap = (k0 + k1 * fv) * np.exp(ev / c.R * inv)
    liq = kl * np.exp(el / c.R * inv)
    return np.where(np.abs(np.asarray(lam) - lam_l_eq) < 1e-9, liq, vap)


# ---------------------------------------------------------------- porous media

def intrinsic_permeability_tsb(pc: PorousConstants):
    """Intrinsic permeability from the Tomadakis-Sotirchos model, m^2."""
    if pc.K0 is not None:
        return pc.K0
    eps, ep, a = pc.eps, pc.eps_p, pc.alpha_fit
    return (eps / (8.0 * np.log(eps) ** 2) * (eps - ep) ** (a + 2) * pc.r_f_fiber ** 2
            / ((1.0 - ep) ** a * ((a + 1.0) * eps - ep) ** 2)
            * np.exp(pc.beta1 * pc.eps_c))


def effective_diffusivity(D_ij, s, layer: str, pc: PorousConstants,
                          direction: str | None = None):
    """Effective gas diffusivity in a partially flooded porous layer, m^2/s."""
    _check_range("s", s, 0.0, 1.0)
    if layer not in ("CL", "GDL"):
        raise DomainError("layer must be 'CL' or 'GDL'")
    if direction is not None and layer == "GDL":
        a, _, b2 = tsb_fit(pc.eps, direction)
        pc = replace(pc, alpha_fit=a, beta2=b2)
    return D_ij * _porous_factor(layer, pc) * _flood_factor(layer, pc, s)


def _porous_factor(layer, pc):
    if layer == "CL":
        return pc.eps ** pc.tau
    return (pc.eps * ((pc.eps - pc.eps_p) / (1.0 - pc.eps_p)) ** pc.alpha_fit
            * np.exp(pc.beta2 * pc.eps_c))


def _flood_factor(layer, pc, s):
    if layer == "CL":
        return (1.0 - np.asarray(s)) ** pc.tau
    return (1.0 - np.asarray(s)) ** 2


def binary_diffusivity(pair: str, T, P):
    """Binary diffusion coefficient of water vapour in H2 or O2, m^2/s."""
    _check_range("T", T, 0.0, lo_open=True)
    _check_range("P", P, 0.0, lo_open=True)
    if pair == "H2O_H2":
        ref = c.D_H2O_H2_REF
    elif pair == "H2O_O2":
        ref = c.D_H2O_O2_REF
    else:
        raise DomainError("pair must be 'H2O_H2' or 'H2O_O2'")
    return ref * (np.asarray(T) / c.D_BINARY_T0) ** c.D_BINARY_EXP * (c.P_ATM / np.asarray(P))


def sherwood(W_gc: float, H_gc: float) -> float:
    """Sherwood number of a rectangular gas channel."""
    ratio = W_gc / H_gc
    lo, hi = c.SH_RATIO_RANGE
    if not lo <= ratio <= hi:
        raise DomainError(f"W_gc/H_gc must lie in [{lo}, {hi}], got {ratio:g}")
    return c.SH_SLOPE * np.log(ratio) + c.SH_OFFSET


def h_codi(D, W_gc: float, H_gc: float):
    """Convective-diffusive transfer coefficient at the GDL/GC interface, m/s."""
    return sherwood(W_gc, H_gc) * D / H_gc


def leverett_j(s):
    """Leverett J-function (hydrophobic media)."""
    s = np.asarray(s)
    return _poly((0.0,) + c.LEVERETT, s)


def d_cap(s, pc: PorousConstants, T):
    """Capillary diffusion coefficient, kg/(m s)."""
    _check_range("s", s, 0.0, 1.0)
    return _d_cap_prefactor(pc, T) * _d_cap_shape(s, pc.e_cap)


def _d_cap_prefactor(pc, T):
    K0 = intrinsic_permeability_tsb(pc)
    nu = _mu_water(T) / _rho_water(T)
    return (_surface_tension(T) * K0 / nu * abs(np.cos(np.radians(pc.theta_c)))
            * np.sqrt(pc.eps / K0))


def _d_cap_shape(s, e):
    s = np.asarray(s)
    return s ** e * _poly(c.DCAP_POLY, s)
