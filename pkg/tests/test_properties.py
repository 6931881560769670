import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from pemfc1d import properties as p
from pemfc1d.properties import DomainError, PropertyConfig

T80 = 353.15


# ---------------------------------------------------------------- water

def test_p_sat_against_steam_tables():
    assert p.p_sat(T80) == pytest.approx(oracles.p_sat_if97(T80), rel=0.01)


def test_p_sat_at_freezing_reduces_to_constant_term():
    assert p.p_sat(273.15) == pytest.approx(101325 * 10 ** -2.1794, rel=1e-12)


def test_p_sat_out_of_range_names_interval():
    with pytest.raises(DomainError, match="223"):
        p.p_sat(150.0)


@given(st.floats(224.0, 372.0), st.floats(0.01, 1.0))
def test_p_sat_increasing(T, dT):
    assert p.p_sat(T + dT) > p.p_sat(T)


def test_liquid_density_and_viscosity_reference_points():
    assert p.liquid_water_density(343.15) == pytest.approx(977.77, abs=0.01)
    assert p.liquid_viscosity_kinematic(343.15) == pytest.approx(4.10e-7, rel=0.01)
    assert p.liquid_viscosity_dynamic(343.15) == pytest.approx(4.01e-4, rel=0.01)


def test_liquid_properties_reject_out_of_range():
    for f in (p.liquid_water_density, p.liquid_viscosity_dynamic, p.liquid_viscosity_kinematic):
        with pytest.raises(DomainError):
            f(380.0)


def test_surface_tension_points():
    assert p.surface_tension(T80) == pytest.approx(0.0627, abs=2e-4)
    assert 0.0627 < p.surface_tension(343.15) < 0.0700
    assert p.surface_tension(647.15 - 1e-9) < 1e-9
    with pytest.raises(DomainError):
        p.surface_tension(647.15)


# ---------------------------------------------------------------- membrane

def test_water_activity_examples():
    c_sat = p.p_sat(T80) / (oracles.R * T80)
    assert p.water_activity(c_sat, 0.0, T80) == pytest.approx(1.0)
    assert p.water_activity(c_sat, 1.0, T80) == pytest.approx(3.0)
    assert p.water_activity(0.5 * c_sat, 0.25, T80) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        p.water_activity(-1.0, 0.0, T80)


def test_lambda_eq_against_closed_forms():
    assert p.lambda_eq(1.0, T80) == pytest.approx(9.2, abs=1e-6)
    assert p.lambda_eq(3.0, T80) == pytest.approx(9.2 + 8.6 * (1 - math.exp(-4)), rel=1e-9)
    spr = PropertyConfig(lambda_eq_variant="springer_bao")
    assert p.lambda_eq(1.0, T80, spr) == pytest.approx(14.0, abs=0.01)
    for a in np.linspace(0, 3, 31):
        assert p.lambda_eq(a, T80) == pytest.approx(oracles.hinatsu_bao(a), rel=1e-12)
        assert p.lambda_eq(a, T80, spr) == pytest.approx(oracles.springer_bao(a), rel=1e-12)
    with pytest.raises(DomainError):
        p.lambda_eq(3.5, T80)


@given(st.floats(0.0, 2.99))
def test_lambda_eq_non_decreasing(a):
    assert p.lambda_eq(a + 0.01, T80) >= p.lambda_eq(a, T80) - 1e-9


def test_d_lambda_examples():
    assert p.d_lambda(2.5, T80) == pytest.approx(2.90e-10, rel=0.01)
    with pytest.warns(RuntimeWarning):
        p._range_warned = False
        assert p.d_lambda(25.0, T80) == pytest.approx(8.2e-10, rel=0.01)
    spr = PropertyConfig(d_lambda_variant="springer")
    for T in (300.0, 353.15):
        assert p.d_lambda(1.0, T, spr) == 2.692661843e-10
    for lam in np.linspace(0.1, 16, 40):
        assert p.d_lambda(lam, T80) == pytest.approx(oracles.kulikovsky_d(lam), rel=1e-12)


def test_sorption_rate_examples():
    assert p.sorption_rate(0.0, 9.2, T80, 1e-5) == 0.0
    g_a = p.sorption_rate(7.0, 9.2, T80, 1e-5)
    assert p.water_volume_fraction(7.0) == pytest.approx(0.1848, abs=1e-4)
    assert g_a == pytest.approx(0.654, rel=0.01)
    g_d = p.sorption_rate(9.2, 7.0, T80, 1e-5)
    g_a_same = p.sorption_rate(9.2, 9.3, T80, 1e-5)
    assert g_d / g_a_same == pytest.approx(4.59 / 1.14, rel=1e-12)


def test_proton_conductivity_examples():
    assert p.proton_conductivity(14.0, T80) == pytest.approx(oracles.springer_sigma(14.0, T80),
                                                              rel=1e-12)
    assert p.proton_conductivity(14.0, T80) == pytest.approx(12.4, rel=0.01)
    assert p.proton_conductivity(0.5, 303.15) == pytest.approx(0.1879)
    assert p.proton_conductivity(0.0, T80, PropertyConfig(conductivity_variant="ramousse")) == 0.0


def test_crossover_permeability_examples():
    assert p.crossover_permeability("H2", 0.0, 16.8, 303.15) == pytest.approx(0.29e-14)
    assert p.crossover_permeability("O2", 0.0, 16.8, 303.15) == pytest.approx(0.11e-14)
    assert p.crossover_permeability("H2", 16.8, 16.8, 303.15) == pytest.approx(1.8e-14)
    with pytest.raises(DomainError):
        p.crossover_permeability("N2", 1.0, 16.8, T80)


# ---------------------------------------------------------------- porous media

def test_tsb_permeability_table_value():
    pc = p.default_gdl(eps=0.6, eps_c=0.3)
    assert p.intrinsic_permeability_tsb(pc) == pytest.approx(3.4e-13, rel=0.05)


def test_tsb_compression_factor_and_percolation_limit():
    bare = p.intrinsic_permeability_tsb(p.default_gdl(eps_c=0.0))
    comp = p.intrinsic_permeability_tsb(p.default_gdl(eps_c=0.2))
    assert comp / bare == pytest.approx(math.exp(-3.60 * 0.2), rel=1e-12)
    near = p.intrinsic_permeability_tsb(p.default_gdl(eps=0.11 + 1e-6, e_cap=3.0))
    assert near < 1e-25
    with pytest.raises(DomainError, match="eps_p < eps"):
        p.default_gdl(eps=0.10)


def test_effective_diffusivity_examples():
    cl = p.default_cl()
    assert p.effective_diffusivity(1.0, 0.0, "CL", cl) == pytest.approx(0.1643, abs=1e-4)
    gdl = p.default_gdl(eps=0.6, eps_c=0.3)
    # 0.6 (0.49/0.89)^0.785 exp(-1.59 * 0.3)
    expected = 0.6 * (0.49 / 0.89) ** 0.785 * math.exp(-1.59 * 0.3)
    assert p.effective_diffusivity(1.0, 0.0, "GDL", gdl) == pytest.approx(expected, rel=1e-12)
    for layer, pc in (("CL", cl), ("GDL", gdl)):
        assert p.effective_diffusivity(1.0, 1.0, layer, pc) == 0.0


def test_binary_diffusivity_examples():
    assert p.binary_diffusivity("H2O_H2", 333.0, 101325.0) == 1.644e-4
    assert p.binary_diffusivity("H2O_O2", 333.0, 101325.0) == 3.242e-5
    assert p.binary_diffusivity("H2O_O2", 353.0, 1.5 * 101325) == pytest.approx(2.477e-5, rel=0.005)
    assert p.binary_diffusivity("H2O_H2", T80, 1.2e5) == pytest.approx(
        oracles.d_h2o_h2(T80, 1.2e5), rel=1e-12)


def test_sherwood_and_codi():
    assert p.sherwood(1.0, 1.0) == pytest.approx(2.3787)
    assert p.sherwood(1.6, 1.0) == pytest.approx(2.813, abs=1e-3)
    assert p.h_codi(3e-5, 1e-3, 1e-3) == pytest.approx(0.0714, abs=1e-4)
    with pytest.raises(DomainError):
        p.sherwood(20.0, 1.0)


def test_leverett_and_capillary_diffusion():
    assert p.leverett_j(0.0) == 0.0
    assert p.leverett_j(1.0) == pytest.approx(0.56)
    gdl = p.default_gdl()
    assert p.d_cap(0.0, gdl, T80) == 0.0
    assert p.d_cap(0.5, gdl, T80) > 0.0


@settings(max_examples=50)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_effective_diffusivity_decreases_with_saturation(s1, s2):
    lo, hi = sorted((s1, s2))
    for layer, pc in (("CL", p.default_cl()), ("GDL", p.default_gdl())):
        assert p.effective_diffusivity(1.0, hi, layer, pc) <= p.effective_diffusivity(
            1.0, lo, layer, pc)
