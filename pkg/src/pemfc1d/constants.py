"""Physical and empirical constants shared by every module.

Each empirical coefficient is defined once here; correlation functions in
:mod:`pemfc1d.properties` refer to these names instead of literals.
"""

# Universal constants
F = 96485.0  # C/mol
R = 8.314  # J/(mol K)
T_ZERO_C = 273.15  # K

# Molar masses, kg/mol
M_H2O = 0.018
M_H2 = 2.016e-3
M_O2 = 0.032
M_N2 = 0.028

P_ATM = 101325.0  # Pa

# Saturated vapour pressure, log10 polynomial in Celsius
PSAT_COEFFS = (-2.1794, 0.02953, -9.1837e-5, 1.4454e-7)
PSAT_T_RANGE = (223.0, 373.0)

# Kell liquid water density (Celsius polynomial over linear denominator)
RHO_NUM_COEFFS = (999.83952, 16.945176, -7.9870401e-3, -46.170461e-6,
                  105.56302e-9, -280.54253e-12)
RHO_DEN_COEFF = 16.879850e-3

# Liquid viscosity mu = A * 10**(B / (T - C))
MU_A, MU_B, MU_C = 2.414e-5, 247.8, 140.0

# Surface tension (IAPWS form)
SIGMA_TC = 647.15
SIGMA_B, SIGMA_MU, SIGMA_BB = 0.2358, 1.256, -0.625

# Membrane water diffusivity, Springer piecewise fit
D_SPRINGER_DRY = 2.692661843e-10
D_SPRINGER_ACT = 2416.0
D_SPRINGER_T0 = 303.0
D_SPRINGER_CUBIC = (2.563, -0.33, 0.0264, -0.000671)
# Motupally fit
D_MOTUPALLY_LOW = 3.1e-7
D_MOTUPALLY_HIGH = 4.17e-8
D_MOTUPALLY_ACT = 2436.0
# Kulikovsky fit
D_KULIKOVSKY = 4.1e-10

# Sorption rates (Ge), 1/s scaled by f_v/H_cl
GAMMA_ABS = 1.14e-5
GAMMA_DES = 4.59e-5
SORP_ACT = 2416.0
SORP_T0 = 303.0

# Equilibrium water content cubics in a_w
HINATSU_CUBIC = (0.300, 10.8, -16.0, 14.1)
SPRINGER_CUBIC = (0.043, 17.81, -39.85, 36.0)
HINATSU_LIQ = 9.2   # vapour-branch value at a_w = 1
SPRINGER_LIQ = 14.0
HINATSU_RISE = 8.6  # rise from a_w = 1 to a_w = 3
SPRINGER_RISE = 2.8
BAO_SHARPNESS = 100.0
# Hinatsu liquid-equilibrated uptake, Celsius polynomial
LAMBDA_LIQ_COEFFS = (10.0, 1.84e-2, 9.90e-4)
LAMBDA_MAX_FIT = 17.0

# Electro-osmotic drag coefficient (Springer, constant)
N_DRAG = 2.5 / 22.0

# Binary diffusion coefficients (O'Hayre), at 333 K and 1 atm
D_H2O_H2_REF = 1.644e-4
D_H2O_O2_REF = 3.242e-5
D_BINARY_T0 = 333.0
D_BINARY_EXP = 2.334

# Sherwood number fit for rectangular channels
SH_SLOPE, SH_OFFSET = 0.9247, 2.3787
SH_RATIO_RANGE = (0.2, 10.0)

# Leverett function and the matching capillary diffusion polynomial
LEVERETT = (1.417, -2.12, 1.263)
DCAP_POLY = (1.417, -4.24, 3.789)

# Proton conductivity
SIGMA_SPRINGER = (0.5139, -0.326)
SIGMA_SPRINGER_DRY = 0.1879
SIGMA_SPRINGER_ACT = 1268.0
SIGMA_SPRINGER_T0 = 303.15
SIGMA_RAMOUSSE = (0.0013, 0.0298, 0.2658)
SIGMA_RAMOUSSE_EA = (2640.0, -0.6, 1183.0)
SIGMA_RAMOUSSE_T0 = 353.0

# Gas permeation through the ionomer (Weber), mol/(m s Pa)
K_H2_VAP = (0.29e-14, 2.2e-14)
K_H2_LIQ = 1.8e-14
K_H2_ACT = (2.1e4, 1.8e4)
K_O2_VAP = (0.11e-14, 1.9e-14)
K_O2_LIQ = 1.2e-14
K_O2_ACT = (2.2e4, 2.0e4)
K_PERM_T0 = 303.15

# Short-circuit resistance (Giner-Sanz), Ohm m^2
R_SC_REF = 1.79e-2
R_SC_EXP_ANODE = -9.63
R_SC_EXP_CATHODE = 0.38

# Reversible potential temperature slope, V/K
E0_SLOPE = 8.5e-4
E0_T0 = 298.15

# Extended exchange current reference temperature
T_REF_353 = 353.15
K_E_T0 = 298.0
