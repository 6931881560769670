"""Independent reference computations used by the tests.

Nothing here imports the package: each function re-derives a value from a
published closed form or from elementary algebra.
"""
import math

R = 8.314
F = 96485.0

# IAPWS-IF97 region 4 (saturation line) coefficients
_IF97 = (0.11670521452767e4, -0.72421316703206e6, -0.17073846940092e2,
         0.12020824702470e5, -0.32325550322333e7, 0.14915108613530e2,
         -0.48232657361591e4, 0.40511340542057e6, -0.23855557567849,
         0.65017534844798e3)


def p_sat_if97(T):
    """Saturation pressure of water, Pa (IAPWS-IF97 steam tables)."""
    n = _IF97
    th = T + n[8] / (T - n[9])
    A = th * th + n[0] * th + n[1]
    B = n[2] * th * th + n[3] * th + n[4]
    C = n[5] * th * th + n[6] * th + n[7]
    return (2.0 * C / (-B + math.sqrt(B * B - 4.0 * A * C))) ** 4 * 1e6


def hinatsu_vapour(a):
    return 0.300 + 10.8 * a - 16.0 * a ** 2 + 14.1 * a ** 3


def springer_vapour(a):
    return 0.043 + 17.81 * a - 39.85 * a ** 2 + 36.0 * a ** 3


def hinatsu_bao(a, k=2.0):
    t = math.tanh(100.0 * (a - 1.0))
    return (0.5 * hinatsu_vapour(a) * (1 - t)
            + 0.5 * (9.2 + 8.6 * (1 - math.exp(-k * (a - 1.0)))) * (1 + t))


def springer_bao(a, k=2.0):
    t = math.tanh(100.0 * (a - 1.0))
    return (0.5 * springer_vapour(a) * (1 - t)
            + 0.5 * (14.0 + 2.8 * (1 - math.exp(-k * (a - 1.0)))) * (1 + t))


def kulikovsky_d(lam):
    return 4.1e-10 * (lam / 25.0) ** 0.15 * (1.0 + math.tanh((lam - 2.5) / 1.4))


def springer_sigma(lam, T):
    f = math.exp(1268.0 * (1.0 / 303.15 - 1.0 / T))
    # constant below lambda = 1
    return (0.5139 * lam - 0.326) * f if lam >= 1 else 0.1879 * f


def springer_sigma_slope(T):
    return 0.5139 * math.exp(1268.0 * (1.0 / 303.15 - 1.0 / T))


def d_h2o_h2(T, P):
    return 1.644e-4 * (T / 333.0) ** 2.334 * (101325.0 / P)


def implicit_euler_decay(x0, k, dt):
    """One implicit Euler step of dx/dt = -k x."""
    return x0 / (1.0 + k * dt)


def tafel_delta(i1, i2, T, alpha):
    """Cathode overpotential difference between two total currents, V."""
    return R * T / (alpha * F) * math.log(i2 / i1)


def least_squares_slope(x, y, w=None):
    """Weighted slope through the origin: argmin sum w (y - b x)^2."""
    w = [1.0] * len(x) if w is None else w
    return sum(wi * xi * yi for wi, xi, yi in zip(w, x, y)) / sum(
        wi * xi * xi for wi, xi in zip(w, x))
