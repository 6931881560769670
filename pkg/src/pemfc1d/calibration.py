"""Fit kinetic and resistive parameters to measured polarization data.

The optimizer is a box-constrained Levenberg-Marquardt iteration on
transformed parameters (log for the exchange and limiting currents).
Every residual evaluation runs the full steady model, warm-started from
the states of the last accepted iterate.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cell_model import CellDefinition, ConfigurationError, Equilibrated, Mesh1D
from .properties import DomainError
from .solver import (InfeasibleOperatingPoint, NumericalFailure, Simulator, SolverConfig,
                     polarization_sweep)
from .transport import StateError

PENALTY_V = 1.0
FD_REL_STEP = 1e-6
GRAD_TOL = 1e-8
STEP_TOL = 1e-10

# name -> (default bounds, log-transformed)
PARAMETERS = {
    "i0": ((1e-3, 1e3), True),
    "kappa_c": ((0.25, 4.0), False),
    "alpha_c": ((0.05, 1.0), False),
    "R_e": ((0.0, 1e-4), False),
    "i_lim": ((None, 1e6), True),
}


@dataclass
class CalibrationProblem:
    """Polarization data, free parameters with optional start values and bounds."""

    cell: CellDefinition
    data: list  # (i_fc, U_meas) or (i_fc, U_meas, weight)
    free: dict  # name -> start value, or None to start from the cell
    bounds: dict = field(default_factory=dict)
    mesh: Mesh1D | None = None
    solver: SolverConfig = SolverConfig()
    max_iter: int = 100

    def __post_init__(self):
        rows = []
        for r in self.data:
            if len(r) not in (2, 3):
                raise ConfigurationError("data rows must be (i_fc, U) or (i_fc, U, weight)")
            w = float(r[2]) if len(r) == 3 else 1.0
            if not (r[0] >= 0 and np.isfinite(r[1]) and w > 0):
                raise ConfigurationError("data rows need i_fc >= 0, finite U and weight > 0")
            rows.append((float(r[0]), float(r[1]), w))
        self.data = rows
        unknown = set(self.free) - set(PARAMETERS)
        if unknown:
            raise ConfigurationError(f"unknown free parameters: {sorted(unknown)}")
        if not self.free:
            raise ConfigurationError("at least one free parameter is required")
        if len(rows) < 2 * len(self.free):
            raise ConfigurationError(
                f"need at least {2 * len(self.free)} data points for {len(self.free)} parameters")

    @property
    def names(self) -> list:
        return [n for n in PARAMETERS if n in self.free]

    def bounds_of(self, name):
        lo, hi = self.bounds.get(name, PARAMETERS[name][0])
        if name == "i_lim" and lo is None:
            lo = 1.01 * max(i for i, _, _ in self.data)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigurationError(f"calibration.bounds.{name}: finite lower < upper required")
        if PARAMETERS[name][1] and lo <= 0:
            raise ConfigurationError(f"calibration.bounds.{name}: lower bound must be > 0")
        return lo, hi


@dataclass
class CalibrationResult:
    params: dict
    at_bound: dict
    rms: float
    initial_rms: float
    sensitivity: dict
    trace: list
    converged: bool
    message: str
    iterations: int
    residuals: np.ndarray


def _i0_field(cell: CellDefinition) -> str:
    return "i0_c_ref" if cell.overpotential.mode == "tafel" else "i0_353_ref"


def _cell_value(cell: CellDefinition, name: str) -> float:
    if name == "i0":
        return getattr(cell.electro, _i0_field(cell))
    v = getattr(cell.electro, name)
    if v is None:
        raise ConfigurationError(f"calibration.free.{name} needs a start value")
    return v


class _Model:
    """Steady-model voltages at the data currents, with warm-start caching."""

    def __init__(self, problem: CalibrationProblem):
        self.p = problem
        self.names = problem.names
        cell = problem.cell
        if "i_lim" in problem.free:
            cell = replace(cell, overpotential=replace(cell.overpotential,
                                                       concentration_loss_enabled=True))
        self.cell = cell
        self.base = Simulator(cell, problem.mesh, problem.solver)
        self.currents = sorted({i for i, _, _ in problem.data})
        self.index = [self.currents.index(i) for i, _, _ in problem.data]
        self.U_meas = np.array([u for _, u, _ in problem.data])
        self.sqrt_w = np.sqrt([w for _, _, w in problem.data])
        self.states = None
        self.reports = None

    def simulator(self, values: dict) -> Simulator:
        el = self.cell.electro
        kw = {}
        for n, v in values.items():
            kw[_i0_field(self.cell) if n == "i0" else n] = float(v)
        return self.base.with_kinetics(replace(el, **kw))

    def prime(self, values: dict) -> None:
        sim = self.simulator(values)
        rows = polarization_sweep(sim.cell, self.currents, sim=sim,
                                  init=Equilibrated(self.cell.operating.Phi_c_des))
        if not any(r.feasible for r in rows):
            raise ConfigurationError("model is infeasible at every data current "
                                     "with the initial parameters")
        self.states = [r.state for r in rows]
        self.reports = [r.report for r in rows]
        # infeasible points restart from the nearest feasible state
        ok = [k for k, r in enumerate(rows) if r.feasible]
        for k, r in enumerate(rows):
            if not r.feasible:
                j = min(ok, key=lambda m: abs(m - k))
                self.states[k], self.reports[k] = self.states[j], self.reports[j]

    def voltages(self, values: dict):
        """Model voltages per unique current (nan where infeasible) plus states."""
        sim = self.simulator(values)
        U = np.full(len(self.currents), np.nan)
        states, reports = list(self.states), list(self.reports)
        for k, i in enumerate(self.currents):
            try:
                y, rep, _ = sim.solve_steady(self.states[k], i, report=self.reports[k])
            except (InfeasibleOperatingPoint, NumericalFailure, StateError, DomainError):
                continue
            U[k] = rep.U_cell
            states[k], reports[k] = y, rep
        return U, states, reports

    def residuals(self, values: dict):
        U, states, reports = self.voltages(values)
        Ud = U[self.index]
        r = np.where(np.isfinite(Ud), Ud - self.U_meas, PENALTY_V)
        return self.sqrt_w * r, (states, reports)


def _to_x(name, v):
    return math.log(v) if PARAMETERS[name][1] else v


def _from_x(name, x):
    return math.exp(x) if PARAMETERS[name][1] else x


def fit(problem: CalibrationProblem) -> CalibrationResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) within the parameter box."""
    names = problem.names
    start = {n: (problem.free[n] if problem.free[n] is not None
                 else _cell_value(problem.cell, n)) for n in names}
    box = [problem.bounds_of(n) for n in names]
    lo = np.array([_to_x(n, b[0]) for n, b in zip(names, box)])
    hi = np.array([_to_x(n, b[1]) for n, b in zip(names, box)])
    x = np.clip([_to_x(n, start[n]) for n in names], lo, hi)
    # magnitude below which the finite-difference step stops shrinking
    typical = np.array([1.0 if PARAMETERS[n][1] else hi[k] - lo[k]
                        for k, n in enumerate(names)])

    def values(xv):
        return {n: _from_x(n, float(v)) for n, v in zip(names, xv)}

    model = _Model(problem)
    model.prime(values(x))
    r, cache = model.residuals(values(x))
    model.states, model.reports = cache
    F = 0.5 * float(r @ r)
    initial_rms = math.sqrt(2.0 * F / len(r))
    trace = [{"iteration": 0, **values(x), "rms": initial_rms, "mu": float("nan"),
              "accepted": True}]
    mu = 1e-3
    converged, message = False, "iteration limit reached"
    J = None
    it = 0
    for it in range(1, problem.max_iter + 1):
        J = _jacobian(model, x, r, lo, hi, values, typical)
        g = J.T @ r
        # parameters pinned at a bound with the gradient pushing outward
        free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
        if np.max(np.abs(g[free]), initial=0.0) < GRAD_TOL:
            converged, message = True, "gradient below tolerance"
            break
        A = J.T @ J
        accepted = False
        while mu < 1e12:
            delta = np.zeros_like(x)
            Af = A[np.ix_(free, free)]
            Af = Af + mu * np.diag(np.maximum(np.diag(Af), 1e-12))
            delta[free] = np.linalg.solve(Af, -g[free])
            x_new = np.clip(x + delta, lo, hi)
            step = x_new - x
            if np.linalg.norm(step) < STEP_TOL * (1.0 + np.linalg.norm(x)):
                break
            r_new, cache_new = model.residuals(values(x_new))
            F_new = 0.5 * float(r_new @ r_new)
            pred = -(g @ step + 0.5 * step @ A @ step)
            if F_new < F:
                rho = (F - F_new) / pred if pred > 0 else 1.0
                mu *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
                x, r, F = x_new, r_new, F_new
                model.states, model.reports = cache_new
                accepted = True
                break
            mu *= 4.0
        trace.append({"iteration": it, **values(x), "rms": math.sqrt(2.0 * F / len(r)),
                      "mu": mu, "accepted": accepted})
        if not accepted:
            converged, message = True, "step below tolerance"
            break
        if np.linalg.norm(step) < STEP_TOL * (1.0 + np.linalg.norm(x)):
            converged, message = True, "step below tolerance"
            break
    if J is None:
        J = _jacobian(model, x, r, lo, hi, values, typical)
    params = values(x)
    tol = 1e-9 * (np.abs(hi - lo) + 1.0)
    at_bound = {n: bool(abs(x[k] - lo[k]) < tol[k] or abs(hi[k] - x[k]) < tol[k])
                for k, n in enumerate(names)}
    sens = {n: float(np.linalg.norm(J[:, k])) for k, n in enumerate(names)}
    return CalibrationResult(params=params, at_bound=at_bound,
                             rms=math.sqrt(2.0 * F / len(r)), initial_rms=initial_rms,
                             sensitivity=sens, trace=trace, converged=converged,
                             message=message, iterations=it, residuals=r / model.sqrt_w)


def _jacobian(model, x, r, lo, hi, values, typical):
    """Forward differences on the transformed parameters (backward at the upper bound)."""
    J = np.empty((len(r), len(x)))
    for k in range(len(x)):
        h = FD_REL_STEP * max(abs(x[k]), typical[k])
        if x[k] + h > hi[k]:
            h = -h
        xp = x.copy()
        xp[k] += h
        rp, _ = model.residuals(values(xp))
        J[:, k] = (rp - r) / h
    return J


# ---------------------------------------------------------------- file I/O

def load_polarization_csv(path) -> list:
    """Rows (i, U, weight) from a CSV with columns i_A_per_m2, U_V[, weight]."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        if "i_A_per_m2" not in cols or "U_V" not in cols:
            raise ConfigurationError(f"{path}: columns i_A_per_m2 and U_V are required")
        rows = []
        for line, rec in enumerate(reader, start=2):
            try:
                w = float(rec["weight"]) if rec.get("weight") not in (None, "") else 1.0
                rows.append((float(rec["i_A_per_m2"]), float(rec["U_V"]), w))
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{line}: {exc}") from None
    return rows


def write_fit_report(result: CalibrationResult, out_dir) -> list:
    """fit_report.csv, fit_trace.csv and fit_summary.txt in out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = list(result.params)
    with (out / "fit_report.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter", "value", "at_bound", "sensitivity"])
        for n in names:
            w.writerow([n, repr(result.params[n]), int(result.at_bound[n]),
                        repr(result.sensitivity[n])])
    with (out / "fit_trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", *names, "rms", "mu", "accepted"])
        for t in result.trace:
            w.writerow([t["iteration"], *(repr(t[n]) for n in names), repr(t["rms"]),
                        repr(t["mu"]), int(t["accepted"])])
    lines = [f"converged: {result.converged} ({result.message})",
             f"iterations: {result.iterations}",
             f"residual rms: {result.rms:.6g} V (initial {result.initial_rms:.6g} V)"]
    for n in names:
        flag = "  [at bound]" if result.at_bound[n] else ""
        lines.append(f"{n} = {result.params[n]:.8g}  sensitivity {result.sensitivity[n]:.4g}{flag}")
    (out / "fit_summary.txt").write_text("\n".join(lines) + "\n")
    return [out / "fit_report.csv", out / "fit_trace.csv", out / "fit_summary.txt"]
