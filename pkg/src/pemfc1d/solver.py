"""Implicit time integration, steady states and polarization sweeps."""
from __future__ import annotations

import copy
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .cell_model import (CellDefinition, Equilibrated, Mesh1D, build_mesh, initial_state,
                         pack, unpack)
from .polarization import VoltageError, VoltageReport, cell_voltage
from .properties import DomainError, _warn_lambda_range
from .transport import StateError, Transport

log = logging.getLogger(__name__)


class NumericalFailure(RuntimeError):
    """The integrator or nonlinear solver could not make progress."""


class InfeasibleOperatingPoint(RuntimeError):
    """The requested current cannot be sustained (reactant starvation)."""


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float = 1e-4
    dt_min: float = 1e-10
    dt_max: float = 0.1
    newton_tol: float = 1e-8
    newton_max_iter: int = 20
    time_error_tol: float = 1e-5
    steady_residual_tol: float = 1e-9
    max_steps: int = 200000
    s_clip: float = 1e-9
    starvation_ratio: float = 1e-6

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("solver: 0 < dt_min <= dt_init <= dt_max")
        for name in ("newton_tol", "time_error_tol", "steady_residual_tol", "s_clip"):
            if not getattr(self, name) > 0:
                raise ValueError(f"solver.{name} > 0")
        if self.newton_max_iter < 1 or self.max_steps < 1:
            raise ValueError("solver: iteration limits must be >= 1")


LEDGER_KEYS = ("water_in", "water_out", "water_prod", "h2_in", "h2_out", "h2_cons",
               "o2_in", "o2_out", "o2_cons")


@dataclass
class Ledger:
    """Cumulative amounts per m^2 of active area, mol."""

    stored0: dict
    stored: dict
    totals: dict = field(default_factory=lambda: dict.fromkeys(LEDGER_KEYS, 0.0))
    clipped: dict = field(default_factory=lambda: {"water": 0.0, "h2": 0.0, "o2": 0.0})

    def add(self, rates: dict, dt: float) -> None:
        for k in LEDGER_KEYS:
            self.totals[k] += rates[k] * dt

    def closure(self, species: str) -> tuple[float, float]:
        """(imbalance, throughput) for 'water', 'h2' or 'o2'."""
        t = self.totals
        if species == "water":
            gain, loss, prod = t["water_in"], t["water_out"], t["water_prod"]
        else:
            gain, loss, prod = t[f"{species}_in"], t[f"{species}_out"], -t[f"{species}_cons"]
        delta = self.stored[species] - self.stored0[species]
        imbalance = delta - (gain - loss + prod + self.clipped[species])
        return imbalance, gain + loss + abs(prod)


@dataclass
class TransientResult:
    times: list
    states: list
    currents: list
    reports: list
    ledger_rows: list
    ledger: Ledger
    n_steps: int = 0
    n_rejected: int = 0


class Simulator:
    """Owns the assembled model for one cell and mesh."""

    def __init__(self, cell: CellDefinition, mesh: Mesh1D | None = None,
                 config: SolverConfig = SolverConfig()):
        self.cell = cell
        self.mesh = mesh if mesh is not None else build_mesh(cell)
        self.cfg = config
        self.tr = Transport(cell, self.mesh)
        self.layout = self.tr.layout
        self.n = self.layout.size
        self._build_scales()
        self._build_coloring()

    # ------------------------------------------------------------ setup

    def _build_scales(self):
        sl = self.tr.sl
        a = np.ones(self.n)
        a[sl["lam"]] = 1.0
        a[sl["s"]] = 1e-2
        self.atol = a
        self.s_idx = np.arange(self.n)[sl["s"]]
        self.lam_idx = np.arange(self.n)[sl["lam"]]
        self.conc_idx = np.arange(sl["cv"].start, self.n)

    def _positions(self):
        """Cell position of every packed unknown; AGC at 0, CGC at N+1."""
        tr, mesh, sl = self.tr, self.mesh, self.tr.sl
        N = mesh.n_cells
        lam_cells = mesh.cells("ACL", "MEM", "CCL") + 1
        el_cells = np.concatenate([mesh.cells("AGDL", "ACL"), mesh.cells("CCL", "CGDL")]) + 1
        pos = np.empty(self.n, dtype=int)
        pos[sl["lam"]] = lam_cells
        pos[sl["s"]] = el_cells
        pos[sl["cv"]] = np.concatenate([[0], el_cells, [N + 1]])
        pos[sl["h2"]] = np.concatenate([[0], el_cells[:tr.n_an]])
        pos[sl["o2"]] = np.concatenate([el_cells[tr.n_an:], [N + 1]])
        pos[-1] = N + 1
        return pos

    def _build_coloring(self):
        tr, sl = self.tr, self.tr.sl
        pos = self._positions()
        pat = np.abs(pos[:, None] - pos[None, :]) <= 1
        idx = np.arange(self.n)
        # CL-averaged quantities (crossover) couple every CL row to these columns
        glob = np.concatenate([idx[sl["h2"]][1:][tr.el_acl], idx[sl["o2"]][:-1][tr.el_ccl - tr.n_an],
                               idx[sl["lam"]][tr.lam_mem], [self.n - 1]])
        pat[:, glob] = True
        pat[self.n - 1, :] = pos >= pos.max() - 1
        colors = -np.ones(self.n, dtype=int)
        groups = []
        for j in range(self.n):
            for g, members in enumerate(groups):
                if not np.any(pat[:, members].any(axis=1) & pat[:, j]):
                    members.append(j)
                    colors[j] = g
                    break
            else:
                groups.append([j])
                colors[j] = len(groups) - 1
        self.pattern = pat
        self.groups = [np.array(g) for g in groups]

    # ------------------------------------------------------------ model

    def rhs(self, y, i_fc, drive):
        i_sc, i_n = drive
        f = self.tr.rhs(y, i_fc, i_sc, i_n)
        if not np.all(np.isfinite(f)):
            bad = int(np.flatnonzero(~np.isfinite(f))[0])
            raise NumericalFailure(f"non-finite derivative at {self.describe_index(bad)}")
        return f

    def describe_index(self, k: int) -> str:
        for name, s in self.tr.sl.items():
            if s.start <= k < s.stop:
                return f"{name}[{k - s.start}]"
        return str(k)

    def jacobian(self, y, f0, i_fc, drive):
        """Column-grouped one-sided finite-difference Jacobian of the rhs."""
        h = 1e-7 * (np.abs(y) + self.atol)
        J = np.zeros((self.n, self.n))
        for g in self.groups:
            yp = y.copy()
            yp[g] += h[g]
            df = self.rhs(yp, i_fc, drive) - f0
            for j in g:
                rows = self.pattern[:, j]
                J[rows, j] = df[rows] / h[j]
        return J

    def weights(self, y):
        return 1.0 / (np.abs(y) + self.atol)

    def voltage(self, y, i_fc, U0=None) -> VoltageReport:
        return cell_voltage(self.tr, y, i_fc, U0)

    def drive_from(self, rep: VoltageReport | None):
        if rep is None:
            return (0.0, 0.0)
        return (rep.i_sc, rep.i_n)

    def clip(self, y):
        """Project onto the admissible set; return clipped copy."""
        z = y.copy()
        s = z[self.s_idx]
        z[self.s_idx] = np.clip(s, 0.0, 1.0 - self.cfg.s_clip)
        z[self.lam_idx] = np.maximum(z[self.lam_idx], 0.0)
        z[self.conc_idx] = np.maximum(z[self.conc_idx], 0.0)
        return z

    # ------------------------------------------------------------ implicit Euler

    def implicit_euler(self, y0, dt, i_fc, drive, J=None):
        """Solve y = y0 + dt f(y) by damped Newton. Returns (y, J, iterations)."""
        cfg = self.cfg
        y = y0.copy()
        f = self.rhs(y, i_fc, drive)
        if J is None:
            J = self.jacobian(y, f, i_fc, drive)
        lu = lu_factor(np.eye(self.n) - dt * J)
        w = self.weights(y0)
        G = y - y0 - dt * f
        prev = np.inf
        for it in range(1, cfg.newton_max_iter + 1):
            delta = -lu_solve(lu, G)
            lam = 1.0
            while True:
                y_try = y + lam * delta
                try:
                    f_try = self.rhs(y_try, i_fc, drive)
                    break
                except (StateError, FloatingPointError):
                    lam *= 0.5
                    if lam < 1e-3:
                        raise NumericalFailure("Newton iterate left the admissible domain") from None
            y, f = y_try, f_try
            G = y - y0 - dt * f
            size = float(np.max(np.abs(lam * delta) * w))
            if size < cfg.newton_tol:
                return y, J, it
            if not np.isfinite(size) or size > 1e6:
                break
            # refresh the Jacobian once contraction becomes slow
            if size > 0.2 * prev or lam < 1.0:
                J = self.jacobian(y, f, i_fc, drive)
                lu = lu_factor(np.eye(self.n) - dt * J)
            prev = size
        raise NumericalFailure(f"Newton did not converge in {cfg.newton_max_iter} iterations")

    # ------------------------------------------------------------ transient

    def run_transient(self, y0, profile, t_end, output_times=None, drive=None,
                      dt_max=None) -> TransientResult:
        """Integrate with step-doubling error control.

        profile is a list of (t_start, i_fc) pairs, piecewise constant.
        """
        cfg = self.cfg
        dt_max = cfg.dt_max if dt_max is None else dt_max
        profile = sorted(profile)
        if not profile or profile[0][0] > 0:
            raise ValueError("current profile must start at t <= 0")

        def current(t):
            i = profile[0][1]
            for ts, val in profile:
                if ts <= t + 1e-12:
                    i = val
            return i

        output_times = [] if output_times is None else [float(t) for t in output_times]
        events = sorted({float(ts) for ts, _ in profile if 0 < ts < t_end}
                        | {t for t in output_times if 0 < t < t_end}
                        | {float(t_end)})
        outs = set(output_times) | {0.0, float(t_end)}

        y = self.clip(np.asarray(y0, dtype=float))
        t = 0.0
        i_fc = current(0.0)
        rep = self.voltage(y, i_fc)
        drive = self.drive_from(rep) if drive is None else drive
        inv = self.tr.inventories(y)
        ledger = Ledger(stored0=dict(inv), stored=dict(inv))
        res = TransientResult([0.0], [y.copy()], [i_fc], [rep], [], ledger)
        res.ledger_rows.append(self._ledger_row(0.0, ledger))
        dt = cfg.dt_init
        ev = 0
        J = None
        while t < t_end - 1e-12:
            if res.n_steps + res.n_rejected >= cfg.max_steps:
                raise NumericalFailure("maximum number of steps reached")
            i_fc = current(t)
            t_next = events[ev]
            h = min(dt, dt_max, t_next - t)
            try:
                y_full, J_full, _ = self.implicit_euler(y, h, i_fc, drive, J)
                y_half, J_half, _ = self.implicit_euler(y, 0.5 * h, i_fc, drive, J_full)
                y_two, _, _ = self.implicit_euler(y_half, 0.5 * h, i_fc, drive, J_half)
                w = self.weights(y)
                err = np.sqrt(np.mean(((y_two - y_full) * w) ** 2)) / cfg.time_error_tol
            except (NumericalFailure, StateError, np.linalg.LinAlgError) as exc:
                err = np.inf
                reason = exc
            if not err <= 1.0:
                res.n_rejected += 1
                J = None
                dt = h * (0.25 if not np.isfinite(err) else max(0.2, 0.9 / np.sqrt(err)))
                if dt < cfg.dt_min:
                    raise NumericalFailure(f"step size below dt_min at t={t:.6g} s "
                                           f"({reason if not np.isfinite(err) else 'error control'})")
                continue
            # ledger: each half step of implicit Euler uses end-of-substep rates
            for yy in (y_half, y_two):
                ledger.add(self.tr.exchange_rates(yy, i_fc, *drive), 0.5 * h)
            y_new = self.clip(y_two)
            inv_raw = self.tr.inventories(y_two)
            inv = self.tr.inventories(y_new)
            for k in ledger.clipped:
                ledger.clipped[k] += inv[k] - inv_raw[k]
            ledger.stored = inv
            y = y_new
            t = t + h
            J = J_half
            res.n_steps += 1
            _warn_lambda_range(y[self.lam_idx])
            try:
                rep = self.voltage(y, current(t), rep.U_cell)
            except DomainError as exc:
                raise InfeasibleOperatingPoint(f"t={t:.6g} s: {exc}") from exc
            drive = self.drive_from(rep)
            self._check_starvation(y, t)
            dt = h * min(2.0, 0.9 / np.sqrt(max(err, 1e-4)))
            if abs(t - t_next) < 1e-12:
                t = t_next
                ev += 1
                if any(abs(t - o) < 1e-9 for o in outs):
                    res.times.append(t)
                    res.states.append(y.copy())
                    res.currents.append(current(t))
                    res.reports.append(rep)
                    res.ledger_rows.append(self._ledger_row(t, ledger))
        return res

    def explicit_euler(self, y0, dt, t_end, i_fc, drive=None) -> dict:
        """Forward Euler reference without clipping or error control.

        Stops at the first step that produces negative saturation, a
        non-finite value or an inadmissible state, and reports where.
        """
        y = np.asarray(y0, dtype=float).copy()
        if drive is None:
            drive = self.drive_from(self.voltage(y, i_fc))
        n = int(round(t_end / dt))
        for k in range(1, n + 1):
            try:
                y = y + dt * self.rhs(y, i_fc, drive)
            except (NumericalFailure, StateError, DomainError, FloatingPointError) as exc:
                return {"diverged": True, "t": k * dt, "reason": str(exc), "y": y}
            s_min = float(np.min(y[self.s_idx]))
            if s_min < 0 or not np.all(np.isfinite(y)):
                return {"diverged": True, "t": k * dt, "reason": f"min s = {s_min:.3e}",
                        "y": y}
        return {"diverged": False, "t": n * dt, "reason": "", "y": y}

    def _ledger_row(self, t, ledger: Ledger) -> dict:
        row = {"t": t}
        row.update(ledger.totals)
        for k in ("water", "h2", "o2"):
            row[f"{k}_stored_delta"] = ledger.stored[k] - ledger.stored0[k]
            row[f"{k}_clipped"] = ledger.clipped[k]
            row[f"{k}_imbalance"] = ledger.closure(k)[0]
        return row

    def _check_starvation(self, y, t):
        tr = self.tr
        h2 = y[tr.sl["h2"]]
        o2 = y[tr.sl["o2"]]
        ref_h2, ref_o2 = max(h2[0], 1e-30), max(o2[-1], 1e-30)
        r = self.cfg.starvation_ratio
        if np.min(h2[1:][tr.el_acl]) < r * ref_h2 or np.min(o2[:-1][tr.el_ccl - tr.n_an]) < r * ref_o2:
            raise InfeasibleOperatingPoint(f"reactant starvation in a catalyst layer at t={t:.6g}")

    # ------------------------------------------------------------ steady state

    def steady_residual(self, y, i_fc, drive, J=None):
        """Weighted max-norm of the full Newton correction -J^-1 f."""
        f = self.rhs(y, i_fc, drive)
        if J is None:
            J = self.jacobian(y, f, i_fc, drive)
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return np.inf
        return float(np.max(np.abs(step) * self.weights(y)))

    def solve_steady(self, y_guess, i_fc, max_iter=300, report=None):
        """Pseudo-transient continuation to a steady state.

        Each iteration is a Newton-converged implicit Euler step; the step
        grows geometrically while Newton converges easily, so the iteration
        turns into Newton's method on rhs = 0 once dt is large.
        Returns (y, VoltageReport, diagnostics).
        """
        cfg = self.cfg
        y = self.clip(np.asarray(y_guess, dtype=float))
        try:
            rep = self.voltage(y, i_fc, None if report is None else report.U_cell)
        except DomainError as exc:
            raise InfeasibleOperatingPoint(str(exc)) from exc
        drive = self.drive_from(rep)
        dt = 1e-3 if report is None else 1.0
        J = None
        n_rej = 0
        nits = np.inf
        for it in range(1, max_iter + 1):
            f = self.rhs(y, i_fc, drive)
            # the previous Jacobian is kept while implicit steps converge quickly
            if J is None or nits > 2:
                J = self.jacobian(y, f, i_fc, drive)
            try:
                step = np.linalg.solve(J, f)
                newton_res = float(np.max(np.abs(step) * self.weights(y)))
            except np.linalg.LinAlgError:
                newton_res = np.inf
            log.debug("ptc it=%d dt=%.3g newton=%.3e i_n=%.9g", it, dt, newton_res, drive[1])
            if newton_res < cfg.steady_residual_tol:
                return y, rep, {"iterations": it, "residual": newton_res, "rejected": n_rej}
            while True:
                try:
                    y_new, J, nits = self.implicit_euler(y, dt, i_fc, drive, J)
                    y_new = self.clip(y_new)
                    break
                except (NumericalFailure, StateError, np.linalg.LinAlgError):
                    n_rej += 1
                    dt *= 0.25
                    if dt < cfg.dt_min:
                        raise NumericalFailure(
                            f"pseudo-transient step collapsed at i_fc={i_fc:g}") from None
            y = y_new
            self._check_starvation(y, 0.0)
            try:
                rep = self.voltage(y, i_fc, rep.U_cell)
            except DomainError as exc:
                raise InfeasibleOperatingPoint(f"i_fc={i_fc:g}: {exc}") from exc
            except VoltageError as exc:
                raise NumericalFailure(str(exc)) from exc
            drive = self.drive_from(rep)
            dt = min(dt * (8.0 if nits <= 4 else 3.0 if nits <= 8 else 1.5), 1e12)
        raise NumericalFailure(f"steady state not reached at i_fc={i_fc:g} "
                               f"after {max_iter} iterations")

    def initial(self, init=None):
        return pack(initial_state(self.cell, self.mesh, init))

    def with_kinetics(self, electro=None, overpotential=None) -> "Simulator":
        """Copy sharing the assembled transport model, with new voltage-side
        parameters. Rates that enter the balance equations must not change."""
        el = electro if electro is not None else self.cell.electro
        old = self.cell.electro
        if (el.gamma_cond, el.gamma_evap, el.crossover) != (
                old.gamma_cond, old.gamma_evap, old.crossover):
            raise ValueError("with_kinetics cannot change transport-side rates")
        cell = replace(self.cell, electro=el,
                       overpotential=overpotential or self.cell.overpotential)
        other = copy.copy(self)
        other.cell = cell
        other.tr = copy.copy(self.tr)
        other.tr.cell = cell
        return other


@dataclass
class SweepRow:
    i_fc: float
    feasible: bool
    report: VoltageReport | None
    diagnostics: dict
    state: np.ndarray | None = None

    @property
    def U_cell(self) -> float:
        return self.report.U_cell if self.report is not None else float("nan")


def polarization_sweep(cell: CellDefinition, i_list, mesh: Mesh1D | None = None,
                       config: SolverConfig = SolverConfig(), init=None,
                       sim: Simulator | None = None) -> list[SweepRow]:
    """Warm-started steady solves along an increasing list of currents."""
    i_list = [float(i) for i in i_list]
    if any(b <= a for a, b in zip(i_list, i_list[1:])):
        raise ValueError("current list must be strictly increasing")
    sim = sim or Simulator(cell, mesh, config)
    y = sim.initial(init if init is not None else Equilibrated(cell.operating.Phi_c_des))
    rows = []
    starved = False
    rep = None
    for i in i_list:
        if starved:
            rows.append(SweepRow(i, False, None, {"error": "beyond starvation"}))
            continue
        try:
            y_i, rep_i, diag = sim.solve_steady(y, i, report=rep)
        except InfeasibleOperatingPoint as exc:
            starved = True
            rows.append(SweepRow(i, False, None, {"error": str(exc)}))
            continue
        except (NumericalFailure, StateError, DomainError) as exc:
            rows.append(SweepRow(i, False, None, {"error": str(exc)}))
            continue
        y, rep = y_i, rep_i
        rows.append(SweepRow(i, True, rep_i, diag, y_i.copy()))
    return rows


def parallel_sweeps(cells, i_list, workers=None, **kw):
    """Independent sweeps for several cells, results in input order."""
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda cl: polarization_sweep(cl, i_list, **kw), cells))
