"""Scenario files, orchestration of runs and CSV output.

A scenario is a plain-text file with one ``section.key = value`` assignment
per line. Values carry no unit strings; every quantity is in SI units.
Lists are comma separated, ``#`` starts a comment. Unset keys take the
defaults of the cell model and solver.

Sections
    geometry, agdl, acl, ccl, cgdl, membrane, operating, electro,
    properties, overpotential   cell definition overrides
    mesh                        cells per layer: gdl, cl, mem
    solver                      integrator settings
    run                         kind = transient | steady | sweep | fit | props
    output                      dir, every (snapshot cadence, s)
    fit                         data, free, start.<p>, bounds.<p>
    props                       name, from, to, points, T
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import properties as pr
from .calibration import (PARAMETERS, CalibrationProblem, CalibrationResult, fit,
                          load_polarization_csv, write_fit_report)
from .cell_model import (DEFAULT_RESOLUTION, CellDefinition, ConfigurationError, DryStart,
                         Equilibrated, Electro, Geometry, Operating, OverpotentialConfig,
                         build_mesh)
from .properties import (DomainError, MembraneConstants, PorousConstants, PropertyConfig,
                         default_cl, default_gdl)
from .solver import Simulator, SolverConfig, TransientResult, polarization_sweep

OUTPUT_ROOT_ENV = "PEMFC1D_OUTPUT_ROOT"

CELL_SECTIONS = {
    "geometry": Geometry, "agdl": PorousConstants, "acl": PorousConstants,
    "ccl": PorousConstants, "cgdl": PorousConstants, "membrane": MembraneConstants,
    "operating": Operating, "electro": Electro, "properties": PropertyConfig,
    "overpotential": OverpotentialConfig,
}
LAYER_DEFAULTS = {"agdl": default_gdl, "cgdl": default_gdl, "acl": default_cl,
                  "ccl": default_cl}
RUN_KINDS = ("transient", "steady", "sweep", "fit", "props")
INIT_KINDS = ("equilibrated", "dry")
RUN_KEYS = {
    "transient": ("kind", "profile", "t_end", "init", "init_phi", "init_lambda"),
    "steady": ("kind", "i_fc", "init", "init_phi", "init_lambda"),
    "sweep": ("kind", "currents", "init", "init_phi", "init_lambda"),
    "fit": ("kind",),
    "props": ("kind",),
}
PROPS_TABLES = ("p_sat", "liquid_density", "liquid_viscosity", "surface_tension",
                "lambda_eq", "d_lambda", "conductivity", "permeability_tsb")
POLARIZATION_COLUMNS = ("i", "U", "U_eq", "eta_c", "R_p", "i_n", "dV_conc", "feasible")
VOLTAGE_COLUMNS = ("i_fc", "U_cell", "U_eq", "eta_c", "dV_ohmic_p", "dV_ohmic_e", "dV_conc",
                   "i_n", "i_sc", "i_co_H2", "i_co_O2", "R_p")


class ScenarioError(ConfigurationError):
    """Invalid scenario file; the message names the key path."""


# ---------------------------------------------------------------- value syntax

def _scalar(text: str):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        return t[1:-1]
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low == "none":
        return None
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(text: str):
    """Scalar, or a list when the text contains commas."""
    if "," in text:
        return [_scalar(p) for p in text.split(",") if p.strip()]
    return _scalar(text)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(format_value(x) for x in v)
    return str(v)


def read_assignments(path) -> dict:
    """Ordered {key.path: raw value} from a scenario file."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise ScenarioError(f"{path}: {exc.strerror}") from None
    out = {}
    for n, line in enumerate(lines, start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ScenarioError(f"{path}:{n}: expected 'section.key = value'")
        key, val = (s.strip() for s in body.split("=", 1))
        if "." not in key or not all(key.split(".")):
            raise ScenarioError(f"{path}:{n}: key '{key}' must be 'section.key'")
        if key in out:
            raise ScenarioError(f"{path}:{n}: duplicate key '{key}'")
        out[key] = parse_value(val)
    return out


# ---------------------------------------------------------------- run kinds

@dataclass(frozen=True)
class Transient:
    profile: tuple  # ((t_start, i_fc), ...)
    t_end: float


@dataclass(frozen=True)
class Steady:
    i_fc: float


@dataclass(frozen=True)
class Sweep:
    currents: tuple


@dataclass(frozen=True)
class Fit:
    data: Path
    free: tuple
    start: dict
    bounds: dict


@dataclass(frozen=True)
class PropsTable:
    name: str
    start: float
    stop: float
    points: int
    T: float


@dataclass
class Scenario:
    cell: CellDefinition
    mesh: dict
    solver: SolverConfig
    run: object
    init: object = None
    output_dir: Path | None = None
    output_every: float | None = None
    source: Path | None = None
    resolved: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return {Transient: "transient", Steady: "steady", Sweep: "sweep", Fit: "fit",
                PropsTable: "props"}[type(self.run)]


# ---------------------------------------------------------------- parsing

def _coerce(key: str, v, annotation: str):
    kinds = [a.strip() for a in str(annotation).split("|")]
    if v is None:
        if "None" in kinds:
            return None
        raise ScenarioError(f"{key}: a value is required")
    if "bool" in kinds:
        if isinstance(v, bool):
            return v
        raise ScenarioError(f"{key}: expected true or false")
    if "str" in kinds:
        if isinstance(v, str):
            return v
        raise ScenarioError(f"{key}: expected a name")
    if "int" in kinds:
        if isinstance(v, int) and not isinstance(v, bool):
            return v
        raise ScenarioError(f"{key}: expected an integer")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ScenarioError(f"{key}: expected a number in SI units, got '{format_value(v)}'")
    v = float(v)
    if not math.isfinite(v):
        raise ScenarioError(f"{key}: must be finite")
    return v


def _section_values(assign: dict, section: str) -> dict:
    pre = section + "."
    return {k[len(pre):]: v for k, v in assign.items() if k.startswith(pre)}


def _build_cell(assign: dict) -> CellDefinition:
    parts = {}
    for sec, cls in CELL_SECTIONS.items():
        given = _section_values(assign, sec)
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for k, v in given.items():
            if k not in types:
                raise ScenarioError(f"unknown key '{sec}.{k}'")
            kw[k] = _coerce(f"{sec}.{k}", v, types[k])
        try:
            if sec in LAYER_DEFAULTS:
                parts[sec] = LAYER_DEFAULTS[sec](**kw)
            else:
                parts[sec] = cls(**kw)
        except (DomainError, ConfigurationError) as exc:
            msg = str(exc)
            raise ScenarioError(msg if msg.startswith(sec + ".") else f"{sec}: {msg}") from None
    try:
        return CellDefinition(**parts)
    except (DomainError, ConfigurationError) as exc:
        raise ScenarioError(str(exc)) from None


def _build_solver(assign: dict) -> SolverConfig:
    given = _section_values(assign, "solver")
    types = {f.name: f.type for f in fields(SolverConfig)}
    kw = {}
    for k, v in given.items():
        if k not in types:
            raise ScenarioError(f"unknown key 'solver.{k}'")
        kw[k] = _coerce(f"solver.{k}", v, types[k])
    try:
        return SolverConfig(**kw)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def _build_mesh(assign: dict, cell: CellDefinition) -> dict:
    given = _section_values(assign, "mesh")
    res = dict(DEFAULT_RESOLUTION)
    for k, v in given.items():
        if k not in res:
            raise ScenarioError(f"unknown key 'mesh.{k}'")
        res[k] = _coerce(f"mesh.{k}", v, "int")
    try:
        build_mesh(cell, res)
    except ConfigurationError as exc:
        raise ScenarioError(f"mesh: {exc}") from None
    return res


def _number_list(key, v) -> tuple:
    items = v if isinstance(v, list) else [v]
    return tuple(_coerce(key, x, "float") for x in items)


def _build_run(assign: dict, base: Path, cell: CellDefinition):
    run = _section_values(assign, "run")
    kind = run.get("kind", "steady")
    if kind not in RUN_KINDS:
        raise ScenarioError(f"run.kind must be one of {', '.join(RUN_KINDS)}")
    for k in run:
        if k not in RUN_KEYS[kind]:
            raise ScenarioError(f"unknown key 'run.{k}' for run.kind = {kind}")
    for sec in ("fit", "props"):
        if kind != sec and _section_values(assign, sec):
            raise ScenarioError(f"section '{sec}' requires run.kind = {sec}")
    init = None
    if kind in ("transient", "steady", "sweep"):
        init_kind = run.get("init", "equilibrated")
        if init_kind not in INIT_KINDS:
            raise ScenarioError(f"run.init must be one of {', '.join(INIT_KINDS)}")
        if init_kind == "equilibrated":
            if "init_lambda" in run:
                raise ScenarioError("run.init_lambda requires run.init = dry")
            phi = run.get("init_phi")
            try:
                init = Equilibrated(cell.operating.Phi_c_des) if phi is None else Equilibrated(
                    _coerce("run.init_phi", phi, "float"))
            except (DomainError, ConfigurationError) as exc:
                raise ScenarioError(f"run.init_phi: {exc}") from None
        else:
            kw = {}
            if "init_phi" in run:
                kw["phi"] = _coerce("run.init_phi", run["init_phi"], "float")
            if "init_lambda" in run:
                kw["lam"] = _coerce("run.init_lambda", run["init_lambda"], "float")
            try:
                init = DryStart(**kw)
            except (DomainError, ConfigurationError) as exc:
                raise ScenarioError(f"run.init: {exc}") from None
    if kind == "transient":
        prof = run.get("profile", "0:0")
        items = prof if isinstance(prof, list) else [prof]
        pairs = []
        for it in items:
            try:
                ts, val = (float(p) for p in str(it).split(":"))
            except ValueError:
                raise ScenarioError("run.profile: expected 't:i' pairs, e.g. '0:0, 1:1e4'") from None
            pairs.append((ts, val))
        pairs.sort()
        if pairs[0][0] != 0.0:
            raise ScenarioError("run.profile: first entry must start at t = 0")
        if any(i < 0 for _, i in pairs):
            raise ScenarioError("run.profile: currents must be >= 0")
        t_end = _coerce("run.t_end", run.get("t_end", 60.0), "float")
        if not t_end > 0:
            raise ScenarioError("run.t_end > 0")
        return Transient(tuple(pairs), t_end), init
    if kind == "steady":
        i = _coerce("run.i_fc", run.get("i_fc", 0.0), "float")
        if i < 0:
            raise ScenarioError("run.i_fc >= 0")
        return Steady(i), init
    if kind == "sweep":
        if "currents" not in run:
            raise ScenarioError("run.currents is required for a sweep")
        cur = _number_list("run.currents", run["currents"])
        if any(c < 0 for c in cur) or any(b <= a for a, b in zip(cur, cur[1:])):
            raise ScenarioError("run.currents: non-negative and strictly increasing")
        return Sweep(cur), init
    if kind == "fit":
        f = _section_values(assign, "fit")
        if "data" not in f:
            raise ScenarioError("fit.data is required")
        data = Path(str(f["data"]))
        if not data.is_absolute():
            data = base / data
        if not data.is_file():
            raise ScenarioError(f"fit.data: file not found: {data}")
        free = f.get("free", ["i0", "kappa_c", "R_e"])
        free = tuple(free if isinstance(free, list) else [free])
        start, bounds = {}, {}
        for k, v in f.items():
            if k in ("data", "free"):
                continue
            head, _, name = k.partition(".")
            if head not in ("start", "bounds") or name not in PARAMETERS:
                raise ScenarioError(f"unknown key 'fit.{k}'")
            if name not in free:
                raise ScenarioError(f"fit.{k}: '{name}' is not listed in fit.free")
            if head == "start":
                start[name] = _coerce(f"fit.{k}", v, "float")
            else:
                b = _number_list(f"fit.{k}", v)
                if len(b) != 2 or not b[0] < b[1]:
                    raise ScenarioError(f"fit.{k}: expected 'lower, upper' with lower < upper")
                bounds[name] = b
        for n in free:
            if n not in PARAMETERS:
                raise ScenarioError(f"fit.free: unknown parameter '{n}'")
        return Fit(data, free, start, bounds), init
    p = _section_values(assign, "props")
    for k in p:
        if k not in ("name", "from", "to", "points", "T"):
            raise ScenarioError(f"unknown key 'props.{k}'")
    name = p.get("name", "p_sat")
    if name not in PROPS_TABLES:
        raise ScenarioError(f"props.name must be one of {', '.join(PROPS_TABLES)}")
    lo, hi = PROPS_RANGES[name]
    table = PropsTable(name, _coerce("props.from", p.get("from", lo), "float"),
                       _coerce("props.to", p.get("to", hi), "float"),
                       _coerce("props.points", p.get("points", 51), "int"),
                       _coerce("props.T", p.get("T", 353.15), "float"))
    _check_props(table)
    return table, init


def build_scenario(assign: dict, source: Path | None = None) -> Scenario:
    """Scenario from already-parsed assignments."""
    known = set(CELL_SECTIONS) | {"mesh", "solver", "run", "output", "fit", "props"}
    for k in assign:
        if k.split(".")[0] not in known:
            raise ScenarioError(f"unknown section in key '{k}'")
    base = source.parent if source is not None else Path.cwd()
    cell = _build_cell(assign)
    mesh = _build_mesh(assign, cell)
    solver = _build_solver(assign)
    run, init = _build_run(assign, base, cell)
    out = _section_values(assign, "output")
    for k in out:
        if k not in ("dir", "every"):
            raise ScenarioError(f"unknown key 'output.{k}'")
    out_dir = Path(str(out["dir"])) if out.get("dir") is not None else None
    if out_dir is not None and not out_dir.is_absolute():
        out_dir = base / out_dir
    every = out.get("every")
    if every is not None:
        every = _coerce("output.every", every, "float")
        if not every > 0:
            raise ScenarioError("output.every > 0")
    scn = Scenario(cell=cell, mesh=mesh, solver=solver, run=run, init=init,
                   output_dir=out_dir, output_every=every, source=source)
    scn.resolved = resolve(scn)
    return scn


def parse_scenario(path) -> Scenario:
    """Read, default and validate a scenario file."""
    path = Path(path)
    if not path.is_file():
        raise ScenarioError(f"scenario file not found: {path}")
    return build_scenario(read_assignments(path), path.resolve())


def resolve(scn: Scenario) -> dict:
    """Every effective setting as {key.path: value}, in a fixed order."""
    out = {}
    for sec in CELL_SECTIONS:
        obj = getattr(scn.cell, sec)
        for f in fields(obj):
            out[f"{sec}.{f.name}"] = getattr(obj, f.name)
    for k in ("gdl", "cl", "mem"):
        out[f"mesh.{k}"] = scn.mesh[k]
    for f in fields(SolverConfig):
        out[f"solver.{f.name}"] = getattr(scn.solver, f.name)
    run = scn.run
    out["run.kind"] = scn.kind
    if isinstance(run, Transient):
        out["run.profile"] = [f"{format_value(t)}:{format_value(i)}" for t, i in run.profile]
        out["run.t_end"] = run.t_end
    elif isinstance(run, Steady):
        out["run.i_fc"] = run.i_fc
    elif isinstance(run, Sweep):
        out["run.currents"] = list(run.currents)
    if isinstance(scn.init, Equilibrated):
        out["run.init"] = "equilibrated"
        out["run.init_phi"] = scn.init.phi
    elif isinstance(scn.init, DryStart):
        out["run.init"] = "dry"
        out["run.init_phi"] = scn.init.phi
        out["run.init_lambda"] = scn.init.lam
    if isinstance(run, Fit):
        out["fit.data"] = str(run.data)
        out["fit.free"] = list(run.free)
        for n in run.free:
            if n in run.start:
                out[f"fit.start.{n}"] = run.start[n]
        for n in run.free:
            if n in run.bounds:
                out[f"fit.bounds.{n}"] = list(run.bounds[n])
    if isinstance(run, PropsTable):
        out.update({"props.name": run.name, "props.from": run.start, "props.to": run.stop,
                    "props.points": run.points, "props.T": run.T})
    if scn.output_every is not None:
        out["output.every"] = scn.output_every
    return out


def format_resolved(resolved: dict) -> str:
    lines = []
    for k, v in resolved.items():
        if isinstance(v, (list, tuple)) and len(v) == 1:
            # a trailing comma keeps one-element lists as lists
            lines.append(f"{k} = {format_value(v[0])},")
        else:
            lines.append(f"{k} = {format_value(v)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- property tables

PROPS_RANGES = {
    "p_sat": (273.15, 373.15), "liquid_density": (273.15, 373.15),
    "liquid_viscosity": (273.15, 373.15), "surface_tension": (273.15, 373.15),
    "lambda_eq": (0.0, 1.0), "d_lambda": (0.0, 16.0), "conductivity": (0.0, 16.0),
    "permeability_tsb": (0.3, 0.8),
}


def _check_props(t: PropsTable) -> None:
    if not t.start < t.stop:
        raise ScenarioError("props: from < to")
    if t.points < 2:
        raise ScenarioError("props.points >= 2")
    if not 200.0 < t.T < 373.15:
        raise ScenarioError("props.T in (200, 373.15) K")


def props_table(name: str, start: float, stop: float, points: int, T: float = 353.15):
    """(header, rows) for one correlation evaluated on a uniform grid."""
    if name not in PROPS_TABLES:
        raise ScenarioError(f"unknown property table '{name}'; choose from {', '.join(PROPS_TABLES)}")
    _check_props(PropsTable(name, start, stop, points, T))
    x = np.linspace(start, stop, points)
    try:
        if name == "p_sat":
            return ["T_K", "p_sat_Pa"], np.column_stack([x, pr.p_sat(x)])
        if name == "liquid_density":
            return ["T_K", "rho_kg_per_m3"], np.column_stack([x, pr.liquid_water_density(x)])
        if name == "liquid_viscosity":
            return (["T_K", "mu_Pa_s", "nu_m2_per_s"],
                    np.column_stack([x, pr.liquid_viscosity_dynamic(x),
                                     pr.liquid_viscosity_kinematic(x)]))
        if name == "surface_tension":
            return ["T_K", "sigma_N_per_m"], np.column_stack([x, pr.surface_tension(x)])
        if name == "lambda_eq":
            cols = [pr.lambda_eq(x, T, PropertyConfig(lambda_eq_variant=v))
                    for v in pr.LAMBDA_EQ_VARIANTS]
            return ["a_w", *pr.LAMBDA_EQ_VARIANTS], np.column_stack([x, *cols])
        if name == "d_lambda":
            cols = [pr.d_lambda(x, T, PropertyConfig(d_lambda_variant=v))
                    for v in pr.D_LAMBDA_VARIANTS]
            return ["lambda", *pr.D_LAMBDA_VARIANTS], np.column_stack([x, *cols])
        if name == "conductivity":
            cols = [pr.proton_conductivity(x, T, PropertyConfig(conductivity_variant=v))
                    for v in pr.CONDUCTIVITY_VARIANTS]
            return ["lambda", *pr.CONDUCTIVITY_VARIANTS], np.column_stack([x, *cols])
        cols = [[pr.intrinsic_permeability_tsb(replace(default_gdl(), eps=e, alpha_fit=a,
                                                       beta1=b1, beta2=b2))
                 for e in x for (a, b1, b2) in [pr.tsb_fit(e, d)]]
                for d in ("through", "in")]
        return ["eps", "K0_through_m2", "K0_in_plane_m2"], np.column_stack([x, *cols])
    except DomainError as exc:
        raise ScenarioError(f"props-table {name}: {exc}") from None


# ---------------------------------------------------------------- orchestration

@dataclass
class RunResult:
    scenario: Scenario
    transient: TransientResult | None = None
    rows: list | None = None  # sweep / steady rows
    fit: CalibrationResult | None = None
    table: tuple | None = None
    simulator: Simulator | None = None


def run_scenario(scn: Scenario) -> RunResult:
    """Execute the scenario's run kind; solver errors propagate to the caller."""
    run = scn.run
    if isinstance(run, PropsTable):
        return RunResult(scn, table=props_table(run.name, run.start, run.stop, run.points, run.T))
    mesh = build_mesh(scn.cell, scn.mesh)
    if isinstance(run, Fit):
        try:
            data = load_polarization_csv(run.data)
            free = {n: run.start.get(n) for n in run.free}
            prob = CalibrationProblem(scn.cell, data, free, dict(run.bounds), mesh, scn.solver)
        except ConfigurationError as exc:
            raise ScenarioError(f"fit: {exc}") from None
        return RunResult(scn, fit=fit(prob))
    sim = Simulator(scn.cell, mesh, scn.solver)
    if isinstance(run, Sweep):
        rows = polarization_sweep(scn.cell, run.currents, sim=sim, init=scn.init)
        return RunResult(scn, rows=rows, simulator=sim)
    y0 = sim.initial(scn.init)
    if isinstance(run, Steady):
        rows = polarization_sweep(scn.cell, [run.i_fc], sim=sim, init=scn.init)
        if not rows[0].feasible:
            raise _row_error(rows[0], run.i_fc)
        return RunResult(scn, rows=rows, simulator=sim)
    times = list(run_output_times(run.t_end, scn.output_every))
    res = sim.run_transient(y0, list(run.profile), run.t_end, output_times=times)
    return RunResult(scn, transient=res, simulator=sim)


def _row_error(row, i_fc):
    from .solver import InfeasibleOperatingPoint, NumericalFailure
    msg = row.diagnostics.get("error", "failed")
    if "starvation" in msg or "starved" in msg or "limiting" in msg:
        return InfeasibleOperatingPoint(f"i_fc={i_fc:g}: {msg}")
    return NumericalFailure(f"i_fc={i_fc:g}: {msg}")


def run_output_times(t_end: float, every: float | None):
    if every is None:
        every = t_end / 100.0
    n = int(math.floor(t_end / every + 1e-9))
    return [k * every for k in range(n + 1)] + ([t_end] if n * every < t_end - 1e-12 else [])


# ---------------------------------------------------------------- writing

def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path: Path, header, rows) -> Path:
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror}") from None
    return path


def state_columns(sim: Simulator) -> list:
    """Names 'field:region:index' of the packed state entries, in order."""
    mesh, tr = sim.mesh, sim.tr
    lam_cells = [i for i, r in enumerate(mesh.region) if r in ("ACL", "MEM", "CCL")]
    an = [i for i, r in enumerate(mesh.region) if r in ("AGDL", "ACL")]
    ca = [i for i, r in enumerate(mesh.region) if r in ("CCL", "CGDL")]

    def tag(i):
        r = mesh.region[i]
        first = mesh.region.index(r)
        return f"{r}:{i - first}"

    cols = [f"lambda:{tag(i)}" for i in lam_cells]
    cols += [f"s:{tag(i)}" for i in an + ca]
    cols += ["C_v:AGC:0"] + [f"C_v:{tag(i)}" for i in an + ca] + ["C_v:CGC:0"]
    cols += ["C_H2:AGC:0"] + [f"C_H2:{tag(i)}" for i in an]
    cols += [f"C_O2:{tag(i)}" for i in ca] + ["C_O2:CGC:0"]
    cols += ["C_N2:CGC:0"]
    assert len(cols) == sim.n == tr.layout.size
    return cols


def _report_values(i_fc, rep) -> list:
    return [i_fc, *(getattr(rep, k) for k in VOLTAGE_COLUMNS[1:])]


def polarization_rows(rows) -> list:
    out = []
    for r in rows:
        rep = r.report
        if rep is None:
            out.append([r.i_fc, *([float("nan")] * 6), False])
        else:
            out.append([r.i_fc, rep.U_cell, rep.U_eq, rep.eta_c, rep.R_p, rep.i_n,
                        rep.dV_conc, r.feasible])
    return out


def write_results(result: RunResult, out_dir) -> list:
    """Write the CSV set for a run plus the resolved configuration echo."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"{out}: {exc.strerror}") from None
    scn = result.scenario
    written = []
    cfg = out / "resolved_config.txt"
    cfg.write_text(format_resolved(scn.resolved))
    written.append(cfg)
    if result.table is not None:
        header, data = result.table
        written.append(_write_csv(out / f"props_{scn.run.name}.csv", header, data.tolist()))
    if result.fit is not None:
        written += write_fit_report(result.fit, out)
    if result.rows is not None:
        written.append(_write_csv(out / "polarization.csv", POLARIZATION_COLUMNS,
                                  polarization_rows(result.rows)))
        if isinstance(scn.run, Steady):
            cols = state_columns(result.simulator)
            y = result.rows[0].state
            written.append(_write_csv(out / "state.csv", ["field", "value"],
                                      list(zip(cols, y.tolist()))))
    if result.transient is not None:
        res = result.transient
        cols = state_columns(result.simulator)
        header = ["t", *cols, *VOLTAGE_COLUMNS]
        rows = [[t, *y.tolist(), *_report_values(i, rep)]
                for t, y, i, rep in zip(res.times, res.states, res.currents, res.reports)]
        written.append(_write_csv(out / "timeseries.csv", header, rows))
        written.append(_write_csv(out / "ledger.csv", LEDGER_COLUMNS,
                                  [ledger_row_values(r) for r in res.ledger_rows]))
    return written


LEDGER_COLUMNS = ("t",
                  *(f"{s}_{k}" for s in ("water", "h2", "o2")
                    for k in ("stored_delta", "in", "out", "produced", "clipped", "imbalance")))


def ledger_row_values(row: dict) -> list:
    """Cumulative mol/m^2; stored_delta - in + out - produced - clipped = imbalance."""
    vals = [row["t"]]
    for s in ("water", "h2", "o2"):
        prod = row["water_prod"] if s == "water" else -row[f"{s}_cons"]
        vals += [row[f"{s}_stored_delta"], row[f"{s}_in"], row[f"{s}_out"], prod,
                 row[f"{s}_clipped"], row[f"{s}_imbalance"]]
    return vals


def default_output_dir(scn: Scenario, override=None) -> Path:
    """--out, then output.dir, then $PEMFC1D_OUTPUT_ROOT/<scenario name>."""
    if override is not None:
        return Path(override)
    if scn.output_dir is not None:
        return scn.output_dir
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "pemfc1d_out"))
    stem = scn.source.stem if scn.source is not None else "scenario"
    return root / stem


__all__ = ["ScenarioError", "Scenario", "Transient", "Steady", "Sweep", "Fit", "PropsTable",
           "parse_scenario", "build_scenario", "read_assignments", "resolve",
           "format_resolved", "props_table", "run_scenario", "write_results", "RunResult",
           "default_output_dir", "state_columns"]
