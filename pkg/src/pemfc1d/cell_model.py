"""Cell definition, 1D finite-volume mesh and the packed state vector.

The layer stack, from anode to cathode, is

    AGC | AGDL | ACL | MEM | CCL | CGDL | CGC

The two gas channels are lumped (one control volume each); the five MEA
layers are divided into uniform cells. Dissolved water (lambda) lives on
ACL, MEM and CCL cells; liquid saturation and gas concentrations live on the
electrode cells (GDL and CL) of each side.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from . import constants as c
from .properties import (DomainError, MembraneConstants, PorousConstants,
                         PropertyConfig, _lambda_eq, _p_sat, default_cl, default_gdl)


class ConfigurationError(ValueError):
    """Invalid cell, mesh or scenario configuration."""


REGIONS = ("AGDL", "ACL", "MEM", "CCL", "CGDL")
ANODE = ("AGDL", "ACL")
CATHODE = ("CCL", "CGDL")


@dataclass(frozen=True)
class Geometry:
    H_gc: float = 5e-4
    W_gc: float = 8e-4
    L_gc: float = 12.0
    H_gdl: float = 2.3e-4
    H_cl: float = 1e-5
    H_mem: float = 2.5e-5
    A_act: float = 2.91e-2

    @property
    def V_gc(self) -> float:
        return self.H_gc * self.W_gc * self.L_gc


@dataclass(frozen=True)
class Operating:
    T_fc: float = 353.15
    P_a_des: float = 1.05e5
    P_c_des: float = 1.5e5
    Phi_a_des: float = 0.5
    Phi_c_des: float = 0.5
    S_a: float = 1.4
    S_c: float = 1.8
    y_O2_ext: float = 0.2095
    k_em_in: float = 5e-6


@dataclass(frozen=True)
class Electro:
    E0: float = 1.229
    P_ref: float = 1e5
    alpha_c: float = 0.5
    kappa_c: float = 1.0
    i0_c_ref: float = 2.0
    i0_353_ref: float = 0.04
    C_O2_ref: float = 3.39
    E_act: float = 6.568e4
    R_e: float = 0.0
    i_lim: float | None = None
    r_f_electrode: float = 50.0
    K_e0: float = 6.2
    dH0: float = 5.23e4
    gamma_cond: float = 5e3
    gamma_evap: float = 1e-4
    crossover: bool = True
    short_circuit: bool = True


OVERPOTENTIAL_MODES = ("tafel", "extended")


@dataclass(frozen=True)
class OverpotentialConfig:
    mode: str = "tafel"
    use_a_plus: bool = True
    use_flooding_factor: bool = True
    use_roughness: bool = True
    use_temperature_activation: bool = True
    concentration_loss_enabled: bool = False

    def __post_init__(self):
        if self.mode not in OVERPOTENTIAL_MODES:
            raise ConfigurationError(f"overpotential.mode must be one of {OVERPOTENTIAL_MODES}")


@dataclass(frozen=True)
class CellDefinition:
    geometry: Geometry = field(default_factory=Geometry)
    agdl: PorousConstants = field(default_factory=default_gdl)
    acl: PorousConstants = field(default_factory=default_cl)
    ccl: PorousConstants = field(default_factory=default_cl)
    cgdl: PorousConstants = field(default_factory=default_gdl)
    membrane: MembraneConstants = field(default_factory=MembraneConstants)
    operating: Operating = field(default_factory=Operating)
    electro: Electro = field(default_factory=Electro)
    properties: PropertyConfig = field(default_factory=PropertyConfig)
    overpotential: OverpotentialConfig = field(default_factory=OverpotentialConfig)

    def __post_init__(self):
        validate_cell(self)

    def layer(self, region: str) -> PorousConstants:
        return getattr(self, region.lower())


def validate_cell(cell: CellDefinition) -> None:
    """Raise ConfigurationError naming the first violated constraint."""
    g, op, el = cell.geometry, cell.operating, cell.electro
    for f in fields(g):
        if not getattr(g, f.name) > 0:
            raise ConfigurationError(f"geometry.{f.name} > 0")
    if not 200.0 < op.T_fc < 373.0:
        raise ConfigurationError("operating.T_fc in (200, 373) K")
    for name in ("P_a_des", "P_c_des"):
        if not getattr(op, name) > 0:
            raise ConfigurationError(f"operating.{name} > 0")
    for name in ("Phi_a_des", "Phi_c_des"):
        if not 0 < getattr(op, name) <= 1:
            raise ConfigurationError(f"operating.{name} in (0, 1]")
    for name in ("S_a", "S_c"):
        if not getattr(op, name) >= 1:
            raise ConfigurationError(f"operating.{name} >= 1")
    if not 0 < op.y_O2_ext < 1:
        raise ConfigurationError("operating.y_O2_ext in (0, 1)")
    if not 3.5e-6 <= op.k_em_in <= 8.0e-6:
        raise ConfigurationError("operating.k_em_in in [3.5e-6, 8.0e-6]")
    psat = _p_sat(op.T_fc)
    if op.P_a_des <= op.Phi_a_des * psat or op.P_c_des <= op.Phi_c_des * psat:
        raise ConfigurationError("operating.P_des > Phi_des * P_sat(T_fc)")
    if not 0 < el.alpha_c <= 1:
        raise ConfigurationError("electro.alpha_c in (0, 1]")
    if not 0.25 <= el.kappa_c <= 4:
        raise ConfigurationError("electro.kappa_c in [0.25, 4]")
    for name in ("i0_c_ref", "i0_353_ref", "C_O2_ref", "P_ref", "r_f_electrode",
                 "K_e0", "gamma_cond", "gamma_evap"):
        if not getattr(el, name) > 0:
            raise ConfigurationError(f"electro.{name} > 0")
    if el.R_e < 0:
        raise ConfigurationError("electro.R_e >= 0")
    if el.i_lim is not None and not el.i_lim > 0:
        raise ConfigurationError("electro.i_lim > 0")
    if cell.overpotential.concentration_loss_enabled and el.i_lim is None:
        raise ConfigurationError("electro.i_lim required when concentration loss is enabled")
    for region in ("acl", "ccl"):
        if not getattr(cell, region).eps_mc > 0:
            raise ConfigurationError(f"{region}.eps_mc > 0")


# ---------------------------------------------------------------- mesh

@dataclass(frozen=True)
class Mesh1D:
    """Uniform-per-layer finite-volume mesh of the five MEA layers."""

    counts: dict
    x: np.ndarray  # face positions, m (AGC/AGDL interface at 0)
    dx: np.ndarray  # cell widths, m
    region: tuple  # region tag per interior cell

    @property
    def n_cells(self) -> int:
        return len(self.dx)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.x[1:] + self.x[:-1])

    def cells(self, *regions: str) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.region) if r in regions], dtype=int)


DEFAULT_RESOLUTION = {"gdl": 10, "cl": 5, "mem": 5}


def build_mesh(cell: CellDefinition, resolution: dict | None = None) -> Mesh1D:
    """Divide each MEA layer into equal cells; GCs stay lumped."""
    res = dict(DEFAULT_RESOLUTION)
    res.update(resolution or {})
    n = {"AGDL": res["gdl"], "ACL": res["cl"], "MEM": res["mem"],
         "CCL": res["cl"], "CGDL": res["gdl"]}
    g = cell.geometry
    H = {"AGDL": g.H_gdl, "ACL": g.H_cl, "MEM": g.H_mem, "CCL": g.H_cl, "CGDL": g.H_gdl}
    for r in REGIONS:
        if not H[r] > 0:
            raise ConfigurationError(f"thickness of {r} > 0")
        if n[r] < 2:
            raise ConfigurationError(f"mesh: {r} needs at least 2 cells")
    if n["MEM"] < 3:
        raise ConfigurationError("mesh: MEM needs at least 3 cells")
    widths, tags, faces = [], [], [0.0]
    for r in REGIONS:
        edges = faces[-1] + np.linspace(0.0, H[r], n[r] + 1)
        faces.extend(edges[1:].tolist())
        widths.extend(np.diff(edges).tolist())
        tags.extend([r] * n[r])
    counts = {"AGC": 1, **n, "CGC": 1}
    return Mesh1D(counts=counts, x=np.array(faces), dx=np.array(widths), region=tuple(tags))


# ---------------------------------------------------------------- state

@dataclass(frozen=True)
class StateLayout:
    """Index map between the structured state and the packed array.

    Packed order: lambda | s | [C_v AGC, C_v electrode, C_v CGC] |
    [C_H2 AGC, C_H2 anode] | [C_O2 cathode, C_O2 CGC] | C_N2.
    """

    n_lam: int
    n_an: int
    n_ca: int

    @classmethod
    def from_mesh(cls, mesh: Mesh1D) -> "StateLayout":
        return cls(n_lam=len(mesh.cells("ACL", "MEM", "CCL")),
                   n_an=len(mesh.cells(*ANODE)), n_ca=len(mesh.cells(*CATHODE)))

    @property
    def n_el(self) -> int:
        return self.n_an + self.n_ca

    @property
    def slices(self) -> dict:
        out, start = {}, 0
        for name, size in (("lam", self.n_lam), ("s", self.n_el), ("cv", self.n_el + 2),
                           ("h2", self.n_an + 1), ("o2", self.n_ca + 1), ("n2", 1)):
            out[name] = slice(start, start + size)
            start += size
        return out

    @property
    def size(self) -> int:
        return self.n_lam + 2 * self.n_el + 2 + self.n_an + 1 + self.n_ca + 1 + 1


@dataclass
class StateVector:
    lam: np.ndarray  # ACL, MEM, CCL cells
    s: np.ndarray  # electrode cells, anode then cathode
    cv: np.ndarray  # electrode cells, same order as s
    cv_agc: float
    cv_cgc: float
    h2: np.ndarray  # anode electrode cells
    h2_agc: float
    o2: np.ndarray  # cathode electrode cells
    o2_cgc: float
    n2: float

    def layout(self) -> StateLayout:
        return StateLayout(len(self.lam), len(self.h2), len(self.o2))


def pack(state: StateVector) -> np.ndarray:
    return np.concatenate([
        state.lam, state.s, [state.cv_agc], state.cv, [state.cv_cgc],
        [state.h2_agc], state.h2, state.o2, [state.o2_cgc], [state.n2]]).astype(float)


def unpack(y: np.ndarray, layout: StateLayout) -> StateVector:
    y = np.asarray(y, dtype=float)
    if y.shape != (layout.size,):
        raise ValueError(f"state array length {y.shape} does not match layout size {layout.size}")
    sl = layout.slices
    cv, h2, o2 = y[sl["cv"]], y[sl["h2"]], y[sl["o2"]]
    return StateVector(lam=y[sl["lam"]].copy(), s=y[sl["s"]].copy(),
                       cv=cv[1:-1].copy(), cv_agc=float(cv[0]), cv_cgc=float(cv[-1]),
                       h2=h2[1:].copy(), h2_agc=float(h2[0]),
                       o2=o2[:-1].copy(), o2_cgc=float(o2[-1]), n2=float(y[-1]))


@dataclass(frozen=True)
class Equilibrated:
    phi: float = 1.0


@dataclass(frozen=True)
class DryStart:
    lam: float = 2.0
    phi: float = 0.1


def initial_state(cell: CellDefinition, mesh: Mesh1D, init=None) -> StateVector:
    """Uniform initial state, either humidity-equilibrated or dry."""
    init = Equilibrated() if init is None else init
    lay = StateLayout.from_mesh(mesh)
    op = cell.operating
    T = op.T_fc
    psat = _p_sat(T)
    c_sat = psat / (c.R * T)
    if isinstance(init, Equilibrated):
        if not 0 < init.phi <= 1:
            raise ConfigurationError("initial humidity phi in (0, 1]")
        phi = init.phi
        lam0 = float(_lambda_eq(phi, T, cell.properties))
    elif isinstance(init, DryStart):
        phi, lam0 = init.phi, init.lam
    else:
        raise ConfigurationError(f"unknown initial condition {init!r}")
    cv0 = phi * c_sat
    ch2 = (op.P_a_des - phi * psat) / (c.R * T)
    co2 = op.y_O2_ext * (op.P_c_des - phi * psat) / (c.R * T)
    if ch2 <= 0 or co2 <= 0:
        raise ConfigurationError("initial dry-gas pressure must be positive")
    return StateVector(
        lam=np.full(lay.n_lam, lam0), s=np.zeros(lay.n_el), cv=np.full(lay.n_el, cv0),
        cv_agc=cv0, cv_cgc=cv0, h2=np.full(lay.n_an, ch2), h2_agc=ch2,
        o2=np.full(lay.n_ca, co2), o2_cgc=co2,
        n2=(1.0 - op.y_O2_ext) / op.y_O2_ext * co2)


def check_state(state: StateVector) -> None:
    """Raise DomainError if the state breaks its invariants."""
    if np.any(state.lam < 0):
        raise DomainError("state: lambda >= 0")
    if np.any(state.s < 0) or np.any(state.s > 1):
        raise DomainError("state: s in [0, 1]")
    conc = np.concatenate([state.cv, state.h2, state.o2,
                           [state.cv_agc, state.cv_cgc, state.h2_agc, state.o2_cgc, state.n2]])
    if np.any(conc < 0):
        raise DomainError("state: concentrations >= 0")
