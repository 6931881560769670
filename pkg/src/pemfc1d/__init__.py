"""Dynamic one-dimensional two-phase model of a PEM fuel cell."""
from .cell_model import (CellDefinition, ConfigurationError, DryStart, Equilibrated, Mesh1D,
                         build_mesh, initial_state, pack, unpack)
from .polarization import VoltageReport, cell_voltage
from .properties import DomainError, PropertyConfig
from .solver import (InfeasibleOperatingPoint, NumericalFailure, Simulator, SolverConfig,
                     TransientResult, polarization_sweep)

__version__ = "0.1.0"

__all__ = ["CellDefinition", "ConfigurationError", "DryStart", "Equilibrated", "Mesh1D",
           "build_mesh", "initial_state", "pack", "unpack", "VoltageReport", "cell_voltage",
           "DomainError", "PropertyConfig", "InfeasibleOperatingPoint", "NumericalFailure",
           "Simulator", "SolverConfig", "TransientResult", "polarization_sweep"]
