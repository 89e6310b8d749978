"""Subwavelength band structures of space-time modulated resonator lattices.

Quasifrequencies are computed two ways: Floquet integration of the Hill
system built from the quasiperiodic capacitance matrix, and first-order
degenerate perturbation formulas around folding points of the static bands.
"""

__version__ = "0.1.0"

from .bands import (
    BandStructure,
    DegeneracyNotFound,
    GapInterval,
    GapKind,
    SweepMethod,
    detect_gaps,
    find_degenerate_alpha,
    polyfit_f1,
    reciprocity_check,
    sweep,
)
from .capacitance import CapacitanceAssembler, CapacitanceMatrix, assemble_capacitance
from .floquet import fold, floquet_exponents, integrate_monodromy
from .green import GreenSumConfig, quasiperiodic_green
from .hill import ModulationKind, ModulationSpec, assemble_M, build_hill, lift_first_order
from .lattice import (
    ConfigurationError,
    GeometryError,
    Lattice,
    ResonatorGeometry,
    brillouin_path,
    honeycomb_geometry,
    make_lattice,
    trimer_chain_geometry,
)
from .perturbation import analyze, classify

__all__ = [
    "BandStructure",
    "CapacitanceAssembler",
    "CapacitanceMatrix",
    "ConfigurationError",
    "DegeneracyNotFound",
    "GapInterval",
    "GapKind",
    "GeometryError",
    "GreenSumConfig",
    "Lattice",
    "ModulationKind",
    "ModulationSpec",
    "ResonatorGeometry",
    "SweepMethod",
    "analyze",
    "assemble_M",
    "assemble_capacitance",
    "brillouin_path",
    "build_hill",
    "classify",
    "detect_gaps",
    "find_degenerate_alpha",
    "floquet_exponents",
    "fold",
    "honeycomb_geometry",
    "integrate_monodromy",
    "lift_first_order",
    "make_lattice",
    "polyfit_f1",
    "quasiperiodic_green",
    "reciprocity_check",
    "sweep",
    "trimer_chain_geometry",
]
