"""Quantum synchronization of two qutrits in a common Drude-Lorentz bath.

The package integrates the hierarchical equations of motion (HEOM) for two
spin-1 systems sharing one thermal bath and evaluates phase-locking and
correlation measures on the reduced two-qutrit state.
"""

from qsync.bath import BathSpec, DegenerateBath
from qsync.heom import (
    HeomGenerator,
    HierarchySpace,
    HierarchyState,
    SteadyState,
    Trajectory,
    enumerate_indices,
    evolve,
    heom_rhs,
    stationary_state,
    steady_state,
)
from qsync.measures import (
    MeasureReport,
    max_sync,
    measure_report,
    mutual_information,
    negativity_measures,
    sync_measure_closed,
    sync_measure_quadrature,
)
from qsync.operators import SpinMatrices, SystemModel, build_spin1

__version__ = "0.1.0"

__all__ = [
    "BathSpec",
    "DegenerateBath",
    "HeomGenerator",
    "HierarchySpace",
    "HierarchyState",
    "MeasureReport",
    "SpinMatrices",
    "SteadyState",
    "SystemModel",
    "Trajectory",
    "build_spin1",
    "enumerate_indices",
    "evolve",
    "heom_rhs",
    "max_sync",
    "measure_report",
    "mutual_information",
    "negativity_measures",
    "stationary_state",
    "steady_state",
    "sync_measure_closed",
    "sync_measure_quadrature",
]
