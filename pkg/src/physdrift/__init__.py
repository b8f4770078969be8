"""Deterministic and randomized product-formula compilation of Hamiltonians.

The package is organised bottom-up:

``pauli``     Pauli strings, weighted sums, dense realization
``fermion``   FCIDUMP ingestion, Hubbard builder, Jordan-Wigner, physical groups
``scheduler`` Trotter/Suzuki, qDrift, physDrift, random permutation, SparSto
``gadgets``   Pauli-gadget circuits, gate tallies, OpenQASM export
``numerics``  exact evolution, sequence unitaries, noise, error metrics
``bounds``    closed-form step-count and error estimates
``harness``   configuration-driven experiments behind the ``physdrift`` CLI
"""

from physdrift.pauli import (
    DenseLimitError,
    PauliHamiltonian,
    PauliParseError,
    PauliString,
    PauliTerm,
    commutes,
    multiply,
    parse_pauli,
    to_dense,
)
from physdrift.fermion import (
    GroupClass,
    PhysicalGroup,
    SecondQuantizedHamiltonian,
    build_hubbard,
    classify_groups,
    jordan_wigner,
    load_fcidump,
    particle_number,
)

__version__ = "0.1.0"

__all__ = [
    "DenseLimitError",
    "GroupClass",
    "PauliHamiltonian",
    "PauliParseError",
    "PauliString",
    "PauliTerm",
    "PhysicalGroup",
    "SecondQuantizedHamiltonian",
    "build_hubbard",
    "classify_groups",
    "commutes",
    "jordan_wigner",
    "load_fcidump",
    "multiply",
    "parse_pauli",
    "particle_number",
    "to_dense",
]
