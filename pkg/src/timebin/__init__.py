"""Simulation and compilation of ultrafast time-bin photonic circuits."""

from .modespace import ModeIndex, ModeSpace, Polarization, basis_matrix, basis_state, flat_index
from .elements import (
    CircuitError,
    CircuitSpec,
    CouplerParams,
    InsufficientPaddingError,
    Topology,
    compose_network,
    logical_unitary,
)
from .compiler import (
    compile_permutation,
    galton_board,
    hadamard4_recipe,
    mesh_decompose,
    permutation_matrix,
    reconstruct,
)
from .photonics import HardwareConfig, NoiseModel, control_schedule, perturb_circuit
from .simulator import detection_matrix, fidelity, multi_photon_amplitude, permanent
from .dsl import CircuitDocument, TbcError, parse_circuit, parse_document, parse_unitary, serialize_circuit

__version__ = "0.1.0"
