"""Physical circuit elements on the padded time-bin register.

A POUTINE layer is ``R(pi/2) . U_bir . U_kerr``: Kerr-induced polarization
couplers on selected time bins, a birefringent delay of the V component by one
bin, and a fixed 90 degree polarization rotation. ``compose_network`` cascades
them and reads the logical N x N block out through the canonical relabeling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .modespace import ModeSpace

__all__ = [
    "CircuitError",
    "InsufficientPaddingError",
    "Topology",
    "CouplerParams",
    "CircuitSpec",
    "coupler_block",
    "layer_sign",
    "kerr_layer",
    "birefringent_shift",
    "polarization_rotation",
    "poutine",
    "Relabeling",
    "compose_network",
    "logical_unitary",
]


class CircuitError(ValueError):
    """A circuit violates a structural constraint (named by ``constraint``)."""

    def __init__(self, message: str, constraint: str = "circuit"):
        super().__init__(message)
        self.constraint = constraint


class InsufficientPaddingError(CircuitError):
    def __init__(self, message: str):
        super().__init__(message, "padding")


class Topology(str, enum.Enum):
    RECTANGULAR_MESH = "rectangular_mesh"
    GALTON_BOARD = "galton_board"


@dataclass(frozen=True)
class CouplerParams:
    theta: float
    phi: float
    layer: int
    slot: int


@dataclass(frozen=True)
class CircuitSpec:
    """A compiled program: topology, per-coupler (theta, phi), global rotations.

    Layer ``k`` couples logical modes ``(2*slot + p, 2*slot + p + 1)`` where
    ``p = (k + parity_offset) % 2``. A global rotation ``(b, angle)`` is a
    uniform polarization rotation applied to every bin just before the Kerr
    layer of POUTINE ``b`` (``b == n_layers`` means after the last one); it is
    only allowed where every occupied bin holds a full logical pair.
    ``output_phase_layer`` is a detector-side diagonal phase that never
    changes detection probabilities.
    """

    n_logical: int
    topology: Topology = Topology.RECTANGULAR_MESH
    couplers: tuple = ()
    global_rotations: tuple = ()
    output_phase_layer: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        object.__setattr__(self, "couplers", tuple(self.couplers))
        object.__setattr__(
            self,
            "global_rotations",
            tuple((int(b), float(a)) for b, a in self.global_rotations),
        )
        if self.output_phase_layer is not None:
            object.__setattr__(
                self, "output_phase_layer", tuple(float(p) for p in self.output_phase_layer)
            )
        self.validate()

    # -- derived geometry --------------------------------------------------

    @property
    def n_layers(self) -> int:
        if self.topology is Topology.GALTON_BOARD:
            return self.n_logical // 2
        return self.n_logical

    @property
    def parity_offset(self) -> int:
        # a Galton board starts on the middle pair (d-1, d); its parity decides
        # how logical mode 0 is embedded on the register
        if self.topology is Topology.GALTON_BOARD:
            return (self.n_logical // 2 - 1) % 2
        return 0

    def layer_parity(self, k: int) -> int:
        return (k + self.parity_offset) % 2

    def slots_in_layer(self, k: int) -> int:
        return (self.n_logical - self.layer_parity(k)) // 2

    def coupled_modes(self, c: CouplerParams) -> tuple:
        a = 2 * c.slot + self.layer_parity(c.layer)
        return a, a + 1

    def couplers_in_layer(self, k: int) -> list:
        return [c for c in self.couplers if c.layer == k]

    def rotations_at(self, b: int) -> list:
        return [a for (bb, a) in self.global_rotations if bb == b]

    @property
    def active_couplers(self) -> list:
        return [c for c in self.couplers if c.theta != 0.0]

    def mode_space(self) -> ModeSpace:
        return ModeSpace.for_network(self.n_logical, self.n_layers, self.parity_offset)

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        N = self.n_logical
        if not isinstance(N, (int, np.integer)) or N < 2 or N % 2:
            raise CircuitError(f"N must be an even integer >= 2, got {N!r}", "even-dimension")
        seen = set()
        for c in self.couplers:
            check_coupler(self, c)
            key = (c.layer, c.slot)
            if key in seen:
                raise CircuitError(
                    f"duplicate coupler at layer={c.layer} slot={c.slot}", "unique-slot"
                )
            seen.add(key)
        for b, angle in self.global_rotations:
            check_rotation(self, b, angle)
        if self.output_phase_layer is not None:
            if len(self.output_phase_layer) != N:
                raise CircuitError(
                    f"output phase layer needs {N} phases, got {len(self.output_phase_layer)}",
                    "phase-count",
                )
            if not all(math.isfinite(p) for p in self.output_phase_layer):
                raise CircuitError("output phases must be finite", "finite")


def check_coupler(spec: CircuitSpec, c: CouplerParams) -> None:
    if not (math.isfinite(c.theta) and math.isfinite(c.phi)):
        raise CircuitError(
            f"coupler layer={c.layer} slot={c.slot} has non-finite parameters", "finite"
        )
    if not 0 <= c.layer < spec.n_layers:
        raise CircuitError(
            f"layer {c.layer} outside 0..{spec.n_layers - 1}", "layer-range"
        )
    n_slots = spec.slots_in_layer(c.layer)
    if not 0 <= c.slot < n_slots:
        raise CircuitError(
            f"slot {c.slot} outside 0..{n_slots - 1} for layer {c.layer}", "slot-range"
        )


def check_rotation(spec: CircuitSpec, b: int, angle: float) -> None:
    if not math.isfinite(angle):
        raise CircuitError(f"rotation at layer {b} is not finite", "finite")
    if not 0 <= b <= spec.n_layers:
        raise CircuitError(f"rotation layer {b} outside 0..{spec.n_layers}", "layer-range")
    if spec.layer_parity(b) != 0:
        raise CircuitError(
            f"global rotation at layer {b} would split an edge mode off its bin",
            "rotation-parity",
        )


# -- element matrices ---------------------------------------------------------


def coupler_block(theta: float, phi: float) -> np.ndarray:
    """2x2 Kerr coupler on (H, V) of one bin."""
    c, s = math.cos(theta), math.sin(theta)
    e = complex(math.cos(phi), math.sin(phi))
    return np.array([[e * c, -s], [e * s, c]], dtype=complex)


def layer_sign(k: int) -> int:
    """Sign the cascade puts on the off-diagonal coupler entries at layer ``k``.

    Seen from the logical frame the fixed rotation maps V to -H, so the two
    partners of every odd-layer pair arrive with opposite signs and the
    coupler acts as ``Z . block . Z``.
    """
    return -1 if k % 2 else 1


def _slot_bin(k: int, slot: int, space: ModeSpace) -> int:
    parity = (k + space.embed_offset) % 2
    return (2 * slot + parity + space.embed_offset + k) // 2


def kerr_layer(k: int, params: Sequence[CouplerParams], space: ModeSpace) -> np.ndarray:
    """Block-diagonal Kerr coupling matrix for POUTINE ``k`` on the padded register."""
    parity = (k + space.embed_offset) % 2
    n_slots = (space.n_logical - parity) // 2
    U = np.eye(space.dim, dtype=complex)
    used = set()
    for c in params:
        if c.layer != k:
            raise CircuitError(f"coupler for layer {c.layer} passed to layer {k}", "layer-range")
        if not 0 <= c.slot < n_slots:
            raise CircuitError(
                f"slot {c.slot} outside 0..{n_slots - 1} for layer {k}", "slot-range"
            )
        if c.slot in used:
            raise CircuitError(f"duplicate coupler at layer={k} slot={c.slot}", "unique-slot")
        used.add(c.slot)
        b = _slot_bin(k, c.slot, space)
        if b >= space.n_bins_padded:
            raise InsufficientPaddingError(f"slot {c.slot} of layer {k} falls outside the register")
        U[2 * b : 2 * b + 2, 2 * b : 2 * b + 2] = coupler_block(c.theta, c.phi)
    return U


def birefringent_shift(space: ModeSpace, highest_bin: Optional[int] = None) -> np.ndarray:
    """H stays in its bin, V moves one bin later.

    The V component of the last padded bin wraps to bin 0, which keeps the
    matrix a permutation; ``highest_bin`` (the last populated bin) is checked
    so the wrap never carries amplitude.
    """
    nb = space.n_bins_padded
    if highest_bin is not None and highest_bin >= nb - 1:
        raise InsufficientPaddingError(
            f"bin {highest_bin} is populated but the register ends at bin {nb - 1}"
        )
    U = np.zeros((space.dim, space.dim))
    for j in range(nb):
        U[2 * j, 2 * j] = 1.0
        U[2 * ((j + 1) % nb) + 1, 2 * j + 1] = 1.0
    return U


def _cos_sin(angle: float) -> tuple:
    # quarter turns are exact, so an idle cascade is an exact signed permutation
    q = angle / (math.pi / 2)
    k = round(q)
    if abs(q - k) < 1e-15 * max(1.0, abs(q)):
        return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[k % 4]
    return math.cos(angle), math.sin(angle)


def polarization_rotation(angle: float, space: ModeSpace) -> np.ndarray:
    c, s = _cos_sin(angle)
    return np.kron(np.eye(space.n_bins_padded), np.array([[c, -s], [s, c]]))


def poutine(k: int, params: Sequence[CouplerParams], space: ModeSpace) -> np.ndarray:
    highest = (space.n_logical - 1 + space.embed_offset + k) // 2
    return (
        polarization_rotation(math.pi / 2, space)
        @ birefringent_shift(space, highest_bin=highest)
        @ kerr_layer(k, params, space)
    )


# -- network composition ------------------------------------------------------


class Relabeling(NamedTuple):
    """Where each logical mode enters and leaves the register, with the sign
    the idle network leaves on it."""

    inputs: np.ndarray
    outputs: np.ndarray
    signs: np.ndarray

    def logical(self, U_register: np.ndarray) -> np.ndarray:
        block = U_register[np.ix_(self.outputs, self.inputs)]
        return self.signs[:, None] * block


def _cascade(circuit: CircuitSpec, space: ModeSpace, bare: bool) -> np.ndarray:
    U = np.eye(space.dim, dtype=complex)
    for b in range(circuit.n_layers + 1):
        if not bare:
            for angle in circuit.rotations_at(b):
                U = polarization_rotation(angle, space) @ U
        if b == circuit.n_layers:
            break
        params = () if bare else circuit.couplers_in_layer(b)
        U = poutine(b, params, space) @ U
    return U


def compose_network(circuit: CircuitSpec, space: Optional[ModeSpace] = None):
    """Padded-register product of the full POUTINE cascade and its relabeling.

    The relabeling is measured, not assumed: the bare cascade (no couplers,
    no extra rotations) is run once and the landing position and sign of
    every logical mode recorded, so an all-zero program reads out as the
    identity.
    """
    if space is None:
        space = circuit.mode_space()
    if space.n_logical != circuit.n_logical:
        raise CircuitError(
            f"mode space is for N={space.n_logical}, circuit has N={circuit.n_logical}",
            "dimension",
        )
    if space.embed_offset != circuit.parity_offset:
        raise CircuitError("mode space embedding does not match circuit parity", "parity")
    need = space.required_bins(circuit.n_layers)
    if space.n_bins_padded < need:
        raise InsufficientPaddingError(
            f"{circuit.n_layers} layers need {need} bins, register has {space.n_bins_padded}"
        )
    inputs = space.logical_positions(0)
    idle = _cascade(circuit, space, bare=True)[:, inputs]
    outputs = np.argmax(np.abs(idle), axis=0)
    signs = idle[outputs, np.arange(len(inputs))]
    if not np.allclose(np.abs(signs), 1.0, atol=1e-12):
        raise CircuitError("idle network is not a signed permutation", "relabeling")
    relabel = Relabeling(inputs, outputs, np.conj(signs))
    return _cascade(circuit, space, bare=False), relabel


def logical_unitary(circuit: CircuitSpec, space: Optional[ModeSpace] = None,
                    output_phases: bool = True) -> np.ndarray:
    """The N x N matrix the physical cascade realizes on the logical modes."""
    U, relabel = compose_network(circuit, space)
    L = relabel.logical(U)
    if output_phases and circuit.output_phase_layer is not None:
        L = np.exp(1j * np.asarray(circuit.output_phase_layer))[:, None] * L
    return L
