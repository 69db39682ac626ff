"""Polarization x time-bin mode space.

Modes are interleaved per time bin, ``(H,t0), (V,t0), (H,t1), (V,t1), ...``,
so the flat index of ``(pol, bin)`` is ``2*bin + pol``. Every matrix in the
package uses this ordering.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

ALGEBRA_TOL = 1e-12
ROUNDTRIP_TOL = 1e-9


class Polarization(enum.IntEnum):
    H = 0
    V = 1


class ModeIndex(NamedTuple):
    pol: Polarization
    bin: int


def flat_index(m: ModeIndex) -> int:
    """Flat register index of a (polarization, time-bin) mode."""
    if m.bin < 0:
        raise ValueError(f"time bin must be >= 0, got {m.bin}")
    return 2 * m.bin + int(m.pol)


def unflatten(i: int) -> ModeIndex:
    if i < 0:
        raise ValueError(f"flat index must be >= 0, got {i}")
    return ModeIndex(Polarization(i % 2), i // 2)


@dataclass(frozen=True)
class ModeSpace:
    """Padded polarization x time-bin register.

    ``n_logical`` modes are programmed; the register carries
    ``n_bins_padded`` bins so the birefringent delay stays a permutation.
    ``embed_offset`` shifts where logical mode 0 sits on the register
    (0: at ``(H, t0)``, 1: at ``(V, t0)``), which fixes the coupling parity
    of the first POUTINE layer.
    """

    n_logical: int
    n_bins_padded: int
    embed_offset: int = 0

    def __post_init__(self):
        if self.n_logical < 2 or self.n_logical % 2:
            raise ValueError(f"n_logical must be even and >= 2, got {self.n_logical}")
        if self.embed_offset not in (0, 1):
            raise ValueError("embed_offset must be 0 or 1")
        if 2 * self.n_bins_padded < self.n_logical + self.embed_offset:
            raise ValueError(
                f"{self.n_bins_padded} bins cannot hold {self.n_logical} logical modes"
            )

    @classmethod
    def for_network(cls, n_logical: int, n_layers: int, embed_offset: int = 0) -> "ModeSpace":
        """Register large enough for ``n_layers`` POUTINEs (``N/2 + L + 1`` bins)."""
        return cls(n_logical, n_logical // 2 + n_layers + 1, embed_offset)

    @property
    def dim(self) -> int:
        return 2 * self.n_bins_padded

    def required_bins(self, n_layers: int) -> int:
        # each POUTINE moves every mode one flat slot up; the delay step
        # briefly occupies one slot beyond that
        return (self.n_logical + self.embed_offset + n_layers) // 2 + 1

    def logical_positions(self, n_layers: int = 0) -> np.ndarray:
        """Register positions of the logical modes after ``n_layers`` idle POUTINEs."""
        return np.arange(self.n_logical) + self.embed_offset + n_layers


BASIS_FAMILIES = ("computational", "dft", "xi", "zeta")


def basis_state(family: str, i: int, space: Union[ModeSpace, int]) -> np.ndarray:
    """Single-photon basis state ``i`` of a named family.

    The superposition families are defined for N=4 only:

    * ``dft``  -- (|H> +/- |V>) x (|t0> +/- |t1>) / 2
    * ``xi``   -- (|H> +/- |V>) x |t_j> / sqrt(2)
    * ``zeta`` -- |H or V> x (|t0> +/- |t1>) / sqrt(2)

    Within each family the +/- sign of the fastest-varying factor alternates
    with ``i``.
    """
    n = space.n_logical if isinstance(space, ModeSpace) else int(space)
    if family not in BASIS_FAMILIES:
        raise ValueError(f"unknown basis family {family!r}")
    if not 0 <= i < n:
        raise IndexError(f"basis index {i} out of range for N={n}")
    if family == "computational":
        v = np.zeros(n, dtype=complex)
        v[i] = 1.0
        return v
    if n != 4:
        raise ValueError(f"{family} basis is only defined for N=4, got N={n}")

    pol = np.eye(2)
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    minus = np.array([1.0, -1.0]) / np.sqrt(2)
    pm = (plus, minus)
    if family == "dft":
        p, t = pm[i % 2], pm[i // 2]
    elif family == "xi":
        p, t = pm[i % 2], pol[i // 2]
    else:
        p, t = pol[i // 2], pm[i % 2]
    # flat index 2*bin + pol -> time factor is the outer one
    return np.kron(t, p).astype(complex)


def basis_matrix(family: str, n: int = 4) -> np.ndarray:
    """Columns are the basis states of ``family``."""
    return np.column_stack([basis_state(family, i, n) for i in range(n)])


def is_unitary(M, tol: float = ALGEBRA_TOL) -> bool:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    dev = M.conj().T @ M - np.eye(M.shape[0])
    return bool(np.max(np.abs(dev), initial=0.0) <= tol)


def unitarity_error(M) -> float:
    M = np.asarray(M)
    return float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0])), initial=0.0))


def equal_up_to_phase(A, B, tol: float = ROUNDTRIP_TOL) -> bool:
    return max_phase_deviation(A, B) <= tol


def max_phase_deviation(A, B) -> float:
    """``min_alpha ||A - e^{i alpha} B||_max``, with alpha fixed by the overlap."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    overlap = np.vdot(B, A)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(A - phase * B), initial=0.0))
