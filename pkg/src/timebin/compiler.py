"""Compile target unitaries into POUTINE programs.

``mesh_decompose`` nulls the target with nearest-neighbour 2x2 rotations in
rectangular-mesh order (alternating column and row sweeps), pushes the
row-side rotations through the residual diagonal, and schedules the resulting
sequence into layers. Coupler phases are then rewritten for the sign frame of
the physical cascade, so ``reconstruct`` and the padded-register product agree
exactly.
"""

from __future__ import annotations

import cmath
import math
from typing import Sequence

import numpy as np

from .elements import (
    CircuitSpec,
    CouplerParams,
    Topology,
    coupler_block,
    layer_sign,
)
from .modespace import Polarization, is_unitary

__all__ = [
    "reconstruct",
    "mesh_decompose",
    "compile_permutation",
    "hadamard4_recipe",
    "galton_board",
    "galton_input_mode",
    "full_mesh_positions",
    "wrap_phase",
]

_ZERO = 1e-15


def wrap_phase(x: float) -> float:
    """Map an angle into (-pi, pi]."""
    y = math.remainder(x, 2 * math.pi)
    return math.pi if y <= -math.pi else y + 0.0


def _logical_block(theta: float, phi: float, sign: int) -> np.ndarray:
    B = coupler_block(theta, phi)
    if sign < 0:
        B[0, 1] = -B[0, 1]
        B[1, 0] = -B[1, 0]
    return B


def reconstruct(spec: CircuitSpec) -> np.ndarray:
    """Logical N x N unitary programmed by ``spec`` (abstract mesh on N modes)."""
    N = spec.n_logical
    U = np.eye(N, dtype=complex)
    for b in range(spec.n_layers + 1):
        s = layer_sign(b)
        for angle in spec.rotations_at(b):
            c, sn = math.cos(angle), math.sin(angle)
            R = np.array([[c, -s * sn], [s * sn, c]])
            # rotations sit where every bin holds a pair (2j, 2j+1)
            for a in range(0, N, 2):
                U[a : a + 2] = R @ U[a : a + 2]
        if b == spec.n_layers:
            break
        for cp in spec.couplers_in_layer(b):
            a, _ = spec.coupled_modes(cp)
            U[a : a + 2] = _logical_block(cp.theta, cp.phi, s) @ U[a : a + 2]
    if spec.output_phase_layer is not None:
        U = np.exp(1j * np.asarray(spec.output_phase_layer))[:, None] * U
    return U


def full_mesh_positions(N: int):
    """(layer, slot, lower mode) for every coupler of the N-mode rectangular mesh."""
    out = []
    for k in range(N):
        p = k % 2
        for j in range((N - p) // 2):
            out.append((k, j, 2 * j + p))
    return out


# -- decomposition ------------------------------------------------------------


def _null_from_right(V: np.ndarray, row: int, m: int):
    """Column rotation on (m, m+1) that zeroes ``V[row, m]``."""
    u, v = V[row, m], V[row, m + 1]
    if abs(u) < _ZERO:
        theta, phi = 0.0, 0.0
    else:
        theta = math.atan2(abs(u), abs(v))
        phi = cmath.phase(u) - (cmath.phase(v) if abs(v) >= _ZERO else 0.0)
    T = coupler_block(theta, phi)
    V[:, m : m + 2] = V[:, m : m + 2] @ T.conj().T
    V[row, m] = 0.0
    return m, theta, phi


def _null_from_left(V: np.ndarray, m: int, col: int):
    """Row rotation on (m, m+1) that zeroes ``V[m+1, col]``."""
    u, v = V[m, col], V[m + 1, col]
    if abs(v) < _ZERO:
        theta, phi = 0.0, 0.0
    else:
        theta = math.atan2(abs(v), abs(u))
        phi = math.pi + cmath.phase(v) - (cmath.phase(u) if abs(u) >= _ZERO else 0.0)
    T = coupler_block(theta, phi)
    V[m : m + 2] = T @ V[m : m + 2]
    V[m + 1, col] = 0.0
    return m, theta, phi


def _clements_sequence(U: np.ndarray):
    """Coupler sequence (application order) and output diagonal with
    ``U = diag(D) . T_last ... T_first`` in the standard block convention."""
    N = U.shape[0]
    V = np.array(U, dtype=complex)
    rights, lefts = [], []
    for i in range(N - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                rights.append(_null_from_right(V, N - 1 - j, i - j))
        else:
            for j in range(i + 1):
                lefts.append(_null_from_left(V, N - 2 - i + j, j))
    D = np.diag(V).copy()

    # T^dagger(theta, phi) . D = D' . T(theta, phi')
    moved = []
    for m, theta, phi in reversed(lefts):
        d1, d2 = D[m], D[m + 1]
        phi_new = math.pi + cmath.phase(d1) - cmath.phase(d2)
        D[m] = -cmath.exp(-1j * phi) * d2
        moved.append((m, theta, phi_new))
    return rights + moved, D


def _schedule(sequence, N: int):
    """ASAP layering: each rotation goes to the first layer of matching parity
    after everything already placed on its two modes."""
    last = [-1] * N
    placed = {}
    for m, theta, phi in sequence:
        k = max(last[m], last[m + 1]) + 1
        if k % 2 != m % 2:
            k += 1
        if k >= N:
            raise RuntimeError(f"decomposition does not fit {N} layers")
        placed[(k, m)] = (theta, phi)
        last[m] = last[m + 1] = k
    return placed


def mesh_decompose(U, tol: float = 1e-10) -> CircuitSpec:
    """Decompose an even-dimensional unitary into a full rectangular mesh.

    Returns N(N-1)/2 couplers, theta in [0, pi/2] and phi in (-pi, pi], plus
    the output phase layer, such that ``reconstruct`` returns ``U``.
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    N = U.shape[0]
    if N < 2 or N % 2:
        raise ValueError(f"mesh decomposition needs an even dimension >= 2, got {N}")
    if not is_unitary(U, tol):
        raise ValueError("target matrix is not unitary")

    sequence, D = _clements_sequence(U)
    placed = _schedule(sequence, N)

    # physical blocks carry Z.B.Z on odd layers; absorb the difference into phi
    # and a running diagonal that ends up in the output phase layer
    delta = np.ones(N, dtype=complex)
    couplers = []
    for k, j, a in full_mesh_positions(N):
        theta, phi = placed.get((k, a), (0.0, 0.0))
        s = layer_sign(k)
        da, db = delta[a], delta[a + 1]
        psi = phi + cmath.phase(s * db / da)
        delta[a] = s * db
        couplers.append(CouplerParams(float(theta), wrap_phase(psi), k, j))
    phases = tuple(wrap_phase(cmath.phase(D[i] / delta[i])) for i in range(N))
    return CircuitSpec(N, Topology.RECTANGULAR_MESH, couplers, (), phases)


# -- direct recipes -----------------------------------------------------------


def compile_permutation(sigma: Sequence[int]) -> CircuitSpec:
    """Switch-only program sending input ``j`` to output ``sigma[j]``.

    Odd-even transposition sort on the destinations: in layer k each pair of
    parity k is swapped (theta = pi/2) when out of order. N rounds always
    sort, which is exactly the depth of the rectangular mesh.
    """
    sigma = [int(s) for s in sigma]
    N = len(sigma)
    if sorted(sigma) != list(range(N)):
        raise ValueError(f"not a permutation of 0..{N - 1}: {sigma}")
    if N < 2 or N % 2:
        raise ValueError(f"permutation programs need an even N >= 2, got {N}")
    dest = list(sigma)
    couplers = []
    for k, j, a in full_mesh_positions(N):
        swap = dest[a] > dest[a + 1]
        if swap:
            dest[a], dest[a + 1] = dest[a + 1], dest[a]
        couplers.append(CouplerParams(math.pi / 2 if swap else 0.0, 0.0, k, j))
    return CircuitSpec(N, Topology.RECTANGULAR_MESH, couplers)


def permutation_matrix(sigma: Sequence[int]) -> np.ndarray:
    N = len(sigma)
    P = np.zeros((N, N))
    P[list(sigma), list(range(N))] = 1.0
    return P


def hadamard4_recipe() -> CircuitSpec:
    """Four-dimensional Hadamard: wave plates at 45 degrees on every bin, each
    followed by a full swap of the (V,t0)/(H,t1) pair. The swap exchanges the
    polarization and time qubits, so the second wave plate acts on time."""
    q = math.pi / 4
    couplers = [CouplerParams(math.pi / 2, 0.0, 1, 0), CouplerParams(math.pi / 2, 0.0, 3, 0)]
    return CircuitSpec(4, Topology.RECTANGULAR_MESH, couplers, [(0, q), (2, q)])


def galton_board(depth: int, theta: float = math.pi / 4) -> CircuitSpec:
    """Triangular light-cone circuit on 2*depth modes.

    Layer k carries k+1 couplers on the pairs reachable from the input bin, so
    the board has depth*(depth+1)/2 couplers in total.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    N = 2 * depth
    shell = CircuitSpec(N, Topology.GALTON_BOARD)
    couplers = []
    for k in range(depth):
        p = shell.layer_parity(k)
        for i in range(k + 1):
            a = depth - 1 - k + 2 * i
            couplers.append(CouplerParams(float(theta), 0.0, k, (a - p) // 2))
    return CircuitSpec(N, Topology.GALTON_BOARD, couplers)


def galton_input_mode(depth: int, pol="H") -> int:
    """Logical index of (pol, input bin) for a Galton board of ``depth``."""
    pol = Polarization[pol] if isinstance(pol, str) else Polarization(pol)
    return depth - 1 + int(pol)
