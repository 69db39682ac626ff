"""Detection statistics for compiled circuits.

Detection matrices follow the Born rule column by column (column j is the
distribution over outputs for a photon entering mode j), scaled by the total
transmittance. Fidelities compare column-normalized matrices through
elementwise square roots, so loss never reads as infidelity.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .modespace import basis_matrix, unitarity_error

MAX_PHOTONS = 4


def detection_matrix(U, eta: float = 1.0, basis: Optional[str] = None,
                     tol: float = 1e-10) -> np.ndarray:
    """``p_ij = eta |<b_i| U |b_j>|^2``.

    With ``basis=None`` the b_j are computational modes. Otherwise photons
    are prepared and analysed in the named family (``dft``, ``xi``, ``zeta``
    at N=4).
    """
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    if unitarity_error(U) > tol:
        raise ValueError(f"matrix is not unitary within {tol:g}")
    if not 0 < eta <= 1:
        raise ValueError(f"transmittance must lie in (0, 1], got {eta}")
    if basis is not None and basis != "computational":
        B = basis_matrix(basis, U.shape[0])
        U = B.conj().T @ U @ B
    return eta * np.abs(U) ** 2


def _normalize_columns(P: np.ndarray) -> np.ndarray:
    sums = P.sum(axis=0)
    if np.any(sums <= 0):
        bad = int(np.flatnonzero(sums <= 0)[0])
        raise ValueError(f"column {bad} has no detection probability")
    return P / sums


def fidelity(P_target, P_exp) -> float:
    """``(1/N) sum_ij sqrt(Pt_ij) sqrt(Pe_ij)`` on column-normalized matrices."""
    Pt = np.asarray(P_target, dtype=float)
    Pe = np.asarray(P_exp, dtype=float)
    if Pt.shape != Pe.shape or Pt.ndim != 2:
        raise ValueError(f"shape mismatch {Pt.shape} vs {Pe.shape}")
    if np.any(Pt < 0) or np.any(Pe < 0):
        raise ValueError("probabilities must be non-negative")
    Pt = _normalize_columns(Pt)
    Pe = _normalize_columns(Pe)
    F = float(np.sum(np.sqrt(Pt * Pe)) / Pt.shape[1])
    return min(F, 1.0)


def distribution_fidelity(p, q) -> float:
    """Single-column version of :func:`fidelity` (Bhattacharyya overlap)."""
    p = np.asarray(p, dtype=float).reshape(-1, 1)
    q = np.asarray(q, dtype=float).reshape(-1, 1)
    return fidelity(p, q)


# -- counting -----------------------------------------------------------------


@dataclass(frozen=True)
class CountsRecord:
    input_mode: int
    counts: np.ndarray
    lost: int
    shots: int
    duration_s: float

    @property
    def detected(self) -> int:
        return int(self.counts.sum())


def sample_counts(P, j: int, shots: int, rng: np.random.Generator,
                  dark_rate: float = 0.0, rep_rate_hz: float = 80e6) -> CountsRecord:
    """Multinomial draw over the N outputs plus a no-click outcome.

    Dark counts enter as a uniform background: a shot that would otherwise
    give no click registers in a random detector with probability
    ``N * dark_rate / rep_rate_hz``.
    """
    P = np.asarray(P, dtype=float)
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= j < P.shape[1]:
        raise IndexError(f"input {j} out of range")
    col = np.clip(P[:, j], 0.0, None)
    total = col.sum()
    if total > 1 + 1e-9:
        raise ValueError(f"column {j} sums to {total} > 1")
    N = col.size
    miss = max(0.0, 1.0 - total)
    if dark_rate > 0:
        p_dark = min(1.0, N * dark_rate / rep_rate_hz)
        col = col + miss * p_dark / N
        miss *= 1.0 - p_dark
    probs = np.append(col, miss)
    probs /= probs.sum()
    draw = rng.multinomial(shots, probs)
    return CountsRecord(j, draw[:N], int(draw[N]), shots, shots / rep_rate_hz)


def sample_detection_counts(P, shots: int, rng: np.random.Generator,
                            dark_rate: float = 0.0, rep_rate_hz: float = 80e6) -> list:
    return [sample_counts(P, j, shots, rng, dark_rate, rep_rate_hz) for j in range(P.shape[1])]


def estimate_detection_matrix(counts) -> np.ndarray:
    """Column-normalized empirical frequencies.

    ``counts`` is either a sequence of :class:`CountsRecord` (one per input,
    in input order) or an N x N array whose column j holds the counts for
    input j.
    """
    if len(counts) and isinstance(counts[0], CountsRecord):
        C = np.column_stack([r.counts for r in counts]).astype(float)
    else:
        C = np.asarray(counts, dtype=float)
    if C.ndim != 2:
        raise ValueError("expected a 2-d counts table")
    sums = C.sum(axis=0)
    if np.any(sums <= 0):
        raise ValueError(f"input column {int(np.flatnonzero(sums <= 0)[0])} has no detections")
    return C / sums


# -- few-photon amplitudes ------------------------------------------------------


def permanent(M) -> complex:
    """Ryser's inclusion-exclusion formula (exponential; meant for n <= 4)."""
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    if M.shape != (n, n):
        raise ValueError("permanent needs a square matrix")
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for r in range(1, n + 1):
        sign = (-1) ** r
        for cols in itertools.combinations(range(n), r):
            total += sign * np.prod(M[:, cols].sum(axis=1))
    return complex((-1) ** n * total)


def _multiplicity_norm(modes: Sequence[int]) -> float:
    return math.prod(math.factorial(m) for m in Counter(modes).values())


def multi_photon_amplitude(U, input_modes: Sequence[int], output_modes: Sequence[int]) -> complex:
    """Transition amplitude between occupation patterns given as mode multisets."""
    U = np.asarray(U, dtype=complex)
    n = len(input_modes)
    if len(output_modes) != n:
        raise ValueError("input and output patterns must hold the same photon number")
    if n > MAX_PHOTONS:
        raise ValueError(f"at most {MAX_PHOTONS} photons supported, got {n}")
    dim = U.shape[0]
    if any(not 0 <= m < dim for m in list(input_modes) + list(output_modes)):
        raise IndexError("mode index out of range")
    sub = U[np.ix_(sorted(output_modes), sorted(input_modes))]
    norm = math.sqrt(_multiplicity_norm(input_modes) * _multiplicity_norm(output_modes))
    return permanent(sub) / norm


def output_distribution(U, input_modes: Sequence[int]) -> dict:
    """Probability of every output pattern (sorted mode tuple)."""
    U = np.asarray(U, dtype=complex)
    n = len(input_modes)
    return {
        out: abs(multi_photon_amplitude(U, input_modes, out)) ** 2
        for out in itertools.combinations_with_replacement(range(U.shape[0]), n)
    }


# -- serialization --------------------------------------------------------------


def matrix_to_csv(P) -> str:
    P = np.asarray(P)
    lines = ["i,j,value"]
    for i in range(P.shape[0]):
        for j in range(P.shape[1]):
            lines.append(f"{i},{j},{P[i, j]:.12g}")
    return "\n".join(lines) + "\n"
