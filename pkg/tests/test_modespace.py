import numpy as np
import pytest
from hypothesis import given, strategies as st

from timebin.modespace import (
    BASIS_FAMILIES,
    ModeIndex,
    ModeSpace,
    Polarization,
    basis_matrix,
    basis_state,
    equal_up_to_phase,
    flat_index,
    is_unitary,
    max_phase_deviation,
    unflatten,
)


def test_flat_index_ordering():
    assert flat_index(ModeIndex(Polarization.H, 0)) == 0
    assert flat_index(ModeIndex(Polarization.V, 0)) == 1
    assert flat_index(ModeIndex(Polarization.H, 3)) == 6


@given(st.integers(0, 10_000))
def test_flatten_roundtrip(i):
    assert flat_index(unflatten(i)) == i


def test_unflatten_rejects_negative():
    with pytest.raises((ValueError, IndexError)):
        unflatten(-1)


def test_for_network_padding():
    s = ModeSpace.for_network(4, 4)
    assert s.n_bins_padded == 4 // 2 + 4 + 1
    assert s.dim == 2 * s.n_bins_padded
    assert s.n_bins_padded >= s.required_bins(4)


@pytest.mark.parametrize("n,bins,off", [(3, 4, 0), (0, 4, 0), (4, 1, 0), (4, 4, 2)])
def test_modespace_rejects(n, bins, off):
    with pytest.raises(ValueError):
        ModeSpace(n, bins, off)


def test_logical_positions_shift_per_layer():
    s = ModeSpace(4, 8, 1)
    np.testing.assert_array_equal(s.logical_positions(0), [1, 2, 3, 4])
    np.testing.assert_array_equal(s.logical_positions(3), [4, 5, 6, 7])


@pytest.mark.parametrize("family", BASIS_FAMILIES)
def test_basis_families_orthonormal(family):
    B = basis_matrix(family, 4)
    np.testing.assert_allclose(B.conj().T @ B, np.eye(4), atol=1e-14)


def test_dft_basis_explicit():
    # (|H>+|V>)(|t0>+|t1>)/2 then sign on polarization
    np.testing.assert_allclose(basis_state("dft", 0, 4), [0.5] * 4)
    np.testing.assert_allclose(basis_state("dft", 1, 4), [0.5, -0.5, 0.5, -0.5])
    np.testing.assert_allclose(basis_state("xi", 2, 4), [0, 0, 2**-0.5, 2**-0.5])
    np.testing.assert_allclose(basis_state("zeta", 1, 4), [2**-0.5, 0, -(2**-0.5), 0])


def test_basis_errors():
    with pytest.raises(ValueError):
        basis_state("dft", 0, 6)
    with pytest.raises(IndexError):
        basis_state("computational", 4, 4)
    with pytest.raises(ValueError):
        basis_state("fourier", 0, 4)


def test_unitarity_helpers():
    assert is_unitary(np.eye(3))
    assert not is_unitary(np.diag([1, 1, 1.1]))
    with pytest.raises(ValueError):
        is_unitary(np.ones((2, 3)))


@given(st.floats(-10, 10))
def test_global_phase_invariance(alpha):
    U = np.array([[0, 1], [1j, 0]])
    assert equal_up_to_phase(U, np.exp(1j * alpha) * U)
    assert max_phase_deviation(U, np.exp(1j * alpha) * U) < 1e-12
