import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timebin.compiler import reconstruct
from timebin.elements import (
    CircuitError,
    CircuitSpec,
    CouplerParams,
    InsufficientPaddingError,
    Topology,
    birefringent_shift,
    compose_network,
    coupler_block,
    kerr_layer,
    logical_unitary,
    polarization_rotation,
    poutine,
)
from timebin.modespace import ModeSpace, is_unitary


@given(st.floats(-7, 7), st.floats(-7, 7))
def test_coupler_block_unitary(theta, phi):
    assert is_unitary(coupler_block(theta, phi))


def test_coupler_block_values():
    B = coupler_block(math.pi / 2, 0.3)
    np.testing.assert_allclose(np.abs(B), [[0, 1], [1, 0]], atol=1e-16)
    np.testing.assert_allclose(coupler_block(0.0, 0.0), np.eye(2))


def test_birefringent_shift_moves_v_only():
    s = ModeSpace(2, 3)
    B = birefringent_shift(s)
    # H of bin 0 stays, V of bin 0 lands on V of bin 1
    assert B[0, 0] == 1 and B[3, 1] == 1
    assert np.allclose(B @ B.T, np.eye(6))


def test_birefringent_padding_check():
    with pytest.raises(InsufficientPaddingError):
        birefringent_shift(ModeSpace(2, 3), highest_bin=2)


def test_rotation_is_kron():
    s = ModeSpace(2, 2)
    R = polarization_rotation(math.pi / 2, s)
    np.testing.assert_allclose(R[:2, :2], [[0, -1], [1, 0]], atol=1e-16)
    assert np.all(R[:2, 2:] == 0)


def test_kerr_layer_rejects_bad_slots():
    s = ModeSpace.for_network(4, 4)
    with pytest.raises(CircuitError):
        kerr_layer(1, [CouplerParams(1, 0, 1, 1)], s)
    with pytest.raises(CircuitError):
        kerr_layer(0, [CouplerParams(1, 0, 0, 0), CouplerParams(1, 0, 0, 0)], s)


def test_poutine_unitary():
    s = ModeSpace.for_network(4, 4)
    P = poutine(0, [CouplerParams(0.4, 0.2, 0, 1)], s)
    assert is_unitary(P)


@pytest.mark.parametrize("N", [2, 4, 6, 8])
def test_idle_network_is_identity(N):
    U = logical_unitary(CircuitSpec(N))
    np.testing.assert_allclose(U, np.eye(N), atol=1e-14)


def test_galton_idle_is_identity():
    for N in (2, 4, 6):
        U = logical_unitary(CircuitSpec(N, Topology.GALTON_BOARD))
        np.testing.assert_allclose(U, np.eye(N), atol=1e-14)


def test_single_coupler_first_layer_is_block():
    theta, phi = 0.7, 1.1
    U = logical_unitary(CircuitSpec(2, couplers=[CouplerParams(theta, phi, 0, 0)]))
    np.testing.assert_allclose(U, coupler_block(theta, phi), atol=1e-14)


def test_middle_coupler_probabilities():
    theta = 0.5
    U = logical_unitary(CircuitSpec(4, couplers=[CouplerParams(theta, 0.0, 1, 0)]))
    P = np.abs(U) ** 2
    expected = np.eye(4)
    expected[1:3, 1:3] = [[math.cos(theta) ** 2, math.sin(theta) ** 2],
                          [math.sin(theta) ** 2, math.cos(theta) ** 2]]
    np.testing.assert_allclose(P, expected, atol=1e-14)


def test_insufficient_padding():
    spec = CircuitSpec(4, couplers=[CouplerParams(1.0, 0, 3, 0)])
    with pytest.raises(InsufficientPaddingError):
        compose_network(spec, ModeSpace(4, 3))


def test_space_mismatch():
    with pytest.raises(CircuitError):
        compose_network(CircuitSpec(4), ModeSpace.for_network(6, 6))


@pytest.mark.parametrize(
    "kwargs,constraint",
    [
        (dict(n_logical=3), "even-dimension"),
        (dict(n_logical=4, couplers=[CouplerParams(1, 0, 4, 0)]), "layer-range"),
        (dict(n_logical=4, couplers=[CouplerParams(1, 0, 1, 1)]), "slot-range"),
        (dict(n_logical=4, couplers=[CouplerParams(1, 0, 0, 0), CouplerParams(2, 0, 0, 0)]), "unique-slot"),
        (dict(n_logical=4, couplers=[CouplerParams(float("nan"), 0, 0, 0)]), "finite"),
        (dict(n_logical=4, global_rotations=[(1, 0.3)]), "rotation-parity"),
        (dict(n_logical=4, output_phase_layer=(0.0, 0.0)), "phase-count"),
    ],
)
def test_spec_validation(kwargs, constraint):
    with pytest.raises(CircuitError) as exc:
        CircuitSpec(**kwargs)
    assert exc.value.constraint == constraint


def test_galton_geometry():
    spec = CircuitSpec(6, Topology.GALTON_BOARD)
    assert spec.n_layers == 3
    # first layer couples the middle pair (2, 3)
    assert spec.coupled_modes(CouplerParams(0, 0, 0, 1)) == (2, 3)


def _random_spec(rng, N):
    couplers = []
    for k in range(N):
        p = k % 2
        for j in range((N - p) // 2):
            if rng.random() < 0.7:
                couplers.append(CouplerParams(rng.uniform(0, math.pi / 2), rng.uniform(-math.pi, math.pi), k, j))
    rots = [(b, rng.uniform(-1, 1)) for b in range(0, N + 1, 2) if rng.random() < 0.3]
    return CircuitSpec(N, couplers=couplers, global_rotations=rots)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8]))
def test_physical_matches_abstract_amplitudes(seed, N):
    spec = _random_spec(np.random.default_rng(seed), N)
    np.testing.assert_allclose(logical_unitary(spec), reconstruct(spec), atol=1e-12)


def test_register_product_is_unitary():
    spec = _random_spec(np.random.default_rng(3), 6)
    U, relabel = compose_network(spec)
    assert is_unitary(U)
    assert len(set(relabel.outputs.tolist())) == 6
