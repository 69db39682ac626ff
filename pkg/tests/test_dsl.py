import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from timebin.compiler import galton_board, hadamard4_recipe
from timebin.dsl import (
    CircuitDocument,
    CircuitSemanticError,
    CircuitSyntaxError,
    MatrixFormatError,
    TbcError,
    UnitarityWarning,
    canonical_spec,
    format_unitary,
    parse_circuit,
    parse_document,
    parse_unitary,
    serialize_circuit,
)
from timebin.elements import CircuitSpec, CouplerParams
from timebin.harness import generated_corpus
from timebin.photonics import HardwareConfig, NoiseModel


def test_minimal_document():
    spec = parse_circuit("circuit N=4 topology=rect\ncoupler layer=1 slot=0 theta=1.570796 phi=0")
    assert spec.n_logical == 4
    assert spec.couplers == (CouplerParams(1.570796, 0.0, 1, 0),)


def test_comments_blank_lines_and_crlf():
    text = "# header\r\n\r\ncircuit N=2   # trailing\r\n\tcoupler layer=0 slot=0 theta=0.5\r\n"
    spec = parse_circuit(text)
    assert spec.couplers[0].phi == 0.0


def test_duplicate_coupler_named():
    text = "circuit N=4\ncoupler layer=1 slot=0 theta=1\ncoupler layer=1 slot=0 theta=2\n"
    with pytest.raises(CircuitSemanticError) as exc:
        parse_circuit(text)
    e = exc.value
    assert e.constraint == "unique-slot" and e.line == 3
    assert "layer=1 slot=0" in str(e) and "line 2" in str(e)


def test_malformed_number_position():
    with pytest.raises(CircuitSyntaxError) as exc:
        parse_circuit("circuit N=4\ncoupler layer=1 slot=0 theta=abc phi=0")
    assert (exc.value.line, exc.value.col) == (2, 30)
    assert "abc" in exc.value.message


@pytest.mark.parametrize(
    "text,kind,constraint",
    [
        ("", CircuitSyntaxError, None),
        ("coupler layer=0 slot=0 theta=1", CircuitSyntaxError, None),
        ("circuit N=5", CircuitSemanticError, "even-dimension"),
        ("circuit N=4\ncircuit N=4", CircuitSemanticError, "single-header"),
        ("circuit N=4\ncoupler layer=0 slot=2 theta=1", CircuitSemanticError, "slot-range"),
        ("circuit N=4\ncoupler layer=4 slot=0 theta=1", CircuitSemanticError, "layer-range"),
        ("circuit N=4\nrotation layer=3 angle=1", CircuitSemanticError, "rotation-parity"),
        ("circuit N=4\nphase mode=4 phi=1", CircuitSemanticError, "mode-range"),
        ("circuit N=4\nnoise theta_rel_jitter=-1", CircuitSemanticError, "noise-values"),
        ("circuit N=4\ncoupler layer=0 slot=0 theta=1e999", CircuitSyntaxError, None),
        ("circuit N=4\ncoupler layer=0 slot=0 theta=inf", CircuitSyntaxError, None),
        ("circuit N=4\ncoupler layer=0 slot=0", CircuitSyntaxError, None),
        ("circuit N=4\ncoupler layer=0 layer=0 slot=0 theta=1", CircuitSyntaxError, None),
        ("circuit N=4\ncoupler layer=0 slot=0 theta=1 colour=red", CircuitSyntaxError, None),
        ("circuit N=4\nbeamsplitter a=1", CircuitSyntaxError, None),
        ("circuit N=4 topology=hex", CircuitSyntaxError, None),
    ],
)
def test_structured_errors(text, kind, constraint):
    with pytest.raises(kind) as exc:
        parse_document(text)
    e = exc.value
    assert e.line >= 1 and e.col >= 1
    assert f"line {e.line}, column {e.col}" in str(e)
    if constraint:
        assert e.constraint == constraint


def test_serialize_zero_spec():
    text = serialize_circuit(CircuitSpec(6, couplers=[CouplerParams(0.0, 0.0, 0, 0)]))
    assert text == "circuit N=6 topology=rect\n"


def test_galton_depth3_lines():
    text = serialize_circuit(galton_board(3))
    assert sum(line.startswith("coupler") for line in text.splitlines()) == 6
    assert "topology=galton" in text


def test_canonical_ordering_and_digits():
    spec = CircuitSpec(4, couplers=[CouplerParams(1 / 3, -0.0, 2, 1), CouplerParams(math.pi / 2, 0.0, 0, 0)])
    lines = serialize_circuit(spec).splitlines()
    assert lines[1] == "coupler layer=0 slot=0 theta=1.57079633 phi=0"
    assert lines[2] == "coupler layer=2 slot=1 theta=0.333333333 phi=0"


def test_document_roundtrip_with_blocks():
    doc = CircuitDocument(
        hadamard4_recipe(), "had4",
        HardwareConfig(system_loss_db=-7.2), NoiseModel(theta_rel_jitter=0.01, seed=7),
    )
    back = parse_document(serialize_circuit(doc))
    assert back.name == "had4"
    assert back.hardware == doc.hardware and back.noise == doc.noise
    assert back.spec == canonical_spec(doc.spec)
    assert serialize_circuit(back) == serialize_circuit(doc)


def test_corpus_roundtrip():
    for spec in generated_corpus(seed=1):
        text = serialize_circuit(spec)
        back = parse_circuit(text)
        assert back == canonical_spec(spec)
        assert serialize_circuit(back) == text


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 4, 6, 8]))
def test_random_spec_roundtrip(seed, N):
    rng = np.random.default_rng(seed)
    couplers = [CouplerParams(float(rng.uniform(0, 2)), float(rng.uniform(-4, 4)), k, j)
                for k in range(N) for j in range((N - k % 2) // 2) if rng.random() < 0.6]
    phases = tuple(rng.uniform(-3, 3, N)) if rng.random() < 0.5 else None
    rots = [(b, float(rng.normal())) for b in range(0, N + 1, 2) if rng.random() < 0.3]
    spec = CircuitSpec(N, couplers=couplers, global_rotations=rots, output_phase_layer=phases)
    text = serialize_circuit(spec)
    assert serialize_circuit(parse_circuit(text)) == text
    assert parse_circuit(text) == canonical_spec(spec)


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=200))
def test_arbitrary_text_never_crashes(text):
    try:
        parse_document(text)
    except TbcError as e:
        assert e.line >= 1 and e.col >= 1


# -- unitary CSV -------------------------------------------------------------------


def test_identity_csv():
    U = parse_unitary("2,2\n0,0,1,0\n0,1,0,0\n1,0,0,0\n1,1,1,0\n")
    np.testing.assert_array_equal(U, np.eye(2))


def test_csv_missing_entry():
    with pytest.raises(MatrixFormatError) as exc:
        parse_unitary("2,2\n0,0,1,0\n1,0,0,0\n1,1,1,0\n")
    assert "(0,1)" in str(exc.value)


def test_csv_dimension_mismatch():
    with pytest.raises(MatrixFormatError):
        parse_unitary("2,3\n")
    with pytest.raises(MatrixFormatError):
        parse_unitary("2,2\n2,0,1,0\n")


def test_csv_perturbed_hadamard_warns():
    H = np.kron([[1, 1], [1, -1]], [[1, 1], [1, -1]]) / 2
    H[1, 2] += 1e-6
    with pytest.warns(UnitarityWarning):
        U = parse_unitary(format_unitary(H))
    np.testing.assert_allclose(U, H)


def test_csv_gross_nonunitary():
    with pytest.raises(MatrixFormatError):
        parse_unitary(format_unitary(np.ones((2, 2))))


def test_csv_roundtrip_exact():
    V = np.linalg.qr(np.random.default_rng(0).normal(size=(4, 4)) + 0j)[0]
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        np.testing.assert_array_equal(parse_unitary(format_unitary(V)), V)
