"""The ``.tbc`` time-bin circuit format and the unitary CSV format.

A ``.tbc`` document is line oriented; every statement is a keyword followed
by ``key=value`` pairs::

    # middle-pair swap
    circuit N=4 topology=rect name=swap
    coupler layer=1 slot=0 theta=1.57079633 phi=0

Angles are radians. The full grammar is in ``docs/tbc-grammar.md``.
``serialize_circuit`` writes the canonical form: header, hardware, noise,
rotations, couplers (layer-major, slot-minor), phases, with numbers at nine
significant digits; identity couplers and zero rotations/phases are omitted.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, fields
from typing import Optional, Union

import numpy as np

from .elements import (
    CircuitError,
    CircuitSpec,
    CouplerParams,
    Topology,
    check_coupler,
    check_rotation,
)
from .modespace import unitarity_error
from .photonics import HardwareConfig, NoiseModel

__all__ = [
    "TbcError",
    "CircuitSyntaxError",
    "CircuitSemanticError",
    "MatrixFormatError",
    "UnitarityWarning",
    "CircuitDocument",
    "parse_document",
    "parse_circuit",
    "serialize_circuit",
    "canonical_spec",
    "parse_unitary",
    "format_unitary",
]


class TbcError(ValueError):
    """Structured parse failure with a 1-based source position."""

    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"line {line}, column {col}: {message}")


class CircuitSyntaxError(TbcError):
    def __init__(self, message: str, line: int, col: int, expected: Optional[str] = None):
        self.expected = expected
        if expected:
            message = f"{message} (expected {expected})"
        super().__init__(message, line, col)


class CircuitSemanticError(TbcError):
    def __init__(self, message: str, line: int, col: int, constraint: str):
        self.constraint = constraint
        super().__init__(f"{message} [{constraint}]", line, col)


class MatrixFormatError(TbcError):
    pass


class UnitarityWarning(UserWarning):
    pass


TOPOLOGY_NAMES = {"rect": Topology.RECTANGULAR_MESH, "galton": Topology.GALTON_BOARD}
TOPOLOGY_TOKENS = {v: k for k, v in TOPOLOGY_NAMES.items()}

_INT = re.compile(r"[+-]?[0-9]+\Z", re.ASCII)
_FLOAT = re.compile(r"[+-]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?\Z", re.ASCII)
_NAME = re.compile(r"[A-Za-z0-9_.\-]+\Z", re.ASCII)
_TOKEN = re.compile(r"[^ \t\r\f\v]+")

_HW_FIELDS = {f.name: f for f in fields(HardwareConfig)}
_NOISE_FIELDS = {f.name: f for f in fields(NoiseModel)}

# keyword -> (required keys, optional keys)
_STATEMENTS = {
    "circuit": (("N",), ("topology", "name")),
    "coupler": (("layer", "slot", "theta"), ("phi",)),
    "rotation": (("layer", "angle"), ()),
    "phase": (("mode", "phi"), ()),
    "hardware": ((), tuple(_HW_FIELDS)),
    "noise": ((), tuple(_NOISE_FIELDS)),
}
_INT_KEYS = {"N", "layer", "slot", "mode", "seed"}


@dataclass(frozen=True)
class CircuitDocument:
    spec: CircuitSpec
    name: Optional[str] = None
    hardware: Optional[HardwareConfig] = None
    noise: Optional[NoiseModel] = None


@dataclass
class _Value:
    raw: str
    line: int
    col: int


def _tokenize(line: str, lineno: int):
    return [(m.group(), m.start() + 1) for m in _TOKEN.finditer(line)]


def _parse_statement(tokens, lineno: int):
    word, col = tokens[0]
    if word not in _STATEMENTS:
        raise CircuitSyntaxError(
            f"unknown statement {word!r}", lineno, col, "one of " + ", ".join(_STATEMENTS)
        )
    required, optional = _STATEMENTS[word]
    allowed = required + optional
    values = {}
    for tok, tcol in tokens[1:]:
        key, eq, raw = tok.partition("=")
        if not eq or not key:
            raise CircuitSyntaxError(f"malformed assignment {tok!r}", lineno, tcol, "key=value")
        if key not in allowed:
            raise CircuitSyntaxError(
                f"unknown key {key!r} for {word}", lineno, tcol, "one of " + ", ".join(allowed)
            )
        if key in values:
            raise CircuitSyntaxError(f"key {key!r} given twice", lineno, tcol)
        if not raw:
            raise CircuitSyntaxError(f"missing value for {key!r}", lineno, tcol + len(key) + 1,
                                     "a value")
        values[key] = _Value(raw, lineno, tcol + len(key) + 1)
    end = tokens[-1][1] + len(tokens[-1][0])
    for key in required:
        if key not in values:
            raise CircuitSyntaxError(f"{word} is missing {key!r}", lineno, end, f"{key}=...")
    return word, col, values


def _int(v: _Value) -> int:
    if not _INT.match(v.raw):
        raise CircuitSyntaxError(f"malformed integer {v.raw!r}", v.line, v.col, "an integer")
    if len(v.raw) > 18:
        raise CircuitSyntaxError(f"integer {v.raw!r} out of range", v.line, v.col)
    return int(v.raw)


def _float(v: _Value) -> float:
    if not _FLOAT.match(v.raw):
        raise CircuitSyntaxError(f"malformed number {v.raw!r}", v.line, v.col, "a decimal number")
    x = float(v.raw)
    if not math.isfinite(x):
        raise CircuitSyntaxError(f"number {v.raw!r} out of range", v.line, v.col)
    return x


def _typed(key: str, v: _Value):
    return _int(v) if key in _INT_KEYS else _float(v)


def parse_document(text: str) -> CircuitDocument:
    """Parse a ``.tbc`` document; raises :class:`TbcError` subclasses only."""
    header = None
    hardware = noise = None
    couplers = {}
    rotations = []
    phases = {}
    shell = None

    for lineno, line in enumerate(text.split("\n"), start=1):
        body = line.split("#", 1)[0]
        tokens = _tokenize(body, lineno)
        if not tokens:
            continue
        word, col, values = _parse_statement(tokens, lineno)

        if word == "circuit":
            if header is not None:
                raise CircuitSemanticError("second circuit header", lineno, col, "single-header")
            N = _int(values["N"])
            topo = Topology.RECTANGULAR_MESH
            if "topology" in values:
                t = values["topology"]
                if t.raw not in TOPOLOGY_NAMES:
                    raise CircuitSyntaxError(f"unknown topology {t.raw!r}", t.line, t.col,
                                             "rect or galton")
                topo = TOPOLOGY_NAMES[t.raw]
            name = None
            if "name" in values:
                nv = values["name"]
                if not _NAME.match(nv.raw):
                    raise CircuitSyntaxError(f"malformed name {nv.raw!r}", nv.line, nv.col,
                                             "letters, digits, '_', '.', '-'")
                name = nv.raw
            if N < 2 or N % 2 or N > 4096:
                raise CircuitSemanticError(f"N={N} is not an even dimension in 2..4096",
                                           values["N"].line, values["N"].col, "even-dimension")
            shell = CircuitSpec(N, topo)
            header = (N, topo, name)
            continue

        if header is None:
            raise CircuitSyntaxError(f"{word} before the circuit header", lineno, col,
                                     "'circuit N=...' first")

        if word == "coupler":
            c = CouplerParams(
                _float(values["theta"]),
                _float(values["phi"]) if "phi" in values else 0.0,
                _int(values["layer"]),
                _int(values["slot"]),
            )
            try:
                check_coupler(shell, c)
            except CircuitError as exc:
                v = values["slot"] if exc.constraint == "slot-range" else values["layer"]
                raise CircuitSemanticError(str(exc), v.line, v.col, exc.constraint) from None
            key = (c.layer, c.slot)
            if key in couplers:
                raise CircuitSemanticError(
                    f"duplicate coupler at layer={c.layer} slot={c.slot} "
                    f"(first defined on line {couplers[key][1]})",
                    lineno, col, "unique-slot",
                )
            couplers[key] = (c, lineno)
        elif word == "rotation":
            b, angle = _int(values["layer"]), _float(values["angle"])
            try:
                check_rotation(shell, b, angle)
            except CircuitError as exc:
                v = values["layer"]
                raise CircuitSemanticError(str(exc), v.line, v.col, exc.constraint) from None
            rotations.append((b, angle))
        elif word == "phase":
            m = _int(values["mode"])
            if not 0 <= m < shell.n_logical:
                v = values["mode"]
                raise CircuitSemanticError(f"mode {m} outside 0..{shell.n_logical - 1}",
                                           v.line, v.col, "mode-range")
            if m in phases:
                raise CircuitSemanticError(f"phase for mode {m} given twice", lineno, col,
                                           "unique-phase")
            phases[m] = _float(values["phi"])
        elif word in ("hardware", "noise"):
            if (hardware if word == "hardware" else noise) is not None:
                raise CircuitSemanticError(f"second {word} block", lineno, col, f"single-{word}")
            kwargs = {k: _typed(k, v) for k, v in values.items()}
            try:
                obj = HardwareConfig(**kwargs) if word == "hardware" else NoiseModel(**kwargs)
            except ValueError as exc:
                raise CircuitSemanticError(str(exc), lineno, col, f"{word}-values") from None
            if word == "hardware":
                hardware = obj
            else:
                noise = obj

    if header is None:
        raise CircuitSyntaxError("empty document", 1, 1, "'circuit N=...'")
    N, topo, name = header
    phase_layer = tuple(phases.get(i, 0.0) for i in range(N)) if phases else None
    ordered = [c for c, _ in sorted(couplers.values(), key=lambda cl: cl[1])]
    spec = CircuitSpec(N, topo, ordered, rotations, phase_layer)
    return CircuitDocument(spec, name, hardware, noise)


def parse_circuit(text: str) -> CircuitSpec:
    return parse_document(text).spec


# -- serialization ----------------------------------------------------------------


def _q(x: float) -> float:
    return float(f"{x:.9g}") + 0.0


def _num(x: float) -> str:
    return f"{_q(x):.9g}"


def canonical_spec(spec: CircuitSpec) -> CircuitSpec:
    """The circuit as it reads back from its serialization."""
    couplers = []
    for c in sorted(spec.couplers, key=lambda c: (c.layer, c.slot)):
        t, p = _q(c.theta), _q(c.phi)
        if t == 0.0 and p == 0.0:
            continue
        couplers.append(CouplerParams(t, p, c.layer, c.slot))
    rotations = sorted((b, _q(a)) for b, a in spec.global_rotations if _q(a) != 0.0)
    phases = None
    if spec.output_phase_layer is not None:
        q = tuple(_q(p) for p in spec.output_phase_layer)
        phases = q if any(q) else None
    return CircuitSpec(spec.n_logical, spec.topology, couplers, rotations, phases)


def _block(word: str, obj) -> str:
    parts = []
    for f in fields(obj):
        v = getattr(obj, f.name)
        if v is None:
            continue
        parts.append(f"{f.name}={v if isinstance(v, int) and not isinstance(v, bool) else _num(v)}")
    return f"{word} " + " ".join(parts) if parts else word


def serialize_circuit(obj: Union[CircuitSpec, CircuitDocument]) -> str:
    doc = obj if isinstance(obj, CircuitDocument) else CircuitDocument(obj)
    spec = canonical_spec(doc.spec)
    head = f"circuit N={spec.n_logical} topology={TOPOLOGY_TOKENS[spec.topology]}"
    if doc.name:
        head += f" name={doc.name}"
    lines = [head]
    if doc.hardware is not None:
        lines.append(_block("hardware", doc.hardware))
    if doc.noise is not None:
        lines.append(_block("noise", doc.noise))
    for b, a in spec.global_rotations:
        lines.append(f"rotation layer={b} angle={_num(a)}")
    for c in spec.couplers:
        lines.append(
            f"coupler layer={c.layer} slot={c.slot} theta={_num(c.theta)} phi={_num(c.phi)}"
        )
    if spec.output_phase_layer is not None:
        for i, p in enumerate(spec.output_phase_layer):
            if p != 0.0:
                lines.append(f"phase mode={i} phi={_num(p)}")
    return "\n".join(lines) + "\n"


# -- unitary CSV ------------------------------------------------------------------

WARN_TOL = 1e-8
ERROR_TOL = 1e-4


def parse_unitary(text: str) -> np.ndarray:
    """Read ``rows,cols`` then ``i,j,re,im`` lines into a square complex matrix.

    Literal ``rows,cols`` / ``i,j,re,im`` header lines and ``#`` comments are
    skipped. Deviation from unitarity above 1e-8 warns, above 1e-4 fails.
    """
    dims = None
    entries = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        cells = [c.strip() for c in body.split(",")]
        if cells in (["rows", "cols"], ["i", "j", "re", "im"]):
            continue
        if dims is None:
            if len(cells) != 2:
                raise MatrixFormatError("expected 'rows,cols'", lineno, 1)
            r, c = (_int(_Value(x, lineno, 1)) for x in cells)
            if r <= 0 or c <= 0 or r > 4096 or c > 4096:
                raise MatrixFormatError(f"bad dimensions {r}x{c}", lineno, 1)
            if r != c:
                raise MatrixFormatError(f"matrix must be square, got {r}x{c}", lineno, 1)
            dims = (r, c)
            continue
        if len(cells) != 4:
            raise MatrixFormatError("expected 'i,j,re,im'", lineno, 1)
        i, j = (_int(_Value(x, lineno, 1)) for x in cells[:2])
        re_, im_ = (_float(_Value(x, lineno, 1)) for x in cells[2:])
        if not (0 <= i < dims[0] and 0 <= j < dims[1]):
            raise MatrixFormatError(f"entry ({i},{j}) outside {dims[0]}x{dims[1]}", lineno, 1)
        if (i, j) in entries:
            raise MatrixFormatError(f"entry ({i},{j}) given twice", lineno, 1)
        entries[(i, j)] = complex(re_, im_)
    if dims is None:
        raise MatrixFormatError("missing 'rows,cols' header", 1, 1)
    missing = [(i, j) for i in range(dims[0]) for j in range(dims[1]) if (i, j) not in entries]
    if missing:
        shown = ", ".join(f"({i},{j})" for i, j in missing[:5])
        raise MatrixFormatError(f"incomplete matrix, missing entries {shown}", lineno, 1)
    U = np.zeros(dims, dtype=complex)
    for (i, j), z in entries.items():
        U[i, j] = z
    dev = unitarity_error(U)
    if dev > ERROR_TOL:
        raise MatrixFormatError(f"matrix is not unitary (deviation {dev:.3g})", 1, 1)
    if dev > WARN_TOL:
        warnings.warn(f"matrix deviates from unitarity by {dev:.3g}", UnitarityWarning,
                      stacklevel=2)
    return U


def format_unitary(U) -> str:
    U = np.asarray(U, dtype=complex)
    lines = ["rows,cols", f"{U.shape[0]},{U.shape[1]}", "i,j,re,im"]
    for i in range(U.shape[0]):
        for j in range(U.shape[1]):
            lines.append(f"{i},{j},{U[i, j].real:.17g},{U[i, j].imag:.17g}")
    return "\n".join(lines) + "\n"
