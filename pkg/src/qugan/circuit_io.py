"""Plain-text circuit format.

One directive per line; ``#`` starts a comment::

    QUBITS 3
    GATE X 0 0              # rotation exp(-i p[0] X_0 / 2)
    GATE ZZ 1,2 1           # rotation about Z_1 Z_2 reading p[1]
    GATE Y 2 angle=0.25     # rotation with a frozen angle (radians)
    GATE H 0                # fixed gates: H, W, CNOT c,t, CZ c,t
    GATE X 1                # Pauli letters without a parameter: fixed Pauli gate
    OBSERVABLE ZZ 0,2       # measured Pauli string (defaults to Z on qubit 0)
    PARAMS 0.1 -0.3         # optional parameter values

Targets are comma-separated 0-based qubit indices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import FixedGate, ParamCircuit, ParamGate, PauliString
from .simcore import Observable


class CircuitFormatError(ValueError):
    def __init__(self, lineno, message):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class CircuitFile:
    circuit: ParamCircuit
    observable: Observable
    params: np.ndarray | None = None


def _is_pauli_word(kind):
    return bool(kind) and set(kind) <= set("XYZ")


def _targets(token, lineno):
    try:
        return tuple(int(t) for t in token.split(","))
    except ValueError:
        raise CircuitFormatError(lineno, f"bad target list {token!r}") from None


def parse_circuit(text):
    num_qubits = None
    pending = []
    observable_spec = None
    params = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        head = head.upper()
        if head == "QUBITS":
            if len(rest) != 1 or not rest[0].isdigit() or int(rest[0]) < 1:
                raise CircuitFormatError(lineno, "QUBITS takes one positive integer")
            num_qubits = int(rest[0])
        elif head == "GATE":
            if len(rest) not in (2, 3):
                raise CircuitFormatError(lineno, "expected GATE kind targets [param_index | angle=x]")
            pending.append((lineno, rest[0].upper(), _targets(rest[1], lineno),
                            rest[2] if len(rest) == 3 else None))
        elif head == "OBSERVABLE":
            if len(rest) != 2 or not _is_pauli_word(rest[0].upper()):
                raise CircuitFormatError(lineno, "expected OBSERVABLE pauli targets")
            observable_spec = (lineno, rest[0].upper(), _targets(rest[1], lineno))
        elif head == "PARAMS":
            try:
                params = np.array([float(v) for v in rest])
            except ValueError:
                raise CircuitFormatError(lineno, "PARAMS takes real numbers") from None
        else:
            raise CircuitFormatError(lineno, f"unknown directive {head!r}")
    if num_qubits is None:
        raise CircuitFormatError(0, "missing QUBITS line")

    gates = []
    for lineno, kind, targets, arg in pending:
        try:
            gates.append(_make_gate(kind, targets, arg, num_qubits))
        except ValueError as exc:
            raise CircuitFormatError(lineno, str(exc)) from None
    used = [g.param_index for g in gates if g.param_index is not None]
    num_params = max(used) + 1 if used else 0
    try:
        circuit = ParamCircuit(num_qubits, tuple(gates), num_params)
        if observable_spec is None:
            observable = Observable.z(0)
        else:
            lineno, letters, targets = observable_spec
            if max(targets) >= num_qubits:
                raise ValueError(f"observable qubit out of range for {num_qubits} qubits")
            observable = Observable.from_pauli(letters, targets)
    except ValueError as exc:
        raise CircuitFormatError(0, str(exc)) from None
    if params is not None and params.shape[0] != num_params:
        raise CircuitFormatError(0, f"PARAMS lists {params.shape[0]} values, circuit has {num_params}")
    return CircuitFile(circuit, observable, params)


def _make_gate(kind, targets, arg, num_qubits):
    if kind in ("H", "W"):
        if arg is not None:
            raise ValueError(f"{kind} takes no parameter")
        if len(targets) != 1 or not 0 <= targets[0] < num_qubits:
            raise ValueError(f"{kind} needs one in-range target")
        return FixedGate(kind, targets)
    if kind in ("CNOT", "CZ"):
        if arg is not None or len(targets) != 2:
            raise ValueError(f"{kind} takes control,target and no parameter")
        letter = "X" if kind == "CNOT" else "Z"
        return FixedGate.from_pauli(letter, (targets[1],), num_qubits, control=targets[0])
    if not _is_pauli_word(kind):
        raise ValueError(f"unknown gate kind {kind!r}")
    generator = PauliString.parse(kind, targets, num_qubits)
    if arg is None:
        return FixedGate("PAULI", (), None, generator)
    if arg.lower().startswith("angle="):
        return ParamGate(generator, angle=float(arg[6:]))
    if not arg.isdigit():
        raise ValueError(f"parameter must be an index or angle=<radians>, got {arg!r}")
    return ParamGate(generator, param_index=int(arg))


def load_circuit(path):
    with open(path) as fh:
        return parse_circuit(fh.read())


def _gate_line(g):
    if isinstance(g, ParamGate):
        if g.control is not None:
            raise ValueError("controlled rotations have no line-format encoding")
        targets = ",".join(map(str, g.generator.qubits))
        arg = str(g.param_index) if g.param_index is not None else f"angle={g.angle!r}"
        return f"GATE {g.generator.letters} {targets} {arg}"
    if g.kind in ("H", "W") and g.control is None:
        return f"GATE {g.kind} {g.targets[0]}"
    if g.kind == "PAULI" and g.control is None:
        return f"GATE {g.pauli.letters} {','.join(map(str, g.pauli.qubits))}"
    if g.kind == "PAULI" and len(g.targets) == 1 and g.pauli.letters in "XZ":
        return f"GATE {g.name} {g.control},{g.targets[0]}"
    raise ValueError(f"gate {g} has no line-format encoding")


def format_circuit(circuit, observable=None, params=None):
    lines = [f"QUBITS {circuit.num_qubits}"]
    lines += [_gate_line(g) for g in circuit.gates]
    if observable is not None:
        if observable.pauli is None:
            raise ValueError("only Pauli-string observables can be written")
        lines.append(f"OBSERVABLE {observable.pauli} {','.join(map(str, observable.qubits))}")
    if params is not None:
        lines.append("PARAMS " + " ".join(repr(float(v)) for v in params))
    return "\n".join(lines) + "\n"
