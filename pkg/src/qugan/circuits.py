"""Parametrized-circuit representation.

Gates are either ``ParamGate`` rotations ``exp(-i theta h / 2)`` about a Pauli
string ``h`` or ``FixedGate`` entries (H, W, and fixed/controlled Pauli
strings).  A ``ParamCircuit`` applies its gates first to last, so the circuit
unitary is ``U_N ... U_1``.

The array kernels (``ParamCircuit.apply`` and friends) act on raw numpy arrays
of shape ``(2**q,)`` or ``(2**q, K)`` so that a batch of states can be pushed
through a circuit in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .simcore import PAULI_MATRICES, StateVector, apply_matrix, is_unitary

MAX_DENSE_QUBITS = 10

_W = np.array([[1, -1j], [-1j, 1]], dtype=complex) / np.sqrt(2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
DENSE_GATES = {"H": _H, "W": _W}


@lru_cache(maxsize=None)
def _pauli_kernel(factors, num_qubits):
    """Index map and phases with ``(P a)[y] = phase[y] * a[index[y]]``."""
    dim = 1 << num_qubits
    x = np.arange(dim)
    mask = 0
    phase = np.ones(dim, dtype=complex)
    for q, p in factors:
        shift = num_qubits - 1 - q
        bit = (x >> shift) & 1
        if p in "XY":
            mask |= 1 << shift
        if p == "Z":
            phase = phase * (1 - 2 * bit)
        elif p == "Y":
            phase = phase * (1j * (1 - 2 * bit))
    index = x ^ mask
    src_phase = phase[index]
    index.setflags(write=False)
    src_phase.setflags(write=False)
    return (None if mask == 0 else index), src_phase


@lru_cache(maxsize=None)
def _control_rows(control, num_qubits):
    x = np.arange(1 << num_qubits)
    rows = ((x >> (num_qubits - 1 - control)) & 1).astype(bool)
    rows.setflags(write=False)
    return rows


def _bcast(vec, arr):
    return vec if arr.ndim == 1 else vec[:, None]


@dataclass(frozen=True)
class PauliString:
    """Tensor product of X/Y/Z factors on a ``scope``-qubit register."""

    factors: tuple
    scope: int

    def __post_init__(self):
        items = self.factors.items() if isinstance(self.factors, dict) else self.factors
        factors = tuple(sorted((int(q), str(p).upper()) for q, p in items))
        if not factors:
            raise ValueError("a Pauli-string generator needs at least one non-identity factor")
        qubits = [q for q, _ in factors]
        if len(set(qubits)) != len(qubits):
            raise ValueError("repeated qubit in Pauli string")
        for q, p in factors:
            if p not in ("X", "Y", "Z"):
                raise ValueError(f"unknown Pauli factor {p!r}")
            if not 0 <= q < self.scope:
                raise ValueError(f"factor on qubit {q} outside scope {self.scope}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def parse(cls, letters, qubits, scope):
        letters = letters.upper()
        if len(letters) != len(qubits):
            raise ValueError(f"{letters!r} needs {len(letters)} qubits, got {len(qubits)}")
        return cls(tuple((q, p) for q, p in zip(qubits, letters) if p != "I"), scope)

    @property
    def qubits(self):
        return tuple(q for q, _ in self.factors)

    @property
    def letters(self):
        return "".join(p for _, p in self.factors)

    @property
    def is_diagonal(self):
        return all(p == "Z" for _, p in self.factors)

    def remap(self, mapping, scope):
        return PauliString(tuple((mapping[q], p) for q, p in self.factors), scope)

    def apply(self, arr, num_qubits=None):
        index, phase = _pauli_kernel(self.factors, num_qubits or self.scope)
        src = arr if index is None else arr[index]
        return _bcast(phase, arr) * src

    def local_matrix(self):
        m = np.array([[1.0]], dtype=complex)
        for _, p in self.factors:
            m = np.kron(m, PAULI_MATRICES[p])
        return m

    def matrix(self):
        """Dense ``2**scope`` matrix."""
        return self.apply(np.eye(2**self.scope, dtype=complex))

    def __str__(self):
        return " ".join(f"{p}{q}" for q, p in self.factors)


def _check_control(control, targets):
    if control is not None and control in targets:
        raise ValueError(f"control qubit {control} collides with targets {targets}")


@dataclass(frozen=True)
class ParamGate:
    """Rotation ``exp(-i theta h / 2)``, optionally conditioned on a control qubit.

    ``theta`` is read from ``params[param_index]`` or fixed by ``angle``.
    """

    generator: PauliString
    param_index: int | None = None
    angle: float | None = None
    control: int | None = None

    def __post_init__(self):
        if (self.param_index is None) == (self.angle is None):
            raise ValueError("a ParamGate needs exactly one of param_index or angle")
        _check_control(self.control, self.generator.qubits)

    @property
    def frozen(self):
        return self.param_index is None

    @property
    def qubits(self):
        head = () if self.control is None else (self.control,)
        return head + self.generator.qubits

    def theta(self, params):
        return self.angle if self.param_index is None else params[self.param_index]

    def apply(self, arr, params, num_qubits, adjoint=False):
        theta = self.theta(params)
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        if adjoint:
            s = -s
        gen = self.generator
        index, phase = _pauli_kernel(gen.factors, num_qubits)
        if index is None:
            out = _bcast(c - 1j * s * phase, arr) * arr
        else:
            out = c * arr - (1j * s) * (_bcast(phase, arr) * arr[index])
        if self.control is not None:
            out = np.where(_bcast(_control_rows(self.control, num_qubits), arr), out, arr)
        return out

    def remap(self, mapping, num_qubits):
        return replace(
            self,
            generator=self.generator.remap(mapping, num_qubits),
            control=None if self.control is None else mapping[self.control],
        )


@dataclass(frozen=True)
class FixedGate:
    """Parameter-free gate.

    ``kind`` is ``"H"`` or ``"W"`` (single-qubit dense gates on ``targets``) or
    ``"PAULI"`` (the Pauli string ``pauli`` applied as a unitary).  Any kind may
    carry a ``control`` qubit.
    """

    kind: str
    targets: tuple
    control: int | None = None
    pauli: PauliString | None = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind == "PAULI":
            if self.pauli is None:
                raise ValueError("PAULI gate requires a Pauli string")
            object.__setattr__(self, "targets", self.pauli.qubits)
        elif self.kind in DENSE_GATES:
            if len(self.targets) != 1:
                raise ValueError(f"{self.kind} acts on exactly one qubit")
        else:
            raise ValueError(f"unknown fixed gate kind {self.kind!r}")
        _check_control(self.control, self.targets)

    @classmethod
    def h(cls, q):
        return cls("H", (q,))

    @classmethod
    def w(cls, q):
        return cls("W", (q,))

    @classmethod
    def from_pauli(cls, letters, qubits, scope, control=None):
        return cls("PAULI", (), control, PauliString.parse(letters, qubits, scope))

    @classmethod
    def x(cls, q, scope):
        return cls.from_pauli("X", (q,), scope)

    @classmethod
    def z(cls, q, scope):
        return cls.from_pauli("Z", (q,), scope)

    @classmethod
    def cnot(cls, control, target, scope):
        return cls.from_pauli("X", (target,), scope, control=control)

    @classmethod
    def cz(cls, control, target, scope):
        return cls.from_pauli("Z", (target,), scope, control=control)

    frozen = True
    param_index = None

    @property
    def name(self):
        if self.kind != "PAULI":
            return self.kind if self.control is None else "C" + self.kind
        letters = self.pauli.letters
        if self.control is None:
            return letters
        if letters == "X":
            return "CNOT"
        return "C" + letters

    @property
    def qubits(self):
        head = () if self.control is None else (self.control,)
        return head + self.targets

    def apply(self, arr, params, num_qubits, adjoint=False):
        if self.kind == "PAULI":
            out = self.pauli.apply(arr, num_qubits)
        else:
            m = DENSE_GATES[self.kind]
            out = apply_matrix(arr, m.conj().T if adjoint else m, self.targets, num_qubits)
        if self.control is not None:
            out = np.where(_bcast(_control_rows(self.control, num_qubits), arr), out, arr)
        return out

    def remap(self, mapping, num_qubits):
        return replace(
            self,
            targets=tuple(mapping[t] for t in self.targets),
            control=None if self.control is None else mapping[self.control],
            pauli=None if self.pauli is None else self.pauli.remap(mapping, num_qubits),
        )


def gate_matrix(gate, params=()):
    """Dense matrix of ``gate`` on its own qubits (control first, then targets)."""
    qubits = gate.qubits
    k = len(qubits)
    local = gate.remap({q: i for i, q in enumerate(qubits)}, k)
    return local.apply(np.eye(2**k, dtype=complex), params, k)


@dataclass(frozen=True)
class ParamCircuit:
    num_qubits: int
    gates: tuple = field(default=())
    num_params: int = 0

    def __post_init__(self):
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        used = set()
        for g in gates:
            for q in g.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(f"gate {g} touches qubit {q} outside the register")
            if g.param_index is not None:
                if not 0 <= g.param_index < self.num_params:
                    raise ValueError(f"param_index {g.param_index} >= num_params {self.num_params}")
                used.add(g.param_index)
        missing = set(range(self.num_params)) - used
        if missing:
            raise ValueError(f"parameters {sorted(missing)} are not used by any gate")

    def __len__(self):
        return len(self.gates)

    def check_params(self, params):
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.shape[0] != self.num_params:
            raise ValueError(
                f"expected {self.num_params} parameters, got {params.shape[0]}"
            )
        return params

    def apply(self, arr, params, start=0, stop=None, adjoint=False):
        """Raw kernel: apply gates ``start..stop-1`` (or their adjoints in reverse)."""
        stop = len(self.gates) if stop is None else stop
        seq = self.gates[start:stop]
        if adjoint:
            for g in reversed(seq):
                arr = g.apply(arr, params, self.num_qubits, adjoint=True)
        else:
            for g in seq:
                arr = g.apply(arr, params, self.num_qubits)
        return arr

    def positions(self, param_index):
        """Gate positions that read ``param_index``."""
        return [i for i, g in enumerate(self.gates) if g.param_index == param_index]

    def remap(self, qubits, num_qubits):
        """Place this circuit on ``qubits`` of a ``num_qubits`` register."""
        mapping = dict(enumerate(qubits))
        if len(mapping) != self.num_qubits:
            raise ValueError("qubit map must cover every circuit qubit")
        return ParamCircuit(num_qubits, tuple(g.remap(mapping, num_qubits) for g in self.gates),
                            self.num_params)

    def freeze(self, params):
        """Copy with every parametrized gate pinned to its current angle."""
        params = self.check_params(params)
        gates = tuple(
            g if g.param_index is None else replace(g, param_index=None, angle=float(params[g.param_index]))
            for g in self.gates
        )
        return ParamCircuit(self.num_qubits, gates, 0)

    def then(self, other, param_offset=0):
        """Circuit running ``self`` and then ``other``.

        ``other``'s parameter indices are shifted by ``param_offset`` so both
        read from one concatenated vector.
        """
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot compose circuits on different registers")
        shifted = tuple(
            g if g.param_index is None else replace(g, param_index=g.param_index + param_offset)
            for g in other.gates
        )
        n = max(self.num_params, other.num_params + param_offset)
        return ParamCircuit(self.num_qubits, self.gates + shifted, n)


def apply_segment(circuit, params, state, start=0, stop=None, adjoint=False):
    """Apply gates ``start..stop-1`` of ``circuit`` to ``state``.

    Indices are 0-based and half-open, so ``apply_segment(c, p, s, l - 1, k)``
    is the ordered product of gates ``l`` through ``k`` in 1-based counting.
    With ``adjoint`` the same gates are undone in reverse order.
    """
    params = circuit.check_params(params)
    if state.num_qubits != circuit.num_qubits:
        raise ValueError("state and circuit registers differ")
    out = circuit.apply(state.amplitudes, params, start, stop, adjoint)
    return StateVector(state.num_qubits, out)


def run(circuit, params, state=None):
    if state is None:
        state = StateVector.zero(circuit.num_qubits)
    return apply_segment(circuit, params, state)


def circuit_unitary(circuit, params):
    if circuit.num_qubits > MAX_DENSE_QUBITS:
        raise ValueError(
            f"refusing to build a dense unitary on {circuit.num_qubits} qubits "
            f"(limit {MAX_DENSE_QUBITS})"
        )
    params = circuit.check_params(params)
    u = circuit.apply(np.eye(2**circuit.num_qubits, dtype=complex), params)
    assert is_unitary(u)
    return u


@dataclass(frozen=True)
class AnsatzSpec:
    num_qubits: int
    num_layers: int

    def __post_init__(self):
        if self.num_qubits < 1 or self.num_layers < 1:
            raise ValueError("ansatz needs at least one qubit and one layer")

    @property
    def num_params(self):
        nu = self.num_qubits
        return self.num_layers * (2 * nu + max(nu - 1, 0))


def build_ansatz(spec):
    """Layered X/Z/ZZ ansatz on ``spec.num_qubits`` qubits.

    Each layer holds X rotations on every qubit, then Z rotations on every
    qubit, then ZZ rotations on pairs (0,1),(2,3),... followed by
    (1,2),(3,4),...  Parameters are numbered in exactly that order.
    """
    nu = spec.num_qubits
    pairs = [(a, a + 1) for a in range(0, nu - 1, 2)] + [(a, a + 1) for a in range(1, nu - 1, 2)]
    gates = []
    p = 0
    for _ in range(spec.num_layers):
        for letters, targets in ([("X", (q,)) for q in range(nu)]
                                 + [("Z", (q,)) for q in range(nu)]
                                 + [("ZZ", pair) for pair in pairs]):
            gates.append(ParamGate(PauliString.parse(letters, targets, nu), param_index=p))
            p += 1
    return ParamCircuit(nu, tuple(gates), p)


def controlled(gate, control):
    """Gate sequence realizing ``|0><0| (x) I + |1><1| (x) gate`` on ``control``.

    Fixed Pauli strings split into one controlled single-qubit Pauli
    (CNOT / CY / CZ) per factor.
    """
    if gate.control is not None:
        raise ValueError("gate is already controlled")
    if control in gate.qubits:
        raise ValueError(f"control qubit {control} collides with targets {gate.qubits}")
    if isinstance(gate, FixedGate) and gate.kind == "PAULI":
        scope = gate.pauli.scope
        return [FixedGate("PAULI", (), control, PauliString(((q, p),), scope))
                for q, p in gate.pauli.factors]
    return [replace(gate, control=control)]


def random_circuit(num_qubits, num_params, rng, num_gates=None, max_weight=2):
    """Random rotations about Pauli strings of weight <= ``max_weight``.

    Every parameter is used at least once; extra gates reuse random parameters.
    """
    num_gates = num_params if num_gates is None else num_gates
    if num_gates < num_params:
        raise ValueError("need at least one gate per parameter")
    order = list(range(num_params)) + list(rng.integers(0, num_params, num_gates - num_params))
    rng.shuffle(order)
    gates = []
    for p in order:
        weight = int(rng.integers(1, min(max_weight, num_qubits) + 1))
        qubits = sorted(rng.choice(num_qubits, size=weight, replace=False).tolist())
        letters = "".join(rng.choice(list("XYZ"), size=weight))
        gates.append(ParamGate(PauliString.parse(letters, qubits, num_qubits), param_index=int(p)))
    return ParamCircuit(num_qubits, tuple(gates), num_params)
