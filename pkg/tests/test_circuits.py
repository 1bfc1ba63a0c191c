import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from qugan.circuits import (
    AnsatzSpec,
    FixedGate,
    ParamCircuit,
    ParamGate,
    PauliString,
    apply_segment,
    build_ansatz,
    circuit_unitary,
    controlled,
    gate_matrix,
    random_circuit,
)
from qugan.simcore import StateVector

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
PAULI = {"X": X, "Y": Y, "Z": Z}


def kron_all(*ms):
    out = np.eye(1)
    for m in ms:
        out = np.kron(out, m)
    return out


def dense_pauli(letters, qubits, n):
    """Brute-force Kronecker product with identity on unlisted qubits."""
    ops = [I2] * n
    for p, q in zip(letters, qubits):
        ops[q] = PAULI[p]
    return kron_all(*ops)


def random_state(rng, n):
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return StateVector(n, v / np.linalg.norm(v))


def test_pauli_string_validation():
    with pytest.raises(ValueError):
        PauliString((), 2)
    with pytest.raises(ValueError):
        PauliString(((2, "X"),), 2)
    with pytest.raises(ValueError):
        PauliString(((0, "Q"),), 2)


@pytest.mark.parametrize("letters, qubits", [("X", [1]), ("ZY", [0, 2]), ("XYZ", [2, 0, 1])])
def test_pauli_string_matrix_matches_kronecker(letters, qubits):
    ps = PauliString.parse(letters, qubits, 3)
    np.testing.assert_allclose(ps.matrix(), dense_pauli(letters, qubits, 3), atol=1e-15)
    np.testing.assert_allclose(ps.matrix() @ ps.matrix(), np.eye(8), atol=1e-12)


def test_param_gate_matches_matrix_exponential():
    gen = PauliString.parse("XZ", [0, 1], 2)
    gate = ParamGate(gen, param_index=0)
    theta = 0.83
    expected = expm(-0.5j * theta * dense_pauli("XZ", [0, 1], 2))
    np.testing.assert_allclose(gate_matrix(gate, [theta]), expected, atol=1e-12)
    np.testing.assert_allclose(gate_matrix(gate, [0.0]), np.eye(4), atol=1e-12)


def test_param_gate_needs_exactly_one_of_index_or_angle():
    gen = PauliString.parse("X", [0], 1)
    with pytest.raises(ValueError):
        ParamGate(gen)
    with pytest.raises(ValueError):
        ParamGate(gen, param_index=0, angle=0.3)


def test_frozen_gate_does_not_consume_parameter():
    gen = PauliString.parse("Y", [0], 1)
    c = ParamCircuit(1, (ParamGate(gen, angle=0.4), ParamGate(gen, param_index=0)), 1)
    assert c.num_params == 1
    np.testing.assert_allclose(circuit_unitary(c, [0.0]), expm(-0.2j * Y), atol=1e-12)


def test_gate_derivative_finite_difference():
    rng = np.random.default_rng(4)
    h = 1e-5
    for letters, qubits in [("X", [0]), ("YZ", [0, 1]), ("ZZ", [1, 0])]:
        gen = PauliString.parse(letters, qubits, 2)
        gate = ParamGate(gen, param_index=0)
        theta = rng.uniform(-np.pi, np.pi)
        fd = (gate_matrix(gate, [theta + h]) - gate_matrix(gate, [theta - h])) / (2 * h)
        analytic = -0.5j * gen.local_matrix() @ gate_matrix(gate, [theta])
        np.testing.assert_allclose(fd, analytic, atol=1e-9)


def test_w_gate_matrix():
    expected = np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2)
    w = gate_matrix(FixedGate.w(0))
    np.testing.assert_allclose(w, expected, atol=1e-12)
    np.testing.assert_allclose(w, expm(-0.25j * np.pi * X), atol=1e-12)


def test_circuit_validates_parameters():
    gen = PauliString.parse("X", [0], 1)
    with pytest.raises(ValueError, match="not used"):
        ParamCircuit(1, (ParamGate(gen, param_index=1),), 2)
    with pytest.raises(ValueError):
        ParamCircuit(1, (ParamGate(gen, param_index=2),), 2)
    with pytest.raises(ValueError):
        ParamCircuit(1, (ParamGate(PauliString.parse("X", [1], 2), param_index=0),), 1)
    c = ParamCircuit(1, (ParamGate(gen, param_index=0),), 1)
    with pytest.raises(ValueError):
        apply_segment(c, [0.1, 0.2], StateVector.zero(1))


def test_full_segment_then_adjoint_is_identity():
    rng = np.random.default_rng(5)
    c = random_circuit(4, 8, rng, num_gates=12)
    p = rng.uniform(-np.pi, np.pi, 8)
    psi = random_state(rng, 4)
    back = apply_segment(c, p, apply_segment(c, p, psi), adjoint=True)
    np.testing.assert_allclose(back.amplitudes, psi.amplitudes, atol=1e-10)


def test_single_gate_segment():
    rng = np.random.default_rng(6)
    c = random_circuit(3, 5, rng)
    p = rng.uniform(-np.pi, np.pi, 5)
    psi = random_state(rng, 3)
    j = 2
    out = apply_segment(c, p, psi, j, j + 1)
    u = np.eye(8, dtype=complex)
    u = c.gates[j].apply(u, p, 3)
    np.testing.assert_allclose(out.amplitudes, u @ psi.amplitudes, atol=1e-12)


def test_empty_segment_returns_input():
    rng = np.random.default_rng(7)
    c = random_circuit(2, 3, rng)
    psi = random_state(rng, 2)
    out = apply_segment(c, np.zeros(3), psi, 2, 2)
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes)


def test_split_segments_compose():
    rng = np.random.default_rng(8)
    c = random_circuit(4, 10, rng, num_gates=12)
    p = rng.uniform(-np.pi, np.pi, 10)
    psi = random_state(rng, 4)
    whole = apply_segment(c, p, psi)
    for j in range(13):
        parts = apply_segment(c, p, apply_segment(c, p, psi, 0, j), j)
        np.testing.assert_allclose(parts.amplitudes, whole.amplitudes, atol=1e-12)


@pytest.mark.parametrize("nu, tau, count", [(2, 2, 10), (3, 4, 32), (1, 1, 2)])
def test_ansatz_parameter_counts(nu, tau, count):
    spec = AnsatzSpec(nu, tau)
    assert spec.num_params == count
    assert build_ansatz(spec).num_params == count


def test_ansatz_count_formula_exhaustive():
    for nu in range(1, 7):
        for tau in range(1, 6):
            c = build_ansatz(AnsatzSpec(nu, tau))
            assert c.num_params == tau * (2 * nu + nu - 1) == len(c.gates)


def test_ansatz_gate_order():
    c = build_ansatz(AnsatzSpec(4, 2))
    layer = [(g.generator.letters, g.generator.qubits) for g in c.gates[:11]]
    assert layer == [
        ("X", (0,)), ("X", (1,)), ("X", (2,)), ("X", (3,)),
        ("Z", (0,)), ("Z", (1,)), ("Z", (2,)), ("Z", (3,)),
        ("ZZ", (0, 1)), ("ZZ", (2, 3)), ("ZZ", (1, 2)),
    ]
    assert [g.param_index for g in c.gates] == list(range(22))


def test_ansatz_unitary_is_product_of_gate_matrices():
    rng = np.random.default_rng(9)
    c = build_ansatz(AnsatzSpec(2, 1))
    p = rng.uniform(-np.pi, np.pi, c.num_params)
    expected = np.eye(4, dtype=complex)
    for g in c.gates:
        letters = g.generator.letters
        expected = expm(-0.5j * p[g.param_index] * dense_pauli(letters, g.generator.qubits, 2)) @ expected
    np.testing.assert_allclose(circuit_unitary(c, p), expected, atol=1e-12)


def test_circuit_unitary_edge_cases():
    np.testing.assert_allclose(circuit_unitary(ParamCircuit(2), []), np.eye(4))
    gen = PauliString.parse("Y", [1], 2)
    c = ParamCircuit(2, (ParamGate(gen, param_index=0),), 1)
    np.testing.assert_allclose(circuit_unitary(c, [0.6]), np.kron(I2, expm(-0.3j * Y)), atol=1e-12)
    with pytest.raises(ValueError):
        circuit_unitary(ParamCircuit(11), [])


def test_controlled_x_is_cnot():
    seq = controlled(FixedGate.x(1, 2), 0)
    u = ParamCircuit(2, tuple(seq)).apply(np.eye(4, dtype=complex), [])
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_allclose(u, cnot)
    np.testing.assert_allclose(gate_matrix(FixedGate.cnot(0, 1, 2)), cnot)


def test_controlled_rotation_idle_on_zero_control():
    rng = np.random.default_rng(10)
    gen = PauliString.parse("XY", [1, 2], 3)
    seq = controlled(ParamGate(gen, param_index=0), 0)
    c = ParamCircuit(3, tuple(seq), 1)
    target = random_state(rng, 2)
    psi = StateVector.zero(1).tensor(target)
    out = apply_segment(c, [1.1], psi)
    np.testing.assert_allclose(out.amplitudes, psi.amplitudes, atol=1e-12)


def test_controlled_zz_rotation_matches_block_matrix():
    theta = 1.3
    gen = PauliString.parse("ZZ", [1, 2], 3)
    seq = controlled(ParamGate(gen, param_index=0), 0)
    u = ParamCircuit(3, tuple(seq), 1).apply(np.eye(8, dtype=complex), [theta])
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    rot = expm(-0.5j * theta * np.kron(Z, Z))
    expected = np.kron(p0, np.eye(4)) + np.kron(p1, rot)
    np.testing.assert_allclose(u, expected, atol=1e-12)


def test_controlled_pauli_string_decomposes():
    gate = FixedGate.from_pauli("XZ", (1, 3), 4)
    seq = controlled(gate, 0)
    assert len(seq) == 2
    u = ParamCircuit(4, tuple(seq)).apply(np.eye(16, dtype=complex), [])
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    expected = np.kron(p0, np.eye(8)) + np.kron(p1, dense_pauli("XZ", [0, 2], 3))
    np.testing.assert_allclose(u, expected, atol=1e-12)


def test_controlled_collision_rejected():
    gen = PauliString.parse("X", [0], 2)
    with pytest.raises(ValueError):
        controlled(ParamGate(gen, param_index=0), 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 8))
def test_propagation_matches_dense_unitary(seed, n, n_params):
    rng = np.random.default_rng(seed)
    c = random_circuit(n, n_params, rng, num_gates=n_params + int(rng.integers(0, 4)), max_weight=3)
    p = rng.uniform(-np.pi, np.pi, n_params)
    psi = random_state(rng, n)
    u = circuit_unitary(c, p)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2**n), atol=1e-10)
    np.testing.assert_allclose(apply_segment(c, p, psi).amplitudes, u @ psi.amplitudes, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_param_gate_unitary_and_identity_at_zero(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, 4))
    gen = PauliString.parse("".join(rng.choice(list("XYZ"), size=k)), list(range(k)), k)
    gate = ParamGate(gen, param_index=0)
    u = gate_matrix(gate, [rng.uniform(-10, 10)])
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2**k), atol=1e-10)
    np.testing.assert_allclose(gate_matrix(gate, [0.0]), np.eye(2**k), atol=1e-12)
