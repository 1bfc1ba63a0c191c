"""Dense state-vector and density-matrix kernels.

Qubit 0 is the most significant bit of a computational-basis index.
Every function returns a new value; inputs are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ATOL = 1e-10

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class ContractViolation(ValueError):
    """An operator or state broke a numerical invariant (unitarity, normalization...)."""


def _check_qubits(targets, num_qubits):
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"target qubits must be distinct, got {targets}")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"qubit index {t} out of range for {num_qubits} qubits")
    return targets


def apply_matrix(arr, matrix, targets, num_qubits):
    """Left-multiply ``arr`` by ``matrix`` acting on ``targets``.

    ``arr`` has shape ``(2**num_qubits,)`` or ``(2**num_qubits, K)``; the trailing
    axis is treated as a batch of independent columns.
    """
    k = len(targets)
    batch = arr.shape[1:]
    t = arr.reshape((2,) * num_qubits + batch)
    m = np.asarray(matrix).reshape((2,) * (2 * k))
    out = np.tensordot(m, t, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(arr.shape)


def embed_matrix(matrix, targets, num_qubits):
    """Full ``2**num_qubits`` matrix of ``matrix`` on ``targets`` (identity elsewhere)."""
    dim = 2**num_qubits
    return apply_matrix(np.eye(dim, dtype=complex), matrix, targets, num_qubits)


def is_unitary(matrix, atol=ATOL):
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        return False
    return np.allclose(matrix @ matrix.conj().T, np.eye(matrix.shape[0]), atol=atol)


@dataclass(frozen=True)
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != 2**self.num_qubits:
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got {amps.shape[0]}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > ATOL:
            raise ContractViolation(f"state is not normalized (norm = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, bits):
        """Computational-basis state from a bit sequence or bit string, qubit 0 first."""
        bits = [int(b) for b in bits]
        index = 0
        for b in bits:
            index = (index << 1) | b
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[index] = 1.0
        return cls(len(bits), amps)

    @classmethod
    def zero(cls, num_qubits):
        return cls.basis([0] * num_qubits)

    def tensor(self, other):
        return StateVector(self.num_qubits + other.num_qubits,
                           np.kron(self.amplitudes, other.amplitudes))

    @property
    def dim(self):
        return 2**self.num_qubits


@dataclass(frozen=True)
class DensityOperator:
    num_qubits: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        dim = 2**self.num_qubits
        if rho.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=ATOL):
            raise ContractViolation("density operator is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > ATOL:
            raise ContractViolation(f"density operator has trace {tr!r}")
        if np.linalg.eigvalsh(rho).min() < -1e-9:
            raise ContractViolation("density operator is not positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    def tensor(self, other):
        return DensityOperator(self.num_qubits + other.num_qubits,
                               np.kron(self.matrix, other.matrix))

    @property
    def dim(self):
        return 2**self.num_qubits


@dataclass(frozen=True)
class Observable:
    """Hermitian operator ``matrix`` acting on ``qubits``.

    ``pauli`` holds the letters of a Pauli-string observable (one per qubit)
    when the operator is known to be one; gradient circuits need it to build
    the controlled observable.
    """

    qubits: tuple
    matrix: np.ndarray = field(repr=False)
    pauli: str | None = None

    def __post_init__(self):
        qubits = tuple(int(q) for q in self.qubits)
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"observable qubits must be distinct, got {qubits}")
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2 ** len(qubits),) * 2:
            raise ValueError("observable matrix does not match its qubit count")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise ContractViolation("observable is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "qubits", qubits)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pauli(cls, letters, qubits):
        letters = letters.upper()
        if len(letters) != len(qubits):
            raise ValueError("one Pauli letter per qubit is required")
        m = np.array([[1.0]], dtype=complex)
        for ch in letters:
            m = np.kron(m, PAULI_MATRICES[ch])
        return cls(tuple(qubits), m, pauli=letters)

    @classmethod
    def z(cls, qubit):
        return cls.from_pauli("Z", (qubit,))

    def scaled(self, a):
        return Observable(self.qubits, a * self.matrix)

    def __add__(self, other):
        qubits = tuple(sorted(set(self.qubits) | set(other.qubits)))
        local = {q: i for i, q in enumerate(qubits)}
        n = len(qubits)
        full = (embed_matrix(self.matrix, [local[q] for q in self.qubits], n)
                + embed_matrix(other.matrix, [local[q] for q in other.qubits], n))
        return Observable(qubits, full)

    def apply(self, arr, num_qubits):
        """Raw kernel: ``P @ arr`` on a register of ``num_qubits``."""
        return apply_matrix(arr, self.matrix, self.qubits, num_qubits)


def apply_unitary(state, unitary, target_qubits):
    """Apply ``unitary`` to ``target_qubits`` of a pure state."""
    targets = _check_qubits(target_qubits, state.num_qubits)
    u = np.asarray(unitary, dtype=complex)
    if u.shape != (2 ** len(targets),) * 2:
        raise ValueError(f"unitary of shape {u.shape} does not fit {len(targets)} targets")
    if not is_unitary(u):
        raise ContractViolation("matrix is not unitary")
    return StateVector(state.num_qubits,
                       apply_matrix(state.amplitudes, u, targets, state.num_qubits))


def conjugate(rho, unitary, target_qubits):
    """U rho U^dagger with U acting on ``target_qubits``."""
    targets = _check_qubits(target_qubits, rho.num_qubits)
    u = np.asarray(unitary, dtype=complex)
    if not is_unitary(u):
        raise ContractViolation("matrix is not unitary")
    n = rho.num_qubits
    left = apply_matrix(rho.matrix, u, targets, n)
    out = apply_matrix(left.conj().T, u, targets, n).conj().T
    return DensityOperator(n, out)


def outer_product(state):
    psi = state.amplitudes
    return DensityOperator(state.num_qubits, np.outer(psi, psi.conj()))


def as_density(state):
    if isinstance(state, DensityOperator):
        return state
    return outer_product(state)


def partial_trace(rho, keep_qubits):
    """Reduce ``rho`` onto ``keep_qubits`` (returned in ascending qubit order)."""
    rho = as_density(rho)
    keep = sorted(set(int(q) for q in keep_qubits))
    if not keep:
        raise ValueError("keep_qubits must be non-empty")
    _check_qubits(keep, rho.num_qubits)
    n = rho.num_qubits
    if len(keep) == n:
        return rho
    return DensityOperator(len(keep), reduce_matrix(rho.matrix, keep, n))


def reduce_matrix(matrix, keep, num_qubits):
    """Raw partial trace of a ``2**n`` square matrix onto sorted ``keep`` qubits."""
    n = num_qubits
    t = matrix.reshape((2,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = [letters[i] for i in range(n)]
    col = [letters[n + i] if i in keep else letters[i] for i in range(n)]
    out = [letters[i] for i in keep] + [letters[n + i] for i in keep]
    spec = "".join(row) + "".join(col) + "->" + "".join(out)
    d = 2 ** len(keep)
    return np.einsum(spec, t).reshape(d, d)


def expectation(state, obs):
    """tr(rho P) for a density operator or <psi|P|psi> for a pure state."""
    n = state.num_qubits
    if obs.qubits and max(obs.qubits) >= n:
        raise ValueError(f"observable on qubits {obs.qubits} does not fit {n} qubits")
    if isinstance(state, StateVector):
        psi = state.amplitudes
        val = np.vdot(psi, obs.apply(psi, n))
    else:
        val = np.trace(obs.apply(state.matrix, n))
    if abs(val.imag) > ATOL:
        raise ContractViolation(f"expectation has imaginary part {val.imag!r}")
    return float(val.real)


def purity(rho):
    m = as_density(rho).matrix
    return float(np.real(np.trace(m @ m)))


def z_marginal(state, qubit):
    """Probability of reading 0 on ``qubit``."""
    n = state.num_qubits
    _check_qubits([qubit], n)
    if isinstance(state, StateVector):
        probs = np.abs(state.amplitudes) ** 2
    else:
        probs = np.real(np.diag(state.matrix))
    p = probs.reshape(2**qubit, 2, -1)[:, 0, :].sum()
    return float(min(max(p, 0.0), 1.0))


def sample_z_basis(state, qubit, shots, seed):
    """Draw ``shots`` Z-basis readouts of ``qubit``; returns ``(count_0, count_1)``."""
    if shots < 1:
        raise ValueError("shots must be a positive integer")
    p0 = z_marginal(state, qubit)
    rng = np.random.default_rng(seed)
    c0 = int(rng.binomial(shots, p0))
    return c0, shots - c0
