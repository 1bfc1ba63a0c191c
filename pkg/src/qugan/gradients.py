"""Exact gradients and Hessians of ``<P>(theta) = tr(rho0 U(theta)^dag P U(theta))``.

Three independent routes are provided:

* ``analytic_gradient``: the commutator formula
  ``-(i/2) tr(rho0 U_{1:j}^dag [U_{j+1:N}^dag P U_{N:j+1}, h_j] U_{j:1})``
  evaluated by direct state propagation, one component at a time.
  ``gradient_vector`` evaluates the same formula for every component in one
  backward sweep that reuses the segment products.
* ``circuit_gradient``: simulation of an ancilla-assisted circuit whose
  ancilla ``<Z>`` equals the derivative.
* ``finite_difference_gradient``: central differences.

Mixed initial states are handled through their eigen-ensemble, which keeps
every kernel on state vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import FixedGate, ParamCircuit, controlled
from .simcore import (
    DensityOperator,
    Observable,
    StateVector,
    sample_z_basis,
)

DEFAULT_STEP = 1e-5


class UnsupportedObservable(ValueError):
    pass


@dataclass(frozen=True)
class GradientTask:
    """Derivative of ``<observable>`` with respect to ``params[target_index]``.

    ``target_index`` is a 0-based parameter index; if several gates read the
    same parameter their contributions are summed.
    """

    circuit: ParamCircuit
    params: np.ndarray
    initial_state: StateVector | DensityOperator
    observable: Observable
    target_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "params", self.circuit.check_params(self.params))
        if self.initial_state.num_qubits != self.circuit.num_qubits:
            raise ValueError("initial state and circuit registers differ")
        if self.observable.qubits and max(self.observable.qubits) >= self.circuit.num_qubits:
            raise ValueError("observable acts outside the circuit register")
        if not self.circuit.positions(self.target_index):
            raise ValueError(
                f"parameter {self.target_index} is not read by any parametrized gate"
            )

    def retarget(self, index):
        return GradientTask(self.circuit, self.params, self.initial_state, self.observable, index)


@dataclass(frozen=True)
class GradientCircuit:
    """Ancilla-extended circuit: ``scale * <Z>_grad_qubit`` is the derivative."""

    extended_circuit: ParamCircuit
    grad_qubit: int
    scale: float
    initial_state: StateVector | DensityOperator

    @property
    def observable(self):
        return Observable.z(self.grad_qubit)


def ensemble(state):
    """``(weights, columns)`` with ``rho = sum_i w_i |c_i><c_i|``."""
    if isinstance(state, StateVector):
        return np.ones(1), state.amplitudes[:, None]
    matrix = state.matrix if isinstance(state, DensityOperator) else np.asarray(state)
    w, v = np.linalg.eigh(matrix)
    keep = np.abs(w) > 1e-14
    return w[keep], v[:, keep]


def _weighted_dot(weights, left, right):
    return np.sum(weights * np.einsum("ik,ik->k", left.conj(), right))


def _generator_apply(gate, arr, num_qubits):
    out = gate.generator.apply(arr, num_qubits)
    if gate.control is not None:
        # controlled rotation: generator is |1><1|_c (x) h = (I - Z_c)/2 (x) h
        out = (out - Observable.z(gate.control).apply(out, num_qubits)) / 2
    return out


def expectation_value(circuit, params, initial_state, observable):
    params = circuit.check_params(params)
    w, cols = ensemble(initial_state)
    phi = circuit.apply(cols, params)
    val = _weighted_dot(w, phi, observable.apply(phi, circuit.num_qubits))
    return float(val.real)


def analytic_gradient(task):
    """One gradient component from the commutator formula."""
    circuit, params = task.circuit, task.params
    nq = circuit.num_qubits
    w, cols = ensemble(task.initial_state)
    total = 0.0
    for pos in circuit.positions(task.target_index):
        gate = circuit.gates[pos]
        psi = circuit.apply(cols, params, 0, pos + 1)
        h_psi = _generator_apply(gate, psi, nq)
        a_psi = circuit.apply(psi, params, pos + 1)
        a_h_psi = circuit.apply(h_psi, params, pos + 1)
        p_h = _weighted_dot(w, a_psi, task.observable.apply(a_h_psi, nq))
        h_p = _weighted_dot(w, a_h_psi, task.observable.apply(a_psi, nq))
        val = -0.5j * (p_h - h_p)
        if abs(val.imag) > 1e-10:
            raise ArithmeticError(f"gradient has imaginary residue {val.imag!r}")
        total += val.real
    return float(total)


def sweep(circuit, params, columns, apply_observable):
    """Per-column values and gradients of ``<c_k|U^dag P U|c_k>``.

    Raw kernel for batched evaluation: ``columns`` is a ``(2**q, K)`` array.
    Returns ``(values, grads)`` with shapes ``(K,)`` and ``(num_params, K)``.
    """
    nq = circuit.num_qubits
    phi = circuit.apply(columns, params)
    chi = apply_observable(phi)
    values = np.einsum("ik,ik->k", phi.conj(), chi).real
    grads = np.zeros((circuit.num_params, columns.shape[1]))
    for gate in reversed(circuit.gates):
        if gate.param_index is not None:
            h_phi = _generator_apply(gate, phi, nq)
            grads[gate.param_index] += np.einsum("ik,ik->k", chi.conj(), h_phi).imag
        phi = gate.apply(phi, params, nq, adjoint=True)
        chi = gate.apply(chi, params, nq, adjoint=True)
    return values, grads


def gradient_vector(circuit, params, initial_state, observable):
    params = circuit.check_params(params)
    w, cols = ensemble(initial_state)
    _, grads = sweep(circuit, params, cols, lambda a: observable.apply(a, circuit.num_qubits))
    return grads @ w


def finite_difference_gradient(task, step=DEFAULT_STEP):
    if step <= 0:
        raise ValueError("finite-difference step must be positive")
    j = task.target_index
    up = task.params.copy()
    up[j] += step
    down = task.params.copy()
    down[j] -= step
    f_up = expectation_value(task.circuit, up, task.initial_state, task.observable)
    f_down = expectation_value(task.circuit, down, task.initial_state, task.observable)
    return (f_up - f_down) / (2 * step)


def _shift_state(state):
    """Prepend an ancilla in |0> as the new qubit 0."""
    if isinstance(state, StateVector):
        return StateVector.zero(1).tensor(state)
    return DensityOperator(1, np.diag([1.0, 0.0])).tensor(state)


def build_gradient_circuit(task, position=None):
    """Ancilla circuit for the contribution of the gate at ``position``.

    Layout on ``q + 1`` qubits with the ancilla at index 0: W on the ancilla,
    gates up to and including ``position``, controlled generator, remaining
    gates, controlled observable, H on the ancilla.  Its ancilla ``<Z>``
    equals the derivative contribution of that gate.
    """
    circuit = task.circuit
    positions = circuit.positions(task.target_index)
    if position is None:
        if len(positions) != 1:
            raise ValueError(
                f"parameter {task.target_index} is read by {len(positions)} gates; pass position"
            )
        position = positions[0]
    elif position not in positions:
        raise ValueError(f"gate {position} does not read parameter {task.target_index}")
    obs = task.observable
    if obs.pauli is None:
        raise UnsupportedObservable(
            "gradient circuits need a Pauli-string observable; use analytic_gradient instead"
        )
    gate = circuit.gates[position]
    if gate.control is not None:
        raise UnsupportedObservable("gradient circuits for controlled rotations are not supported")

    nq = circuit.num_qubits + 1
    body = circuit.remap(range(1, nq), nq).gates
    g_shift = body[position]
    h_fixed = FixedGate("PAULI", (), None, g_shift.generator)
    p_fixed = FixedGate.from_pauli(obs.pauli, [q + 1 for q in obs.qubits], nq)
    gates = (
        [FixedGate.w(0)]
        + list(body[: position + 1])
        + controlled(h_fixed, 0)
        + list(body[position + 1:])
        + controlled(p_fixed, 0)
        + [FixedGate.h(0)]
    )
    ext = ParamCircuit(nq, tuple(gates), circuit.num_params)
    return GradientCircuit(ext, 0, 1.0, _shift_state(task.initial_state))


def _gradient_circuits(task):
    return [build_gradient_circuit(task, pos) for pos in task.circuit.positions(task.target_index)]


def evaluate_gradient_circuit(gc, params):
    return gc.scale * expectation_value(gc.extended_circuit, params, gc.initial_state,
                                        gc.observable)


def circuit_gradient(task):
    """Derivative read off the simulated ancilla of the gradient circuit(s)."""
    return float(sum(evaluate_gradient_circuit(gc, task.params) for gc in _gradient_circuits(task)))


def _final_state(circuit, params, initial_state):
    if isinstance(initial_state, StateVector):
        return StateVector(circuit.num_qubits, circuit.apply(initial_state.amplitudes, params))
    rho = initial_state.matrix
    left = circuit.apply(rho, params)
    out = circuit.apply(left.conj().T, params).conj().T
    return DensityOperator(circuit.num_qubits, (out + out.conj().T) / 2)


def estimate_gradient_shots(task, shots, seed):
    """Shot estimate ``scale * (n0 - n1) / shots`` from sampled ancilla readouts."""
    circuits = _gradient_circuits(task)
    seeds = np.random.SeedSequence(seed).generate_state(len(circuits))
    total = 0.0
    for gc, s in zip(circuits, seeds):
        final = _final_state(gc.extended_circuit, task.params, gc.initial_state)
        n0, n1 = sample_z_basis(final, gc.grad_qubit, shots, int(s))
        total += gc.scale * (n0 - n1) / shots
    return total


def _inserted(circuit, params, cols, inserts):
    """``U`` applied to ``cols`` with ``-(i/2) h`` inserted after each listed gate."""
    nq = circuit.num_qubits
    arr = cols
    for pos, gate in enumerate(circuit.gates):
        arr = gate.apply(arr, params, nq)
        for _ in range(inserts.count(pos)):
            arr = -0.5j * _generator_apply(gate, arr, nq)
    return arr


def _analytic_hessian_entry(circuit, params, initial_state, observable, j, k):
    nq = circuit.num_qubits
    w, cols = ensemble(initial_state)
    u_psi = circuit.apply(cols, params)
    total = 0.0
    for a in circuit.positions(j):
        d_a = _inserted(circuit, params, cols, [a])
        for b in circuit.positions(k):
            d_b = _inserted(circuit, params, cols, [b])
            d_ab = _inserted(circuit, params, cols, [a, b])
            t1 = _weighted_dot(w, d_a, observable.apply(d_b, nq))
            t2 = _weighted_dot(w, u_psi, observable.apply(d_ab, nq))
            total += 2 * t1.real + 2 * t2.real
    return float(total)


def build_hessian_entry(task, second_index, method="analytic"):
    """Second derivative with respect to ``task.target_index`` and ``second_index``.

    ``method="analytic"`` differentiates the commutator formula twice;
    ``method="circuit"`` differentiates the gradient circuit with a second
    ancilla, reading ``<Z>`` on that ancilla.
    """
    if not task.circuit.positions(second_index):
        raise ValueError(f"parameter {second_index} is not read by any parametrized gate")
    if method == "analytic":
        return _analytic_hessian_entry(task.circuit, task.params, task.initial_state,
                                       task.observable, task.target_index, second_index)
    if method != "circuit":
        raise ValueError(f"unknown Hessian method {method!r}")
    total = 0.0
    for gc in _gradient_circuits(task):
        inner = GradientTask(gc.extended_circuit, task.params, gc.initial_state,
                             gc.observable, second_index)
        total += gc.scale * circuit_gradient(inner)
    return float(total)


def hessian_matrix(circuit, params, initial_state, observable, method="analytic"):
    params = circuit.check_params(params)
    n = circuit.num_params
    hess = np.zeros((n, n))
    for j in range(n):
        task = GradientTask(circuit, params, initial_state, observable, j)
        for k in range(j, n):
            hess[j, k] = build_hessian_entry(task, k, method)
            hess[k, j] = hess[j, k]
    return hess


def finite_difference_hessian(circuit, params, initial_state, observable, step=DEFAULT_STEP):
    """Central differences of the analytic gradient, one column per parameter."""
    params = circuit.check_params(params)
    n = circuit.num_params
    hess = np.zeros((n, n))
    for k in range(n):
        up = params.copy()
        up[k] += step
        down = params.copy()
        down[k] -= step
        hess[:, k] = (gradient_vector(circuit, up, initial_state, observable)
                      - gradient_vector(circuit, down, initial_state, observable)) / (2 * step)
    return hess
