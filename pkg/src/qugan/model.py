"""Quantum GAN model: registers, sources, adversarial cost and its gradients.

Register order (qubit 0 first)::

    Grad | Out D | Bath D (d) | Label D (s) | Out R|G (n) | Label R|G (s) | Bath R|G (m)

Everything except ``Grad`` forms the *work register* on which the model is
simulated; gradient circuits prepend ``Grad`` as qubit 0, so a work-register
index ``w`` is layout index ``w + 1``.

Out D reads ``|0> = |real>`` and ``|1> = |fake>``, so the decision operator is
``Z`` on Out D.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np

from .circuits import AnsatzSpec, FixedGate, ParamCircuit, PauliString, build_ansatz
from .gradients import GradientTask, circuit_gradient, sweep
from .simcore import DensityOperator, Observable, StateVector, reduce_matrix

EIG_FLOOR = 1e-12


@dataclass(frozen=True)
class RegisterLayout:
    s: int = 1
    n: int = 1
    m: int = 0
    d: int = 0

    def __post_init__(self):
        if self.s < 1 or self.n < 1 or self.m < 0 or self.d < 0:
            raise ValueError(f"invalid register sizes {self}")

    @property
    def total(self):
        return 2 + self.d + 2 * self.s + self.n + self.m

    @property
    def num_work(self):
        return self.total - 1

    def _ranges(self):
        sizes = [("grad", 1), ("out_d", 1), ("bath_d", self.d), ("label_d", self.s),
                 ("out_rg", self.n), ("label_rg", self.s), ("bath_rg", self.m)]
        out, start = {}, 0
        for name, size in sizes:
            out[name] = tuple(range(start, start + size))
            start += size
        return out

    def qubits(self, name):
        """Layout indices of a register (``grad``, ``out_d``, ``bath_d``, ...)."""
        return self._ranges()[name]

    def work(self, *names):
        """Work-register indices of the named registers, concatenated."""
        return tuple(q - 1 for name in names for q in self.qubits(name))

    @property
    def discriminator_qubits(self):
        return self.work("out_d", "bath_d", "label_d", "out_rg")

    @property
    def source_qubits(self):
        return self.work("out_rg", "label_rg", "bath_rg")


@dataclass(frozen=True)
class RealSource:
    """Fixed unitary on Out R|G + Label R|G + Bath R|G (local order, s+n+m qubits)."""

    circuit: ParamCircuit

    def __post_init__(self):
        if self.circuit.num_params:
            raise ValueError("the real source must not depend on trainable parameters")

    @classmethod
    def label_copy(cls, layout):
        """CNOT from label qubit i onto output qubit i; needs ``s == n``."""
        if layout.s != layout.n:
            raise ValueError("label-copy source needs as many label as output qubits")
        k = layout.s + layout.n + layout.m
        gates = [FixedGate.cnot(layout.n + i, i, k) for i in range(layout.n)]
        return cls(ParamCircuit(k, tuple(gates), 0))


@dataclass(frozen=True)
class LabelSet:
    """Labels as ``s``-bit patterns, plus the noise inputs ``z`` fed to G."""

    names: tuple
    patterns: tuple
    z_values: tuple = ((),)
    z_probs: tuple = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        object.__setattr__(self, "patterns", tuple(tuple(int(b) for b in p) for p in self.patterns))
        object.__setattr__(self, "z_values", tuple(tuple(int(b) for b in z) for z in self.z_values))
        object.__setattr__(self, "z_probs", tuple(float(p) for p in self.z_probs))
        if not self.names or len(self.names) != len(self.patterns):
            raise ValueError("need one bit pattern per label and at least one label")
        if len(set(self.patterns)) != len(self.patterns) or len(set(self.names)) != len(self.names):
            raise ValueError("labels must be distinct")
        if len(self.z_values) != len(self.z_probs) or not self.z_values:
            raise ValueError("need one probability per z value")
        if abs(sum(self.z_probs) - 1.0) > 1e-9 or min(self.z_probs) < 0:
            raise ValueError("z probabilities must be non-negative and sum to 1")

    @classmethod
    def binary(cls, names=("A", "B")):
        return cls(tuple(names), tuple((i,) for i in range(len(names))))

    def __len__(self):
        return len(self.names)

    def index(self, label):
        if label in self.names:
            return self.names.index(label)
        try:
            pattern = tuple(int(b) for b in label)
        except (TypeError, ValueError):
            pattern = None
        if pattern in self.patterns:
            return self.patterns.index(pattern)
        raise ValueError(f"unknown label {label!r}")


@dataclass(frozen=True)
class QuganModel:
    layout: RegisterLayout
    source: RealSource
    labels: LabelSet
    gen_ansatz: AnsatzSpec
    disc_ansatz: AnsatzSpec
    theta_G: np.ndarray = field(default=None, repr=False)
    theta_D: np.ndarray = field(default=None, repr=False)
    phi: float = np.pi / 4

    def __post_init__(self):
        lay = self.layout
        if self.gen_ansatz.num_qubits != lay.s + lay.n + lay.m:
            raise ValueError("generator ansatz must span Out R|G + Label R|G + Bath R|G")
        if self.disc_ansatz.num_qubits != 1 + lay.d + lay.s + lay.n:
            raise ValueError("discriminator ansatz must span Out D + Bath D + Label D + Out R|G")
        if self.source.circuit.num_qubits != lay.s + lay.n + lay.m:
            raise ValueError("real source acts on the wrong number of qubits")
        for pattern in self.labels.patterns:
            if len(pattern) != lay.s:
                raise ValueError(f"label pattern {pattern} is not {lay.s} bits")
        for z in self.labels.z_values:
            if len(z) != lay.m:
                raise ValueError(f"z value {z} is not {lay.m} bits")
        tg = np.zeros(self.num_params_G) if self.theta_G is None else np.asarray(self.theta_G, float)
        td = np.zeros(self.num_params_D) if self.theta_D is None else np.asarray(self.theta_D, float)
        if tg.shape != (self.num_params_G,) or td.shape != (self.num_params_D,):
            raise ValueError("parameter vectors do not match the ansatz parameter counts")
        object.__setattr__(self, "theta_G", tg)
        object.__setattr__(self, "theta_D", td)
        object.__setattr__(self, "phi", float(self.phi))

    @property
    def num_params_G(self):
        return self.gen_ansatz.num_params

    @property
    def num_params_D(self):
        return self.disc_ansatz.num_params

    @property
    def num_qubits(self):
        """Total qubit count including the Grad ancilla."""
        return self.layout.total

    def with_params(self, theta_D=None, theta_G=None):
        return replace(
            self,
            theta_D=self.theta_D if theta_D is None else theta_D,
            theta_G=self.theta_G if theta_G is None else theta_G,
        )

    @cached_property
    def engine(self):
        return _engine(self.layout, self.source, self.labels, self.gen_ansatz, self.disc_ansatz)


def experiment_model(theta_D=None, theta_G=None, phi=np.pi / 4, gen_layers=2, disc_layers=4):
    """Two-label setup: rho_A = |0><0|, rho_B = |1><1| on one output qubit."""
    layout = RegisterLayout(s=1, n=1, m=0, d=0)
    return QuganModel(
        layout,
        RealSource.label_copy(layout),
        LabelSet.binary(),
        AnsatzSpec(layout.s + layout.n + layout.m, gen_layers),
        AnsatzSpec(1 + layout.d + layout.s + layout.n, disc_layers),
        theta_G,
        theta_D,
        phi,
    )


def cnot_solution(gen_ansatz):
    """Generator angles that copy the label qubit onto the output qubit.

    Valid for the two-qubit ansatz (Out R|G, Label R|G) with at least two
    layers: X(pi/2) on the output, a Z(pi/2) plus ZZ(pi/2) label-conditioned
    phase, then X(pi/2) again.  Remaining layers idle at zero.
    """
    if gen_ansatz.num_qubits != 2 or gen_ansatz.num_layers < 2:
        raise ValueError("the CNOT solution needs a two-qubit ansatz with >= 2 layers")
    theta = np.zeros(gen_ansatz.num_params)
    half = np.pi / 2
    # per layer: X_out, X_label, Z_out, Z_label, ZZ
    theta[[0, 2, 4, 5]] = half
    return theta


class _Engine:
    """Compiled circuits and fixed input states shared by all parameter values."""

    def __init__(self, layout, source, labels, gen_ansatz, disc_ansatz):
        self.layout = layout
        self.labels = labels
        nq = self.nq = layout.num_work
        self.n_g = gen_ansatz.num_params
        self.n_d = disc_ansatz.num_params
        self.gen = build_ansatz(gen_ansatz).remap(layout.source_qubits, nq)
        self.disc = build_ansatz(disc_ansatz).remap(layout.discriminator_qubits, nq)
        self.src = source.circuit.remap(layout.source_qubits, nq)
        # generator followed by discriminator, parameters [theta_G, theta_D]
        self.gen_disc = self.gen.then(self.disc, param_offset=self.n_g)
        self.out_d = layout.work("out_d")[0]
        self.decision = Observable.z(self.out_d)
        self._z_kernel = PauliString(((self.out_d, "Z"),), nq)
        self.out_rg = layout.work("out_rg")

        lam = len(labels)
        self.g_inputs = np.stack(
            [self.initial(p, z) for p in labels.patterns for z in labels.z_values], axis=1)
        self.g_label = np.repeat(np.arange(lam), len(labels.z_values))
        self.g_prob = np.tile(np.array(labels.z_probs), lam)
        r_inputs = np.stack([self.initial(p, (0,) * layout.m) for p in labels.patterns], axis=1)
        self.r_states = self.src.apply(r_inputs, ())

    def initial(self, pattern, z):
        lay = self.layout
        bits = [0] * (1 + lay.d) + list(pattern) + [0] * lay.n + list(pattern) + list(z)
        return StateVector.basis(bits).amplitudes.copy()

    def decide(self, arr):
        return self._z_kernel.apply(arr, self.nq)

    def weights(self, phi):
        lam = len(self.labels)
        w_r = np.full(lam, np.cos(phi) ** 2 / (2 * lam))
        w_g = np.sin(phi) ** 2 / (2 * lam) * self.g_prob
        return w_r, w_g

    def gen_states(self, theta_G):
        return self.gen.apply(self.g_inputs, theta_G)

    def evaluate(self, theta_D, theta_G, phi, g_states=None, need_gen_grad=True):
        """Cost pieces plus per-column gradients in one pass.

        Returns a dict with ``zr``/``zg`` (decision expectations per R / G
        column), ``dr``/``dg`` (their theta_D gradients), ``gg`` (theta_G
        gradients of the G columns) and the branch weights.
        """
        if g_states is None:
            g_states = self.gen_states(theta_G)
        cols = np.concatenate([self.r_states, g_states], axis=1)
        values, grads = sweep(self.disc, theta_D, cols, self.decide)
        lam = len(self.labels)
        out = {"zr": values[:lam], "zg": values[lam:], "dr": grads[:, :lam], "dg": grads[:, lam:]}
        out["w_r"], out["w_g"] = self.weights(phi)
        if need_gen_grad:
            params = np.concatenate([theta_G, theta_D])
            _, gg = sweep(self.gen_disc, params, self.g_inputs, self.decide)
            out["gg"] = gg[: self.n_g]
        return out


@lru_cache(maxsize=32)
def _engine(layout, source, labels, gen_ansatz, disc_ansatz):
    return _Engine(layout, source, labels, gen_ansatz, disc_ansatz)


def _combine(ev):
    v_dr = float(ev["w_r"] @ ev["zr"])
    v_dg = -float(ev["w_g"] @ ev["zg"])
    grad_d = ev["dr"] @ ev["w_r"] - ev["dg"] @ ev["w_g"]
    grad_g = -(ev["gg"] @ ev["w_g"]) if "gg" in ev else None
    return v_dr, v_dg, grad_d, grad_g


# -- states ---------------------------------------------------------------

def _label_z(model, label, z):
    labels = model.labels
    idx = labels.index(label)
    if z is None:
        z = (0,) * model.layout.m
    z = tuple(int(b) for b in z)
    if len(z) != model.layout.m:
        raise ValueError(f"z must have {model.layout.m} bits")
    return labels.patterns[idx], z


def initial_state(model, label, z=None):
    """``|0>_{Out D, Bath D} |label>_{Label D} |0>_{Out R|G} |label>_{Label R|G} |z>``."""
    pattern, z = _label_z(model, label, z)
    return StateVector(model.layout.num_work, model.engine.initial(pattern, z))


def apply_source(model, state, which="G"):
    eng = model.engine
    if which == "R":
        out = eng.src.apply(state.amplitudes, ())
    elif which == "G":
        out = eng.gen.apply(state.amplitudes, model.theta_G)
    else:
        raise ValueError("which must be 'R' or 'G'")
    return StateVector(state.num_qubits, out)


def apply_discriminator(model, state):
    return StateVector(state.num_qubits, model.engine.disc.apply(state.amplitudes, model.theta_D))


# -- cost -----------------------------------------------------------------

def cost_components(model):
    """``(V_DR, V_DG)``; each lies in [-1/4, 1/4] for the fair coin."""
    ev = model.engine.evaluate(model.theta_D, model.theta_G, model.phi, need_gen_grad=False)
    v_dr, v_dg, _, _ = _combine(ev)
    return v_dr, v_dg


def cost_V(model):
    """Adversarial cost with coin weights ``cos^2 phi`` (real) and ``sin^2 phi`` (generated)."""
    v_dr, v_dg = cost_components(model)
    return 0.5 + v_dr + v_dg


def branch_density(model, label, which, z=None):
    """Full work-register density operator after the source and D (``rho^DR`` / ``rho^DG``)."""
    state = apply_discriminator(model, apply_source(model, initial_state(model, label, z), which))
    psi = state.amplitudes
    return DensityOperator(state.num_qubits, np.outer(psi, psi.conj()))


def cost_fair_coin(model):
    """``1/2 + 1/(4 Lambda) sum_lambda tr((rho^DR - rho^DG) Z)`` from density operators.

    Independent of ``model.phi``; matches ``cost_V`` when ``phi = pi/4``.
    """
    eng = model.engine
    z_full = Observable.z(eng.out_d)
    lam = len(model.labels)
    total = 0.0
    for name in model.labels.names:
        rho_dr = branch_density(model, name, "R").matrix
        rho_dg = sum(p * branch_density(model, name, "G", z).matrix
                     for z, p in zip(model.labels.z_values, model.labels.z_probs))
        total += np.trace(z_full.apply(rho_dr - rho_dg, eng.nq)).real
    return 0.5 + total / (4 * lam)


# -- gradients ------------------------------------------------------------

def grad_discriminator(model, method="analytic"):
    """Gradient of V with respect to theta_D.

    ``method="circuit"`` evaluates one ancilla gradient circuit per label,
    branch and parameter; the generated branch carries an X on Out D after
    the discriminator, which flips the sign of its contribution.
    """
    if method == "analytic":
        ev = model.engine.evaluate(model.theta_D, model.theta_G, model.phi, need_gen_grad=False)
        return _combine(ev)[2]
    if method != "circuit":
        raise ValueError(f"unknown gradient method {method!r}")
    eng = model.engine
    w_r, w_g = eng.weights(model.phi)
    r_circuit = eng.src.then(eng.disc)
    g_circuit = _flipped(eng.gen_disc, eng)
    params_g = np.concatenate([model.theta_G, model.theta_D])
    grad = np.zeros(eng.n_d)
    for li, name in enumerate(model.labels.names):
        r_task = GradientTask(r_circuit, model.theta_D, initial_state(model, name),
                              eng.decision, 0)
        for j in range(eng.n_d):
            grad[j] += w_r[li] * circuit_gradient(r_task.retarget(j))
        for zi, z in enumerate(model.labels.z_values):
            col = li * len(model.labels.z_values) + zi
            g_task = GradientTask(g_circuit, params_g, initial_state(model, name, z),
                                  eng.decision, eng.n_g)
            for j in range(eng.n_d):
                grad[j] += w_g[col] * circuit_gradient(g_task.retarget(eng.n_g + j))
    return grad


def _flipped(circuit, eng):
    x = FixedGate.x(eng.out_d, eng.nq)
    return ParamCircuit(circuit.num_qubits, circuit.gates + (x,), circuit.num_params)


def grad_generator(model, method="analytic"):
    """Gradient of V with respect to theta_G (descend along it to fool D)."""
    if method == "analytic":
        ev = model.engine.evaluate(model.theta_D, model.theta_G, model.phi)
        return _combine(ev)[3]
    if method != "circuit":
        raise ValueError(f"unknown gradient method {method!r}")
    eng = model.engine
    _, w_g = eng.weights(model.phi)
    g_circuit = _flipped(eng.gen_disc, eng)
    params_g = np.concatenate([model.theta_G, model.theta_D])
    grad = np.zeros(eng.n_g)
    for li, name in enumerate(model.labels.names):
        for zi, z in enumerate(model.labels.z_values):
            col = li * len(model.labels.z_values) + zi
            task = GradientTask(g_circuit, params_g, initial_state(model, name, z),
                                eng.decision, 0)
            for j in range(eng.n_g):
                grad[j] += w_g[col] * circuit_gradient(task.retarget(j))
    return grad


# -- metrics --------------------------------------------------------------

def reduced_output_states(model, label, theta_G=None, g_states=None):
    """``(rho^R, rho^G)`` reduced to Out R|G; rho^G averaged over z."""
    eng = model.engine
    idx = model.labels.index(label)
    keep = list(eng.out_rg)
    r = eng.r_states[:, idx]
    rho_r = reduce_matrix(np.outer(r, r.conj()), keep, eng.nq)
    if g_states is None:
        g_states = eng.gen_states(model.theta_G if theta_G is None else theta_G)
    mask = eng.g_label == idx
    cols = g_states[:, mask]
    mix = (cols * eng.g_prob[mask]) @ cols.conj().T
    rho_g = reduce_matrix(mix, keep, eng.nq)
    return rho_r, rho_g


def _herm_eig(rho):
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    return w, v


def relative_entropy(rho_r, rho_g, floor=EIG_FLOOR):
    """``tr(rho_r (log2 rho_r - log2 rho_g))`` with rho_g's spectrum floored at ``floor``."""
    rho_r = getattr(rho_r, "matrix", rho_r)
    rho_g = getattr(rho_g, "matrix", rho_g)
    wr, _ = _herm_eig(rho_r)
    wr = wr[wr > 0]
    self_term = float(np.sum(wr * np.log2(wr)))
    wg, vg = _herm_eig(rho_g)
    log_g = (vg * np.log2(np.maximum(wg, floor))) @ vg.conj().T
    cross = float(np.trace(rho_r @ log_g).real)
    return self_term - cross


def cross_entropy(model, label):
    rho_r, rho_g = reduced_output_states(model, label)
    return relative_entropy(rho_r, rho_g)


def state_overlap(rho_r, rho_g):
    rho_r = getattr(rho_r, "matrix", rho_r)
    rho_g = getattr(rho_g, "matrix", rho_g)
    return float(np.trace(rho_r @ rho_g).real)


def purity_overlap(model):
    """Label-averaged overlap ``C = mean_lambda tr(rho^R_lambda rho^G_lambda)``."""
    vals = [state_overlap(*reduced_output_states(model, name)) for name in model.labels.names]
    return float(np.mean(vals))


def overlap_diagnostics(model):
    """C with the bounds it implies on D's success probability and on C itself."""
    c = purity_overlap(model)
    r_min, purity_r = [], []
    for name in model.labels.names:
        rho_r, _ = reduced_output_states(model, name)
        r_min.append(float(np.linalg.eigvalsh(rho_r).min()))
        purity_r.append(state_overlap(rho_r, rho_r))
    return {
        "C": c,
        "success_lower": 0.5 * c,
        "success_upper": 1 - 0.5 * c,
        "r_min": min(r_min),
        "purity_R": float(np.mean(purity_r)),
    }
