"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
Criterion 5 trains ten full 10,000-step runs (about 3 minutes on one core).
"""

import sys

import numpy as np
import pytest

from qugan.circuits import (
    FixedGate,
    ParamCircuit,
    ParamGate,
    PauliString,
    gate_matrix,
    random_circuit,
)
from qugan.config import replication_config
from qugan.gradients import (
    GradientTask,
    analytic_gradient,
    build_hessian_entry,
    circuit_gradient,
    estimate_gradient_shots,
    finite_difference_gradient,
    finite_difference_hessian,
)
from qugan.model import (
    cnot_solution,
    cost_components,
    cost_fair_coin,
    cost_V,
    cross_entropy,
    experiment_model,
    grad_discriminator,
    overlap_diagnostics,
)
from qugan.simcore import Observable, StateVector
from qugan.training import train

PI = np.pi


@pytest.fixture
def report(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})")
        return ok
    return emit


def random_task(rng, max_qubits=5, max_params=20):
    n = int(rng.integers(1, max_qubits + 1))
    n_params = int(rng.integers(1, max_params + 1))
    c = random_circuit(n, n_params, rng, num_gates=n_params + int(rng.integers(0, 5)),
                       max_weight=min(3, n))
    k = int(rng.integers(1, min(3, n) + 1))
    qubits = sorted(rng.choice(n, size=k, replace=False).tolist())
    obs = Observable.from_pauli("".join(rng.choice(list("XYZ"), size=k)), qubits)
    p = rng.uniform(-PI, PI, n_params)
    return GradientTask(c, p, StateVector.zero(n), obs, 0)


def test_criterion_1_gradient_three_way_agreement(report):
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        task = random_task(rng)
        for j in range(task.circuit.num_params):
            t = task.retarget(j)
            a = analytic_gradient(t)
            c = circuit_gradient(t)
            f = finite_difference_gradient(t, 1e-5)
            worst = max(worst, abs(a - c), abs(a - f), abs(c - f))
    assert report(1, "three-way gradient agreement on 50 random circuits",
                  worst < 1e-6, f"max pairwise deviation {worst:.2e} < 1e-6")


def test_criterion_2_hessian(report):
    rng = np.random.default_rng(202)
    sym = fd = 0.0
    for _ in range(20):
        task = random_task(rng, max_qubits=4, max_params=10)
        c, p, s, o = task.circuit, task.params, task.initial_state, task.observable
        n = c.num_params
        # both triangles evaluated independently
        h = np.array([[build_hessian_entry(task.retarget(j), k) for k in range(n)] for j in range(n)])
        sym = max(sym, float(np.abs(h - h.T).max()))
        fd = max(fd, float(np.abs(h - finite_difference_hessian(c, p, s, o)).max()))
    ok = sym < 1e-9 and fd < 1e-6
    assert report(2, "Hessian symmetry and finite-difference agreement on 20 circuits", ok,
                  f"symmetry {sym:.2e} < 1e-9, fd {fd:.2e} < 1e-6")


def test_criterion_3_structure(report):
    m = experiment_model()
    counts = (m.num_params_G, m.num_params_D, m.num_params_G + m.num_params_D, m.num_qubits)
    assert report(3, "parameter and qubit counts", counts == (10, 32, 42, 5),
                  f"N_G={counts[0]} N_D={counts[1]} total={counts[2]} qubits={counts[3]}")


def test_criterion_4_planted_equilibrium(report):
    rng = np.random.default_rng(404)
    base = experiment_model()
    theta_G = cnot_solution(base.gen_ansatz)
    v_dev = g_dev = c_dev = b_dev = s_dev = 0.0
    for _ in range(20):
        m = base.with_params(theta_D=rng.uniform(-PI, PI, 32), theta_G=theta_G)
        v_dev = max(v_dev, abs(cost_V(m) - 0.5))
        g_dev = max(g_dev, float(np.abs(grad_discriminator(m)).max()))
        diag = overlap_diagnostics(m)
        c_dev = max(c_dev, abs(diag["C"] - 1))
        b_dev = max(b_dev, abs(diag["success_lower"] - 0.5), abs(diag["success_upper"] - 0.5))
        s_dev = max(s_dev, *(abs(cross_entropy(m, lab)) for lab in m.labels.names))
    ok = v_dev < 1e-10 and g_dev < 1e-9 and c_dev < 1e-10 and b_dev < 1e-10 and s_dev < 1e-8
    assert report(4, "planted CNOT generator is an equilibrium", ok,
                  f"|V-1/2| {v_dev:.1e}, |grad_D| {g_dev:.1e}, |C-1| {c_dev:.1e}, "
                  f"bounds {b_dev:.1e}, S {s_dev:.1e}")


def _replicate(seed):
    cfg = replication_config(seed=seed)
    trace = train(cfg.build_model(), cfg.schedule(), seed, wall_clock=False)
    final = trace.model
    v_dr, v_dg = cost_components(final)
    s_final = {lab: cross_entropy(final, lab) for lab in final.labels.names}
    converged = all(v < 0.01 for v in s_final.values()) and abs(0.5 + v_dr + v_dg - 0.5) < 0.05
    # largest rise of S above its running minimum over the final 1,000 steps
    rise = 0.0
    for lab in final.labels.names:
        tail = np.append(trace.column("S_" + lab)[-1000:], s_final[lab])
        rise = max(rise, float(np.max(tail - np.minimum.accumulate(tail))))
    return converged, rise, s_final, 0.5 + v_dr + v_dg


@pytest.mark.slow
def test_criterion_5_training_replication(report):
    results = {seed: _replicate(seed) for seed in range(10)}
    converged = [s for s, r in results.items() if r[0]]
    rises = {s: results[s][1] for s in converged}
    ok = bool(converged) and all(r <= 0.005 for r in rises.values())
    worst = max(rises.values()) if rises else float("nan")
    assert report(5, "replicate-paper over 10 seeds", ok,
                  f"{len(converged)}/10 seeds converged; worst late S rise {worst:.1e} <= 0.005")


def test_criterion_6_cost_forms(report):
    rng = np.random.default_rng(606)
    fair = recomp = 0.0
    base = experiment_model()
    for _ in range(100):
        m = base.with_params(theta_D=rng.uniform(-PI, PI, 32), theta_G=rng.uniform(-PI, PI, 10))
        fair = max(fair, abs(cost_V(m) - cost_fair_coin(m)))
        for phi in (PI / 4, rng.uniform(0, PI / 2)):
            mp = experiment_model(theta_D=m.theta_D, theta_G=m.theta_G, phi=phi)
            v_dr, v_dg = cost_components(mp)
            recomp = max(recomp, abs(cost_V(mp) - (0.5 + v_dr + v_dg)))
    ok = fair < 1e-12 and recomp < 1e-12
    assert report(6, "general-angle cost matches fair-coin form on 100 models", ok,
                  f"form gap {fair:.1e}, recomposition gap {recomp:.1e} < 1e-12")


def test_criterion_7_w_gate(report):
    expected = np.array([[1, -1j], [-1j, 1]]) / np.sqrt(2)
    dev = float(np.abs(gate_matrix(FixedGate.w(0)) - expected).max())
    assert report(7, "W gate matrix", dev < 1e-12, f"max entry deviation {dev:.1e}")


def test_criterion_8_shot_mode(report):
    theta = 1.0
    gen = PauliString.parse("X", [0], 1)
    task = GradientTask(ParamCircuit(1, (ParamGate(gen, param_index=0),), 1), [theta],
                        StateVector.zero(1), Observable.z(0), 0)
    exact = analytic_gradient(task)
    hits = sum(abs(estimate_gradient_shots(task, 10**6, seed) - exact) < 0.005 for seed in range(100))
    assert report(8, "shot-based RX/Z gradient at 10^6 shots", hits >= 95,
                  f"{hits}/100 seeds within 0.005 of {exact:.6f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
