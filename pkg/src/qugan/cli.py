"""Command-line entry point.

Exit codes: 0 success, 1 input or configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import config as config_mod
from .circuit_io import CircuitFormatError, load_circuit
from .circuits import random_circuit
from .gradients import (
    GradientTask,
    UnsupportedObservable,
    analytic_gradient,
    build_hessian_entry,
    circuit_gradient,
    finite_difference_gradient,
    finite_difference_hessian,
)
from .model import cost_components, cross_entropy
from .simcore import Observable, StateVector
from .training import TrainingDiverged, train

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2
PROGRESS_EVERY = 100


def _fmt(x):
    return format(float(x), ".17g")


def trace_header(label_names):
    return (["step", "chi_D", "chi_G", "V", "V_DR", "V_DG"]
            + [f"S_label_{name}" for name in label_names]
            + ["grad_norm_D", "grad_norm_G", "wall_ms"])


def write_trace(trace, path):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(trace_header(trace.label_names)) + "\n")
        for r in trace.records:
            row = [str(r.step), _fmt(r.chi_D), _fmt(r.chi_G), _fmt(r.V), _fmt(r.V_DR), _fmt(r.V_DG)]
            row += [_fmt(r.S[name]) for name in trace.label_names]
            row += [_fmt(r.grad_norm_D), _fmt(r.grad_norm_G), _fmt(r.wall_ms)]
            fh.write(",".join(row) + "\n")


def _err(msg):
    print(msg, file=sys.stderr)


def execute(cfg):
    """Train according to ``cfg`` and write its trace; returns an exit code."""
    model = cfg.build_model()
    _err(f"qubits={model.num_qubits} N_G={model.num_params_G} N_D={model.num_params_D} "
         f"total={model.num_params_G + model.num_params_D}")

    def progress(k, rec):
        if (k + 1) % PROGRESS_EVERY == 0:
            ents = " ".join(f"S_{n}={v:.3e}" for n, v in rec.S.items())
            _err(f"step {k + 1}/{cfg.steps} V={rec.V:.5f} {ents}")

    shots = cfg.shots if cfg.mode == "shots" else None
    try:
        trace = train(model, cfg.schedule(), cfg.seed, shots=shots, progress=progress,
                      wall_clock=cfg.wall_clock)
    except TrainingDiverged as exc:
        write_trace(exc.trace, cfg.output)
        _err(f"error: {exc}")
        return EXIT_NUMERIC
    write_trace(trace, cfg.output)

    final = trace.model
    v_dr, v_dg = cost_components(final)
    ents = {name: cross_entropy(final, name) for name in final.labels.names}
    values = [0.5 + v_dr + v_dg, *ents.values()]
    if not np.all(np.isfinite(values)):
        _err("error: non-finite final metrics")
        return EXIT_NUMERIC
    parts = [f"steps={cfg.steps}", f"V={_fmt(values[0])}"]
    parts += [f"S_{name}={_fmt(v)}" for name, v in ents.items()]
    print(" ".join(parts))
    return EXIT_OK


def _overrides(cfg, args):
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.out is not None:
        cfg = replace(cfg, output=args.out)
    if args.shots is not None:
        cfg = replace(cfg, mode="shots", shots=args.shots)
    return cfg.validate()


def cmd_replicate(args):
    cfg = _overrides(config_mod.replication_config(), args)
    if args.print_config:
        sys.stdout.write(cfg.dumps())
        return EXIT_OK
    return execute(cfg)


def cmd_run(args):
    cfg = _overrides(config_mod.load(args.config), args)
    if args.print_config:
        sys.stdout.write(cfg.dumps())
        return EXIT_OK
    return execute(cfg)


def _check_target(args):
    """Circuit, parameters and observable for grad-check / hess-check."""
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    if args.circuit is not None and args.random:
        raise ValueError("give either a circuit file or --random, not both")
    if args.circuit is None and not args.random:
        raise ValueError("give a circuit file or --random")
    if args.random:
        circuit = random_circuit(args.qubits, args.params, rng, num_gates=args.gates)
        k = int(rng.integers(1, min(3, args.qubits) + 1))
        qubits = sorted(rng.choice(args.qubits, size=k, replace=False).tolist())
        observable = Observable.from_pauli("".join(rng.choice(list("XYZ"), size=k)), qubits)
        params = None
    else:
        cf = load_circuit(args.circuit)
        circuit, observable, params = cf.circuit, cf.observable, cf.params
    if params is None:
        params = rng.uniform(-np.pi, np.pi, circuit.num_params)
    return circuit, params, StateVector.zero(circuit.num_qubits), observable


def cmd_grad_check(args):
    circuit, params, psi0, obs = _check_target(args)
    if circuit.num_params == 0:
        raise ValueError("circuit has no trainable parameters")
    dev = 0.0
    for j in range(circuit.num_params):
        task = GradientTask(circuit, params, psi0, obs, j)
        a = analytic_gradient(task)
        c = circuit_gradient(task)
        f = finite_difference_gradient(task, args.step)
        dev = max(dev, abs(a - c), abs(a - f), abs(c - f))
        if args.verbose:
            print(f"param {j}: analytic={_fmt(a)} circuit={_fmt(c)} finite_difference={_fmt(f)}")
    ok = dev < args.tolerance
    print(f"grad-check params={circuit.num_params} max_deviation={dev:.3e} "
          f"tolerance={args.tolerance:.1e} {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INPUT


def cmd_hess_check(args):
    circuit, params, psi0, obs = _check_target(args)
    n = circuit.num_params
    if n == 0:
        raise ValueError("circuit has no trainable parameters")
    hess = np.zeros((n, n))
    ancilla = np.zeros((n, n))
    for j in range(n):
        task = GradientTask(circuit, params, psi0, obs, j)
        for k in range(n):
            hess[j, k] = build_hessian_entry(task, k)
            if args.ancilla:
                ancilla[j, k] = build_hessian_entry(task, k, method="circuit")
    fd = finite_difference_hessian(circuit, params, psi0, obs, args.step)
    sym = float(np.abs(hess - hess.T).max())
    fd_dev = float(np.abs(hess - fd).max())
    anc_dev = float(np.abs(hess - ancilla).max()) if args.ancilla else 0.0
    if args.verbose:
        for j in range(n):
            print(" ".join(_fmt(v) for v in hess[j]))
    ok = max(sym, fd_dev, anc_dev) < args.tolerance
    print(f"hess-check params={n} symmetry_residual={sym:.3e} fd_deviation={fd_dev:.3e} "
          f"ancilla_deviation={anc_dev:.3e} tolerance={args.tolerance:.1e} "
          f"{'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_INPUT


def build_parser():
    parser = argparse.ArgumentParser(prog="qugan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def training_flags(p):
        p.add_argument("--seed", type=int, help="parameter-initialization seed")
        p.add_argument("--out", help="trace CSV path")
        p.add_argument("--shots", type=int, help="switch to shot-based gradients with this many shots")
        p.add_argument("--print-config", action="store_true",
                       help="print the validated configuration and exit")

    p = sub.add_parser("replicate-paper", help="two-label replication run (10,000 steps)")
    training_flags(p)
    p.set_defaults(func=cmd_replicate)

    p = sub.add_parser("run", help="train from a key = value configuration file")
    p.add_argument("config")
    training_flags(p)
    p.set_defaults(func=cmd_run)

    def check_flags(p):
        p.add_argument("circuit", nargs="?", help="circuit file in the line format")
        p.add_argument("--random", action="store_true", help="check a random circuit")
        p.add_argument("--qubits", type=int, default=5)
        p.add_argument("--params", type=int, default=20)
        p.add_argument("--gates", type=int, default=None)
        p.add_argument("--seed", type=int)
        p.add_argument("--tolerance", type=float, default=1e-6)
        p.add_argument("--step", type=float, default=1e-5, help="finite-difference step")
        p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("grad-check", help="compare analytic, ancilla-circuit and finite-difference gradients")
    check_flags(p)
    p.set_defaults(func=cmd_grad_check)

    p = sub.add_parser("hess-check", help="check Hessian symmetry and finite-difference agreement")
    check_flags(p)
    p.add_argument("--no-ancilla", dest="ancilla", action="store_false",
                   help="skip the two-ancilla Hessian circuits")
    p.set_defaults(func=cmd_hess_check)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (config_mod.ConfigError, CircuitFormatError, UnsupportedObservable, OSError,
            ValueError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
