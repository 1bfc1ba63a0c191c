"""Alternating gradient training: ascent on theta_D every step, descent on theta_G periodically."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .model import _combine, reduced_output_states, relative_entropy


@dataclass(frozen=True)
class TrainingSchedule:
    """Discriminator rate decaying geometrically from ``chi_start`` to ``chi_end``
    over ``decay_steps`` steps, constant afterwards; ``chi_G = multiplier * chi_D``.
    """

    total_steps: int = 10_000
    chi_start: float = 10.0
    chi_end: float = 0.1
    decay_steps: int = 4_000
    chi_g_multiplier: float = 5.0
    gen_update_period: int = 100

    def __post_init__(self):
        if self.total_steps < 0 or self.decay_steps < 0:
            raise ValueError("step counts must be non-negative")
        if self.gen_update_period < 1:
            raise ValueError("gen_update_period must be a positive integer")
        if self.chi_start < 0 or self.chi_end < 0 or self.chi_g_multiplier < 0:
            raise ValueError("learning rates must be non-negative")
        if (self.chi_start == 0) != (self.chi_end == 0) and self.decay_steps > 0:
            raise ValueError("geometric decay cannot start or end at zero")

    def chi_d(self, k):
        if k >= self.decay_steps or self.chi_start == self.chi_end:
            return self.chi_end
        return self.chi_start * (self.chi_end / self.chi_start) ** (k / self.decay_steps)

    def chi_g(self, k):
        return self.chi_g_multiplier * self.chi_d(k)

    def updates_generator(self, k):
        return k > 0 and k % self.gen_update_period == 0


@dataclass
class TraceRecord:
    step: int
    chi_D: float
    chi_G: float
    V: float
    V_DR: float
    V_DG: float
    S: dict
    grad_norm_D: float
    grad_norm_G: float
    wall_ms: float


@dataclass
class TrainingTrace:
    """Per-step records; metrics in record ``k`` are evaluated before update ``k``.

    ``chi_G`` is the rate actually applied at that step (0 when the generator
    is not updated).
    """

    label_names: tuple
    records: list = field(default_factory=list)
    model: object = None

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        if name.startswith("S_"):
            return np.array([r.S[name[2:]] for r in self.records])
        return np.array([getattr(r, name) for r in self.records])


class TrainingDiverged(ArithmeticError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def init_params(model, seed):
    """Uniform angles in [-pi, pi) for theta_G then theta_D."""
    rng = np.random.default_rng(seed)
    theta_G = rng.uniform(-np.pi, np.pi, model.num_params_G)
    theta_D = rng.uniform(-np.pi, np.pi, model.num_params_D)
    return model.with_params(theta_D=theta_D, theta_G=theta_G)


def _sample(grads, shots, rng):
    """Replace exact ancilla expectations by ``shots``-sample estimates."""
    p0 = np.clip((1 + grads) / 2, 0.0, 1.0)
    return 2 * rng.binomial(shots, p0) / shots - 1


def train(model, schedule, seed=0, initialize=True, shots=None, progress=None,
          wall_clock=True):
    """Run ``schedule.total_steps`` discriminator steps.

    ``seed`` draws the initial parameters (when ``initialize``) and drives
    shot sampling.  With ``shots`` set, every per-label, per-branch gradient
    component is replaced by the mean of that many ancilla readouts.
    ``progress(k, record)`` is called after each recorded step.
    """
    if initialize:
        model = init_params(model, seed)
    eng = model.engine
    names = model.labels.names
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    theta_D = model.theta_D.copy()
    theta_G = model.theta_G.copy()
    trace = TrainingTrace(names)

    g_states = eng.gen_states(theta_G)
    entropies = _entropies(model, g_states)
    for k in range(schedule.total_steps):
        t0 = time.perf_counter()
        ev = eng.evaluate(theta_D, theta_G, model.phi, g_states=g_states)
        if shots:
            for key in ("dr", "dg", "gg"):
                ev[key] = _sample(ev[key], shots, rng)
        v_dr, v_dg, grad_d, grad_g = _combine(ev)
        chi_d = schedule.chi_d(k)
        update_g = schedule.updates_generator(k)
        chi_g = schedule.chi_g(k) if update_g else 0.0
        record = TraceRecord(
            step=k, chi_D=chi_d, chi_G=chi_g,
            V=0.5 + v_dr + v_dg, V_DR=v_dr, V_DG=v_dg, S=dict(entropies),
            grad_norm_D=float(np.linalg.norm(grad_d)),
            grad_norm_G=float(np.linalg.norm(grad_g)),
            wall_ms=0.0,
        )
        finite = np.all(np.isfinite(grad_d)) and np.all(np.isfinite(grad_g)) and np.isfinite(record.V)
        if not finite:
            trace.append(record)
            trace.model = model.with_params(theta_D=theta_D, theta_G=theta_G)
            raise TrainingDiverged(f"non-finite cost or gradient at step {k}", trace)

        theta_D = theta_D + chi_d * grad_d
        if update_g:
            theta_G = theta_G - chi_g * grad_g
            g_states = eng.gen_states(theta_G)
            entropies = _entropies(model, g_states)
        if wall_clock:
            record.wall_ms = (time.perf_counter() - t0) * 1e3
        trace.append(record)
        if progress is not None:
            progress(k, record)

    trace.model = model.with_params(theta_D=theta_D, theta_G=theta_G)
    return trace


def _entropies(model, g_states):
    return {name: relative_entropy(*reduced_output_states(model, name, g_states=g_states))
            for name in model.labels.names}
