"""Quantum generative adversarial training on a dense state-vector simulator."""

from .circuits import AnsatzSpec, ParamCircuit, ParamGate, PauliString, build_ansatz
from .gradients import GradientTask, analytic_gradient, circuit_gradient
from .model import QuganModel, experiment_model
from .simcore import DensityOperator, Observable, StateVector
from .training import TrainingSchedule, train

__all__ = [
    "AnsatzSpec", "ParamCircuit", "ParamGate", "PauliString", "build_ansatz",
    "GradientTask", "analytic_gradient", "circuit_gradient",
    "QuganModel", "experiment_model",
    "DensityOperator", "Observable", "StateVector",
    "TrainingSchedule", "train",
]
