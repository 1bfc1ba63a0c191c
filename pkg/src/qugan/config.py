"""Run configuration: a flat ``key = value`` text file.

Keys (defaults reproduce the two-label replication)::

    s, n, m, d            register sizes (label, data, generator bath, discriminator bath)
    labels                comma list of name:bits, e.g. ``A:0, B:1``
    z_values, z_probs     comma lists of m-bit noise inputs and their probabilities
    source                ``label-copy`` or a path to a circuit file on s+n+m qubits
    gen_layers, disc_layers
    steps, chi_start, chi_end, decay_steps, chi_g_multiplier, gen_period
    phi                   coin angle in [0, pi/2]
    seed
    mode                  ``exact`` or ``shots``
    shots                 samples per gradient component in shots mode
    output                trace CSV path
    wall_clock            ``true`` records per-step wall time, ``false`` writes 0
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace

from .circuit_io import CircuitFormatError, load_circuit
from .circuits import AnsatzSpec
from .model import LabelSet, QuganModel, RealSource, RegisterLayout
from .training import TrainingSchedule


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    s: int = 1
    n: int = 1
    m: int = 0
    d: int = 0
    labels: str = "A:0, B:1"
    z_values: str = ""
    z_probs: str = ""
    source: str = "label-copy"
    gen_layers: int = 2
    disc_layers: int = 4
    steps: int = 10_000
    chi_start: float = 10.0
    chi_end: float = 0.1
    decay_steps: int = 4_000
    chi_g_multiplier: float = 5.0
    gen_period: int = 100
    phi: float = math.pi / 4
    seed: int = 0
    mode: str = "exact"
    shots: int = 0
    output: str = "trace.csv"
    wall_clock: bool = True

    def validate(self):
        """Raise ConfigError naming the first offending field."""
        for name in ("s", "n", "gen_layers", "disc_layers", "gen_period"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}: must be a positive integer")
        for name in ("m", "d", "steps", "decay_steps"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative")
        if not 0 <= self.phi <= math.pi / 2:
            raise ConfigError(f"phi: {self.phi} is outside [0, pi/2]")
        if self.mode not in ("exact", "shots"):
            raise ConfigError(f"mode: expected 'exact' or 'shots', got {self.mode!r}")
        if self.mode == "shots" and self.shots < 1:
            raise ConfigError("shots: shots mode needs a positive shot count")
        if not self.output:
            raise ConfigError("output: empty path")
        try:
            self.schedule()
        except ValueError as exc:
            raise ConfigError(f"schedule: {exc}") from None
        self.label_set()
        self.build_model()
        return self

    def label_set(self):
        names, patterns = [], []
        for item in _split(self.labels):
            name, sep, bits = item.partition(":")
            if not sep or not bits or set(bits) - set("01"):
                raise ConfigError(f"labels: expected name:bits, got {item!r}")
            if len(bits) != self.s:
                raise ConfigError(f"labels: pattern {bits!r} is not {self.s} bits")
            names.append(name.strip())
            patterns.append(bits)
        if not names:
            raise ConfigError("labels: at least one label is required")
        if self.m == 0:
            if _split(self.z_values):
                raise ConfigError("z_values: must be empty when m = 0")
            z_values, z_probs = [""], [1.0]
        else:
            z_values = _split(self.z_values) or ["0" * self.m]
            raw = _split(self.z_probs)
            try:
                z_probs = [float(p) for p in raw] if raw else [1.0 / len(z_values)] * len(z_values)
            except ValueError:
                raise ConfigError("z_probs: expected numbers") from None
            for z in z_values:
                if len(z) != self.m or set(z) - set("01"):
                    raise ConfigError(f"z_values: {z!r} is not an {self.m}-bit pattern")
        try:
            return LabelSet(tuple(names), tuple(patterns), tuple(z_values), tuple(z_probs))
        except ValueError as exc:
            raise ConfigError(f"labels: {exc}") from None

    def layout(self):
        return RegisterLayout(self.s, self.n, self.m, self.d)

    def real_source(self):
        layout = self.layout()
        if self.source == "label-copy":
            try:
                return RealSource.label_copy(layout)
            except ValueError as exc:
                raise ConfigError(f"source: {exc}") from None
        try:
            cf = load_circuit(self.source)
        except (OSError, CircuitFormatError) as exc:
            raise ConfigError(f"source: {exc}") from None
        try:
            return RealSource(cf.circuit)
        except ValueError as exc:
            raise ConfigError(f"source: {exc}") from None

    def build_model(self):
        layout = self.layout()
        try:
            return QuganModel(
                layout,
                self.real_source(),
                self.label_set(),
                AnsatzSpec(layout.s + layout.n + layout.m, self.gen_layers),
                AnsatzSpec(1 + layout.d + layout.s + layout.n, self.disc_layers),
                phi=self.phi,
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"model: {exc}") from None

    def schedule(self):
        return TrainingSchedule(self.steps, self.chi_start, self.chi_end, self.decay_steps,
                                self.chi_g_multiplier, self.gen_period)

    def dumps(self):
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _convert(name, kind, text, lineno):
    where = f"line {lineno}: {name}"
    if kind is bool:
        low = text.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ConfigError(f"{where}: expected true/false, got {text!r}")
    if kind is int:
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if kind is float:
        try:
            return float(text)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {text!r}") from None
    return text


_TYPES = {"int": int, "float": float, "bool": bool, "str": str}


def loads(text, base_dir=None):
    kinds = {f.name: _TYPES[f.type] for f in fields(RunConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in kinds:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _convert(key, kinds[key], value.strip(), lineno)
    cfg = RunConfig(**values)
    if base_dir and cfg.source != "label-copy" and not os.path.isabs(cfg.source):
        cfg = replace(cfg, source=os.path.join(base_dir, cfg.source))
    return cfg.validate()


def load(path):
    with open(path) as fh:
        return loads(fh.read(), base_dir=os.path.dirname(os.path.abspath(path)))


def replication_config(seed=0, output="trace.csv"):
    return RunConfig(seed=seed, output=output)
