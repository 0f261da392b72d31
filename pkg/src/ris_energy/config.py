"""Experiment configuration files.

A config is a YAML document with three flat blocks, ``scenario``, ``plan`` and
``run``. dB-valued keys end in ``_db`` (powers in dB relative to 1 W); every
other power is in watts. Omitted keys take the defaults below, which mirror the
simulation parameters used throughout (alpha -60 dB, beta -80 dB, gamma_d 20 dB,
K = 2, M = 1024, B = 100 MHz, P_circuit 10 mW, sigma^2 -123.9 dB).
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .channel import ChannelScenario
from .energy import TransmissionPlan
from .quantization import RisCodebook
from .units import db_to_linear

EXPERIMENTS = ("snr-vs-N", "energy-surface", "optimize", "payload-sweep", "energy-vs-N", "mc-verify")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str, line: int | None = None):
        self.field_name = field_name
        self.line = line
        where = f"{field_name} (line {line})" if line else field_name
        super().__init__(f"{where}: {message}")


@dataclass
class ScenarioConfig:
    rho_db: float = -110.0
    alpha_db: float = -60.0
    beta_db: float = -80.0
    M: int = 1024
    sigma2_db: float = -123.9
    B: float = 100e6


@dataclass
class PlanConfig:
    L: float = 200
    L_values: list[float] | None = None
    gamma_d_db: float = 20.0
    gamma_p_db: float = 20.0
    p_circuit: float = 0.01
    bits: int | str = 1
    p_data: float = 0.1
    transmit_snr_db: float | None = None  # overrides p_data when set


@dataclass
class RunConfig:
    experiment: str = "optimize"
    trials: int = 1000
    seed: int = 2024
    out: str = "results/out.csv"
    format: str = "csv"
    workers: int = 1
    snr_family: str = "imperfect"
    p_pilot_values: list[float] = field(default_factory=lambda: [0.001, 0.01, 0.1])
    bits_values: list[int | str] = field(default_factory=lambda: [1, 2, 3, "inf"])
    rho_db_values: list[float] | None = None
    grid_n: int = 41
    grid_p: int = 41
    p_pilot_range: list[float] = field(default_factory=lambda: [0.001, 0.1])
    verify: bool = True


@dataclass
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    plan: PlanConfig = field(default_factory=PlanConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def channel_scenario(self, rho_db: float | None = None) -> ChannelScenario:
        s = self.scenario
        rho = s.rho_db if rho_db is None else rho_db
        return ChannelScenario.from_db(rho, s.alpha_db, s.beta_db, s.M, s.sigma2_db, s.B)

    def codebook(self) -> RisCodebook:
        return RisCodebook.parse(self.plan.bits)

    def transmission_plan(self, L: float | None = None) -> TransmissionPlan:
        p = self.plan
        return TransmissionPlan(
            L=p.L if L is None else L,
            gamma_d=db_to_linear(p.gamma_d_db),
            gamma_p=db_to_linear(p.gamma_p_db),
            p_circuit=p.p_circuit,
            K=self.codebook().K,
        )

    def data_power(self) -> float:
        if self.plan.transmit_snr_db is not None:
            return db_to_linear(self.scenario.sigma2_db) * db_to_linear(self.plan.transmit_snr_db)
        return self.plan.p_data

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_BLOCKS = {"scenario": ScenarioConfig, "plan": PlanConfig, "run": RunConfig}


def _key_lines(text: str) -> dict[str, int]:
    """Map 'block.key' to its 1-based line in the source."""
    lines: dict[str, int] = {}
    root = yaml.compose(text)
    if not isinstance(root, yaml.MappingNode):
        return lines
    for k, v in root.value:
        lines[k.value] = k.start_mark.line + 1
        if isinstance(v, yaml.MappingNode):
            for kk, _ in v.value:
                lines[f"{k.value}.{kk.value}"] = kk.start_mark.line + 1
    return lines


def _as_float(v, name, line):
    if isinstance(v, bool):
        raise ConfigError(name, f"expected a number, got {v!r}", line)
    try:
        return float(v)  # also accepts '1e8', which YAML 1.1 reads as a string
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected a number, got {v!r}", line) from None


def _as_int(v, name, line):
    x = _as_float(v, name, line)
    if not math.isfinite(x) or x != int(x):
        raise ConfigError(name, f"expected an integer, got {v!r}", line)
    return int(x)


def _as_bits(v, name, line):
    try:
        cb = RisCodebook.parse(v)
    except (TypeError, ValueError):
        raise ConfigError(name, f"expected 1, 2, 3, ... or 'inf', got {v!r}", line) from None
    return "inf" if cb.infinite else cb.bits


def _coerce(name: str, value, default, line):
    if value is None:
        return None
    if name.endswith("bits"):
        return _as_bits(value, name, line)
    if name.endswith("bits_values"):
        return [_as_bits(x, name, line) for x in _as_list(value, name, line)]
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(name, f"expected true/false, got {value!r}", line)
        return value
    if isinstance(default, int) or name.split(".")[-1] in ("M", "trials", "seed", "workers", "grid_n", "grid_p"):
        return _as_int(value, name, line)
    if isinstance(default, str):
        return str(value)
    if isinstance(default, list) or name.endswith(("_values", "_range")):
        return [_as_float(x, name, line) for x in _as_list(value, name, line)]
    return _as_float(value, name, line)


def _as_list(v, name, line):
    if not isinstance(v, list) or not v:
        raise ConfigError(name, "expected a non-empty list", line)
    return v


def _validate(cfg: ExperimentConfig, lines: dict[str, int]):
    def fail(name, msg):
        raise ConfigError(name, msg, lines.get(name))

    s, p, r = cfg.scenario, cfg.plan, cfg.run
    if s.M < 1:
        fail("scenario.M", f"must be a positive integer, got {s.M}")
    if not s.B > 0:
        fail("scenario.B", f"must be > 0, got {s.B}")
    for name in ("alpha_db", "beta_db", "sigma2_db"):
        if not math.isfinite(getattr(s, name)):
            fail(f"scenario.{name}", "must be finite")
    if math.isnan(s.rho_db) or s.rho_db == math.inf:
        fail("scenario.rho_db", "must be a number or -inf")
    if not p.L >= 0:
        fail("plan.L", f"must be >= 0, got {p.L}")
    if p.L_values is not None and any(not x >= 0 for x in p.L_values):
        fail("plan.L_values", "payload lengths must be >= 0")
    if not p.p_circuit >= 0:
        fail("plan.p_circuit", f"must be >= 0, got {p.p_circuit}")
    if not p.p_data >= 0:
        fail("plan.p_data", f"must be >= 0, got {p.p_data}")
    if r.experiment not in EXPERIMENTS:
        fail("run.experiment", f"unknown experiment {r.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    if r.trials < 0:
        fail("run.trials", f"must be >= 0, got {r.trials}")
    if r.workers < 1:
        fail("run.workers", f"must be >= 1, got {r.workers}")
    if r.format not in ("csv", "json"):
        fail("run.format", f"must be csv or json, got {r.format!r}")
    if r.snr_family not in ("perfect", "imperfect", "quantized"):
        fail("run.snr_family", f"must be perfect, imperfect or quantized, got {r.snr_family!r}")
    if any(not x >= 0 for x in r.p_pilot_values):
        fail("run.p_pilot_values", "pilot powers must be >= 0")
    if len(r.p_pilot_range) != 2 or not 0 < r.p_pilot_range[0] < r.p_pilot_range[1]:
        fail("run.p_pilot_range", "expected [low, high] with 0 < low < high")
    if r.grid_n < 2 or r.grid_p < 2:
        fail("run.grid_n" if r.grid_n < 2 else "run.grid_p", "grid needs at least 2 points")


def parse_config(data: dict | None, lines: dict[str, int] | None = None) -> ExperimentConfig:
    lines = lines or {}
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("<root>", "expected a mapping with scenario/plan/run blocks")
    blocks = {}
    for key in data:
        if key not in _BLOCKS:
            raise ConfigError(str(key), "unknown block (expected scenario, plan, run)", lines.get(str(key)))
    for block, cls in _BLOCKS.items():
        raw = data.get(block) or {}
        if not isinstance(raw, dict):
            raise ConfigError(block, "expected a mapping", lines.get(block))
        defaults = cls()
        known = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, value in raw.items():
            name = f"{block}.{key}"
            if key not in known:
                raise ConfigError(name, "unknown key", lines.get(name))
            kwargs[key] = _coerce(name, value, getattr(defaults, key), lines.get(name))
        blocks[block] = cls(**kwargs)
    cfg = ExperimentConfig(**blocks)
    _validate(cfg, lines)
    return cfg


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return parse_config({})
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
        lines = _key_lines(text) if data else {}
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError("<file>", f"invalid YAML: {exc}", mark.line + 1 if mark else None) from None
    return parse_config(data, lines)
