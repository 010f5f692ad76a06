"""Scenario file schema (JSON, versioned).

Every section is optional and falls back to the defaults below.  Unknown keys
are rejected so that typos never silently fall back to a default.  The fully
resolved configuration is echoed into each run summary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

from .circuit import CircuitParams
from .detection import ScDetectorConfig, SupervisoryConfig
from .discharge import DischargeConfig
from .faults import FaultEvent, validate_scenario
from .protection import FsmConfig, IsolationSchedule
from .thermal import ThermalParams

SCHEMA_VERSION = 1


class ScenarioError(ValueError):
    """Scenario file is malformed or describes an invalid scenario."""


@dataclass(frozen=True)
class NoiseConfig:
    enabled: bool = False
    sigma_v: float = 2.0
    sigma_i: float = 1.0


@dataclass(frozen=True)
class EngineConfig:
    dt_electrical: float = 0.5e-6
    dt_thermal: float = 100e-6
    dt_supervisory: float = 100e-6
    t_end: float = 0.5
    seed: int = 0
    noise: NoiseConfig = field(default_factory=NoiseConfig)

    def __post_init__(self):
        if not self.t_end > 0:
            raise ValueError("t_end must be > 0")
        if not self.dt_electrical > 0:
            raise ValueError("dt_electrical must be > 0")
        for name in ("dt_thermal", "dt_supervisory"):
            ratio = getattr(self, name) / self.dt_electrical
            if ratio < 1 or abs(ratio - round(ratio)) > 1e-6:
                raise ValueError(f"{name} must be an integer multiple of dt_electrical")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def steps(self, t: float) -> int:
        """Index of the first electrical step starting at or after ``t``."""
        x = t / self.dt_electrical
        return int(round(x)) if abs(x - round(x)) < 1e-6 else int(math.ceil(x))


@dataclass(frozen=True)
class DetectorConfig:
    sc: ScDetectorConfig = field(default_factory=ScDetectorConfig)
    supervisory: SupervisoryConfig = field(default_factory=SupervisoryConfig)


@dataclass(frozen=True)
class InitialConfig:
    # None means the calibrated mean link voltage (v_source without calibration).
    v_dc: float | None = None
    warm_start: bool = True


@dataclass(frozen=True)
class OutputConfig:
    trace_stride: float = 100e-6
    event_window: float = 1e-3
    plots: bool = False


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "scenario"
    schema_version: int = SCHEMA_VERSION
    engine: EngineConfig = field(default_factory=EngineConfig)
    circuit: CircuitParams = field(default_factory=CircuitParams)
    thermal: ThermalParams = field(default_factory=ThermalParams)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    fsm: FsmConfig = field(default_factory=FsmConfig)
    discharge: DischargeConfig = field(default_factory=DischargeConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    faults: tuple[FaultEvent, ...] = ()
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "schema_version": self.schema_version,
            "engine": _plain(self.engine),
            "circuit": self.circuit.to_dict(),
            "thermal": self.thermal.to_dict(),
            "detector": {"sc": self.detector.sc.to_dict(), "supervisory": self.detector.supervisory.to_dict()},
            "fsm": self.fsm.to_dict(),
            "discharge": self.discharge.to_dict(),
            "initial": _plain(self.initial),
            "faults": [ev.to_dict() for ev in self.faults],
            "output": _plain(self.output),
        }


def _plain(obj) -> dict:
    out = {}
    for f in fields(obj):
        value = getattr(obj, f.name)
        out[f.name] = _plain(value) if hasattr(value, "__dataclass_fields__") else value
    return out


_TUPLE_FIELDS = {"isolate_classes", "shutdown_classes", "auto_restart_classes"}


def _build(cls, data: Any, where: str, nested: dict | None = None):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError(f"{where}: expected an object")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if nested and key in nested:
            kwargs[key] = _build(nested[key], value, f"{where}.{key}")
        elif key in _TUPLE_FIELDS:
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from None


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object")
    names = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ScenarioError(f"scenario: unknown key(s) {', '.join(unknown)}")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ScenarioError(f"schema_version {version!r} is not supported (expected {SCHEMA_VERSION})")

    faults = []
    for idx, raw in enumerate(data.get("faults", []) or []):
        try:
            faults.append(FaultEvent.from_dict(raw))
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"faults[{idx}]: {exc}") from None

    cfg = ScenarioConfig(
        name=str(data.get("name", "scenario")),
        schema_version=version,
        engine=_build(EngineConfig, data.get("engine"), "engine", {"noise": NoiseConfig}),
        circuit=_build(CircuitParams, data.get("circuit"), "circuit"),
        thermal=_build(ThermalParams, data.get("thermal"), "thermal"),
        detector=_build(DetectorConfig, data.get("detector"), "detector",
                        {"sc": ScDetectorConfig, "supervisory": SupervisoryConfig}),
        fsm=_build(FsmConfig, data.get("fsm"), "fsm", {"schedule": IsolationSchedule}),
        discharge=_build(DischargeConfig, data.get("discharge"), "discharge"),
        initial=_build(InitialConfig, data.get("initial"), "initial"),
        faults=tuple(faults),
        output=_build(OutputConfig, data.get("output"), "output"),
    )
    errors = validate_scenario(cfg.faults, cfg.circuit)
    if errors:
        raise ScenarioError("; ".join(errors))
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.exists():
        bundled = resources.files("phaseguard.scenarios") / path.name
        if bundled.is_file():
            return scenario_from_dict(json.loads(bundled.read_text()))
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(data)


def bundled_scenarios() -> list[str]:
    """Names of the bundled scenario files (sweep definitions excluded)."""
    return sorted(p.name for p in resources.files("phaseguard.scenarios").iterdir()
                  if p.name.endswith(".json") and not p.name.startswith("sweep_"))


def bundled_path(name: str):
    return resources.files("phaseguard.scenarios") / name
