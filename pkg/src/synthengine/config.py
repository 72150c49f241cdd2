"""Pipeline configuration: a single TOML file consumed by every stage."""

from __future__ import annotations

import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from synthengine.errors import ConfigError

U64_MAX = 2**64 - 1


@dataclass(frozen=True)
class PipelineConfig:
    """Filter-cascade and calibration knobs.

    tau_sem may be the literal string "calibrate", meaning the threshold is
    supplied by a calibration report instead of the config file.
    """

    k_top: int = 3
    similarity_scale: float = 100.0
    tau_sem: float | str = "calibrate"
    tau_area: float = 0.05
    tau_kpt_conf: float = 0.5
    tau_kpt_count: int = 8
    recall_target: float = 0.95
    borderline_delta: float = 0.0
    seed: int = 0

    def validate(self) -> None:
        if not isinstance(self.k_top, int) or self.k_top < 1:
            raise ConfigError(f"k_top must be an integer >= 1, got {self.k_top!r}")
        if not self.similarity_scale > 0:
            raise ConfigError(f"similarity_scale must be positive, got {self.similarity_scale!r}")
        if isinstance(self.tau_sem, str):
            if self.tau_sem != "calibrate":
                raise ConfigError(f'tau_sem must be a number or "calibrate", got {self.tau_sem!r}')
        elif not isinstance(self.tau_sem, (int, float)):
            raise ConfigError(f'tau_sem must be a number or "calibrate", got {self.tau_sem!r}')
        if not 0.0 <= self.tau_area <= 1.0:
            raise ConfigError(f"tau_area must be in [0,1], got {self.tau_area!r}")
        if not 0.0 <= self.tau_kpt_conf <= 1.0:
            raise ConfigError(f"tau_kpt_conf must be in [0,1], got {self.tau_kpt_conf!r}")
        if not isinstance(self.tau_kpt_count, int) or self.tau_kpt_count < 0:
            raise ConfigError(f"tau_kpt_count must be an integer >= 0, got {self.tau_kpt_count!r}")
        if not 0.0 < self.recall_target <= 1.0:
            raise ConfigError(f"recall_target must be in (0,1], got {self.recall_target!r}")
        if self.borderline_delta < 0:
            raise ConfigError(f"borderline_delta must be >= 0, got {self.borderline_delta!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= U64_MAX:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def resolved_tau_sem(self) -> float:
        if isinstance(self.tau_sem, str):
            raise ConfigError(
                'tau_sem is "calibrate"; run `engine calibrate` and pass the report to the filter stage'
            )
        return float(self.tau_sem)

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class ControlSpace:
    """Task-valid control distributions expanded into a generation plan."""

    prompts: tuple[str, ...]
    pose_refs: tuple[str, ...] = ()
    edge_refs: tuple[str, ...] = ()
    n_scenes: int = 1
    k_variations: int = 1
    seed: int = 0

    def validate(self) -> None:
        if not self.prompts:
            raise ConfigError("control.prompts must be a non-empty list")
        for name, values in (("prompts", self.prompts), ("pose_refs", self.pose_refs), ("edge_refs", self.edge_refs)):
            if len(set(values)) != len(values):
                raise ConfigError(f"control.{name} contains duplicates")
            if any(not isinstance(v, str) or not v for v in values):
                raise ConfigError(f"control.{name} entries must be non-empty strings")
        if not isinstance(self.n_scenes, int) or self.n_scenes < 1:
            raise ConfigError(f"control.n_scenes must be an integer >= 1, got {self.n_scenes!r}")
        if not isinstance(self.k_variations, int) or self.k_variations < 1:
            raise ConfigError(f"control.k_variations must be an integer >= 1, got {self.k_variations!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed <= U64_MAX:
            raise ConfigError(f"control.seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def config_hash(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _load_toml(path: str | Path) -> dict:
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}")


def _reject_unknown(table: dict, known: set[str], section: str) -> None:
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"[{section}] has unknown keys: {', '.join(unknown)}")


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    doc = _load_toml(path)
    table = doc.get("pipeline", {})
    if not isinstance(table, dict):
        raise ConfigError("[pipeline] must be a table")
    known = set(PipelineConfig.__dataclass_fields__)
    _reject_unknown(table, known, "pipeline")
    cfg = PipelineConfig(**table)
    cfg.validate()
    return cfg


def load_control_space(path: str | Path) -> ControlSpace:
    doc = _load_toml(path)
    table = doc.get("control")
    if table is None:
        raise ConfigError(f"{path}: missing [control] section")
    if not isinstance(table, dict):
        raise ConfigError("[control] must be a table")
    known = set(ControlSpace.__dataclass_fields__)
    _reject_unknown(table, known, "control")
    for key in ("prompts", "pose_refs", "edge_refs"):
        if key in table:
            table[key] = tuple(table[key])
    space = ControlSpace(**table)
    space.validate()
    return space
