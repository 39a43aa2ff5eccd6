"""Service configuration: one JSON file, everything defaulted for local use."""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import Thresholds
from .runner import InterpreterConfig, ResourceLimits

COURSE_MODES = ("auto_accept", "instructor_gated")


@dataclass(frozen=True)
class ProviderConfig:
    mode: str = "stub"  # "http" or "stub"
    base_url: str = ""
    token_env: str = "SCAFFOLD_PROVIDER_TOKEN"
    timeout_s: float = 30.0
    retries: int = 1
    stub_files: tuple[str, ...] = ()

    def __post_init__(self):
        if self.mode not in ("http", "stub"):
            raise ValueError(f"provider mode must be 'http' or 'stub', got {self.mode!r}")
        if self.mode == "http" and not self.base_url:
            raise ValueError("provider mode 'http' requires base_url")


@dataclass(frozen=True)
class Principal:
    id: str
    role: str  # "student" or "instructor"


@dataclass(frozen=True)
class ServiceConfig:
    interpreter: InterpreterConfig = InterpreterConfig()
    default_limits: ResourceLimits = ResourceLimits()
    pool_size: int = 4
    pool_queue: int = 0
    provider: ProviderConfig = ProviderConfig()
    course_mode: str = "auto_accept"
    thresholds: Thresholds = Thresholds()
    max_attempts: int = 3
    db_path: str = ":memory:"
    roster: dict = field(default_factory=dict)  # token -> Principal

    def __post_init__(self):
        if self.course_mode not in COURSE_MODES:
            raise ValueError(f"course_mode must be one of {COURSE_MODES}")
        if self.pool_size < 1:
            raise ValueError("pool_size must be >= 1")


def load_config(path: str | Path) -> ServiceConfig:
    """Read a JSON config file; omitted fields keep their defaults."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return config_from_dict(data)


def config_from_dict(data: dict) -> ServiceConfig:
    interp_data = data.get("interpreter", {})
    argv = tuple(interp_data.get("argv", (sys.executable, "-I", "{source}")))
    interpreter = InterpreterConfig(
        argv_template=argv,
        source_filename=interp_data.get("source_filename", "main.py"),
    )
    limits = ResourceLimits.from_dict(data.get("default_limits", {}))
    provider_data = data.get("provider", {})
    provider = ProviderConfig(
        mode=provider_data.get("mode", "stub"),
        base_url=provider_data.get("base_url", ""),
        token_env=provider_data.get("token_env", "SCAFFOLD_PROVIDER_TOKEN"),
        timeout_s=provider_data.get("timeout_s", 30.0),
        retries=provider_data.get("retries", 1),
        stub_files=tuple(provider_data.get("stub_files", ())),
    )
    thresholds_data = data.get("thresholds", {})
    thresholds = Thresholds(
        tau_struct=thresholds_data.get("tau_struct", 0.60),
        tau_surf=thresholds_data.get("tau_surf", 0.35),
    )
    roster = {
        token: Principal(id=entry["id"], role=entry.get("role", "student"))
        for token, entry in data.get("roster", {}).items()
    }
    return ServiceConfig(
        interpreter=interpreter,
        default_limits=limits,
        pool_size=data.get("pool_size", 4),
        pool_queue=data.get("pool_queue", 0),
        provider=provider,
        course_mode=data.get("course_mode", "auto_accept"),
        thresholds=thresholds,
        max_attempts=data.get("max_attempts", 3),
        db_path=data.get("db_path", ":memory:"),
        roster=roster,
    )
