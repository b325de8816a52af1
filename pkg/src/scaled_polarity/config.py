"""Configuration module for the cdl experiment driver.

Values come from defaults, then CDL_* environment variables, then a JSON
file, then command-line flags; each layer overrides the previous one.
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .analysis import threshold
from .errors import ConfigError

# Multiples of the regime threshold used when alpha is "auto".
AUTO_MULTIPLES = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0)
TIGHT_POINTS = 10
SUPPORTED_FAMILIES = ["box", "ball", "simplex", "random"]
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]


@dataclass
class ExperimentConfig:
    """Settings for one suite run."""

    suite: str = "transforms"
    n: list[int] = field(default_factory=lambda: [1, 2, 3])
    alpha: list[float] | str = "auto"
    families: list[str] = field(default_factory=lambda: list(SUPPORTED_FAMILIES))
    grid_h: float = 1.0 / 64
    grid_range: float = 8.0
    seed: int = 0
    samples: int = 100
    out: str = "cdl-out"
    workers: int = 1
    tolerance: float = 1e-9
    log_level: str = "WARNING"

    @classmethod
    def from_env(cls) -> "ExperimentConfig":
        """Create configuration from CDL_* environment variables."""
        env = {
            "suite": os.getenv("CDL_SUITE"),
            "n": os.getenv("CDL_N"),
            "alpha": os.getenv("CDL_ALPHA"),
            "seed": os.getenv("CDL_SEED"),
            "out": os.getenv("CDL_OUT"),
            "grid_h": os.getenv("CDL_GRID_H"),
            "grid_range": os.getenv("CDL_GRID_RANGE"),
            "workers": os.getenv("CDL_WORKERS"),
            "log_level": os.getenv("CDL_LOG_LEVEL"),
        }
        return cls().with_overrides(**{k: _parse_env(k, v) for k, v in env.items() if v})

    @classmethod
    def from_json(cls, path: str | Path, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Load a JSON object of config fields on top of base (defaults when omitted)."""
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"Cannot read config {path}: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"Config {path} must hold a JSON object")
        return (base or cls()).with_overrides(**data)

    def with_overrides(self, **values: Any) -> "ExperimentConfig":
        """Copy with the given non-None fields replaced."""
        known = {f.name for f in fields(self)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown config fields: {unknown}. Known fields: {sorted(known)}")
        updated = replace(self, **{k: v for k, v in values.items() if v is not None})
        updated.validate()
        return updated

    def validate(self) -> None:
        """Raise ConfigError unless every field is usable."""
        # Imported here: suites imports this module.
        from .suites import SUPPORTED_SUITES

        if self.suite not in SUPPORTED_SUITES:
            raise ConfigError(f"Unsupported suite: {self.suite}. Supported suites: {SUPPORTED_SUITES}")
        if not isinstance(self.n, list) or not self.n or not all(isinstance(k, int) and k >= 1 for k in self.n):
            raise ConfigError(f"n must be a nonempty list of positive integers, got {self.n!r}")
        if isinstance(self.alpha, str):
            if self.alpha != "auto":
                raise ConfigError(f"alpha must be 'auto' or a list of numbers, got {self.alpha!r}")
        elif not self.alpha or not all(isinstance(a, (int, float)) and a > 0 for a in self.alpha):
            raise ConfigError(f"alpha must be a nonempty list of positive numbers, got {self.alpha!r}")
        if not self.families or any(f not in SUPPORTED_FAMILIES for f in self.families):
            raise ConfigError(f"families must be a nonempty subset of {SUPPORTED_FAMILIES}, got {self.families!r}")
        if not self.grid_h > 0 or not self.grid_range > 0:
            raise ConfigError(f"grid_h and grid_range must be positive, got {self.grid_h}, {self.grid_range}")
        if self.samples < 1 or self.workers < 1:
            raise ConfigError("samples and workers must be >= 1")
        if self.log_level.upper() not in LOG_LEVELS:
            raise ConfigError(f"Unknown log level: {self.log_level}. Levels: {LOG_LEVELS}")

    def alphas_for(self, n: int) -> list[float]:
        """Alpha values for dimension n; "auto" expands relative to the regime threshold."""
        if not isinstance(self.alpha, str):
            return [float(a) for a in self.alpha]
        if self.suite == "duality":
            return [float(n * n)]
        if self.suite == "mahler":
            return sorted({1.0, 2.0, float(n * n)})
        base = threshold(n)
        if self.suite == "exact-jl":
            return [m * base for m in AUTO_MULTIPLES if m >= 1.0]
        if self.suite == "tight-jl":
            # ten interior points of (1, threshold)
            return [float(a) for a in np.linspace(1.0, base, TIGHT_POINTS + 2)[1:-1]]
        return [m * base for m in AUTO_MULTIPLES]

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-ready dictionary."""
        return asdict(self)


def _parse_env(key: str, raw: str) -> Any:
    try:
        if key == "n":
            return _parse_n(raw)
        if key == "alpha":
            return "auto" if raw.strip() == "auto" else [float(a) for a in raw.split(",")]
        if key in ("seed", "workers"):
            return int(raw)
        if key in ("grid_h", "grid_range"):
            return _parse_fraction(raw)
    except ValueError as e:
        raise ConfigError(f"Cannot parse CDL_{key.upper()}={raw!r}: {e}")
    return raw


def _parse_n(raw: str) -> list[int]:
    """'1,2,3' or '1..3'."""
    if ".." in raw:
        lo, hi = raw.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(k) for k in raw.split(",")]


def _parse_fraction(raw: str) -> float:
    """'0.015625' or '1/64'."""
    if "/" in raw:
        num, den = raw.split("/")
        return float(num) / float(den)
    return float(raw)


def parse_n(raw: str) -> list[int]:
    try:
        return _parse_n(raw)
    except ValueError as e:
        raise ConfigError(f"Cannot parse n={raw!r}: {e}")


def parse_alpha(raw: str) -> list[float] | str:
    if raw.strip() == "auto":
        return "auto"
    try:
        return [float(a) for a in raw.split(",")]
    except ValueError as e:
        raise ConfigError(f"Cannot parse alpha={raw!r}: {e}")
