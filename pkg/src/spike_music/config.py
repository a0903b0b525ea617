"""JSON run configuration shared by the command-line tools."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

from .estimators import DEFAULT_EPS_DETECT, min_grid_size
from .rmt import snr_db_to_power
from .signal_model import ArrayConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "resolve_config_path"]


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending field."""


@dataclass
class RunConfig:
    """Scenario grid plus run parameters.

    Each ``(N[i], n[i])`` pair is combined with every entry of ``snr_db``
    (all sources at that SNR). Giving ``powers`` instead fixes one explicit
    ``omega_k^2`` per source.
    """

    N: list[int]
    n: list[int]
    angles: list[float]
    snr_db: list[float] | None = None
    powers: list[float] | None = None
    D: float = 1.0
    trials: int = 2000
    master_seed: int = 0
    grid_size: int | None = None
    eps_detect: float = DEFAULT_EPS_DETECT
    method: str = "spike"
    output_dir: str | None = None
    stem: str = "sweep"

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        missing = {"N", "n", "angles"} - set(data)
        if missing:
            raise ConfigError(f"missing config field(s): {', '.join(sorted(missing))}")
        data = dict(data)
        for key in ("N", "n", "snr_db"):
            if key in data and isinstance(data[key], (int, float)):
                data[key] = [data[key]]
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> None:
        if len(self.N) != len(self.n) or not self.N:
            raise ConfigError("N and n must be non-empty lists of equal length")
        if (self.snr_db is None) == (self.powers is None):
            raise ConfigError("exactly one of snr_db or powers must be given")
        if self.powers is not None and len(self.powers) != len(self.angles):
            raise ConfigError("powers must have one entry per angle")
        if not isinstance(self.trials, int) or self.trials < 2:
            raise ConfigError(f"trials must be an integer >= 2, got {self.trials!r}")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.method not in ("spike", "classical"):
            raise ConfigError(f"method must be 'spike' or 'classical', got {self.method!r}")
        if self.eps_detect < 0:
            raise ConfigError("eps_detect must be non-negative")
        for N in self.N:
            if self.grid_size is not None and self.grid_size < min_grid_size(N):
                raise ConfigError(
                    f"grid_size={self.grid_size} below the minimum {min_grid_size(N)} for N={N}"
                )
        try:
            self.scenarios()
        except ValueError as exc:
            raise ConfigError(f"invalid scenario: {exc}") from exc

    def scenarios(self) -> list[ArrayConfig]:
        out = []
        for N, n in zip(self.N, self.n):
            if self.powers is not None:
                out.append(ArrayConfig(N, n, tuple(self.angles), tuple(self.powers), self.D))
                continue
            for snr in self.snr_db:
                p = snr_db_to_power(snr)
                out.append(ArrayConfig(N, n, tuple(self.angles), (p,) * len(self.angles), self.D))
        return out


def resolve_config_path(name: str | Path) -> Path:
    """A filesystem path, or the name of a bundled config such as ``var_vs_N``."""
    path = Path(name)
    if path.exists():
        return path
    stem = path.name if path.suffix == ".json" else f"{path.name}.json"
    bundled = resources.files("spike_music") / "configs" / stem
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"config file not found: {name}")


def load_config(name: str | Path) -> RunConfig:
    path = resolve_config_path(name)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    return RunConfig.from_dict(data)
