"""Experiment configuration stored as an INI file.

Sections mirror the experiment parameter table (evolution, learning, body
mutation, task, surrogate, experiment). Floats are written with ``repr`` so a
save/load cycle is bit-exact, and every key must be known: a typo is an error
that names the file line, not a silently ignored setting.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .cppn import MutationRates
from .evolution import EvolutionConfig
from .learner import RevDeConfig
from .simulation import SurrogateParams, TaskSpec


class ConfigError(ValueError):
    """Bad configuration; the message carries file line and field."""


@dataclass(frozen=True)
class ExperimentConfig:
    evolution: EvolutionConfig = EvolutionConfig()
    repetitions: int = 1
    out: str = "runs"
    parallelism: int = 0  # 0 = every available core
    trace_trajectories: bool = False

    @property
    def seed(self) -> int:
        return self.evolution.seed

    def with_evolution(self, **changes) -> ExperimentConfig:
        return replace(self, evolution=replace(self.evolution, **changes))


# (section, key in file) -> (owner path, attribute)
# owner path: "" = EvolutionConfig, "learning", "body_mutation", "task", "surrogate", "experiment"
_SECTIONS = {
    "evolution": ("", {
        "mu": "mu", "lambda": "lam", "generations": "generations",
        "tournament_size": "tournament_size", "mode": "mode", "seed": "seed",
        "crossover_rate": "crossover_rate", "brain_mutation_rate": "brain_mutation_rate",
        "brain_mutation_sigma": "brain_mutation_sigma", "max_modules": "max_modules",
        "learning_enabled": "learning_enabled", "freeze_bodies": "freeze_bodies",
    }),
    "learning": ("learning", {f.name: f.name for f in fields(RevDeConfig)}),
    "body_mutation": ("body_mutation", {f.name: f.name for f in fields(MutationRates)}),
    "task": ("task", {f.name: f.name for f in fields(TaskSpec)}),
    "surrogate": ("surrogate", {f.name: f.name for f in fields(SurrogateParams)}),
    "experiment": ("experiment", {
        "repetitions": "repetitions", "out": "out", "parallelism": "parallelism",
        "trace_trajectories": "trace_trajectories",
    }),
}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):  # target list
        return "; ".join(", ".join(repr(float(c)) for c in point) for point in value)
    return str(value)


def _parse(raw: str, template):
    raw = raw.strip()
    if isinstance(template, bool):
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(template, int):
        return int(raw)
    if isinstance(template, float):
        value = float(raw)
        if math.isnan(value):
            raise ValueError("NaN is not a valid setting")
        return value
    if isinstance(template, tuple):
        points = []
        for chunk in raw.split(";"):
            parts = [float(p) for p in chunk.split(",")]
            if len(parts) != 2:
                raise ValueError(f"target {chunk.strip()!r} must be 'x, y'")
            points.append(tuple(parts))
        if not points:
            raise ValueError("at least one target is required")
        return tuple(points)
    return raw


def _owner(cfg: ExperimentConfig, path: str):
    if path == "experiment":
        return cfg
    if path == "":
        return cfg.evolution
    return getattr(cfg.evolution, path)


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # keys are case sensitive (F, CR)
    return parser


def to_ini(cfg: ExperimentConfig) -> str:
    parser = _parser()
    for section, (path, keys) in _SECTIONS.items():
        owner = _owner(cfg, path)
        parser[section] = {key: _format(getattr(owner, attr)) for key, attr in keys.items()}
    lines = []
    for section in parser.sections():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in parser[section].items()]
        lines.append("")
    return "\n".join(lines)


def save(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(to_ini(cfg))


def _line_of(text: str, section: str, key: str | None) -> int:
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        m = re.match(r"\[(.+)\]$", stripped)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", stripped):
            return lineno
    return 0


def from_ini(text: str, source: str = "<config>") -> ExperimentConfig:
    parser = _parser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    updates: dict[str, dict] = {path: {} for path, _ in _SECTIONS.values()}
    defaults = ExperimentConfig()
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(
                f"{source}:{_line_of(text, section, None)}: unknown section [{section}] "
                f"(expected one of {', '.join(_SECTIONS)})")
        path, keys = _SECTIONS[section]
        for key, raw in parser[section].items():
            where = f"{source}:{_line_of(text, section, key)}"
            if key not in keys:
                raise ConfigError(f"{where}: unknown key {key!r} in [{section}]")
            attr = keys[key]
            try:
                updates[path][attr] = _parse(raw, getattr(_owner(defaults, path), attr))
            except ValueError as exc:
                raise ConfigError(f"{where}: [{section}] {key}: {exc}") from exc

    try:
        evo = defaults.evolution
        nested = {
            p: replace(getattr(evo, p), **updates[p])
            for p in ("learning", "body_mutation", "task", "surrogate")
        }
        evo = replace(evo, **updates[""], **nested)
        return replace(defaults, evolution=evo, **updates["experiment"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_ini(text, str(path))


def to_plain(cfg: ExperimentConfig, include_runtime: bool = False) -> dict:
    """Nested dict of the config (for event logs). Runtime knobs are excluded by default."""
    out = {}
    for section, (path, keys) in _SECTIONS.items():
        if section == "experiment" and not include_runtime:
            continue
        owner = _owner(cfg, path)
        out[section] = {key: _format(getattr(owner, attr)) for key, attr in keys.items()}
    return out


def from_plain(data: dict) -> ExperimentConfig:
    lines = []
    for section, values in data.items():
        lines.append(f"[{section}]")
        lines += [f"{k} = {v}" for k, v in values.items()]
    return from_ini("\n".join(lines) + "\n", "<event log>")


__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "from_ini",
    "from_plain",
    "load",
    "save",
    "to_ini",
    "to_plain",
]
