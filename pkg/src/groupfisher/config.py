"""Run configuration: a versioned YAML document (JSON is accepted too).

Unknown keys are rejected with their dotted path, and
``parse(serialize(cfg)) == cfg`` for every valid configuration.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import yaml

SCHEMA_VERSION = 1

COMMANDS = ("score", "fisher", "fisher-var", "converge", "minimize", "lan", "moments")

# Allowed keys of the nested sections; ``None`` means free-form (validated downstream).
_SECTIONS = {
    "model": {"tag": None, "k": None, "sigma1": None, "sigma2": None},
    "quadrature": {"resolution": None, "method": None},
    "neighborhood": {
        "eps": None,
        "objective": None,
        "include_base": None,
        "atoms": {"lo": None, "hi": None, "n": None},
        "tails": {"starts": None, "rates": None},
    },
    "lan": {"h": None, "n_list": None, "replications": None},
    "moments": {"N": None},
    "output": {"dir": None},
    "tolerances": {"gap": None, "max_iter": None, "floor": None},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: dict
    dist: dict
    version: int = SCHEMA_VERSION
    theta: list | dict | None = None
    degree: int = 10
    degrees: list | None = None
    direction: list | None = None
    points: list | None = None
    seed: int = 0
    quadrature: dict = field(default_factory=dict)
    neighborhood: dict = field(default_factory=dict)
    lan: dict = field(default_factory=dict)
    moments: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping at the top level")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(f"unknown key {key!r}")
        for key in ("command", "model", "dist"):
            if key not in data:
                raise ConfigError(f"missing required key {key!r}")
        if data.get("version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config version {data.get('version')!r}; expected {SCHEMA_VERSION}")
        if data["command"] not in COMMANDS:
            raise ConfigError(f"unknown command {data['command']!r}; expected one of {COMMANDS}")
        for name, allowed in _SECTIONS.items():
            if name in data:
                _check_keys(data[name], allowed, name)
        if "tag" not in data["model"]:
            raise ConfigError("missing required key 'model.tag'")
        if not isinstance(data["dist"], dict):
            raise ConfigError("'dist' must be a mapping")
        for key in ("degree", "seed"):
            if key in data and not isinstance(data[key], int):
                raise ConfigError(f"{key!r} must be an integer")
        return cls(**data)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in (None, {})}


def _check_keys(section, allowed, path):
    if not isinstance(section, dict):
        raise ConfigError(f"{path!r} must be a mapping")
    for key, value in section.items():
        if key not in allowed:
            raise ConfigError(f"unknown key {path + '.' + key!r}")
        sub = allowed[key]
        if isinstance(sub, dict) and value is not None:
            _check_keys(value, sub, f"{path}.{key}")


def parse(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"cannot parse configuration{where}: {getattr(exc, 'problem', exc)}") from None
    return RunConfig.from_dict(data)


def serialize(cfg: RunConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)


def load(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
