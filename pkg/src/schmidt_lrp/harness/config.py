"""Experiment configuration and its on-disk key/value form.

Config files are INI files with a single ``[experiment]`` section whose keys
are the :class:`ExperimentConfig` field names, e.g.::

    [experiment]
    state = isotropic
    d = 20
    v = 0.3, 0.52, 0.77, 0.95
    n_ops = 12
    level = 0.999
    shots = exact
    iters = 2000
    seed = 7

Comma-separated values for ``d``, ``v``, ``beta`` or ``n_ops`` define sweep axes.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field, fields

from ..errors import DomainError
from ..estimator import BOOTSTRAP_METHODS
from ..shots import default_shots

__all__ = [
    "ExperimentConfig",
    "SEED_ENV",
    "STATE_FAMILIES",
    "GRID_AXES",
    "default_seed",
    "load_config_file",
    "parse_shots",
]

SEED_ENV = "SCHMIDT_LRP_SEED"
STATE_FAMILIES = ("isotropic", "thermal", "random_noise", "max_entangled", "partial_entangled")
GRID_AXES = ("d", "v", "beta", "n_ops")


def default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "20240101"))


def parse_shots(value) -> int | None:
    """``"exact"``/None -> None, ``"auto"`` -> 0 (resolved to 100 d later), else an int."""
    if value is None:
        return None
    if isinstance(value, int):
        return value
    value = str(value).strip().lower()
    if value in ("exact", "none", ""):
        return None
    if value == "auto":
        return 0
    return int(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one sweep cell (or the template a grid is applied to).

    ``shots=None`` evaluates expectations exactly; ``shots=0`` means the
    default ``M = 100 d`` shots per projector.
    """

    state: str = "isotropic"
    d: int = 20
    v: float = 0.95
    beta: float = 0.5
    mu: int = 1
    n_ops: int = 12
    level: float = 0.999
    two_sided: bool = True
    method: str = "t"
    bootstrap_b: int = 5000
    bootstrap_method: str = "percentile"
    shots: int | None = None
    iters: int = 2000
    seed: int = field(default_factory=default_seed)
    j: int = 0
    alpha_mub: int = 1
    baselines: bool = True
    threads: int = 1
    verbose: bool = False

    def __post_init__(self):
        if self.state not in STATE_FAMILIES:
            raise DomainError(f"unknown state family {self.state!r}")
        if self.d < 2:
            raise DomainError("d must be >= 2")
        if self.n_ops < 2 or self.iters < 1 or self.threads < 1 or self.bootstrap_b < 1:
            raise DomainError("counts must be positive (n_ops >= 2)")
        if not 0 < self.level < 1:
            raise DomainError("level must lie in (0, 1)")
        if self.method not in ("t", "bootstrap"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.bootstrap_method not in BOOTSTRAP_METHODS:
            raise DomainError(f"unknown bootstrap method {self.bootstrap_method!r}")
        if self.shots is not None and self.shots < 0:
            raise DomainError("shots must be non-negative")

    @property
    def shots_per_projector(self) -> int | None:
        if self.shots is None:
            return None
        return self.shots or default_shots(self.d)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(name, raw: str):
    typ = _FIELD_TYPES[name]
    raw = raw.strip()
    if name == "shots":
        return parse_shots(raw)
    if typ == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if typ == "int":
        return int(raw)
    if typ == "float":
        return float(raw)
    return raw


def load_config_file(path) -> tuple[dict, dict]:
    """Read an INI config; returns ``(scalar_overrides, grid_axes)``."""
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    if "experiment" not in parser:
        raise DomainError(f"{path}: missing [experiment] section")
    scalars, grid = {}, {}
    for key, raw in parser["experiment"].items():
        if key not in _FIELD_TYPES:
            raise DomainError(f"{path}: unknown key {key!r}")
        if key in GRID_AXES and "," in raw:
            grid[key] = [_coerce(key, part) for part in raw.split(",")]
        else:
            scalars[key] = _coerce(key, raw)
    return scalars, grid
