"""Run configuration: one JSON file, flag overrides on top, early validation.

Every physically meaningless value is rejected when the config object is
built, before any sampling or IO happens.  Flags always win over the file.
"""

import json
import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError
from .sphere_sampling import params_for_target

TASKS = ("sample", "build", "run", "ablate", "info")
SURFACES = ("sphere", "mesh")
METHODS = ("layering", "icosphere", "fibonacci", "equirect", "random")
SCHEMES = ("angular", "barycentric")


def _as_int(name, value):
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value.is_integer():
        return int(value)
    raise ConfigError(f"{name} must be an integer, got {value!r}")


@dataclass
class RunConfig:
    task: str = "build"
    surface: str = "sphere"
    method: str = "layering"
    params: dict | None = None
    target: int = 2048
    delta_theta: float | None = None
    cluster_method: str | None = None
    scheme: str = "angular"
    k: int = 8
    levels: int = 1
    seed: int = 0
    network: list | None = None
    mesh: str | None = None
    texture: str | None = None
    weights: str | None = None
    input: str | None = None
    output: str | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.surface not in SURFACES:
            raise ConfigError(f"surface must be one of {SURFACES}, got {self.surface!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.cluster_method is not None and self.cluster_method not in METHODS:
            raise ConfigError(
                f"cluster_method must be one of {METHODS}, got {self.cluster_method!r}"
            )
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        self.k = _as_int("k", self.k)
        self.levels = _as_int("levels", self.levels)
        self.target = _as_int("target", self.target)
        self.seed = _as_int("seed", self.seed)
        if self.k < 1:
            raise ConfigError(f"k must be at least 1, got {self.k}")
        if self.levels < 1:
            raise ConfigError(f"levels must be at least 1, got {self.levels}")
        if self.target < 1:
            raise ConfigError(f"target must be at least 1, got {self.target}")
        if self.delta_theta is not None:
            if not isinstance(self.delta_theta, (int, float)) or not (
                float(self.delta_theta) > 0.0
            ):
                raise ConfigError(
                    f"delta_theta must be positive, got {self.delta_theta!r}"
                )
            self.delta_theta = float(self.delta_theta)
            if self.method != "layering":
                raise ConfigError("delta_theta only applies to the layering method")
        if self.params is not None and not isinstance(self.params, dict):
            raise ConfigError(f"params must be an object, got {type(self.params).__name__}")
        if self.network is not None and not isinstance(self.network, list):
            raise ConfigError(f"network must be a list of layers, got {type(self.network).__name__}")
        for name in ("mesh", "texture", "weights", "input", "output"):
            value = getattr(self, name)
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{name} must be a path string, got {value!r}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from None
        return cls.from_dict(data)

    def with_overrides(self, **overrides) -> "RunConfig":
        live = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **live) if live else self

    def sampling_params(self) -> dict:
        """Sampler parameters: explicit params, else spacing, else the target."""
        if self.params is not None:
            return dict(self.params)
        if self.delta_theta is not None:
            return {"n_phi": max(1, int(math.floor(math.pi / self.delta_theta + 0.5)))}
        return params_for_target(self.method, self.target, seed=self.seed)
