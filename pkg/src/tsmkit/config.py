"""Run configuration: flat ``key = value`` files with ``#`` comments.

Recognized keys (units in brackets):

    model            ays | affine1d
    <AYS parameter>  any AYSParams field, e.g. beta_lg [1/a], sigma_et [GJ], A_PB [GtC]
    affine_slope     slope of the toy system x' = slope*x + offset [1/time]
    affine_offset    offset of the toy system [state/time]
    lower, upper     box of the affine1d grid [state]; AYS always uses the unit cube
    resolution       lattice points per axis (>= 2)
    dt               Euler step of the discrete dynamics [homogenized time]; auto if unset
    dt_factor        auto dt = dt_factor * spacing
    epsilon          homogenization offset (> 0)
    lipschitz        Lipschitz bound used for the guaranteed radius (>= 0)
    controls         comma-separated control subset, default all
    expansion_mode   guaranteed | strict
    out              output path
    seed             RNG seed for flow sampling (integer >= 0)
    workers          worker count (>= 1); never changes results
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from . import ays
from .geometry import DEFAULT_EPSILON, homogenize
from .grid import Grid
from .system import ControlledSystem, ParameterError, affine_1d
from .viability import DEFAULT_DT_FACTOR, DEFAULT_LIPSCHITZ, GUARANTEED, STRICT, SuccessorConfig

MODELS = ("ays", "affine1d")
AYS_KEYS = tuple(f.name for f in fields(ays.AYSParams))


class ConfigError(ValueError):
    """Malformed or invalid configuration; message carries the line number when known."""


@dataclass(frozen=True)
class RunConfig:
    model: str = "ays"
    params: ays.AYSParams = field(default_factory=ays.AYSParams)
    affine_slope: float = 1.0
    affine_offset: float = 0.0
    lower: float = 0.0
    upper: float = 1.0
    resolution: int = 80
    dt: float | None = None
    dt_factor: float = DEFAULT_DT_FACTOR
    epsilon: float = DEFAULT_EPSILON
    lipschitz: float = DEFAULT_LIPSCHITZ
    controls: tuple[str, ...] | None = None
    expansion_mode: str = GUARANTEED
    out: str | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.model not in MODELS:
            out.append(f"model must be one of {MODELS}")
        if self.resolution < 2:
            out.append("resolution must be >= 2")
        if self.dt is not None and not self.dt > 0:
            out.append("dt must be > 0")
        if not self.dt_factor > 0:
            out.append("dt_factor must be > 0")
        if not self.epsilon > 0:
            out.append("epsilon must be > 0")
        if not self.lipschitz >= 0:
            out.append("lipschitz must be >= 0")
        if self.expansion_mode not in (GUARANTEED, STRICT):
            out.append(f"expansion_mode must be {GUARANTEED} or {STRICT}")
        if not self.lower < self.upper:
            out.append("lower must be < upper")
        if self.seed < 0:
            out.append("seed must be >= 0")
        if self.workers < 1:
            out.append("workers must be >= 1")
        if self.controls is not None:
            known = ays.CONTROLS if self.model == "ays" else ("default",)
            bad = [u for u in self.controls if u not in known]
            if not self.controls or bad:
                out.append(f"controls must be a nonempty subset of {known}")
            elif "default" not in self.controls:
                out.append("controls must include the default control")
        return out

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except ConfigError as exc:
            raise ConfigError(f"command line: {exc}") from None

    def echo(self) -> dict:
        """Everything that affects results; output paths and worker count are left out."""
        d = {
            "model": self.model,
            "resolution": self.resolution,
            "dt": self.dt,
            "dt_factor": self.dt_factor,
            "epsilon": self.epsilon,
            "lipschitz": self.lipschitz,
            "controls": list(self.controls) if self.controls else None,
            "expansion_mode": self.expansion_mode,
            "seed": self.seed,
        }
        if self.model == "ays":
            d["params"] = self.params.as_dict()
        else:
            d.update(affine_slope=self.affine_slope, affine_offset=self.affine_offset,
                     lower=self.lower, upper=self.upper)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    # model assembly

    def system(self) -> ControlledSystem:
        """Homogenized system the lattice algorithms run on."""
        if self.model == "ays":
            inner = ays.ays_transformed_system(self.params, self.controls or ays.CONTROLS)
        else:
            inner = affine_1d(self.affine_slope, self.affine_offset)
        return homogenize(inner, self.epsilon)

    def grid(self) -> Grid:
        if self.model == "ays":
            return Grid.cube(3, self.resolution)
        return Grid.cube(1, self.resolution, self.lower, self.upper)

    def successor_config(self, grid: Grid | None = None) -> SuccessorConfig:
        return SuccessorConfig.for_grid(grid or self.grid(), mode=self.expansion_mode, dt=self.dt,
                                        lipschitz=self.lipschitz, dt_factor=self.dt_factor)

    def desirable(self):
        """Vectorized predicate for the desirable region on lattice coordinates."""
        if self.model == "ays":
            p = self.params
            return lambda y: ays.desirable_transformed(y, p)
        return lambda x: x[..., 0] == x[..., 0]

    def axes(self) -> list[str]:
        return ["a", "y", "s"] if self.model == "ays" else ["x"]


_INT_KEYS = {"resolution", "seed", "workers"}
_FLOAT_KEYS = {"affine_slope", "affine_offset", "lower", "upper", "dt", "dt_factor",
               "epsilon", "lipschitz"}
_STR_KEYS = {"model", "expansion_mode", "out"}


def _convert(key: str, raw: str):
    if key in _INT_KEYS:
        v = float(raw)
        if not math.isfinite(v) or v != int(v):
            raise ValueError(f"{key} must be an integer")
        return int(v)
    if key in _FLOAT_KEYS or key in AYS_KEYS:
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError(f"{key} must be finite")
        return v
    if key == "controls":
        return tuple(u.strip() for u in raw.split(",") if u.strip())
    return raw


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values, param_values, where = {}, {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | {"controls"} | set(AYS_KEYS):
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in where:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r} (first on line {where[key]})")
        if not raw:
            raise ConfigError(f"{source}:{lineno}: missing value for {key!r}")
        try:
            v = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
        where[key] = lineno
        (param_values if key in AYS_KEYS else values)[key] = v
    try:
        params = ays.AYSParams(**param_values)
    except ParameterError as exc:
        key = next((k for k in param_values if k in str(exc)), None)
        line = f":{where[key]}" if key else ""
        raise ConfigError(f"{source}{line}: {exc}") from None
    try:
        return RunConfig(params=params, **values)
    except ConfigError as exc:
        # point at the first offending key
        msg = str(exc)
        line = next((where[k] for k in where if msg.startswith(k)), None)
        raise ConfigError(f"{source}:{line}: {msg}" if line else f"{source}: {msg}") from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), str(path))
