"""Run configuration: YAML text mapped onto dataclasses, unknown keys rejected."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import numpy as np
import yaml

from ..cochain import AnalyticField, Cochain, reduce_scalar
from ..errors import ConfigError
from ..mesh import build_mesh, load_mesh
from ..swe_core import PRESETS as SCHEME_PRESETS
from ..swe_core import PhysicsParams, SchemeConfig
from ..timestep import IntegratorConfig
from .initial import DEFAULTS as IC_DEFAULTS
from .initial import domain_point, gaussian


@dataclass
class CoriolisConfig:
    kind: str = "constant"  # constant | sinusoidal
    f0: float = 0.0
    amplitude: float = 0.0  # sinusoidal: f0 + amplitude * sin(2 pi y / period)


@dataclass
class TopographyConfig:
    kind: str = "none"  # none | gaussian
    amplitude: float = 0.0
    width: float = 0.1
    center: tuple = (0.5, 0.5)


@dataclass
class PhysicsConfig:
    g: float = 9.81
    coriolis: CoriolisConfig = field(default_factory=CoriolisConfig)
    topography: TopographyConfig = field(default_factory=TopographyConfig)


@dataclass
class InitialConfig:
    preset: str = "rest"
    params: dict = field(default_factory=dict)


@dataclass
class OutputConfig:
    directory: str = "out"
    cadence: int = 1
    snapshot_cadence: int = 0  # 0 disables snapshots
    vtk: bool = False


@dataclass
class RunConfig:
    mesh: str = "quad:8"
    scheme: object = "trsk2010-te"  # preset name or a mapping of SchemeConfig fields
    model: str = "nonlinear"  # nonlinear | linear
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    integrator: IntegratorConfig = field(default_factory=lambda: IntegratorConfig(dt=0.05))
    steps: int = 10
    output: OutputConfig = field(default_factory=OutputConfig)

    def scheme_config(self) -> SchemeConfig:
        if isinstance(self.scheme, SchemeConfig):
            return self.scheme
        if isinstance(self.scheme, str):
            return SchemeConfig.preset(self.scheme)
        return _build(SchemeConfig, self.scheme, "scheme")


_NESTED = {
    RunConfig: {"physics": PhysicsConfig, "initial": InitialConfig,
                "integrator": IntegratorConfig, "output": OutputConfig},
    PhysicsConfig: {"coriolis": CoriolisConfig, "topography": TopographyConfig},
}


def _build(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}; allowed: {sorted(known)}")
    kwargs = {}
    for k, v in data.items():
        sub = _NESTED.get(cls, {}).get(k)
        kwargs[k] = _build(sub, v, f"{where}.{k}") if sub else v
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def parse_config(text: str) -> RunConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from None
    cfg = _build(RunConfig, data or {}, "config")
    validate_config(cfg)
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def with_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Apply command-line overrides (None values are ignored) and re-validate."""
    cfg = replace(cfg)
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "dt":
            cfg.integrator = replace(cfg.integrator, dt=value)
        elif key == "out":
            cfg.output = replace(cfg.output, directory=value)
        elif key == "ic":
            cfg.initial = InitialConfig(value, {})
        else:
            setattr(cfg, key, value)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig):
    """Cross-field checks that do not need the mesh to be built."""
    if cfg.steps < 0:
        raise ConfigError(f"steps must be non-negative, got {cfg.steps}")
    if cfg.model not in ("nonlinear", "linear"):
        raise ConfigError(f"model must be nonlinear or linear, got {cfg.model!r}")
    if cfg.initial.preset not in IC_DEFAULTS:
        raise ConfigError(f"unknown initial condition {cfg.initial.preset!r}")
    if cfg.output.cadence < 1:
        raise ConfigError("output.cadence must be at least 1")
    if cfg.physics.coriolis.kind not in ("constant", "sinusoidal"):
        raise ConfigError(f"unknown Coriolis kind {cfg.physics.coriolis.kind!r}")
    if cfg.physics.topography.kind not in ("none", "gaussian"):
        raise ConfigError(f"unknown topography kind {cfg.physics.topography.kind!r}")
    if isinstance(cfg.scheme, str) and cfg.scheme not in SCHEME_PRESETS:
        raise ConfigError(f"unknown scheme preset {cfg.scheme!r}; choose from {sorted(SCHEME_PRESETS)}")
    try:
        scheme = cfg.scheme_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if scheme.q_variant == "DBL" and not str(cfg.mesh).startswith("quad:"):
        raise ConfigError(f"the DBL PV flux needs a generated quad mesh, not {cfg.mesh!r}")


def resolve_mesh(spec: str):
    """A generator spec like ``quad:8`` or the path of a saved mesh file."""
    if os.path.exists(spec):
        return load_mesh(spec)
    try:
        return build_mesh(spec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_physics(cfg: PhysicsConfig, mesh) -> PhysicsParams:
    c = cfg.coriolis
    if c.kind == "constant":
        f = Cochain(2, "straight", c.f0 * mesh.geometry.cell_area)
    else:
        period = np.linalg.norm(mesh.geometry.lattice[:, 1])
        field_ = AnalyticField.scalar(lambda x, y: c.f0 + c.amplitude * np.sin(2 * np.pi * y / period))
        f = reduce_scalar(field_, 2, "straight", mesh)
    t = cfg.topography
    if t.kind == "none":
        hs = Cochain(2, "twisted", np.zeros(mesh.topology.n_vertices))
    else:
        bump = gaussian(mesh, domain_point(mesh, t.center), t.width)
        hs = reduce_scalar(AnalyticField.scalar(lambda x, y: t.amplitude * bump(x, y)), 2, "twisted", mesh)
    return PhysicsParams(float(cfg.g), f, hs)
