"""Declarative experiment configs: JSON with a versioned ``schema`` field, validated by pydantic."""

import json
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

SCHEMA_VERSION = "rmpflab/1"


class ConfigError(ValueError):
    """Invalid config; ``line`` points into the source text when it can be located."""

    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class IntegratorCfg(Strict):
    dt: float = Field(1e-3, gt=0)
    record_dt: float = Field(1e-2, gt=0)
    timeout: float = Field(5.0, gt=0)

    @model_validator(mode="after")
    def _record_not_finer(self):
        if self.record_dt < self.dt:
            raise ValueError("record_dt must be >= dt")
        return self


class Exp1dCfg(Strict):
    schema_: Literal["rmpflab/1"] = Field(alias="schema")
    kind: Literal["exp1d"]
    seed: int = 0
    x0: float = Field(1.0, gt=0)
    q0: float = 0.5
    qd0: float = 0.2
    fan: List[Tuple[float, float]] = []
    grid_n: int = Field(21, ge=0)
    x_range: Tuple[float, float] = (0.25, 3.0)
    xd_range: Tuple[float, float] = (-2.0, 2.0)
    integrator: IntegratorCfg = IntegratorCfg(timeout=10.0)

    @field_validator("q0")
    @classmethod
    def _q0_nonzero(cls, v):
        if v == 0:
            raise ValueError("q0 must be nonzero (x = 1/q)")
        return v


class ObstacleCfg(Strict):
    center: Tuple[float, float]
    radius: float = Field(ge=0)


class FanCfg(Strict):
    count: int = Field(7, ge=1)
    start_x: float = -3.0
    spread: float = Field(1.5, ge=0)
    speed: float = Field(1.0, gt=0)
    heading: Tuple[float, float] = (1.0, 0.0)


class AttractorCfg(Strict):
    eta_softmax: float = Field(10.0, gt=0)
    w_u: float = Field(10.0, ge=0)
    w_l: float = Field(1.0, ge=0)
    sigma_gamma: float = Field(1.0, gt=0)
    sigma_alpha: float = Field(1.0, gt=0)
    eps_stretch: float = Field(1e-2, gt=0)
    damp: float = Field(1.0, ge=0)
    metric_kind: Literal["uniform", "stretch"] = "uniform"
    potential_kind: Literal["softmax", "softnorm"] = "softmax"


class Exp2dVariant(Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9_\-]+$")
    disable_curvature: bool = False
    disable_jdot: bool = False
    alpha: float = Field(0.0, ge=0)


class Exp2dCfg(Strict):
    schema_: Literal["rmpflab/1"] = Field(alias="schema")
    kind: Literal["exp2d"]
    seed: int = 0
    obstacle: ObstacleCfg
    goal: Optional[Tuple[float, float]] = None
    epsilon: float = Field(1e-6, ge=0)
    collision_damping: float = Field(0.0, ge=0)
    attractor: AttractorCfg = AttractorCfg()
    fan: FanCfg = FanCfg()
    starts: List[Tuple[Tuple[float, float], Tuple[float, float]]] = []
    variants: List[Exp2dVariant] = Field(min_length=1)
    stop_on_collision: bool = True
    field_n: int = Field(21, ge=0)
    field_velocity: Tuple[float, float] = (1.0, 0.0)
    field_range: Tuple[Tuple[float, float], Tuple[float, float]] = ((-3.0, 3.0), (-3.0, 3.0))
    integrator: IntegratorCfg = IntegratorCfg(timeout=6.0)


class CollisionCfg(Strict):
    r_w: float = Field(0.2, gt=0)
    sigma: float = Field(0.5, gt=0)
    alpha: float = Field(1e-2, ge=0)
    eta_damp: float = Field(1.0, ge=0)
    epsilon: float = Field(0.0, ge=0)


class ArmCfg(Strict):
    link_lengths: List[float] = Field(min_length=1)
    control_points: List[Tuple[int, float]] = Field(min_length=1)

    @field_validator("link_lengths")
    @classmethod
    def _positive(cls, v):
        if min(v) <= 0:
            raise ValueError("link lengths must be positive")
        return v


class SceneCfg(Strict):
    name: str = Field(pattern=r"^[A-Za-z0-9\-]+$")
    obstacles: List[ObstacleCfg] = Field(min_length=1)


class TargetsCfg(Strict):
    per_scene: int = Field(10, ge=1)
    radius_range: Tuple[float, float] = (0.55, 0.85)
    angle_range: Tuple[float, float] = (1.9, 2.6)
    margin: float = Field(0.12, ge=0)


class MethodCfg(Strict):
    method: Literal["rmpflow", "pf_basic", "pf_nonlinear"]
    scaling: Literal["baseline", "low", "med", "high"] = "baseline"


class ReachGainsCfg(Strict):
    collision: CollisionCfg = CollisionCfg()
    attractor: AttractorCfg = AttractorCfg(sigma_gamma=0.2, sigma_alpha=0.2, damp=2.0)
    attractor_gain: float = Field(4.0, gt=0)
    joint_limit_lambda: float = Field(0.25, gt=0)
    joint_limit_sigma: float = Field(0.1, gt=0)
    joint_limits: Tuple[float, float] = (-2.8, 2.8)
    damper: float = Field(0.05, gt=0)
    pf_contact_clearance: float = Field(0.02, gt=0)
    pf_repulsion: float = Field(4.0, ge=0)
    pf_cspace_weight: float = Field(0.01, ge=0)
    pf_gamma_p: float = Field(1.0, ge=0)
    pf_gamma_d: float = Field(2.0, ge=0)


class ReachCfg(Strict):
    schema_: Literal["rmpflab/1"] = Field(alias="schema")
    kind: Literal["reach"]
    seed: int = 0
    arm: ArmCfg
    q_start: List[float]
    q_rest: Optional[List[float]] = None
    scenes: List[SceneCfg] = Field(min_length=1)
    targets: TargetsCfg = TargetsCfg()
    methods: List[MethodCfg] = Field(min_length=1)
    gains: ReachGainsCfg = ReachGainsCfg()
    integrator: IntegratorCfg = IntegratorCfg(dt=1e-2, record_dt=5e-2, timeout=5.0)
    write_trajectories: bool = True

    @model_validator(mode="after")
    def _dims(self):
        n = len(self.arm.link_lengths)
        if len(self.q_start) != n:
            raise ValueError(f"q_start needs {n} entries")
        if self.q_rest is not None and len(self.q_rest) != n:
            raise ValueError(f"q_rest needs {n} entries")
        for link, frac in self.arm.control_points:
            if not 0 <= link < n or not 0.0 <= frac <= 1.0:
                raise ValueError(f"invalid control point ({link}, {frac})")
        names = [s.name for s in self.scenes]
        if len(set(names)) != len(names):
            raise ValueError("scene names must be unique")
        return self


class VerifyCfg(Strict):
    schema_: Literal["rmpflab/1"] = Field(alias="schema")
    kind: Literal["verify"]
    seed: Optional[int] = None
    checks: List[str] = ["all"]


ExperimentConfig = Union[Exp1dCfg, Exp2dCfg, ReachCfg, VerifyCfg]
_KINDS = {"exp1d": Exp1dCfg, "exp2d": Exp2dCfg, "reach": ReachCfg, "verify": VerifyCfg}


def _locate(text, loc):
    """Best-effort line number of the JSON key path ``loc`` within ``text``."""
    lines = text.splitlines()
    line = 0
    found = None
    for part in loc:
        if not isinstance(part, str):
            continue
        needle = f'"{part}"'
        for i in range(line, len(lines)):
            if needle in lines[i]:
                found = line = i
                break
    return None if found is None else found + 1


def parse_config(text):
    """Parse and validate config text; raises :class:`ConfigError`."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", 1)
    schema = raw.get("schema")
    if schema != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema {schema!r}; expected {SCHEMA_VERSION!r}",
                          _locate(text, ("schema",)))
    kind = raw.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {sorted(_KINDS)}",
                          _locate(text, ("kind",)))
    try:
        return _KINDS[kind].model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(err["loc"])
        where = ".".join(str(p) for p in loc) or "<root>"
        raise ConfigError(f"{where}: {err['msg']}", _locate(text, loc)) from exc


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
