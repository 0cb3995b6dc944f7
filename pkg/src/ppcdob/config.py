"""Run configuration: YAML file with namespaced keys, validated into RunConfig.

Keys may be written nested or as dotted names; both spellings flatten to the
same namespace, e.g. ``sim.dt``, ``controller.ppc.k1``, ``envelope.rho0``.
See ``configs/default.yaml`` for every key and its default.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

import yaml

from .controllers import EnvelopeParams, PidGains, PpcGains, SmcGains
from .observers import AsmdobGains, EsoGains
from .scenarios import DisturbanceTable, ScenarioSpec, reference
from .simcore import DomainError, RobotPose, SimConfig

CONTROLLERS = ("ppc", "smc", "pid")
OBSERVERS = ("asmdob", "eso", "oracle", "none")


class ConfigError(ValueError):
    """Invalid or unparseable configuration."""


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    scenario: ScenarioSpec = field(default_factory=ScenarioSpec)
    controller: str = "ppc"
    ppc: PpcGains = field(default_factory=PpcGains)
    smc: SmcGains = field(default_factory=SmcGains)
    pid: PidGains = field(default_factory=PidGains)
    observer: str = "asmdob"
    asmdob: AsmdobGains = field(default_factory=AsmdobGains)
    eso: EsoGains = field(default_factory=EsoGains)
    envelope: EnvelopeParams = field(default_factory=EnvelopeParams)
    output_dir: str = "out"
    decimation: int = 10
    name: str = ""

    def __post_init__(self):
        if self.controller not in CONTROLLERS:
            raise ConfigError(f"controller must be one of {CONTROLLERS}, got {self.controller!r}")
        if self.observer not in OBSERVERS:
            raise ConfigError(f"observer must be one of {OBSERVERS}, got {self.observer!r}")
        if not (isinstance(self.decimation, int) and self.decimation >= 1):
            raise ConfigError("output.decimation must be an integer >= 1")

    @property
    def label(self) -> str:
        return self.name or f"{self.controller}-{self.observer}"

    def start_pose(self) -> RobotPose:
        return self.sim.initial_pose or self.scenario.start_pose()

    def initial_error(self) -> tuple[float, float]:
        q0 = self.start_pose()
        r0 = reference(0.0, self.scenario)
        return (q0.x - r0.xd, q0.y - r0.yd)

    def check_envelope(self) -> None:
        """Position errors at t=0 must start strictly inside the envelope."""
        if self.controller == "ppc":
            try:
                self.envelope.check_initial_error(self.initial_error(), axes=(0, 1))
            except DomainError as exc:
                raise ConfigError(str(exc)) from None

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, val in tree.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            out.update(flatten(val, name + "."))
        else:
            if name in out:
                raise ConfigError(f"duplicate key {name!r}")
            out[name] = val
    return out


def _gains(cls, flat: dict, prefix: str, used: set):
    kwargs = {}
    for f in fields(cls):
        key = prefix + f.name
        if key in flat:
            val = flat[key]
            kwargs[f.name] = tuple(val) if isinstance(val, list) else val
            used.add(key)
    try:
        return cls(**kwargs)
    except DomainError as exc:
        raise ConfigError(f"{prefix.rstrip('.')}: {exc}") from None
    except TypeError as exc:
        raise ConfigError(f"{prefix.rstrip('.')}: {exc}") from None


def _pose(val) -> RobotPose:
    if not (isinstance(val, (list, tuple)) and len(val) == 3):
        raise ConfigError("initial_pose must be [x, y, theta]")
    return RobotPose(*map(float, val))


def from_mapping(tree: dict, base_dir: Path | None = None) -> RunConfig:
    """Validate a (nested or dotted) mapping into a RunConfig."""
    flat = flatten(tree or {})
    used: set[str] = set()

    def take(key, default=None):
        if key in flat:
            used.add(key)
            return flat[key]
        return default

    try:
        pose = take("sim.initial_pose")
        sim = SimConfig(
            dt=float(take("sim.dt", 1e-3)),
            t_final=float(take("sim.t_final", 30.0)),
            initial_pose=_pose(pose) if pose is not None else None,
            integrator=take("sim.integrator", "rk4"),
            v_max=take("sim.v_max"),
            omega_max=take("sim.omega_max"),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None

    table = None
    table_path = take("scenario.disturbance_table")
    if table_path is not None:
        p = Path(table_path)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        try:
            table = DisturbanceTable.from_csv(p)
        except (OSError, DomainError) as exc:
            raise ConfigError(f"scenario.disturbance_table: {exc}") from None
    scen_kwargs = {"table": table, "duration": sim.t_final}
    for key in ("reference", "radius", "rate", "center", "line_start", "line_velocity", "disturbance", "constant"):
        val = take(f"scenario.{key}")
        if val is not None:
            scen_kwargs[key] = tuple(val) if isinstance(val, list) else val
    try:
        scenario = ScenarioSpec(**scen_kwargs)
    except DomainError as exc:
        raise ConfigError(f"scenario: {exc}") from None

    cfg = RunConfig(
        sim=sim,
        scenario=scenario,
        controller=take("controller.type", "ppc"),
        ppc=_gains(PpcGains, flat, "controller.ppc.", used),
        smc=_gains(SmcGains, flat, "controller.smc.", used),
        pid=_gains(PidGains, flat, "controller.pid.", used),
        observer=take("observer.type", "asmdob"),
        asmdob=_gains(AsmdobGains, flat, "observer.asmdob.", used),
        eso=_gains(EsoGains, flat, "observer.eso.", used),
        envelope=_gains(EnvelopeParams, flat, "envelope.", used),
        output_dir=str(take("output.dir", "out")),
        decimation=take("output.decimation", 10),
        name=str(take("name", "")),
    )
    unknown = sorted(set(flat) - used)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(unknown)}")
    cfg.check_envelope()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    try:
        tree = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" (line {mark.line + 1}, column {mark.column + 1})" if mark is not None else ""
        raise ConfigError(f"{path}: parse error{where}: {getattr(exc, 'problem', exc)}") from None
    if tree is not None and not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return from_mapping(tree or {}, base_dir=path.parent)
