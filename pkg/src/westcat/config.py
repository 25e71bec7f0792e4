"""Scenario configuration: dataclasses plus a strict ``key = value`` parser.

Format::

    # comment
    [grid]
    dim = 1
    extents = 1.0
    nodes = 31

    [medium]
    tau = 0.1
    speed_poly = 0.1

Sections are ``[grid] [medium] [time] [initial] [coupling] [output] [study]``.
Lists are comma separated.  Unknown keys, unknown sections and duplicate keys
are errors; missing keys take the documented defaults.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import typing
from dataclasses import dataclass, field

from .acoustic import DegeneracyConfig, SolverOptions
from .errors import ConfigParseError, InvalidValueError, UnknownKeyError, WestcatError
from .grid import Grid, build_grid
from .medium import MediumParams

PRESETS = ("sine-mode", "gaussian-bump")
MMS_KINDS = ("acoustic", "thermal-hyperbolic", "thermal-parabolic", "coupled")


@dataclass(frozen=True)
class GridSettings:
    dim: int = 1
    extents: tuple[float, ...] = (1.0,)
    nodes: tuple[int, ...] = (31,)

    def build(self) -> Grid:
        return build_grid(self.dim, self.extents, self.nodes)


@dataclass(frozen=True)
class MediumSettings:
    """Medium parameters plus the temperature range they are validated on."""

    c_a: float = 1.0
    b: float = 1.0
    beta: float = 10.0
    rho: float = 1.0
    rho_a: float = 1.0
    C_a: float = 1.0
    rho_b: float = 1.0
    C_b: float = 1.0
    W: float = 1.0
    kappa_a: float = 0.1
    tau: float = 0.1
    theta_a: float = 37.0
    speed_poly: tuple[float, ...] = ()
    h1: float = 0.5
    validated_range: tuple[float, ...] = (-1.0, 1.0)

    def params(self) -> MediumParams:
        kw = {f.name: getattr(self, f.name) for f in dataclasses.fields(MediumParams)}
        return MediumParams(**kw)


@dataclass(frozen=True)
class TimeSettings:
    dt: float = 0.01
    t_final: float = 1.0


@dataclass(frozen=True)
class InitialSettings:
    preset: str = "sine-mode"
    p0_amp: float = 1e-3
    p1_amp: float = 0.0
    theta0_amp: float = 1e-3
    theta1_amp: float = 0.0
    width: float = 0.1


@dataclass(frozen=True)
class CouplingSettings:
    sweeps: int = 1
    floor_alpha: float = 0.5
    cap_m: float = 0.5
    picard_tol: float = 1e-10
    max_picard: int = 25
    cg_tol: float = 1e-10
    cg_maxit: int = 0  # 0 selects 10 * unknowns

    def degeneracy(self) -> DegeneracyConfig:
        return DegeneracyConfig(self.floor_alpha, self.cap_m)

    def solver(self) -> SolverOptions:
        return SolverOptions(self.cg_tol, self.cg_maxit or None, self.picard_tol, self.max_picard)


@dataclass(frozen=True)
class OutputSettings:
    cadence: int = 1
    snapshot_cadence: int = 0
    plots: bool = True


@dataclass(frozen=True)
class StudySettings:
    mms_kind: str = "acoustic"
    mms_levels: int = 3
    mms_amplitude: float = 1e-2
    tau_list: tuple[float, ...] = (0.1, 0.01, 0.001)
    samples: int = 100
    refinements: int = 3
    seed: int = 0


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSettings = field(default_factory=GridSettings)
    medium: MediumSettings = field(default_factory=MediumSettings)
    time: TimeSettings = field(default_factory=TimeSettings)
    initial: InitialSettings = field(default_factory=InitialSettings)
    coupling: CouplingSettings = field(default_factory=CouplingSettings)
    output: OutputSettings = field(default_factory=OutputSettings)
    study: StudySettings = field(default_factory=StudySettings)

    def replace(self, **sections) -> "ScenarioConfig":
        """Replace fields inside sections: ``cfg.replace(medium={"tau": 0.0})``."""
        updates = {}
        for name, changes in sections.items():
            updates[name] = dataclasses.replace(getattr(self, name), **changes)
        out = dataclasses.replace(self, **updates)
        validate(out)
        return out

    @property
    def n_steps(self) -> int:
        return int(round(self.time.t_final / self.time.dt))


SECTIONS = {f.name: f.default_factory for f in dataclasses.fields(ScenarioConfig)}


def _section_types(cls) -> dict[str, typing.Any]:
    return typing.get_type_hints(cls)


def _convert(key: str, raw: str, typ):
    raw = raw.strip()
    origin = typing.get_origin(typ)
    try:
        if origin is tuple:
            inner = typing.get_args(typ)[0]
            if raw == "":
                return ()
            return tuple(_convert(key, part, inner) for part in raw.split(","))
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        if typ is str:
            if not raw:
                raise ValueError("empty string")
            return raw
    except ValueError as exc:
        raise InvalidValueError(key, f"cannot parse {raw!r}") from exc
    raise TypeError(f"unsupported config type {typ}")


def validate(cfg: ScenarioConfig) -> None:
    """Check cross-field invariants; raises :class:`InvalidValueError`."""
    try:
        cfg.grid.build()
    except WestcatError as exc:
        raise InvalidValueError("nodes", str(exc)) from exc
    cfg.medium.params()
    vr = cfg.medium.validated_range
    if len(vr) != 2 or not vr[0] <= 0 <= vr[1]:
        raise InvalidValueError("validated_range", "need two values lo <= 0 <= hi")
    if not cfg.time.t_final > 0:
        raise InvalidValueError("t_final", "must be positive")
    if not 0 < cfg.time.dt < cfg.time.t_final:
        raise InvalidValueError("dt", "need 0 < dt < t_final")
    if cfg.initial.preset not in PRESETS:
        raise InvalidValueError("preset", f"unknown preset {cfg.initial.preset!r}")
    if not cfg.initial.width > 0:
        raise InvalidValueError("width", "must be positive")
    if cfg.coupling.sweeps < 1:
        raise InvalidValueError("sweeps", "must be >= 1")
    if cfg.coupling.max_picard < 1:
        raise InvalidValueError("max_picard", "must be >= 1")
    for key in ("picard_tol", "cg_tol"):
        if not getattr(cfg.coupling, key) > 0:
            raise InvalidValueError(key, "must be positive")
    if cfg.coupling.cg_maxit < 0:
        raise InvalidValueError("cg_maxit", "must be >= 0")
    cfg.coupling.degeneracy()
    if cfg.output.cadence < 1:
        raise InvalidValueError("cadence", "must be >= 1")
    if cfg.output.snapshot_cadence < 0:
        raise InvalidValueError("snapshot_cadence", "must be >= 0")
    if cfg.study.mms_kind not in MMS_KINDS:
        raise InvalidValueError("mms_kind", f"expected one of {MMS_KINDS}")
    if cfg.study.mms_levels < 3:
        raise InvalidValueError("mms_levels", "need at least 3 levels")
    if any(not t > 0 for t in cfg.study.tau_list):
        raise InvalidValueError("tau_list", "entries must be positive")
    if cfg.study.samples < 1:
        raise InvalidValueError("samples", "must be >= 1")
    if cfg.study.refinements < 1:
        raise InvalidValueError("refinements", "must be >= 1")


def parse_config(text: str) -> ScenarioConfig:
    """Parse configuration text into a validated :class:`ScenarioConfig`."""
    values: dict[str, dict[str, str]] = {name: {} for name in SECTIONS}
    seen: dict[tuple[str, str], int] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"line {lineno}: malformed section header", [lineno])
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise UnknownKeyError(f"[{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected 'key = value'", [lineno])
        if section is None:
            raise ConfigParseError(f"line {lineno}: key outside of any section", [lineno])
        key, raw = (part.strip() for part in line.split("=", 1))
        types = _section_types(type(SECTIONS[section]()))
        if key not in types:
            raise UnknownKeyError(key, lineno)
        if (section, key) in seen:
            first = seen[(section, key)]
            raise ConfigParseError(
                f"duplicate key {key!r} in [{section}] on lines {first} and {lineno}",
                [first, lineno])
        seen[(section, key)] = lineno
        values[section][key] = raw

    parts = {}
    for name, factory in SECTIONS.items():
        cls = type(factory())
        types = _section_types(cls)
        kwargs = {key: _convert(key, raw, types[key]) for key, raw in values[name].items()}
        try:
            parts[name] = cls(**kwargs)
        except WestcatError:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidValueError(name, str(exc)) from exc
    cfg = ScenarioConfig(**parts)
    validate(cfg)
    return cfg


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    """Canonical text form; ``parse_config(serialize(c)) == c``."""
    lines = []
    for name in SECTIONS:
        lines.append(f"[{name}]")
        part = getattr(cfg, name)
        for f in dataclasses.fields(part):
            lines.append(f"{f.name} = {_format(getattr(part, f.name))}")
        lines.append("")
    return "\n".join(lines)


def config_digest(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(serialize(cfg).encode()).hexdigest()
