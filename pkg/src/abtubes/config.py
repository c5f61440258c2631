"""Run configuration: JSON loading, defaults per mode, and validation with field paths."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any

from .errors import ConfigurationError, SimulationError
from .grid import MIN_POINTS, MIN_SAMPLES_PER_WIDTH, TAIL_THRESHOLD, PacketSpec, SpatialGrid, make_grid
from .potentials import MAX_DETUNING, ChargeConfig, ConfinementSpec, PulseSchedule
from .propagator import ALIGN_TOL, EvolutionConfig

MODES = ("single_particle", "two_particle")
CONFINEMENT_MARGIN = 100.0


class ConfigParseError(ConfigurationError):
    pass


class ConfigValidationError(ConfigurationError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class GridSettings:
    n_points: int = 1024
    length: float = 200.0


@dataclass(frozen=True)
class ScheduleSettings:
    t0: float = 0.0
    t1: float = 1.0
    t2: float = 3.0
    t3: float = 4.0
    v0: float = math.pi / 2


@dataclass(frozen=True)
class ChargeSettings:
    q: float = 1.0
    q_induced: float | None = None
    detuning: float | None = None
    detuned: bool = False
    m: float = 1.0
    m_induced: float = 1.0
    softening: float | None = None
    coulomb_exponent: int = 1


@dataclass(frozen=True)
class ConfinementSettings:
    wall_center_low: float = -12.0
    wall_center_high: float = 12.0
    wall_height: float = 50.0
    wall_steepness: float = 0.25


@dataclass(frozen=True)
class EvolutionSettings:
    dt: float = 0.01
    record_stride: int = 10


@dataclass(frozen=True)
class PacketSettings:
    center: float = -20.0
    width: float = 5.0
    wavenumber: float = 2.0


@dataclass(frozen=True)
class PacketsSettings:
    particle: PacketSettings = field(default_factory=PacketSettings)
    # induced packet full width (4 sigma) as a fraction of the wall separation
    induced_width_fraction: float = 0.125


@dataclass(frozen=True)
class FringeSettings:
    tilt: float = 3.0


@dataclass(frozen=True)
class SweepSettings:
    v0_values: tuple = ()
    workers: int = 1


@dataclass(frozen=True)
class OutputSettings:
    directory: str = "output"
    report: str = "report.json"
    fringes: str = "fringes.csv"
    sweep: str = "sweep.csv"


@dataclass(frozen=True)
class RunConfig:
    mode: str = "single_particle"
    grid: GridSettings = field(default_factory=GridSettings)
    schedule: ScheduleSettings = field(default_factory=ScheduleSettings)
    charges: ChargeSettings = field(default_factory=ChargeSettings)
    confinement: ConfinementSettings = field(default_factory=ConfinementSettings)
    evolution: EvolutionSettings = field(default_factory=EvolutionSettings)
    packets: PacketsSettings = field(default_factory=PacketsSettings)
    fringes: FringeSettings = field(default_factory=FringeSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output: OutputSettings = field(default_factory=OutputSettings)

    # builders for the library objects; valid only on a validated config

    def make_grid(self) -> SpatialGrid:
        dims = 1 if self.mode == "single_particle" else 2
        return make_grid(self.grid.n_points, self.grid.length, dims)

    def make_schedule(self) -> PulseSchedule:
        s = self.schedule
        return PulseSchedule(s.t0, s.t1, s.t2, s.t3, s.v0)

    def softening(self) -> float:
        if self.charges.softening is not None:
            return self.charges.softening
        return 10.0 * self.grid.length / self.grid.n_points

    def q_induced(self) -> float:
        c = self.charges
        if c.detuning is not None:
            return -c.q * (1.0 - c.detuning)
        if c.q_induced is not None:
            return c.q_induced
        return -c.q

    def make_charges(self) -> ChargeConfig:
        c = self.charges
        return ChargeConfig(
            q=c.q,
            q_induced=self.q_induced(),
            m=c.m,
            m_induced=c.m_induced,
            softening=self.softening(),
            coulomb_exponent=c.coulomb_exponent,
            detuned=c.detuned or c.detuning is not None,
        )

    def make_confinement(self) -> ConfinementSpec:
        c = self.confinement
        return ConfinementSpec(c.wall_center_low, c.wall_center_high, c.wall_height, c.wall_steepness)

    def particle_packet(self) -> PacketSpec:
        p = self.packets.particle
        return PacketSpec(p.center, p.width, p.wavenumber)

    def induced_packet(self) -> PacketSpec:
        conf = self.confinement
        separation = conf.wall_center_high - conf.wall_center_low
        sigma = self.packets.induced_width_fraction * separation / 4.0
        return PacketSpec(0.5 * (conf.wall_center_low + conf.wall_center_high), sigma, 0.0)

    def evolution_config(self) -> EvolutionConfig:
        s = self.schedule
        return EvolutionConfig(self.evolution.dt, s.t0, s.t3, self.evolution.record_stride)

    def with_updates(self, **sections) -> RunConfig:
        """Return a copy with dotted-free section overrides, e.g. ``schedule={'v0': 2.0}``."""
        data = self.to_dict()
        for key, value in sections.items():
            if isinstance(value, dict):
                data[key].update(value)
            else:
                data[key] = value
        return config_from_dict(data)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["sweep"]["v0_values"] = list(data["sweep"]["v0_values"])
        return data


SINGLE_DEFAULTS = RunConfig()

TWO_PARTICLE_DEFAULTS = RunConfig(
    mode="two_particle",
    grid=GridSettings(n_points=256, length=40.0),
    schedule=ScheduleSettings(t0=0.0, t1=1.0, t2=3.0, t3=4.0, v0=1.0),
    packets=PacketsSettings(particle=PacketSettings(center=-4.0, width=1.5, wavenumber=1.0)),
    fringes=FringeSettings(tilt=4.0),
)


def default_config(mode: str) -> RunConfig:
    if mode not in MODES:
        raise ConfigurationError(f"mode must be one of {MODES}, got {mode!r}")
    return SINGLE_DEFAULTS if mode == "single_particle" else TWO_PARTICLE_DEFAULTS


def _build(cls, data: Any, defaults, path: str, problems: list[str]):
    """Instantiate dataclass ``cls`` from ``data`` over ``defaults``, recording unknown keys."""
    if not isinstance(data, dict):
        problems.append(f"{path}: expected an object, got {type(data).__name__}")
        return defaults
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            problems.append(f"{path}.{key}: unknown field" if path else f"{key}: unknown field")
    values = {}
    for name in known:
        default = getattr(defaults, name)
        sub = f"{path}.{name}" if path else name
        if name not in data:
            values[name] = default
        elif is_dataclass(default):
            values[name] = _build(type(default), data[name], default, sub, problems)
        elif isinstance(default, tuple):
            raw = data[name]
            if not isinstance(raw, (list, tuple)):
                problems.append(f"{sub}: expected a list")
                values[name] = default
            else:
                values[name] = tuple(raw)
        else:
            values[name] = data[name]
    return cls(**values)


def _number(value, path, problems, *, positive=False, integer=False, allow_none=False) -> bool:
    if value is None and allow_none:
        return True
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        problems.append(f"{path}: expected a number, got {value!r}")
        return False
    if not math.isfinite(value):
        problems.append(f"{path}: must be finite, got {value!r}")
        return False
    if integer and int(value) != value:
        problems.append(f"{path}: must be an integer, got {value!r}")
        return False
    if positive and not value > 0:
        problems.append(f"{path}: must be positive, got {value!r}")
        return False
    return True


def _aligned(span: float, dt: float) -> bool:
    ratio = span / dt
    return abs(ratio - round(ratio)) <= ALIGN_TOL * max(1.0, abs(ratio))


def validate(cfg: RunConfig) -> list[str]:
    """Every violated constraint of ``cfg`` as ``field.path: message`` strings."""
    problems: list[str] = []
    if cfg.mode not in MODES:
        problems.append(f"mode: must be one of {list(MODES)}, got {cfg.mode!r}")
    two = cfg.mode == "two_particle"

    g = cfg.grid
    grid_ok = _number(g.n_points, "grid.n_points", problems, positive=True, integer=True)
    if grid_ok:
        n = int(g.n_points)
        if n & (n - 1):
            problems.append(f"grid.n_points: power of two required, got {n}")
            grid_ok = False
        elif n < MIN_POINTS:
            problems.append(f"grid.n_points: at least {MIN_POINTS} required, got {n}")
            grid_ok = False
    grid_ok = _number(g.length, "grid.length", problems, positive=True) and grid_ok
    spacing = g.length / g.n_points if grid_ok else None

    s = cfg.schedule
    sched_ok = all(_number(getattr(s, k), f"schedule.{k}", problems) for k in ("t0", "t1", "t2", "t3", "v0"))
    if sched_ok and not (s.t0 < s.t1 < s.t2 < s.t3):
        problems.append(f"schedule: ordering t0 < t1 < t2 < t3 required, got ({s.t0}, {s.t1}, {s.t2}, {s.t3})")
        sched_ok = False

    e = cfg.evolution
    dt_ok = _number(e.dt, "evolution.dt", problems, positive=True)
    _number(e.record_stride, "evolution.record_stride", problems, positive=True, integer=True)
    if dt_ok and sched_ok:
        for name in ("t1", "t2"):
            if not _aligned(getattr(s, name) - s.t0, e.dt):
                problems.append(
                    f"schedule.{name}: ({name} - t0)/dt = {(getattr(s, name) - s.t0) / e.dt!r} must be an integer "
                    f"(switch alignment)"
                )

    c = cfg.charges
    for name in ("q", "m", "m_induced"):
        _number(getattr(c, name), f"charges.{name}", problems, positive=name != "q")
    _number(c.q_induced, "charges.q_induced", problems, allow_none=True)
    _number(c.detuning, "charges.detuning", problems, allow_none=True)
    _number(c.softening, "charges.softening", problems, positive=True, allow_none=True)
    if not isinstance(c.detuned, bool):
        problems.append(f"charges.detuned: expected true/false, got {c.detuned!r}")
    if c.coulomb_exponent not in (1, 2) or isinstance(c.coulomb_exponent, bool):
        problems.append(f"charges.coulomb_exponent: must be 1 or 2, got {c.coulomb_exponent!r}")
    if c.q_induced is not None and c.detuning is not None:
        problems.append("charges: give at most one of q_induced and detuning")
    elif c.detuning is not None and isinstance(c.detuning, (int, float)) and abs(c.detuning) > MAX_DETUNING:
        problems.append(f"charges.detuning: |detuning| <= {MAX_DETUNING} required, got {c.detuning}")
    elif c.q_induced is not None and isinstance(c.q_induced, (int, float)) and isinstance(c.q, (int, float)):
        if c.q_induced != -c.q:
            if not c.detuned:
                problems.append(
                    f"charges.q_induced: must equal -q ({-c.q}) unless charges.detuned is true, got {c.q_induced}"
                )
            elif c.q == 0 or abs(1.0 + c.q_induced / c.q) > MAX_DETUNING:
                problems.append(f"charges.q_induced: implied detuning exceeds {MAX_DETUNING}")

    p = cfg.packets.particle
    packet_ok = all(
        _number(getattr(p, k), f"packets.particle.{k}", problems, positive=k == "width")
        for k in ("center", "width", "wavenumber")
    )
    if packet_ok and spacing is not None:
        _check_packet(PacketSpec(p.center, p.width, p.wavenumber), spacing, g.length, "packets.particle", problems)
        if abs(p.wavenumber) >= math.pi / spacing:
            problems.append(f"packets.particle.wavenumber: |k0| must be below the grid cutoff {math.pi / spacing}")

    t = cfg.fringes
    if _number(t.tilt, "fringes.tilt", problems):
        if t.tilt == 0:
            problems.append("fringes.tilt: must be non-zero")
        elif spacing is not None and abs(t.tilt) * spacing > math.pi / 4:
            problems.append(f"fringes.tilt: fringe period must span at least 8 grid points (|tilt| <= {math.pi / (4 * spacing)})")

    sw = cfg.sweep
    for i, v in enumerate(sw.v0_values):
        _number(v, f"sweep.v0_values[{i}]", problems)
    _number(sw.workers, "sweep.workers", problems, positive=True, integer=True)

    for name in ("directory", "report", "fringes", "sweep"):
        if not isinstance(getattr(cfg.output, name), str) or not getattr(cfg.output, name):
            problems.append(f"output.{name}: expected a non-empty string")

    if two:
        _validate_two_particle(cfg, spacing, problems)

    if not problems and dt_ok and sched_ok:
        charge = c.q if cfg.mode == "single_particle" else c.q + cfg.q_induced()
        values = list(sw.v0_values) + [s.v0]
        worst = max(abs(charge * v) for v in values) * e.dt
        if worst >= math.pi / 2:
            problems.append(
                f"evolution.dt: per-step phase |charge * v0 * dt| = {worst:.3g} must stay below pi/2 for phase tracking"
            )
    return problems


def _check_packet(spec: PacketSpec, spacing: float, length: float, path: str, problems: list[str]) -> None:
    if spec.width < MIN_SAMPLES_PER_WIDTH * spacing:
        problems.append(f"{path}.width: {spec.width} is below {MIN_SAMPLES_PER_WIDTH} grid spacings ({MIN_SAMPLES_PER_WIDTH * spacing})")
    distance = min(spec.center + 0.5 * length, 0.5 * length - spec.center)
    if distance <= 0 or math.exp(-(distance**2) / (4 * spec.width**2)) >= TAIL_THRESHOLD:
        problems.append(f"{path}: packet tail at the periodic boundary must stay below {TAIL_THRESHOLD:g} of peak")


def _validate_two_particle(cfg: RunConfig, spacing, problems: list[str]) -> None:
    w = cfg.confinement
    ok = all(
        _number(getattr(w, k), f"confinement.{k}", problems, positive=k in ("wall_height", "wall_steepness"))
        for k in ("wall_center_low", "wall_center_high", "wall_height", "wall_steepness")
    )
    if ok and not w.wall_center_low < w.wall_center_high:
        problems.append("confinement: wall_center_low must be below wall_center_high")
        ok = False
    frac_ok = _number(cfg.packets.induced_width_fraction, "packets.induced_width_fraction", problems, positive=True)
    if not (ok and frac_ok and spacing is not None):
        return
    half = 0.5 * cfg.grid.length
    if w.wall_center_low <= -half or w.wall_center_high >= half:
        problems.append("confinement: walls must lie inside the grid")
    induced = cfg.induced_packet()
    _check_packet(induced, spacing, cfg.grid.length, "packets.induced", problems)
    m_induced = cfg.charges.m_induced
    if isinstance(m_induced, (int, float)) and m_induced > 0:
        kinetic = 1.0 / (8.0 * m_induced * induced.width**2)
        if w.wall_height < CONFINEMENT_MARGIN * kinetic:
            problems.append(
                f"confinement.wall_height: must be >= {CONFINEMENT_MARGIN:g} x induced kinetic energy "
                f"({CONFINEMENT_MARGIN * kinetic:.4g})"
            )


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigValidationError([f"top level: expected an object, got {type(data).__name__}"])
    problems: list[str] = []
    mode = data.get("mode", "single_particle")
    if mode not in MODES:
        raise ConfigValidationError([f"mode: must be one of {list(MODES)}, got {mode!r}"])
    try:
        cfg = _build(RunConfig, data, default_config(mode), "", problems)
    except (TypeError, SimulationError) as exc:
        raise ConfigValidationError([str(exc)]) from exc
    problems.extend(validate(cfg))
    if problems:
        raise ConfigValidationError(problems)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigParseError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(data)


def dumps_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2) + "\n"


def save_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(dumps_config(cfg))


def example_config(mode: str) -> dict:
    return copy.deepcopy(default_config(mode).to_dict())
