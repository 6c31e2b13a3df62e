"""Run configuration: one JSON document, every field optional.

Sections map onto the domain dataclasses; unknown keys are rejected and
validation errors carry a JSON-pointer path such as ``/geometry/contact_limit``.
"""
from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .engine import SimConfig
from .errors import ConfigError, CurieSnapError
from .harvester import MODES, BimorphConfig, HarvesterState, LumpedParams, derive_lumped
from .magnetics import MagnetSpec, SheetPairGeometry
from .materials import ThermoMagneticMaterial
from .thermal import ThermalProfile


@dataclass(frozen=True)
class ThermalSection:
    kind: str = "triangle"
    t_min: float = 40.0
    t_max: float = 50.0
    rate: float | None = 0.1
    period: float | None = None
    phase: float = 0.0
    table_csv: str | None = None


@dataclass(frozen=True)
class LumpedOverrides:
    """Optional replacements for derived lumped parameters (null keeps the derived value)."""

    m_eff: float | None = None
    k: float | None = None
    damping_ratio: float | None = None
    theta: float | None = None
    c_p: float | None = None
    r_load: float | None = None


@dataclass(frozen=True)
class InitialSection:
    x: float = 0.0085
    x_dot: float = 0.0
    v: float = 0.0
    mode: str = "STUCK_TOP"


@dataclass(frozen=True)
class SimSection:
    dt: float = 1e-4
    t_end: float = 400.0
    t_start: float = 0.0
    event_tol: float = 1e-9
    sample_every: int = 100
    coupling: bool = True
    backend: str = "analytic"
    x_points: int = 1701
    t_step: float = 0.01
    t_margin: float = 0.5
    mesh_counts: tuple[int, int, int] = (10, 10, 1)
    kernel: str = "prism"
    force_table_csv: str | None = None
    initial: InitialSection | None = None


@dataclass(frozen=True)
class ExplorerSection:
    sweep: dict[str, list[float]] = field(
        default_factory=lambda: {
            "geometry.half_gap": [0.0095, 0.010, 0.0105],
            "bimorph.length": [0.036, 0.040, 0.044],
            "bimorph.load_resistance": [3.0e4, 1.0e5, 3.0e5],
        }
    )
    bounds: dict[str, list[float]] = field(
        default_factory=lambda: {
            "geometry.half_gap": [0.0095, 0.0105],
            "bimorph.length": [0.036, 0.044],
            "magnet.volume": [1.8e-7, 2.4e-7],
            "bimorph.load_resistance": [3.0e4, 3.0e5],
        }
    )
    budget: int = 60
    restarts: int = 5
    band_below_curie: float = 20.0


@dataclass(frozen=True)
class OutputSection:
    dir: str = "out"
    svg: bool = False


@dataclass(frozen=True)
class RunConfig:
    material: ThermoMagneticMaterial = field(default_factory=ThermoMagneticMaterial)
    magnet: MagnetSpec = field(default_factory=MagnetSpec)
    geometry: SheetPairGeometry = field(default_factory=SheetPairGeometry)
    bimorph: BimorphConfig = field(default_factory=BimorphConfig)
    lumped: LumpedOverrides = field(default_factory=LumpedOverrides)
    thermal: ThermalSection = field(default_factory=ThermalSection)
    sim: SimSection = field(default_factory=SimSection)
    explorer: ExplorerSection = field(default_factory=ExplorerSection)
    output: OutputSection = field(default_factory=OutputSection)
    base_dir: str = field(default=".", compare=False, repr=False)

    def __post_init__(self):
        self._cross_validate()

    # -- derived domain objects -------------------------------------------------
    def lumped_params(self) -> LumpedParams:
        over = {k: v for k, v in dataclasses.asdict(self.lumped).items() if v is not None}
        try:
            return derive_lumped(self.bimorph).with_overrides(**over)
        except CurieSnapError as exc:
            raise ConfigError(str(exc), "/lumped") from exc

    def profile(self) -> ThermalProfile:
        th = self.thermal
        try:
            if th.kind == "table":
                if not th.table_csv:
                    raise ConfigError("table profile needs table_csv", "/thermal/table_csv")
                return ThermalProfile.from_csv(Path(self.base_dir) / th.table_csv)
            return ThermalProfile(th.kind, th.t_min, th.t_max, th.rate, th.period, th.phase)
        except ConfigError:
            raise
        except CurieSnapError as exc:
            raise ConfigError(str(exc), "/thermal") from exc

    def sim_config(self, **overrides) -> SimConfig:
        s = self.sim
        initial = None
        if s.initial is not None:
            i = s.initial
            initial = HarvesterState(0.0, 0.0, i.x, i.x_dot, i.v, i.mode)
        kw = dict(
            dt=s.dt, t_end=s.t_end, t_start=s.t_start, event_tol=s.event_tol, sample_every=s.sample_every,
            coupling=s.coupling, backend=s.backend, x_points=s.x_points, t_step=s.t_step,
            t_margin=s.t_margin, mesh_counts=tuple(s.mesh_counts), kernel=s.kernel, initial=initial,
        )
        kw.update(overrides)
        try:
            return SimConfig(**kw)
        except CurieSnapError as exc:
            raise ConfigError(str(exc), "/sim") from exc

    def with_updates(self, updates: dict) -> "RunConfig":
        """Copy with dotted-path assignments such as ``{"geometry.half_gap": 0.011}``."""
        cfg = self
        for key, value in updates.items():
            parts = key.split(".")
            if len(parts) != 2 or not hasattr(cfg, parts[0]):
                raise ConfigError(f"unknown parameter {key!r}", "/" + key.replace(".", "/"))
            section = getattr(cfg, parts[0])
            if not dataclasses.is_dataclass(section) or parts[1] not in {f.name for f in fields(section)}:
                raise ConfigError(f"unknown parameter {key!r}", "/" + key.replace(".", "/"))
            try:
                new_section = replace(section, **{parts[1]: value})
            except CurieSnapError as exc:
                raise ConfigError(str(exc), "/" + key.replace(".", "/")) from exc
            cfg = replace(cfg, **{parts[0]: new_section})
        return cfg

    def _cross_validate(self):
        s = self.sim
        if s.backend not in ("analytic", "moment"):
            raise ConfigError(f"backend must be 'analytic' or 'moment', got {s.backend!r}", "/sim/backend")
        if s.kernel not in ("prism", "dipole"):
            raise ConfigError(f"kernel must be 'prism' or 'dipole', got {s.kernel!r}", "/sim/kernel")
        if not (s.dt > 0):
            raise ConfigError("dt must be > 0", "/sim/dt")
        if not (s.t_end > s.t_start):
            raise ConfigError("t_end must exceed t_start", "/sim/t_end")
        if not (0 < s.event_tol < s.dt):
            raise ConfigError("event_tol must lie in (0, dt)", "/sim/event_tol")
        if s.sample_every < 1:
            raise ConfigError("sample_every must be >= 1", "/sim/sample_every")
        if s.x_points < 3 or s.x_points % 2 == 0:
            raise ConfigError("x_points must be odd and >= 3", "/sim/x_points")
        if not (s.t_step > 0):
            raise ConfigError("t_step must be > 0", "/sim/t_step")
        if len(s.mesh_counts) != 3 or min(s.mesh_counts) < 1:
            raise ConfigError("mesh_counts must be three integers >= 1", "/sim/mesh_counts")
        if s.initial is not None:
            if s.initial.mode not in MODES:
                raise ConfigError(f"mode must be one of {MODES}", "/sim/initial/mode")
            if abs(s.initial.x) > self.geometry.contact_limit:
                raise ConfigError(
                    f"initial x {s.initial.x} outside the stops (contact_limit {self.geometry.contact_limit})",
                    "/sim/initial/x",
                )
        th = self.thermal
        if th.kind != "table":
            try:
                ThermalProfile(th.kind, th.t_min, th.t_max, th.rate, th.period, th.phase)
            except CurieSnapError as exc:
                field_name = next((n for n in ("t_min", "rate", "period", "kind") if n in str(exc)), "")
                raise ConfigError(str(exc), "/thermal/" + field_name) from exc
        ex = self.explorer
        for name, lo_hi in ex.bounds.items():
            if len(lo_hi) != 2 or not (lo_hi[0] < lo_hi[1]):
                raise ConfigError("bounds must be [lo, hi] with lo < hi", f"/explorer/bounds/{name}")
        if ex.budget < len(ex.bounds) + 2:
            raise ConfigError("budget must be >= number of variables + 2", "/explorer/budget")
        if ex.restarts < 1:
            raise ConfigError("restarts must be >= 1", "/explorer/restarts")
        self.lumped_params()


# -- (de)serialisation ----------------------------------------------------------

def _convert(tp, value, path):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union or (origin is not None and str(origin) == "<class 'types.UnionType'>"):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _convert(inner[0], value, path)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError("expected an object", path)
        return _from_dict(tp, value, path)
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"expected a number, got {value!r}", path)
        if not math.isfinite(value):
            raise ConfigError("number must be finite", path)
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"expected an integer, got {value!r}", path)
        return value
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"expected true/false, got {value!r}", path)
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"expected a string, got {value!r}", path)
        return value
    if origin is tuple:
        if not isinstance(value, list) or len(value) != len(args):
            raise ConfigError(f"expected a list of {len(args)} items", path)
        return tuple(_convert(a, v, f"{path}/{i}") for i, (a, v) in enumerate(zip(args, value)))
    if origin is list:
        if not isinstance(value, list):
            raise ConfigError("expected a list", path)
        return [_convert(args[0], v, f"{path}/{i}") for i, v in enumerate(value)]
    if origin is dict:
        if not isinstance(value, dict):
            raise ConfigError("expected an object", path)
        return {str(k): _convert(args[1], v, f"{path}/{k}") for k, v in value.items()}
    raise ConfigError(f"unsupported field type {tp}", path)


def _from_dict(cls, data: dict, path: str = ""):
    hints = typing.get_type_hints(cls)
    known = {f.name: f for f in fields(cls) if f.init and f.name != "base_dir"}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", f"{path}/{unknown[0]}")
    kwargs = {name: _convert(hints[name], value, f"{path}/{name}") for name, value in data.items()}
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except CurieSnapError as exc:
        named = sorted((str(exc).find(k), k) for k in data if k in str(exc))
        named = [k for _, k in named]
        raise ConfigError(str(exc), f"{path}/{named[0]}" if named else (path or "/")) from exc


def parse_config(source=None, *, text: str | None = None) -> RunConfig:
    """Parse a JSON config from a path or inline ``text``; ``None`` gives the defaults."""
    base = "."
    if text is None and source is not None:
        p = Path(source)
        text = p.read_text()  # OSError propagates: an I/O failure, not a config error
        base = str(p.parent)
    data = {}
    if text is not None and text.strip():
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON parse error, column {exc.colno}: {exc.msg}", "/", exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object", "/", 1)
    try:
        cfg = _from_dict(RunConfig, data, "")
    except ConfigError as exc:
        if exc.line is None and text:
            raise ConfigError(exc.message, exc.path, locate_line(text, exc.path)) from exc
        raise
    return replace(cfg, base_dir=base)


def locate_line(text: str, pointer: str) -> int | None:
    """Best-effort 1-based line of the key a JSON pointer names (None if absent from the text)."""
    pos, line = 0, None
    for part in [p for p in pointer.split("/") if p]:
        key = f'"{part}"'
        hit = text.find(key, pos)
        if hit < 0:
            break
        pos = hit + len(key)
        line = text.count("\n", 0, hit) + 1
    return line


def config_to_dict(cfg: RunConfig) -> dict:
    out = {}
    for f in fields(cfg):
        if f.name == "base_dir":
            continue
        out[f.name] = _plain(getattr(cfg, f.name))
    return out


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    return obj


def dumps17(obj, indent: int = 2) -> str:
    """JSON text with every float written to 17 significant digits."""
    return _dump(obj, indent, 0) + "\n"


def _dump(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj, ".17g") if obj != int(obj) or abs(obj) >= 1e16 else format(obj, ".1f")
    if isinstance(obj, str):
        return json.dumps(obj)
    if dataclasses.is_dataclass(obj):
        obj = _plain(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _dump(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "item"):
        return _dump(obj.item(), indent, level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")
