"""Run configuration: a flat ``[section]`` / ``key = value`` text format.

Example::

    [grid]
    n = 128

    [mode]
    family = oam
    d = 2

    [sorter]
    planes = 2

Omitted keys take their defaults. Lists are comma separated; channel
centers are ``x, y`` pairs in meters separated by ``;``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .ga import GAConfig
from .modes import DEFAULT_WAIST, BasisSpec, LGSpec, basis_fields, mub_family
from .optics import ComplexField, Grid
from .sorter import (DEFAULT_CHANNEL_SIDE, DEFAULT_CHANNEL_SPACING, Channel, ChannelLayout,
                     SorterSetup)

FAMILIES = ("oam", "radial", "fullfield")
# Derived from other sections on parse; never read or written directly.
_DERIVED = {("ga", "planes"), ("ga", "macro_pitch")}


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


@dataclass
class GridBlock:
    n: int = 256
    pitch: float = 20e-6
    wavelength: float = 780e-9
    supersampling: int = 1


@dataclass
class ModeBlock:
    family: str | None = None
    d: int | None = None
    waist: float = DEFAULT_WAIST
    ell: tuple[int, ...] | None = None
    p: tuple[int, ...] | None = None
    mub: str = "computational"


@dataclass
class LayoutBlock:
    centers: tuple[tuple[float, float], ...] | None = None
    side: float = DEFAULT_CHANNEL_SIDE
    spacing: float = DEFAULT_CHANNEL_SPACING


@dataclass
class SorterBlock:
    planes: int = 1
    focal: float = 1.0
    steps: int = 1


@dataclass
class OutputBlock:
    directory: str = "out"
    checkpoint_interval: int = 1000


@dataclass
class RunConfig:
    grid: GridBlock = field(default_factory=GridBlock)
    mode: ModeBlock = field(default_factory=ModeBlock)
    layout: LayoutBlock = field(default_factory=LayoutBlock)
    sorter: SorterBlock = field(default_factory=SorterBlock)
    ga: GAConfig = field(default_factory=GAConfig)
    output: OutputBlock = field(default_factory=OutputBlock)

    def build_grid(self) -> Grid:
        g = self.grid
        return Grid(g.n, g.pitch / g.supersampling, g.wavelength)

    def basis(self) -> BasisSpec:
        m = self.mode
        if m.family == "oam":
            specs = [LGSpec(ell, 0, m.waist) for ell in m.ell]
        elif m.family == "radial":
            specs = [LGSpec(0, p, m.waist) for p in m.p]
        else:
            specs = [LGSpec(ell, p, m.waist) for p in m.p for ell in m.ell]
        return BasisSpec(tuple(specs))

    def target_vectors(self) -> np.ndarray | None:
        """Rows are the coefficient vectors to sort; None for the computational basis."""
        if self.mode.mub == "computational":
            return None
        return mub_family(self.mode.d).bases[int(self.mode.mub)]

    def inputs(self, grid: Grid | None = None) -> list[ComplexField]:
        grid = grid or self.build_grid()
        return basis_fields(grid, self.basis(), self.target_vectors())

    def input_labels(self) -> list[str]:
        if self.mode.mub == "computational":
            return [s.label for s in self.basis().modes]
        return [f"mub{self.mode.mub}_{j}" for j in range(self.mode.d)]

    def build_layout(self) -> ChannelLayout:
        return ChannelLayout(tuple(Channel(x, y, self.layout.side) for x, y in self.layout.centers))

    def build_setup(self) -> SorterSetup:
        s = self.sorter
        return SorterSetup(self.build_grid(), self.build_layout(), s.planes, s.focal, s.steps)

    def ga_config(self, seed: int | None = None) -> GAConfig:
        cfg = replace(self.ga, planes=self.sorter.planes, macro_pitch=self.grid.pitch)
        return cfg if seed is None else replace(cfg, seed=seed)


SECTIONS = {
    "grid": GridBlock,
    "mode": ModeBlock,
    "layout": LayoutBlock,
    "sorter": SorterBlock,
    "ga": GAConfig,
    "output": OutputBlock,
}


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _centers(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for pair in text.split(";"):
        if not pair.strip():
            continue
        x, y = (float(v) for v in pair.split(","))
        out.append((x, y))
    return tuple(out)


def _optional_float(text: str):
    return None if text.lower() == "none" else float(text)


CONVERTERS = {
    ("mode", "ell"): _int_list,
    ("mode", "p"): _int_list,
    ("mode", "family"): str,
    ("mode", "mub"): str,
    ("layout", "centers"): _centers,
    ("output", "directory"): str,
    ("ga", "rank_tau"): _optional_float,
}


def _converter(section: str, key: str, default):
    if (section, key) in CONVERTERS:
        return CONVERTERS[(section, key)]
    if isinstance(default, bool):
        return _bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    if default is None:
        return int
    return str


def parse_config(text: str) -> RunConfig:
    values: dict[str, dict] = {name: {} for name in SECTIONS}
    lines: dict[tuple[str, str], int] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in SECTIONS:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        defaults = SECTIONS[section]()
        if key not in {f.name for f in fields(defaults)} or (section, key) in _DERIVED:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        try:
            values[section][key] = _converter(section, key, getattr(defaults, key))(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}", lineno) from None
        lines[(section, key)] = lineno
    try:
        blocks = {name: cls(**values[name]) for name, cls in SECTIONS.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(**blocks)
    _resolve(cfg, lines)
    return cfg


def _resolve(cfg: RunConfig, lines: dict):
    """Fill mode-dependent defaults and check consistency."""

    def fail(msg, section, key):
        raise ConfigError(msg, lines.get((section, key)))

    for section, key in [("grid", "pitch"), ("grid", "wavelength"), ("mode", "waist"), ("layout", "side"),
                         ("layout", "spacing"), ("sorter", "focal")]:
        if not getattr(getattr(cfg, section), key) > 0:
            fail(f"{section}.{key} must be positive", section, key)
    for section, key in [("grid", "n"), ("grid", "supersampling"), ("sorter", "steps")]:
        if getattr(getattr(cfg, section), key) < 1:
            fail(f"{section}.{key} must be positive", section, key)

    m = cfg.mode
    if m.family is None:
        raise ConfigError("mode family required")
    if m.family not in FAMILIES:
        fail(f"mode family must be one of {FAMILIES}", "mode", "family")
    if m.family == "oam":
        if m.ell is None:
            if m.d is None:
                fail("oam modes need d or an ell list", "mode", "d")
            m.ell = tuple(range(-(m.d // 2), m.d // 2 + 1)) if m.d % 2 else \
                tuple(v for v in range(-(m.d // 2), m.d // 2 + 1) if v != 0)
        m.ell = tuple(sorted(m.ell))
        m.p = (0,)
        count = len(m.ell)
    elif m.family == "radial":
        if m.p is None:
            if m.d is None:
                fail("radial modes need d or a p list", "mode", "d")
            m.p = tuple(range(m.d))
        m.p = tuple(sorted(m.p))
        m.ell = (0,)
        count = len(m.p)
    else:
        m.ell = tuple(sorted(m.ell if m.ell is not None else (-1, 0, 1)))
        m.p = tuple(sorted(m.p if m.p is not None else (0, 1)))
        count = len(m.ell) * len(m.p)
    if m.d is None:
        m.d = count
    if m.d != count:
        fail(f"mode d = {m.d} but the mode lists give {count} modes", "mode", "d")
    if m.d < 2:
        fail("need at least two modes", "mode", "d")
    if any(p < 0 for p in m.p):
        fail("radial indices must be >= 0", "mode", "p")
    if m.mub != "computational":
        try:
            k = int(m.mub)
            fam = mub_family(m.d)
        except ValueError as exc:
            fail(f"bad mub selection: {exc}", "mode", "mub")
        if not 0 <= k < len(fam):
            fail(f"mub index {k} out of range for d = {m.d}", "mode", "mub")
        m.mub = "computational" if k == 0 else str(k)

    lay = cfg.layout
    if lay.centers is None:
        layout = ChannelLayout.default_for(m.d, m.family, lay.spacing, lay.side)
        lay.centers = tuple((c.x, c.y) for c in layout.channels)
    if len(lay.centers) != m.d:
        fail(f"mode d = {m.d} but {len(lay.centers)} channels are given", "layout", "centers")
    try:
        cfg.build_layout().masks(cfg.build_grid())
    except ValueError as exc:
        fail(str(exc), "layout", "centers")

    if cfg.sorter.planes not in (1, 2):
        fail("sorter.planes must be 1 or 2", "sorter", "planes")
    cfg.ga = replace(cfg.ga, planes=cfg.sorter.planes, macro_pitch=cfg.grid.pitch)


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        if value and isinstance(value[0], tuple):
            return "; ".join(f"{x!r}, {y!r}" for x, y in value)
        return ", ".join(str(v) for v in value)
    return str(value)


def serialize_config(cfg: RunConfig) -> str:
    out = []
    for name in SECTIONS:
        out.append(f"[{name}]")
        for key, value in asdict(getattr(cfg, name)).items():
            if value is None or (name, key) in _DERIVED:
                continue
            if isinstance(value, list):
                value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
            out.append(f"{key} = {_format(value)}")
        out.append("")
    return "\n".join(out)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
