"""One- and two-plane sorter forward model and the sorting metrics.

Each input mode is modulated by the first phase element, focused by a lens of
focal length f and propagated over f. With two planes, the second element
sits in that focal plane and is followed by another lens and another f of
propagation. Channel intensities are integrated over square detector areas.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

from .modes import BasisSpec
from .optics import TWO_PI, ComplexField, Grid, PhaseMap, lens_phase, power, transfer_function, wrap

DEFAULT_MACROPIXELS = 125
DEFAULT_MACRO_PITCH = 20e-6
DEFAULT_CHANNEL_SIDE = 200e-6
DEFAULT_CHANNEL_SPACING = 400e-6
RATE_FLOOR = 1e-3
# A channel row carrying less than this fraction of its input power counts as empty.
DEGENERATE_ROW = 1e-12


@dataclass(frozen=True, eq=False)
class PhaseElement:
    phases: np.ndarray
    macro_pitch: float = DEFAULT_MACRO_PITCH

    def __post_init__(self):
        phases = wrap(np.array(self.phases, dtype=np.float64))
        if phases.ndim != 2 or phases.shape[0] != phases.shape[1]:
            raise ValueError(f"phase element must be square, got shape {phases.shape}")
        if phases.shape[0] < 16:
            raise ValueError("phase element needs at least 16 macropixels per side")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    @property
    def m(self) -> int:
        return self.phases.shape[0]

    @classmethod
    def zeros(cls, m: int = DEFAULT_MACROPIXELS, macro_pitch: float = DEFAULT_MACRO_PITCH) -> "PhaseElement":
        return cls(np.zeros((m, m)), macro_pitch)

    def __eq__(self, other):
        if not isinstance(other, PhaseElement):
            return NotImplemented
        return self.macro_pitch == other.macro_pitch and np.array_equal(self.phases, other.phases)

    __hash__ = None


@dataclass(frozen=True)
class Channel:
    x: float
    y: float
    side: float = DEFAULT_CHANNEL_SIDE

    def bounds(self) -> tuple[float, float, float, float]:
        h = self.side / 2
        return self.x - h, self.x + h, self.y - h, self.y + h


@dataclass(frozen=True)
class ChannelLayout:
    channels: tuple[Channel, ...]

    def __post_init__(self):
        chans = tuple(self.channels)
        object.__setattr__(self, "channels", chans)
        for i, a in enumerate(chans):
            if not a.side > 0:
                raise ValueError("channel side must be positive")
            ax0, ax1, ay0, ay1 = a.bounds()
            for b in chans[i + 1 :]:
                bx0, bx1, by0, by1 = b.bounds()
                if ax0 < bx1 and bx0 < ax1 and ay0 < by1 and by0 < ay1:
                    raise ValueError(f"channels overlap: {a} and {b}")

    @property
    def d(self) -> int:
        return len(self.channels)

    def permuted(self, order) -> "ChannelLayout":
        return ChannelLayout(tuple(self.channels[i] for i in order))

    @classmethod
    def line(cls, d: int, spacing: float = DEFAULT_CHANNEL_SPACING, side: float = DEFAULT_CHANNEL_SIDE):
        """d channels on the horizontal axis, centered on the optical axis."""
        xs = (np.arange(d) - (d - 1) / 2) * spacing
        return cls(tuple(Channel(float(x), 0.0, side) for x in xs))

    @classmethod
    def grid(cls, cols: int, rows: int, spacing: float = DEFAULT_CHANNEL_SPACING, side: float = DEFAULT_CHANNEL_SIDE):
        """Row-major rectangular arrangement (column index varies fastest)."""
        xs = (np.arange(cols) - (cols - 1) / 2) * spacing
        ys = (np.arange(rows) - (rows - 1) / 2) * spacing
        return cls(tuple(Channel(float(x), float(y), side) for y in ys for x in xs))

    @classmethod
    def corners(cls, offset: float = DEFAULT_CHANNEL_SPACING / 2, side: float = DEFAULT_CHANNEL_SIDE):
        """Two channels in opposite corners: upper right, then lower left."""
        return cls((Channel(offset, offset, side), Channel(-offset, -offset, side)))

    @classmethod
    def default_for(cls, d: int, family: str = "oam", spacing: float = DEFAULT_CHANNEL_SPACING,
                    side: float = DEFAULT_CHANNEL_SIDE) -> "ChannelLayout":
        if d == 2:
            return cls.corners(spacing / 2, side)
        if family == "fullfield" and d == 6:
            return cls.grid(3, 2, spacing, side)
        return cls.line(d, spacing, side)

    def masks(self, grid: Grid) -> np.ndarray:
        """Boolean (d, n, n) masks of the samples whose centers lie in each channel."""
        x, y = grid.mesh()
        eps = 1e-9 * grid.pitch
        out = np.zeros((self.d, grid.n, grid.n), dtype=bool)
        for i, c in enumerate(self.channels):
            x0, x1, y0, y1 = c.bounds()
            if x0 < x.min() - grid.pitch / 2 or x1 > x.max() + grid.pitch / 2 or \
                    y0 < y.min() - grid.pitch / 2 or y1 > y.max() + grid.pitch / 2:
                raise ValueError(f"channel {c} lies outside the grid aperture")
            out[i] = (x >= x0 - eps) & (x < x1 - eps) & (y >= y0 - eps) & (y < y1 - eps)
            if not out[i].any():
                raise ValueError(f"channel {c} covers no samples")
        return out


@dataclass(frozen=True)
class SorterSetup:
    grid: Grid
    layout: ChannelLayout
    planes: int = 1
    focal: float = 1.0
    steps: int = 1

    def __post_init__(self):
        if self.planes not in (1, 2):
            raise ValueError("planes must be 1 or 2")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.focal == 0:
            raise ValueError("focal length must be non-zero")


@dataclass(frozen=True, eq=False)
class SortMetrics:
    raw: np.ndarray
    input_power: np.ndarray
    degenerate: np.ndarray = field(init=False)

    def __post_init__(self):
        raw = np.asarray(self.raw, dtype=np.float64)
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "input_power", np.asarray(self.input_power, dtype=np.float64))
        rows = raw.sum(axis=1)
        object.__setattr__(self, "degenerate", rows <= DEGENERATE_ROW * self.input_power)

    @property
    def d(self) -> int:
        return self.raw.shape[0]

    @cached_property
    def B(self) -> float:
        return sorting_performance(self.raw)

    @cached_property
    def P(self) -> np.ndarray:
        return np.diag(crosstalk_normalized(self))

    @property
    def ability(self) -> float:
        return float(np.mean(self.P))

    @property
    def efficiencies(self) -> np.ndarray:
        return np.diag(self.raw) / self.input_power

    @property
    def efficiency(self) -> float:
        return float(np.mean(self.efficiencies))

    @property
    def e_b(self) -> float:
        return qber(self)

    @property
    def R(self) -> float:
        return key_rate(self.d, min(max(self.e_b, 0.0), 1.0))

    @property
    def F(self) -> float:
        return self.B * max(self.R, RATE_FLOOR)


def sorting_performance(raw: np.ndarray) -> float:
    """B = sum_n (I_n - sum_{m != n} I~_m) over the rows of the channel matrix."""
    raw = np.asarray(raw, dtype=np.float64)
    diag = np.diag(raw)
    wrong = raw.sum(axis=1) - diag
    return float(np.sum(diag - wrong))


def sorting_probability(row: np.ndarray, n: int) -> float:
    """P_n = I_n / (I_n + sum of wrong-channel intensities); 1/d for an empty row."""
    row = np.asarray(row, dtype=np.float64)
    total = row.sum()
    if total <= 0:
        return 1.0 / row.size
    return float(row[n] / total)


def crosstalk_normalized(metrics: SortMetrics) -> np.ndarray:
    """Row-normalized channel matrix; degenerate rows become uniform 1/d."""
    raw = metrics.raw
    d = metrics.d
    out = np.full((d, d), 1.0 / d)
    ok = ~metrics.degenerate
    out[ok] = raw[ok] / raw[ok].sum(axis=1, keepdims=True)
    return out


def qber(metrics: SortMetrics) -> float:
    return 1.0 - metrics.ability


def shannon_entropy_d(x: float, d: int) -> float:
    """d-dimensional Shannon entropy in bits."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    if d < 2:
        raise ValueError("d must be >= 2")
    h = 0.0
    if x > 0:
        h -= x * (np.log2(x) - np.log2(d - 1))
    if x < 1:
        h -= (1 - x) * np.log2(1 - x)
    return float(h)


def key_rate(d: int, e_b: float) -> float:
    """Secret-key rate log2(d) - 2 h_d(e_b) in bits per sifted photon; may be negative."""
    return float(np.log2(d) - 2.0 * shannon_entropy_d(e_b, d))


def fitness(metrics: SortMetrics, iteration: int, switch_at: int) -> float:
    """B before ``switch_at``, B * max(R, RATE_FLOOR) from then on."""
    if switch_at < 0:
        raise ValueError("switch_at must be >= 0")
    if iteration < switch_at:
        return metrics.B
    return metrics.F


def embed_element(e: PhaseElement, grid: Grid) -> PhaseMap:
    """Center the element on the grid, each macropixel covering s x s samples."""
    ratio = e.macro_pitch / grid.pitch
    s = int(round(ratio))
    if s < 1 or abs(ratio - s) > 1e-9 * ratio:
        raise ValueError(f"grid pitch {grid.pitch:g} does not divide macro pitch {e.macro_pitch:g}")
    size = e.m * s
    if size > grid.n:
        raise ValueError(f"element spans {size} samples but the grid has {grid.n}")
    out = np.zeros((grid.n, grid.n))
    o = (grid.n - size) // 2
    out[o : o + size, o : o + size] = np.kron(e.phases, np.ones((s, s)))
    return PhaseMap(grid, out)


def macropixel_centers(m: int, macro_pitch: float, grid: Grid) -> np.ndarray:
    """Grid coordinates of macropixel centers for an element placed by embed_element."""
    s = int(round(macro_pitch / grid.pitch))
    o = (grid.n - m * s) // 2
    return (o + np.arange(m) * s + (s - 1) / 2 - grid.n // 2) * grid.pitch


class Sorter:
    """Forward model with cached lens factors, transfer function and channel masks."""

    def __init__(self, setup: SorterSetup, threads: int = 1):
        self.setup = setup
        self.threads = threads
        grid = setup.grid
        self.lens = np.exp(1j * lens_phase(grid, setup.focal).phases)
        self.h = transfer_function(grid, setup.focal / setup.steps)
        self.masks = setup.layout.masks(grid)
        self._rows = [np.nonzero(m.any(axis=1))[0] for m in self.masks]
        self._cols = [np.nonzero(m.any(axis=0))[0] for m in self.masks]

    def _propagate(self, a: np.ndarray) -> np.ndarray:
        for _ in range(self.setup.steps):
            a = scipy.fft.ifft2(scipy.fft.fft2(a) * self.h)
        return a

    def output_field(self, modulators: list[np.ndarray], a: np.ndarray) -> np.ndarray:
        for mod in modulators:
            a = self._propagate(a * mod)
        return a

    def modulators(self, elements) -> list[np.ndarray]:
        if len(elements) != self.setup.planes:
            raise ValueError(f"setup has {self.setup.planes} planes but {len(elements)} elements were given")
        return [np.exp(1j * embed_element(e, self.setup.grid).phases) * self.lens for e in elements]

    def _channel_row(self, modulators, a: np.ndarray) -> np.ndarray:
        out = self.output_field(modulators, a)
        inten = out.real**2 + out.imag**2
        pitch2 = self.setup.grid.pitch**2
        row = np.empty(len(self.masks))
        for m, (mask, r, c) in enumerate(zip(self.masks, self._rows, self._cols)):
            block = inten[np.ix_(r, c)]
            row[m] = block[mask[np.ix_(r, c)]].sum() * pitch2
        return row

    def evaluate(self, elements, inputs: list[ComplexField]) -> SortMetrics:
        d = self.setup.layout.d
        if len(inputs) != d:
            raise ValueError(f"{len(inputs)} inputs for {d} channels")
        for f in inputs:
            if f.grid != self.setup.grid:
                raise ValueError("input field grid does not match the sorter grid")
        mods = self.modulators(elements)
        if self.threads > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                rows = list(pool.map(lambda f: self._channel_row(mods, f.samples), inputs))
        else:
            rows = [self._channel_row(mods, f.samples) for f in inputs]
        return SortMetrics(np.array(rows), np.array([power(f) for f in inputs]))

    def stage_fields(self, elements, field_in: ComplexField) -> list[ComplexField]:
        """Field just after each element (lens included) and at the output plane."""
        mods = self.modulators(elements)
        a = field_in.samples
        out = []
        for mod in mods:
            a = a * mod
            out.append(ComplexField(self.setup.grid, a))
            a = self._propagate(a)
        out.append(ComplexField(self.setup.grid, a))
        return out


def run_sorter(setup: SorterSetup, elements, inputs: list[ComplexField], threads: int = 1) -> SortMetrics:
    return Sorter(setup, threads).evaluate(list(elements), inputs)


def fork_baseline(basis, layout: ChannelLayout, grid: Grid, focal: float = 1.0,
                  m: int | None = None, macro_pitch: float | None = None) -> PhaseElement:
    """Multiplexed fork grating steering each phase-flattened OAM mode to its channel.

    ``basis`` is a BasisSpec or any sequence of LGSpec. The element defaults to
    covering the whole grid at the grid pitch.
    """
    modes = basis.modes if isinstance(basis, BasisSpec) else tuple(basis)
    if any(spec.p != 0 for spec in modes):
        raise ValueError("fork baseline needs pure-OAM modes (p = 0)")
    if len(modes) != layout.d:
        raise ValueError(f"{len(modes)} modes but {layout.d} channels")
    macro_pitch = grid.pitch if macro_pitch is None else macro_pitch
    if m is None:
        m = int(grid.side // macro_pitch)
    xs = macropixel_centers(m, macro_pitch, grid)
    x, y = np.meshgrid(xs, xs, indexing="xy")
    theta = np.arctan2(y, x)
    scale = TWO_PI / (grid.wavelength * focal)
    total = np.zeros((m, m), dtype=np.complex128)
    for spec, ch in zip(modes, layout.channels):
        total += np.exp(1j * (-spec.ell * theta + scale * (ch.x * x + ch.y * y)))
    return PhaseElement(np.angle(total), macro_pitch)
