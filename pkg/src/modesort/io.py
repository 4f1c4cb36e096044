"""Hologram graymaps, intensity images and CSV crosstalk reports."""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .optics import TWO_PI, ComplexField
from .sorter import ChannelLayout, PhaseElement, SortMetrics, crosstalk_normalized

MAXVAL = 65535
LEVELS = 65536


class HologramFormatError(ValueError):
    """Malformed hologram or sidecar; the CLI reports it as an I/O error."""


def write_pgm16(path, image: np.ndarray):
    image = np.asarray(image)
    if image.ndim != 2:
        raise ValueError("graymap must be two-dimensional")
    rows, cols = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n{MAXVAL}\n".encode("ascii"))
        fh.write(image.astype(">u2").tobytes())


def read_pgm16(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise HologramFormatError(f"{path}: truncated header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace byte before the raster
    if tokens[0] != b"P5":
        raise HologramFormatError(f"{path}: not a binary graymap (magic {tokens[0]!r})")
    try:
        cols, rows, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise HologramFormatError(f"{path}: malformed header") from None
    if maxval != MAXVAL:
        raise HologramFormatError(f"{path}: maxval {maxval}, expected {MAXVAL}")
    raster = data[pos:]
    if len(raster) != 2 * rows * cols:
        raise HologramFormatError(f"{path}: expected {2 * rows * cols} raster bytes, got {len(raster)}")
    return np.frombuffer(raster, dtype=">u2").reshape(rows, cols).astype(np.uint16)


def quantize_phase(phases: np.ndarray) -> np.ndarray:
    """Phase in [0, 2pi) to level floor(phase / 2pi * 65536)."""
    levels = np.floor(np.asarray(phases) / TWO_PI * LEVELS).astype(np.int64)
    return np.clip(levels, 0, MAXVAL).astype(np.uint16)


def dequantize_phase(levels: np.ndarray) -> np.ndarray:
    return TWO_PI * np.asarray(levels, dtype=np.float64) / LEVELS


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".txt")


def save_hologram(e: PhaseElement, path, wavelength: float, seed: int | None = None):
    """Write ``path`` (16-bit P5 graymap) plus a ``.txt`` sidecar with the metadata."""
    path = Path(path)
    write_pgm16(path, quantize_phase(e.phases))
    meta = {"m": e.m, "macro_pitch": repr(e.macro_pitch), "wavelength": repr(wavelength),
            "seed": "none" if seed is None else str(seed)}
    sidecar_path(path).write_text("".join(f"{k} = {v}\n" for k, v in meta.items()))


def load_hologram(path) -> tuple[PhaseElement, dict]:
    """Returns the element and its sidecar metadata (m, macro_pitch, wavelength, seed)."""
    path = Path(path)
    meta = {}
    for line in sidecar_path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    try:
        m = int(meta["m"])
        parsed = {"m": m, "macro_pitch": float(meta["macro_pitch"]), "wavelength": float(meta["wavelength"]),
                  "seed": None if meta.get("seed", "none") == "none" else int(meta["seed"])}
    except (KeyError, ValueError) as exc:
        raise HologramFormatError(f"{sidecar_path(path)}: bad sidecar ({exc})") from None
    levels = read_pgm16(path)
    if levels.shape != (m, m):
        raise HologramFormatError(f"{path}: raster {levels.shape} does not match sidecar m = {m}")
    return PhaseElement(dequantize_phase(levels), parsed["macro_pitch"]), parsed


def intensity_levels(inten: np.ndarray, normalization: str = "peak", gain: float = 1.0) -> np.ndarray:
    """16-bit levels of an intensity map.

    ``peak`` maps the brightest sample to 65535. ``power`` maps the fraction of
    the total power carried by each sample, times ``gain``, onto [0, 65535].
    """
    inten = np.asarray(inten, dtype=np.float64)
    if normalization == "peak":
        ref = inten.max()
    elif normalization == "power":
        ref = inten.sum() / gain
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    scaled = inten / ref if ref > 0 else inten
    return np.round(np.clip(scaled, 0, 1) * MAXVAL).astype(np.uint16)


def export_intensity(f: ComplexField, path, normalization: str = "peak", gain: float = 1.0):
    write_pgm16(path, intensity_levels(f.intensity, normalization, gain))


def channel_labels(layout: ChannelLayout) -> list[str]:
    """Channel centers in micrometers, e.g. ``(200,-200)um``."""
    return [f"({c.x * 1e6:.0f},{c.y * 1e6:.0f})um" for c in layout.channels]


def _round_rows(matrix: np.ndarray, decimals: int = 6) -> np.ndarray:
    """Round each row to ``decimals`` places keeping its sum exact (largest remainder)."""
    scale = 10**decimals
    out = np.empty(matrix.shape, dtype=np.int64)
    for i, row in enumerate(matrix):
        target = int(round(row.sum() * scale))
        scaled = row * scale
        base = np.floor(scaled).astype(np.int64)
        short = target - base.sum()
        order = np.argsort(-(scaled - base), kind="stable")
        base[order[:short]] += 1
        out[i] = base
    return out


def crosstalk_report(metrics: SortMetrics, input_labels, channel_labels=None) -> str:
    """Normalized crosstalk matrix, metric footer rows, then the raw channel intensities."""
    d = metrics.d
    channel_labels = list(channel_labels or [f"ch{m}" for m in range(d)])
    norm = _round_rows(crosstalk_normalized(metrics))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", *channel_labels])
    for label, row in zip(input_labels, norm):
        w.writerow([label, *(f"{v // 10**6}.{v % 10**6:06d}" for v in row)])
    for name, value in [("ability", metrics.ability), ("efficiency", metrics.efficiency),
                        ("e_b", metrics.e_b), ("R", metrics.R), ("B", metrics.B)]:
        w.writerow([name, f"{value:.6f}"])
    for label, row in zip(input_labels, metrics.raw):
        w.writerow([f"raw:{label}", *(f"{v:.9e}" for v in row)])
    return buf.getvalue()


def read_report_body(text: str) -> tuple[list[str], list[str], np.ndarray]:
    """Parse (input labels, channel labels, normalized matrix) back from a report."""
    rows = list(csv.reader(io.StringIO(text)))
    channels = rows[0][1:]
    body = rows[1 : 1 + len(channels)]
    return [r[0] for r in body], channels, np.array([[float(v) for v in r[1:]] for r in body])


def raw_csv(metrics: SortMetrics, input_labels, channel_labels=None) -> str:
    channel_labels = list(channel_labels or [f"ch{m}" for m in range(metrics.d)])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["input", *channel_labels, "input_power"])
    for label, row, p in zip(input_labels, metrics.raw, metrics.input_power):
        w.writerow([label, *(repr(float(v)) for v in row), repr(float(p))])
    return buf.getvalue()
