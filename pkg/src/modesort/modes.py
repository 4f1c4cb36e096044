"""Laguerre-Gauss modes, their superpositions and mutually unbiased bases."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.special import eval_genlaguerre

from .optics import ComplexField, Grid, overlap, power

DEFAULT_WAIST = 250e-6
MIN_SAMPLES_PER_WAIST = 8
EDGE_TO_PEAK_LIMIT = 1e-6


class ModeSamplingError(ValueError):
    """Mode is under-resolved or clipped by the grid aperture."""


@dataclass(frozen=True)
class LGSpec:
    ell: int
    p: int = 0
    waist: float = DEFAULT_WAIST

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("radial index p must be >= 0")
        if not self.waist > 0:
            raise ValueError("waist must be positive")

    @property
    def label(self) -> str:
        return f"l{self.ell:+d}p{self.p}"


@dataclass(frozen=True)
class BasisSpec:
    modes: tuple[LGSpec, ...]

    def __post_init__(self):
        modes = tuple(self.modes)
        object.__setattr__(self, "modes", modes)
        if len(modes) < 2:
            raise ValueError("a basis needs at least two modes")
        if len(set((m.ell, m.p) for m in modes)) != len(modes):
            raise ValueError("basis modes must be distinct")
        if len(set(m.waist for m in modes)) != 1:
            raise ValueError("basis modes must share one waist")

    @property
    def d(self) -> int:
        return len(self.modes)

    @property
    def waist(self) -> float:
        return self.modes[0].waist


@dataclass(frozen=True, eq=False)
class ModeVector:
    basis: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.size != self.basis.d:
            raise ValueError(f"expected {self.basis.d} coefficients, got {c.size}")
        norm = np.sum(np.abs(c) ** 2)
        if abs(norm - 1.0) > 1e-12:
            raise ValueError(f"coefficients not normalized (sum |c|^2 = {norm})")
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True, eq=False)
class MUBFamily:
    d: int
    bases: tuple[np.ndarray, ...]
    """Each basis is a d x d array whose rows are the basis vectors."""

    def __len__(self):
        return len(self.bases)


def oam_basis(ells, waist: float = DEFAULT_WAIST) -> BasisSpec:
    return BasisSpec(tuple(LGSpec(ell, 0, waist) for ell in sorted(ells)))


def radial_basis(d: int, waist: float = DEFAULT_WAIST) -> BasisSpec:
    return BasisSpec(tuple(LGSpec(0, p, waist) for p in range(d)))


def fullfield_basis(ells=(-1, 0, 1), ps=(0, 1), waist: float = DEFAULT_WAIST) -> BasisSpec:
    """Joint (p, ell) set ordered lexicographically: p is the row, ell the column."""
    return BasisSpec(tuple(LGSpec(ell, p, waist) for p in sorted(ps) for ell in sorted(ells)))


def lg_amplitude(r: np.ndarray, theta: np.ndarray, spec: LGSpec) -> np.ndarray:
    """Analytic LG amplitude at the waist plane (unit power in the continuum)."""
    al = abs(spec.ell)
    w = spec.waist
    norm = np.sqrt(2.0 * factorial(spec.p) / (np.pi * factorial(spec.p + al))) / w
    rho2 = 2.0 * r**2 / w**2
    radial = norm * rho2 ** (al / 2) * eval_genlaguerre(spec.p, al, rho2) * np.exp(-(r**2) / w**2)
    return radial * np.exp(1j * spec.ell * theta)


def sample_lg(grid: Grid, spec: LGSpec) -> ComplexField:
    if spec.waist / grid.pitch < MIN_SAMPLES_PER_WAIST:
        raise ModeSamplingError(
            f"waist {spec.waist:g} m spans fewer than {MIN_SAMPLES_PER_WAIST} samples of {grid.pitch:g} m"
        )
    r, theta = grid.polar()
    a = lg_amplitude(r, theta, spec)
    inten = np.abs(a) ** 2
    edge = max(inten[0].max(), inten[-1].max(), inten[:, 0].max(), inten[:, -1].max())
    if edge > EDGE_TO_PEAK_LIMIT * inten.max():
        raise ModeSamplingError(f"mode {spec.label} is clipped by the {grid.side:g} m aperture")
    f = ComplexField(grid, a)
    return f.scaled(1.0 / np.sqrt(power(f)))


def sample_vector(grid: Grid, v: ModeVector) -> ComplexField:
    total = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for c, spec in zip(v.coeffs, v.basis.modes):
        if c != 0:
            total += c * sample_lg(grid, spec).samples
    return ComplexField(grid, total)


def basis_fields(grid: Grid, basis: BasisSpec, vectors: np.ndarray | None = None) -> list[ComplexField]:
    """Fields for every row of ``vectors`` (default: the computational basis)."""
    lg = [sample_lg(grid, spec).samples for spec in basis.modes]
    if vectors is None:
        return [ComplexField(grid, a) for a in lg]
    stack = np.stack(lg)
    return [ComplexField(grid, np.tensordot(row, stack, axes=1)) for row in np.asarray(vectors)]


def gram_matrix(fields: list[ComplexField]) -> np.ndarray:
    d = len(fields)
    g = np.empty((d, d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            g[i, j] = overlap(fields[i], fields[j])
    return g


def _is_prime(d: int) -> bool:
    return d >= 2 and all(d % k for k in range(2, int(d**0.5) + 1))


def mub_family(d: int) -> MUBFamily:
    """All d + 1 mutually unbiased bases for prime d; index 0 is computational.

    Odd d uses the Wootters-Fields construction, basis k vector j having
    components omega**(k l^2 + j l) / sqrt(d). d = 2 uses Pauli eigenbases.
    """
    if not _is_prime(d):
        raise ValueError(f"MUB construction needs a prime dimension, got {d}")
    bases = [np.eye(d, dtype=np.complex128)]
    if d == 2:
        s = 1 / np.sqrt(2)
        bases.append(s * np.array([[1, 1], [1, -1]], dtype=np.complex128))
        bases.append(s * np.array([[1, 1j], [1, -1j]], dtype=np.complex128))
    else:
        omega = np.exp(2j * np.pi / d)
        l = np.arange(d)
        j = np.arange(d)[:, None]
        for k in range(d):
            exponent = (k * l**2 + j * l) % d
            bases.append(omega**exponent / np.sqrt(d))
    return MUBFamily(d, tuple(bases))


def unbiasedness_deviation(a: np.ndarray, b: np.ndarray) -> float:
    """max_ij | |<a_i|b_j>|^2 - 1/d | for row-vector bases ``a`` and ``b``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError(f"basis shapes differ: {a.shape} vs {b.shape}")
    d = a.shape[0]
    return float(np.max(np.abs(np.abs(a.conj() @ b.T) ** 2 - 1.0 / d)))
