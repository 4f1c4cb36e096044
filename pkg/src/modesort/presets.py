"""Geometries used by the acceptance suite and the experiment scripts."""

from __future__ import annotations

from .ga import GAConfig, Problem
from .modes import BasisSpec, basis_fields, fullfield_basis, oam_basis
from .optics import Grid
from .sorter import ChannelLayout, SorterSetup, fork_baseline

# Desk-scale GA: small grid, broad beam so the focal spots land inside 200 um squares.
DESK_GRID = 128
DESK_WAIST = 400e-6
DESK_BUDGET = 20_000
DESK_SEED = 1

# Fork baseline: a 1 mm beam focuses to ~250 um, matching the channel size.
FORK_GRID = 512
FORK_WAIST = 1e-3


def desk_problem(planes: int = 2, family: str = "oam", waist: float = DESK_WAIST,
                 n: int = DESK_GRID, threads: int = 1) -> Problem:
    grid = Grid(n)
    if family == "oam":
        basis = oam_basis([-1, 1], waist)
    elif family == "fullfield":
        basis = fullfield_basis([-1, 0, 1], [0, 1], waist)
    else:
        raise ValueError(f"unknown family {family!r}")
    layout = ChannelLayout.default_for(basis.d, family)
    return Problem(SorterSetup(grid, layout, planes), basis_fields(grid, basis), threads)


def desk_config(budget: int = DESK_BUDGET, seed: int = DESK_SEED, planes: int = 2, **kw) -> GAConfig:
    return GAConfig(population=10, budget=budget, switch_at=min(10_000, budget // 2), seed=seed,
                    planes=planes, **kw)


def fork_case(waist: float = FORK_WAIST, n: int = FORK_GRID):
    """(setup, basis, element) for the d = 2 fork-grating baseline."""
    grid = Grid(n)
    basis: BasisSpec = oam_basis([-1, 1], waist)
    layout = ChannelLayout.corners()
    setup = SorterSetup(grid, layout, planes=1)
    return setup, basis, fork_baseline(basis, layout, grid)
