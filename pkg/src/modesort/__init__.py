"""Phase-element mode sorters for Laguerre-Gauss modes, designed by a genetic algorithm."""

from .config import RunConfig, load_config, parse_config, serialize_config
from .ga import GAConfig, Problem, RunHistory, load_checkpoint, run, run_islands, save_checkpoint
from .io import crosstalk_report, export_intensity, load_hologram, save_hologram
from .modes import BasisSpec, LGSpec, ModeVector, MUBFamily, basis_fields, fullfield_basis, mub_family, \
    oam_basis, radial_basis, sample_lg
from .optics import ComplexField, Grid, PhaseMap, lens_phase, power, propagate, snapshot_propagation
from .sorter import Channel, ChannelLayout, PhaseElement, SortMetrics, Sorter, SorterSetup, fork_baseline, \
    key_rate, run_sorter

__all__ = [
    "BasisSpec", "Channel", "ChannelLayout", "ComplexField", "GAConfig", "Grid", "LGSpec", "MUBFamily",
    "ModeVector", "PhaseElement", "PhaseMap", "Problem", "RunConfig", "RunHistory", "SortMetrics", "Sorter",
    "SorterSetup", "basis_fields", "crosstalk_report", "export_intensity", "fork_baseline", "fullfield_basis",
    "key_rate", "lens_phase", "load_checkpoint", "load_config", "load_hologram", "mub_family", "oam_basis",
    "parse_config", "power", "propagate", "radial_basis", "run", "run_islands", "run_sorter", "sample_lg",
    "save_checkpoint", "save_hologram", "serialize_config", "snapshot_propagation",
]
__version__ = "0.1.0"
