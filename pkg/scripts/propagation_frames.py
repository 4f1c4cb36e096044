"""Intensity frames of every input mode as it passes through a sorter.

With no holograms given the fork baseline of the preset geometry is used.
Frames go to <out>/mode<j>/frameNNN.pgm, normalized per frame to its peak.
"""

import argparse
from pathlib import Path

from modesort.io import intensity_levels, load_hologram, write_pgm16
from modesort.modes import basis_fields, oam_basis
from modesort.optics import ComplexField, Grid, propagate, snapshot_propagation
from modesort.presets import DESK_WAIST, fork_case
from modesort.sorter import ChannelLayout, Sorter, SorterSetup


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--holo", action="append", help="hologram files, one per plane")
    ap.add_argument("--n", type=int, default=128)
    ap.add_argument("--waist", type=float, default=DESK_WAIST)
    ap.add_argument("--interval", type=float, default=0.2)
    ap.add_argument("--out", default="out/frames")
    args = ap.parse_args()

    if args.holo:
        elements = [load_hologram(p)[0] for p in args.holo]
        grid = Grid(args.n)
        setup = SorterSetup(grid, ChannelLayout.corners(), len(elements))
        inputs = basis_fields(grid, oam_basis([-1, 1], args.waist))
    else:
        setup, basis, e = fork_case()
        elements = [e]
        inputs = basis_fields(setup.grid, basis)

    sorter = Sorter(setup)
    for j, field in enumerate(inputs):
        folder = Path(args.out) / f"mode{j}"
        folder.mkdir(parents=True, exist_ok=True)
        frames, a = [], field
        for seg, mod in enumerate(sorter.modulators(elements)):
            start = ComplexField(a.grid, a.samples * mod)
            snaps = snapshot_propagation(start, setup.focal, args.interval)
            frames.extend(snaps if seg == 0 else snaps[1:])
            a = propagate(start, setup.focal, setup.steps)
        for k, inten in enumerate(frames):
            write_pgm16(folder / f"frame{k:03d}.pgm", intensity_levels(inten))
        print(f"mode {j}: {len(frames)} frames in {folder}")


if __name__ == "__main__":
    main()
