"""Fork-grating baseline versus input waist: the focal spot must fit the 200 um channels."""

import argparse

import numpy as np

from modesort.modes import basis_fields
from modesort.presets import fork_case
from modesort.sorter import run_sorter


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=512)
    ap.add_argument("--waists", type=float, nargs="+", default=[250e-6, 500e-6, 750e-6, 1e-3, 1.25e-3])
    args = ap.parse_args()
    print("waist_um,focal_radius_um,ability,efficiency")
    for w in args.waists:
        setup, basis, e = fork_case(w, args.n)
        m = run_sorter(setup, [e], basis_fields(setup.grid, basis))
        spot = setup.grid.wavelength * setup.focal / (np.pi * w)
        print(f"{w * 1e6:.0f},{spot * 1e6:.0f},{m.ability:.4f},{m.efficiency:.4f}")


if __name__ == "__main__":
    main()
