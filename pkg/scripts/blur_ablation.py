"""Desk GA with and without blurring every child; several seeds each."""

import argparse

from modesort import ga
from modesort.presets import desk_config, desk_problem


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budget", type=int, default=20_000)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()
    problem = desk_problem()
    print("blur_children,seed,ability,efficiency")
    for blur in (False, True):
        for seed in args.seeds:
            best, _ = ga.run(desk_config(args.budget, seed, blur_children=blur), problem)
            print(f"{blur},{seed},{best.metrics.ability:.4f},{best.metrics.efficiency:.4f}")


if __name__ == "__main__":
    main()
