"""Command-line entry point: ``modesort <command> ...``.

Exit status is 0 on success, 1 on validation errors and 2 on I/O errors; a
JSON error line goes to stderr in both failure cases.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import ga
from .config import load_config, serialize_config
from .io import (HologramFormatError, channel_labels, crosstalk_report, intensity_levels, load_hologram, raw_csv,
                 save_hologram, write_pgm16)
from .modes import mub_family, unbiasedness_deviation
from .optics import ComplexField, propagate, snapshot_propagation
from .sorter import Sorter, fork_baseline, key_rate

log = logging.getLogger("modesort")


def _outdir(cfg, override) -> Path:
    out = Path(override or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_report(out: Path, cfg, metrics):
    labels = cfg.input_labels()
    channels = channel_labels(cfg.build_layout())
    (out / "crosstalk.csv").write_text(crosstalk_report(metrics, labels, channels))
    (out / "raw.csv").write_text(raw_csv(metrics, labels, channels))


def _summary(metrics) -> str:
    return (f"ability {metrics.ability:.4f}  efficiency {metrics.efficiency:.4f}  "
            f"e_b {metrics.e_b:.4f}  R {metrics.R:.4f}  B {metrics.B:.6f}")


def _load_elements(paths, cfg):
    elements = []
    for p in paths:
        e, _ = load_hologram(p)
        elements.append(e)
    if len(elements) != cfg.sorter.planes:
        raise ValueError(f"config has {cfg.sorter.planes} planes but {len(elements)} holograms were given")
    return elements


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    gcfg = cfg.ga_config(args.seed)
    out = _outdir(cfg, args.out)
    (out / "config.txt").write_text(serialize_config(replace(cfg, ga=gcfg)))
    problem = ga.Problem(cfg.build_setup(), cfg.inputs(), threads=args.threads)
    state = ga.load_checkpoint(args.resume) if args.resume else None
    if state is not None:
        gcfg = state.cfg
    best, history = ga.run(gcfg, problem, state=state, checkpoint=out / "checkpoint.npz",
                           checkpoint_every=cfg.output.checkpoint_interval, progress_every=args.progress)
    wl = cfg.grid.wavelength
    for k, e in enumerate(best.elements, start=1):
        save_hologram(e, out / f"plane{k}.pgm", wl, gcfg.seed)
    (out / "history.csv").write_text(history.to_csv())
    _write_report(out, cfg, best.metrics)
    print(_summary(best.metrics))
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    elements = _load_elements(args.holo, cfg)
    metrics = Sorter(cfg.build_setup(), args.threads).evaluate(elements, cfg.inputs())
    _write_report(_outdir(cfg, args.out), cfg, metrics)
    print(_summary(metrics))
    return 0


def cmd_baseline(args) -> int:
    cfg = load_config(args.config)
    if cfg.sorter.planes != 1:
        raise ValueError("the fork baseline is a single-plane sorter; set sorter.planes = 1")
    setup = cfg.build_setup()
    e = fork_baseline(cfg.basis(), setup.layout, setup.grid, setup.focal)
    metrics = Sorter(setup).evaluate([e], cfg.inputs())
    out = _outdir(cfg, args.out)
    save_hologram(e, out / "baseline.pgm", cfg.grid.wavelength)
    _write_report(out, cfg, metrics)
    print(_summary(metrics))
    return 0


def cmd_propagate(args) -> int:
    cfg = load_config(args.config)
    elements = _load_elements(args.holo, cfg)
    inputs = cfg.inputs()
    if not 0 <= args.mode < len(inputs):
        raise ValueError(f"mode index {args.mode} out of range (0..{len(inputs) - 1})")
    sorter = Sorter(cfg.build_setup())
    out = _outdir(cfg, args.out)
    rows = []
    frame = 0
    a = inputs[args.mode]
    for seg, mod in enumerate(sorter.modulators(elements)):
        start = ComplexField(a.grid, a.samples * mod)
        for k, inten in enumerate(snapshot_propagation(start, cfg.sorter.focal, args.interval)):
            if seg > 0 and k == 0:
                continue
            z = seg * cfg.sorter.focal + k * args.interval
            name = f"frame{frame:03d}.pgm"
            write_pgm16(out / name, intensity_levels(inten, args.normalization))
            rows.append([frame, f"{z:.6f}", name, repr(float(inten.sum() * a.grid.pitch**2))])
            frame += 1
        a = propagate(start, cfg.sorter.focal, cfg.sorter.steps)
    with open(out / "frames.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "z", "file", "power"])
        w.writerows(rows)
    print(f"{frame} frames written to {out}")
    return 0


def cmd_mub(args) -> int:
    fam = mub_family(args.d)
    np.set_printoptions(precision=4, suppress=True, linewidth=120)
    for k, b in enumerate(fam.bases):
        print(f"basis {k}:")
        print(b)
    worst = max(unbiasedness_deviation(fam.bases[i], fam.bases[j])
                for i in range(len(fam)) for j in range(i + 1, len(fam)))
    print(f"max unbiasedness deviation: {worst:.3e}")
    return 0


def cmd_keyrate(args) -> int:
    print(f"{key_rate(args.d, args.qber):.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="modesort", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, default=1)
        return p

    p = with_config(sub.add_parser("optimize", help="run the genetic algorithm"))
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", help="checkpoint file to resume from")
    p.add_argument("--progress", type=int, default=1000, help="log every N iterations")
    p.set_defaults(func=cmd_optimize)

    p = with_config(sub.add_parser("evaluate", help="evaluate saved holograms"))
    p.add_argument("--holo", action="append", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = with_config(sub.add_parser("baseline", help="evaluate the analytic fork grating"))
    p.set_defaults(func=cmd_baseline)

    p = with_config(sub.add_parser("propagate", help="intensity snapshots through the sorter"))
    p.add_argument("--holo", action="append", required=True)
    p.add_argument("--mode", type=int, required=True)
    p.add_argument("--interval", type=float, default=0.2)
    p.add_argument("--normalization", choices=["peak", "power"], default="peak")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("mub", help="print a complete set of mutually unbiased bases")
    p.add_argument("--d", type=int, required=True)
    p.set_defaults(func=cmd_mub)

    p = sub.add_parser("keyrate", help="secret-key rate for dimension d and QBER")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--qber", type=float, required=True)
    p.set_defaults(func=cmd_keyrate)
    return parser


def _fail(kind: str, exc: Exception, code: int) -> int:
    print(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "optimize" else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, HologramFormatError) as exc:
        return _fail("io", exc, 2)
    except ValueError as exc:
        return _fail("validation", exc, 1)


if __name__ == "__main__":
    sys.exit(main())
