"""One test per acceptance criterion, each logging a pass/fail line to the terminal summary."""

import math
import os

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from modesort import ga
from modesort.config import parse_config, serialize_config
from modesort.io import load_hologram, save_hologram
from modesort.modes import LGSpec, basis_fields, fullfield_basis, gram_matrix, mub_family, sample_lg, \
    unbiasedness_deviation
from modesort.optics import TWO_PI, Grid, apply_phase, lens_phase, power, propagate, second_moment_radius
from modesort.presets import desk_config, desk_problem, fork_case
from modesort.sorter import SortMetrics, crosstalk_normalized, key_rate, run_sorter


def record(n: int, ok: bool, detail: str):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def desk_run():
    problem = desk_problem()
    cfg = desk_config()
    best, history = ga.run(cfg, problem)
    return cfg, problem, best, history


def test_criterion_1_key_rates():
    cases = {(3, 0.004): 1.50, (3, 0.008): 1.44, (5, 0.0232): 1.91, (5, 0.0255): 1.87}
    got = {k: key_rate(*k) for k in cases}
    worst = max(abs(got[k] - v) for k, v in cases.items())
    record(1, worst <= 0.01, "key rates " + ", ".join(f"{k}->{got[k]:.4f}" for k in cases)
           + f" (max error {worst:.4f} bits)")


def test_criterion_2_mubs():
    counts, dev, unit = {}, 0.0, 0.0
    for d in (3, 5):
        fam = mub_family(d)
        counts[d] = len(fam)
        for i, a in enumerate(fam.bases):
            unit = max(unit, np.max(np.abs(a @ a.conj().T - np.eye(d))))
            for b in fam.bases[i + 1:]:
                dev = max(dev, unbiasedness_deviation(a, b))
    ok = counts == {3: 4, 5: 6} and dev <= 1e-12 and unit <= 1e-12
    record(2, ok, f"basis counts {counts}, unbiasedness deviation {dev:.1e}, unitarity error {unit:.1e}")


def test_criterion_3_optics(grid):
    w0 = 250e-6
    g0 = sample_lg(grid, LGSpec(0, 0, w0))
    zr = math.pi * w0**2 / grid.wavelength
    width_err = max(abs(second_moment_radius(propagate(g0, z)) / (w0 * math.sqrt(1 + (z / zr) ** 2)) - 1)
                    for z in (0.25, 0.5, 1.0))

    focused = propagate(apply_phase(g0, lens_phase(grid, 1.0)), 1.0)
    focus_err = abs(second_moment_radius(focused) / (grid.wavelength / (math.pi * w0)) - 1)
    power_err = abs(power(focused) / power(g0) - 1)

    modes = fullfield_basis(range(-2, 3), range(5), w0)
    gram_err = np.max(np.abs(gram_matrix(basis_fields(grid, modes)) - np.eye(modes.d)))

    ok = width_err <= 0.01 and focus_err <= 0.02 and power_err <= 1e-6 and gram_err <= 1e-3
    record(3, ok, f"width error {width_err:.2e}, focal radius error {focus_err:.2e}, "
                  f"power error {power_err:.1e}, Gram error {gram_err:.1e}")


def test_criterion_4_fork_baseline():
    setup, basis, element = fork_case()
    m = run_sorter(setup, [element], basis_fields(setup.grid, basis))
    record(4, m.ability >= 0.95 and m.efficiency >= 0.15,
           f"fork baseline ability {m.ability:.4f} (>= 0.95), efficiency {m.efficiency:.4f} (>= 0.15)")


@pytest.mark.slow
def test_criterion_5_desk_ga(desk_run):
    cfg, _, best, history = desk_run
    trace = np.array(history.best_fitness)
    s = cfg.switch_at
    monotone = bool(np.all(np.diff(trace[: s + 1]) >= 0) and np.all(np.diff(trace[s + 1:]) >= 0))
    m = best.metrics
    ok = m.ability >= 0.95 and monotone and m.e_b < 0.05
    record(5, ok, f"desk GA (seed {cfg.seed}, {cfg.budget} iterations) ability {m.ability:.4f}, "
                  f"e_b {m.e_b:.4f}, efficiency {m.efficiency:.4f}, monotone per phase {monotone}")


def test_criterion_6_ga_mechanics():
    rng = ga.make_rng(11)
    e = ga.PhaseElement(rng.uniform(0, TWO_PI, (125, 125)))
    changed = int(np.count_nonzero(ga.mutate(e, 0.10, 0.15, rng).phases != e.phases))

    drawn_from_parent = True
    for _ in range(200):
        a = (ga.PhaseElement(rng.uniform(0, TWO_PI, (32, 32))),)
        b = (ga.PhaseElement(rng.uniform(0, TWO_PI, (32, 32))),)
        c = ga.crossover(a, b, rng)[0].phases
        drawn_from_parent &= bool(np.all((c == a[0].phases) | (c == b[0].phases)))

    tau = 10 / 3
    firsts = [ga.select_parents(range(10), rng, tau)[0] for _ in range(100_000)]
    sel_err = np.max(np.abs(np.bincount(firsts, minlength=10) / 1e5 - ga.rank_weights(10, tau)))

    problem = desk_problem(planes=1, n=64, waist=160e-6)
    cfg = ga.GAConfig(m=32, budget=30, switch_at=15, seed=4, planes=1)
    identical = ga.run(cfg, problem)[1].to_csv() == ga.run(cfg, problem)[1].to_csv()

    ok = changed == 1563 and drawn_from_parent and sel_err <= 0.02 and identical
    record(6, ok, f"mutated pixels {changed} (1563), crossover from parents {drawn_from_parent}, "
                  f"selection error {sel_err:.4f} (<= 0.02), byte-identical histories {identical}")


def test_criterion_7_metric_identities():
    rng = np.random.default_rng(7)
    eb_err = row_err = b_err = 0.0
    for _ in range(200):
        d = int(rng.integers(2, 8))
        raw = rng.uniform(0, 1, (d, d))
        m = SortMetrics(raw, np.full(d, raw.sum() * 2))
        p = np.diag(raw) / raw.sum(axis=1)
        eb_err = max(eb_err, abs(m.e_b - (1 - p.mean())))
        row_err = max(row_err, np.max(np.abs(crosstalk_normalized(m).sum(axis=1) - 1)))
        b_alt = np.trace(raw) - (raw.sum() - np.trace(raw))
        b_err = max(b_err, abs(m.B - b_alt))
    rates = [key_rate(d, e) for d in (2, 3, 5) for e in np.linspace(0, 0.2, 41)]
    per_d = [rates[i * 41:(i + 1) * 41] for i in range(3)]
    decreasing = all(np.all(np.diff(r) < 0) for r in per_d)
    ok = eb_err <= 1e-12 and row_err <= 1e-12 and b_err <= 1e-12 and decreasing
    record(7, ok, f"e_b identity {eb_err:.1e}, row sums {row_err:.1e}, B identity {b_err:.1e}, "
                  f"key rate strictly decreasing {decreasing}")


@pytest.mark.slow
def test_criterion_8_serialization(desk_run, tmp_path):
    cfg, problem, best, _ = desk_run
    loaded = []
    err = 0.0
    for k, e in enumerate(best.elements):
        path = tmp_path / f"plane{k + 1}.pgm"
        save_hologram(e, path, problem.setup.grid.wavelength, cfg.seed)
        back, _ = load_hologram(path)
        err = max(err, np.max(np.abs(np.angle(np.exp(1j * (back.phases - e.phases))))))
        loaded.append(back)
    shift = abs(problem.evaluate(loaded).ability - best.metrics.ability)

    text = serialize_config(parse_config("[mode]\nfamily = oam\nd = 2\n[sorter]\nplanes = 2\n[ga]\nseed = 9\n"))
    fixed = serialize_config(parse_config(text)) == text

    ok = err <= TWO_PI / 65536 and shift < 1e-3 and fixed
    record(8, ok, f"hologram round-trip error {err:.2e} (<= {TWO_PI / 65536:.2e}), "
                  f"re-evaluated ability change {shift:.1e}, config fixed point {fixed}")


soak = pytest.mark.skipif(os.environ.get("MODESORT_SOAK") != "1", reason="set MODESORT_SOAK=1 for long runs")


@soak
@pytest.mark.soak
def test_soak_two_modes():
    best, _ = ga.run(desk_config(budget=100_000), desk_problem())
    assert best.metrics.ability >= 0.98


@soak
@pytest.mark.soak
def test_soak_six_modes():
    best, _ = ga.run(desk_config(budget=200_000), desk_problem(family="fullfield"))
    assert best.metrics.ability >= 0.97
