"""Steady-state genetic algorithm over one- or two-plane phase genomes.

One child is bred per iteration from two rank-selected parents (half/half
crossover, sparse wrapped mutation, Gaussian blur) and replaces the worst
member of the population if it is fitter. Fitness is the sorting
performance B until ``switch_at``, then B * max(R, floor).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .optics import TWO_PI, ComplexField, wrap
from .sorter import (DEFAULT_MACRO_PITCH, DEFAULT_MACROPIXELS, PhaseElement, Sorter, SorterSetup,
                     SortMetrics, fitness)

log = logging.getLogger(__name__)

RNG_ALGORITHM = "PCG64"


@dataclass
class GAConfig:
    population: int = 10
    m: int = DEFAULT_MACROPIXELS
    macro_pitch: float = DEFAULT_MACRO_PITCH
    blur_sigma: float = 1.0
    blur_children: bool = False
    mutate_frac_start: float = 0.10
    mutate_frac_end: float = 0.0001
    mutate_amp: float = 0.15
    rank_tau: float | None = None
    switch_at: int = 10_000
    budget: int = 100_000
    seed: int = 0
    planes: int = 1
    early_stop: bool = False
    early_stop_window: int = 10_000
    early_stop_rel: float = 1e-4

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if not 0 < self.mutate_frac_end <= self.mutate_frac_start <= 1:
            raise ValueError("need 0 < mutate_frac_end <= mutate_frac_start <= 1")
        if not 0 <= self.mutate_amp <= 1:
            raise ValueError("mutate_amp must lie in [0, 1]")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        if self.switch_at < 0:
            raise ValueError("switch_at must be >= 0")
        if self.planes not in (1, 2):
            raise ValueError("planes must be 1 or 2")
        if self.blur_sigma < 0:
            raise ValueError("blur_sigma must be >= 0")

    @property
    def tau(self) -> float:
        return self.population / 3 if self.rank_tau is None else self.rank_tau


@dataclass(eq=False)
class Individual:
    elements: tuple[PhaseElement, ...]
    metrics: SortMetrics
    fitness: float


@dataclass
class RunHistory:
    best_fitness: list[float] = field(default_factory=list)
    best_ability: list[float] = field(default_factory=list)
    best_e_b: list[float] = field(default_factory=list)
    accepted: int = 0
    rng_algorithm: str = RNG_ALGORITHM
    population: list[Individual] = field(default_factory=list, repr=False)

    def record(self, best: Individual):
        self.best_fitness.append(best.fitness)
        self.best_ability.append(best.metrics.ability)
        self.best_e_b.append(best.metrics.e_b)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "best_fitness", "ability", "e_b"])
        for i, (f, a, e) in enumerate(zip(self.best_fitness, self.best_ability, self.best_e_b)):
            w.writerow([i, repr(f), repr(a), repr(e)])
        return buf.getvalue()


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def mutation_fraction(iteration: int, cfg: GAConfig) -> float:
    """Geometric decay from mutate_frac_start at 0 to mutate_frac_end at budget."""
    if cfg.budget == 0:
        return cfg.mutate_frac_start
    t = min(max(iteration, 0), cfg.budget) / cfg.budget
    return cfg.mutate_frac_start * (cfg.mutate_frac_end / cfg.mutate_frac_start) ** t


def blur_phase(e: PhaseElement, sigma: float) -> PhaseElement:
    """Wrap-aware Gaussian blur: smooth cos and sin separately, take the argument."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return e
    c = gaussian_filter(np.cos(e.phases), sigma)
    s = gaussian_filter(np.sin(e.phases), sigma)
    return PhaseElement(np.arctan2(s, c), e.macro_pitch)


def mutate(e: PhaseElement, frac: float, amp: float, rng: np.random.Generator) -> PhaseElement:
    """Shift round(frac * m^2) distinct macropixels by uniform(-amp, amp) * 2pi."""
    if not (0 <= frac <= 1 and 0 <= amp <= 1):
        raise ValueError("frac and amp must lie in [0, 1]")
    size = e.phases.size
    count = math.floor(frac * size + 0.5)
    if count == 0 or amp == 0:
        return e
    idx = rng.choice(size, size=count, replace=False)
    delta = rng.uniform(-amp * TWO_PI, amp * TWO_PI, size=count)
    phases = e.phases.ravel().copy()
    phases[idx] = wrap(phases[idx] + delta)
    return PhaseElement(phases.reshape(e.phases.shape), e.macro_pitch)


def rank_weights(size: int, tau: float) -> np.ndarray:
    if math.isinf(tau):
        w = np.ones(size)
    else:
        w = np.exp(-np.arange(size) / tau)
    return w / w.sum()


def select_parents(ranked: list, rng: np.random.Generator, tau: float) -> tuple:
    """Two distinct members, drawn with probability proportional to exp(-rank / tau)."""
    if len(ranked) < 2:
        raise ValueError("need at least two individuals to select parents")
    i, j = rng.choice(len(ranked), size=2, replace=False, p=rank_weights(len(ranked), tau))
    return ranked[i], ranked[j]


def _cross_element(a: PhaseElement, b: PhaseElement, rng: np.random.Generator) -> PhaseElement:
    if a.phases.shape != b.phases.shape:
        raise ValueError(f"element shapes differ: {a.phases.shape} vs {b.phases.shape}")
    axis = int(rng.integers(2))
    if rng.integers(2):
        a, b = b, a
    half = a.m // 2
    child = b.phases.copy()
    if axis == 0:
        child[:half, :] = a.phases[:half, :]
    else:
        child[:, :half] = a.phases[:, :half]
    return PhaseElement(child, a.macro_pitch)


def crossover(a, b, rng: np.random.Generator) -> tuple[PhaseElement, ...]:
    """Per element: a straight cut through the middle, one half from each parent.

    Accepts Individuals or element tuples; returns the child's elements.
    """
    ea = a.elements if isinstance(a, Individual) else tuple(a)
    eb = b.elements if isinstance(b, Individual) else tuple(b)
    if len(ea) != len(eb):
        raise ValueError("parents have different plane counts")
    return tuple(_cross_element(x, y, rng) for x, y in zip(ea, eb))


def random_element(cfg: GAConfig, rng: np.random.Generator) -> PhaseElement:
    e = PhaseElement(rng.uniform(0, TWO_PI, size=(cfg.m, cfg.m)), cfg.macro_pitch)
    return blur_phase(e, cfg.blur_sigma)


class Problem:
    """Sorter plus the input fields the genome is scored against."""

    def __init__(self, setup: SorterSetup, inputs: list[ComplexField], threads: int = 1):
        self.setup = setup
        self.inputs = inputs
        self.sorter = Sorter(setup, threads)

    def evaluate(self, elements) -> SortMetrics:
        return self.sorter.evaluate(list(elements), self.inputs)


def _rank(pop: list[Individual]) -> list[Individual]:
    return sorted(pop, key=lambda ind: -ind.fitness)


def init_population(cfg: GAConfig, rng: np.random.Generator, problem: Problem) -> list[Individual]:
    pop = []
    for _ in range(cfg.population):
        elements = tuple(random_element(cfg, rng) for _ in range(cfg.planes))
        metrics = problem.evaluate(elements)
        pop.append(Individual(elements, metrics, fitness(metrics, 0, cfg.switch_at)))
    return _rank(pop)


@dataclass(eq=False)
class GAState:
    cfg: GAConfig
    rng: np.random.Generator
    population: list[Individual]
    history: RunHistory
    iteration: int = 0

    @property
    def best(self) -> Individual:
        return self.population[0]


def start(cfg: GAConfig, problem: Problem) -> GAState:
    if problem.setup.planes != cfg.planes:
        raise ValueError("GA config and sorter setup disagree on the number of planes")
    rng = make_rng(cfg.seed)
    pop = init_population(cfg, rng, problem)
    history = RunHistory()
    history.record(pop[0])
    return GAState(cfg, rng, pop, history)


def rescore(state: GAState):
    it = state.iteration
    for ind in state.population:
        ind.fitness = fitness(ind.metrics, it, state.cfg.switch_at)
    state.population = _rank(state.population)


def step(state: GAState, problem: Problem) -> GAState:
    """One breed / evaluate / replace-worst iteration (mutates and returns ``state``)."""
    cfg = state.cfg
    t = state.iteration
    if t == cfg.switch_at and t > 0:
        rescore(state)
    rng = state.rng
    pa, pb = select_parents(state.population, rng, cfg.tau)
    frac = mutation_fraction(t, cfg)
    elements = []
    for e in crossover(pa, pb, rng):
        e = mutate(e, frac, cfg.mutate_amp, rng)
        if cfg.blur_children:
            e = blur_phase(e, cfg.blur_sigma)
        elements.append(e)
    metrics = problem.evaluate(elements)
    f = fitness(metrics, t, cfg.switch_at)
    if f > state.population[-1].fitness:
        state.population[-1] = Individual(tuple(elements), metrics, f)
        state.population = _rank(state.population)
        state.history.accepted += 1
    state.iteration = t + 1
    state.history.record(state.best)
    return state


def _stalled(state: GAState) -> bool:
    cfg = state.cfg
    w = cfg.early_stop_window
    t = state.iteration
    if not cfg.early_stop or t < w:
        return False
    if t - w < cfg.switch_at <= t:
        return False
    trace = state.history.best_fitness
    old, new = trace[t - w], trace[t]
    return new - old <= cfg.early_stop_rel * abs(old)


def save_checkpoint(state: GAState, path):
    pop = state.population
    arrays = {
        f"ind{i}_plane{k}": e.phases for i, ind in enumerate(pop) for k, e in enumerate(ind.elements)
    }
    arrays.update({f"ind{i}_raw": ind.metrics.raw for i, ind in enumerate(pop)})
    arrays.update({f"ind{i}_power": ind.metrics.input_power for i, ind in enumerate(pop)})
    meta = {
        "iteration": state.iteration,
        "config": asdict(state.cfg),
        "rng_algorithm": RNG_ALGORITHM,
        "rng_state": state.rng.bit_generator.state,
        "fitness": [ind.fitness for ind in pop],
        "history": {
            "best_fitness": state.history.best_fitness,
            "best_ability": state.history.best_ability,
            "best_e_b": state.history.best_e_b,
            "accepted": state.history.accepted,
        },
    }
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)
    tmp.replace(path)


def load_checkpoint(path) -> GAState:
    with np.load(path) as data:
        meta = json.loads(str(data["meta"]))
        arrays = {k: data[k] for k in data.files if k != "meta"}
    if meta["rng_algorithm"] != RNG_ALGORITHM:
        raise ValueError(f"checkpoint uses RNG {meta['rng_algorithm']}, expected {RNG_ALGORITHM}")
    cfg = GAConfig(**meta["config"])
    rng = make_rng(0)
    rng.bit_generator.state = meta["rng_state"]
    pop = []
    for i, f in enumerate(meta["fitness"]):
        elements = tuple(
            PhaseElement(arrays[f"ind{i}_plane{k}"], cfg.macro_pitch) for k in range(cfg.planes)
        )
        metrics = SortMetrics(arrays[f"ind{i}_raw"], arrays[f"ind{i}_power"])
        pop.append(Individual(elements, metrics, f))
    h = meta["history"]
    history = RunHistory(h["best_fitness"], h["best_ability"], h["best_e_b"], h["accepted"])
    return GAState(cfg, rng, pop, history, meta["iteration"])


def run(cfg: GAConfig, problem: Problem, state: GAState | None = None, checkpoint: str | Path | None = None,
        checkpoint_every: int = 0, progress_every: int = 0) -> tuple[Individual, RunHistory]:
    """Run up to ``cfg.budget`` iterations, optionally resuming from ``state``."""
    state = start(cfg, problem) if state is None else state
    while state.iteration < cfg.budget:
        step(state, problem)
        t = state.iteration
        if checkpoint and checkpoint_every and t % checkpoint_every == 0:
            save_checkpoint(state, checkpoint)
        if progress_every and t % progress_every == 0:
            b = state.best
            log.info("iter %d  fitness %.5g  ability %.4f  efficiency %.4f", t, b.fitness,
                     b.metrics.ability, b.metrics.efficiency)
        if _stalled(state):
            log.info("stopping at iteration %d: no significant improvement", t)
            break
    if checkpoint:
        save_checkpoint(state, checkpoint)
    state.history.population = state.population
    return state.best, state.history


def _island(args):
    cfg, setup, inputs = args
    best, history = run(cfg, Problem(setup, inputs))
    return best, history


def run_islands(cfg: GAConfig, setup: SorterSetup, inputs: list[ComplexField], replicas: int,
                workers: int | None = None) -> list[tuple[Individual, RunHistory]]:
    """Independent replicas with seeds spawned from cfg.seed, one process each."""
    seeds = np.random.SeedSequence(cfg.seed).generate_state(replicas, dtype=np.uint64)
    jobs = [(GAConfig(**{**asdict(cfg), "seed": int(s)}), setup, inputs) for s in seeds]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(_island, jobs))
