"""Genetic algorithm over network genomes with loss-as-fitness.

Steady-state-free generational scheme: tournament selection of two,
one-point crossover, one-flip mutation, and an elitist merge that copies
the best slice of the old generation before truncating back to the
population size. Stops early after a fixed number of generations without
any improvement of the best loss.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Optional

from . import icn
from .icn import Genome, SpaceEvaluator
from .spaces import LabeledSpace


@dataclass
class GaConfig:
    population_size: int = 160
    max_generations: int = 800
    steady_stop: int = 50
    crossover_rate: float = 0.4
    mutation_rate: float = 1.0
    elite_fraction: float = 0.17
    selection_tournament_size: int = 2
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("crossover_rate", "mutation_rate", "elite_fraction"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {rate}")
        for name in ("population_size", "max_generations", "steady_stop"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.selection_tournament_size != 2:
            raise ValueError("only 2-way tournaments are supported")

    @property
    def elite_count(self) -> int:
        return math.ceil(self.elite_fraction * self.population_size)


@dataclass
class LearnResult:
    best_genome: Genome
    best_loss: float
    generations_run: int
    loss_trace: list[float]
    seed: int

    @property
    def best_deviation(self) -> float:
        """Training deviation of the best genome (loss minus its length penalty)."""
        return self.best_loss - icn.regularization(self.best_genome)


def random_genome(rng: random.Random) -> Genome:
    bits = tuple(1 if rng.random() < 0.5 else 0 for _ in range(icn.GENOME_LENGTH))
    return icn.repair(Genome(bits), rng)


def init_population(cfg: GaConfig, rng: random.Random) -> list[Genome]:
    return [random_genome(rng) for _ in range(cfg.population_size)]


def select(population: list[Genome], losses: list[float], rng: random.Random) -> Genome:
    """2-way tournament without replacement; ties split evenly."""
    if not population:
        raise ValueError("empty population")
    if len(population) == 1:
        return population[0]
    i, j = rng.sample(range(len(population)), 2)
    if losses[i] < losses[j]:
        return population[i]
    if losses[j] < losses[i]:
        return population[j]
    return population[rng.choice((i, j))]


def crossover(a: Genome, b: Genome, rng: random.Random) -> tuple[Genome, Genome]:
    """One-point crossover with the cut strictly inside the genome, then repair."""
    cut = rng.randint(1, icn.GENOME_LENGTH - 1)
    child1 = Genome(a.bits[:cut] + b.bits[cut:])
    child2 = Genome(b.bits[:cut] + a.bits[cut:])
    return icn.repair(child1, rng), icn.repair(child2, rng)


def mutate(g: Genome, rng: random.Random) -> Genome:
    """Flip exactly one uniformly chosen bit, then repair."""
    idx = rng.randrange(icn.GENOME_LENGTH)
    bits = list(g.bits)
    bits[idx] = 1 - bits[idx]
    return icn.repair(Genome(tuple(bits)), rng)


def replace(
    old_population: list[Genome],
    old_losses: list[float],
    offspring: list[Genome],
    offspring_losses: list[float],
    cfg: GaConfig,
) -> tuple[list[Genome], list[float]]:
    """Elitist merge: best elite_count of the old generation join the
    offspring, and the pool is truncated to the population size keeping
    the lowest losses with a stable tie order."""
    elite_order = sorted(range(len(old_population)), key=lambda i: old_losses[i])
    elites = elite_order[: cfg.elite_count]
    pool = [(old_losses[i], old_population[i]) for i in elites]
    pool += list(zip(offspring_losses, offspring))
    if len(pool) > cfg.population_size:
        order = sorted(range(len(pool)), key=lambda i: pool[i][0])
        pool = [pool[i] for i in sorted(order[: cfg.population_size])]
    losses = [entry[0] for entry in pool]
    genomes = [entry[1] for entry in pool]
    return genomes, losses


def learn(
    space: LabeledSpace,
    cfg: GaConfig,
    on_generation: Optional[Callable[[int, list[Genome], list[float]], None]] = None,
) -> LearnResult:
    """Evolve genomes against the space until the generation or steady-stop
    budget runs out; returns the best individual ever evaluated.

    on_generation, when given, is called with (generation, population,
    losses) after every replacement, and once for the initial population.
    """
    rng = random.Random(cfg.rng_seed)
    evaluator = SpaceEvaluator(space)
    cache: dict[tuple[int, ...], float] = {}

    def fitness(g: Genome) -> float:
        value = cache.get(g.bits)
        if value is None:
            value = evaluator.loss(g)
            cache[g.bits] = value
        return value

    # Among equal-loss individuals the best-ever slot prefers the
    # lexicographically greatest bit vector, i.e. the earliest catalog
    # operations; this canonicalizes ties such as comparisons that reduce
    # to the identity when p = 0. Ties never reset the steady-stop clock.
    def better(genome: Genome, loss_value: float) -> bool:
        if loss_value != best_loss:
            return loss_value < best_loss
        return genome.bits > best_genome.bits

    population = init_population(cfg, rng)
    losses = [fitness(g) for g in population]
    best_idx = min(
        range(len(population)),
        key=lambda i: (losses[i], tuple(-b for b in population[i].bits)),
    )
    best_genome, best_loss = population[best_idx], losses[best_idx]
    trace = [best_loss]
    if on_generation is not None:
        on_generation(0, population, losses)

    generations = 0
    stale = 0
    for gen in range(1, cfg.max_generations + 1):
        offspring: list[Genome] = []
        while len(offspring) < cfg.population_size:
            parent1 = select(population, losses, rng)
            parent2 = select(population, losses, rng)
            if rng.random() < cfg.crossover_rate:
                child1, child2 = crossover(parent1, parent2, rng)
            else:
                child1, child2 = parent1, parent2
            for child in (child1, child2):
                if rng.random() < cfg.mutation_rate:
                    child = mutate(child, rng)
                offspring.append(child)
        offspring = offspring[: cfg.population_size]
        offspring_losses = [fitness(g) for g in offspring]
        population, losses = replace(population, losses, offspring, offspring_losses, cfg)
        generations = gen
        gen_best = min(
            range(len(population)),
            key=lambda i: (losses[i], tuple(-b for b in population[i].bits)),
        )
        if losses[gen_best] < best_loss:
            best_genome, best_loss = population[gen_best], losses[gen_best]
            stale = 0
        else:
            if better(population[gen_best], losses[gen_best]):
                best_genome = population[gen_best]
            stale += 1
        trace.append(best_loss)
        if on_generation is not None:
            on_generation(gen, population, losses)
        if stale >= cfg.steady_stop:
            break

    return LearnResult(
        best_genome=best_genome,
        best_loss=best_loss,
        generations_run=generations,
        loss_trace=trace,
        seed=cfg.rng_seed,
    )


def _learn_worker(args) -> LearnResult:
    space, cfg = args
    return learn(space, cfg)


def learn_many(
    space: LabeledSpace, seeds: list[int], cfg: GaConfig, jobs: int = 1
) -> list[LearnResult]:
    """Independent seeded runs on one space; results follow seed order."""
    configs = [
        (space, GaConfig(**{**cfg.__dict__, "rng_seed": seed})) for seed in seeds
    ]
    if jobs > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_learn_worker, configs))
    return [_learn_worker(task) for task in configs]
