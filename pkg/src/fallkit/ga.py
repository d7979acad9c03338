"""Genetic search over single-hidden-layer recurrent architectures.

The genome is (cell kind, hidden units in [30, 100]).  Each candidate
is trained from scratch for a short budget and scored on its validation
split as weight_accuracy * accuracy + weight_recall * recall.  Every
generation evaluates the full population (elites included), so the
total evaluation count is exactly population * generations.

Determinism: the search seed drives one generator for the genetic
operators, while each candidate's training seed derives from
(search seed, generation, slot) via SeedSequence spawn keys.  Parallel
evaluation therefore cannot change any result, only its wall time.
"""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import CellKind, HeadKind, LayerSpec, NetworkSpec
from .training import TrainConfig, evaluate, train

_KINDS = (CellKind.GRU, CellKind.LSTM, CellKind.BILSTM)

HIDDEN_MIN = 30
HIDDEN_MAX = 100


@dataclass(frozen=True)
class Genome:
    kind: CellKind
    hidden_units: int

    def __post_init__(self):
        if not isinstance(self.kind, CellKind):
            raise ValueError(f"kind must be a CellKind, got {self.kind!r}")
        if not HIDDEN_MIN <= int(self.hidden_units) <= HIDDEN_MAX:
            raise ValueError(
                f"hidden_units must lie in [{HIDDEN_MIN}, {HIDDEN_MAX}], "
                f"got {self.hidden_units}")
        object.__setattr__(self, "hidden_units", int(self.hidden_units))

    def to_spec(self):
        return NetworkSpec(1, (LayerSpec(self.kind, self.hidden_units),),
                           HeadKind.SIGMOID)


@dataclass(frozen=True)
class GAConfig:
    population: int = 10
    generations: int = 10
    eval_epochs: int = 100
    mutation_rate: float = 0.3
    elitism: int = 1
    weight_accuracy: float = 0.5
    weight_recall: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.population < 1:
            raise ValueError("population must be >= 1")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.eval_epochs < 1:
            raise ValueError("eval_epochs must be >= 1")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must lie in [0, population)")
        if self.weight_accuracy < 0.0 or self.weight_recall < 0.0:
            raise ValueError("fitness weights must be non-negative")
        if abs(self.weight_accuracy + self.weight_recall - 1.0) > 1e-9:
            raise ValueError("fitness weights must sum to 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class EvalRecord:
    generation: int
    slot: int
    genome: Genome
    fitness: float
    accuracy: float
    recall: float


@dataclass
class SearchResult:
    best_genome: Genome
    best_fitness: float
    history: list  # history[g] is the list of EvalRecords of generation g

    @property
    def evaluations(self):
        return [rec for gen in self.history for rec in gen]


def _derived_seed(search_seed, generation, slot):
    ss = np.random.SeedSequence(search_seed, spawn_key=(generation, slot))
    return int(ss.generate_state(1, np.uint64)[0])


def _train_and_score(genome, dataset, eval_epochs, seed):
    cfg = TrainConfig(epochs=eval_epochs, seed=seed)
    result = train(dataset, genome.to_spec(), cfg)
    metrics = evaluate(result.network, dataset.subset(result.val_indices))
    return metrics.accuracy, metrics.recall


def fitness(genome, dataset, eval_epochs, seed,
            weight_accuracy=0.5, weight_recall=0.5):
    """Validation-split score of one candidate; deterministic per seed."""
    acc, rec = _train_and_score(genome, dataset, eval_epochs, seed)
    return weight_accuracy * acc + weight_recall * rec


def mutate(genome, rate, rng):
    """Independently resample the kind and perturb the width.

    Draw order is pinned: the kind coin first (resampling uniformly over
    all three kinds), then the width coin (shift by a uniform integer in
    [-10, 10], clamped to the legal range).
    """
    kind = genome.kind
    units = genome.hidden_units
    if rng.random() < rate:
        kind = _KINDS[rng.integers(0, len(_KINDS))]
    if rng.random() < rate:
        units += int(rng.integers(-10, 11))
        units = min(max(units, HIDDEN_MIN), HIDDEN_MAX)
    return Genome(kind, units)


def crossover(a, b, rng):
    """Kind from one parent uniformly, width at the rounded midpoint."""
    kind = a.kind if rng.integers(0, 2) == 0 else b.kind
    return Genome(kind, (a.hidden_units + b.hidden_units + 1) // 2)


def _tournament(records, rng):
    # k=2 with replacement; ties go to the first draw
    i, j = rng.integers(0, len(records), size=2)
    return int(i) if records[i].fitness >= records[j].fitness else int(j)


def _eval_task(args):
    genome, dataset, eval_epochs, seed = args
    return _train_and_score(genome, dataset, eval_epochs, seed)


def search(dataset, config, workers=1):
    """Run the full GA; exactly population * generations evaluations.

    Per generation: evaluate everyone, carry the elites over unchanged,
    and refill the remaining slots with mutated crossover children of
    tournament-selected parents.
    """
    rng = np.random.default_rng(config.seed)
    population = [
        Genome(_KINDS[rng.integers(0, len(_KINDS))],
               int(rng.integers(HIDDEN_MIN, HIDDEN_MAX + 1)))
        for _ in range(config.population)
    ]

    history = []
    best_rec = None
    for gen in range(config.generations):
        tasks = [
            (population[slot], dataset, config.eval_epochs,
             _derived_seed(config.seed, gen, slot))
            for slot in range(config.population)
        ]
        scores = [None] * config.population
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_eval_task, t) for t in tasks]
                for slot, fut in enumerate(futures):
                    try:
                        scores[slot] = fut.result()
                    except Exception as exc:
                        g = population[slot]
                        raise RuntimeError(
                            f"fitness evaluation failed at generation {gen}, "
                            f"slot {slot} (kind={g.kind.value}, "
                            f"hidden_units={g.hidden_units}): {exc}") from exc
        else:
            for slot, task in enumerate(tasks):
                try:
                    scores[slot] = _eval_task(task)
                except Exception as exc:
                    g = population[slot]
                    raise RuntimeError(
                        f"fitness evaluation failed at generation {gen}, "
                        f"slot {slot} (kind={g.kind.value}, "
                        f"hidden_units={g.hidden_units}): {exc}") from exc

        records = []
        for slot, (acc, rec) in enumerate(scores):
            fit = config.weight_accuracy * acc + config.weight_recall * rec
            record = EvalRecord(generation=gen, slot=slot,
                                genome=population[slot], fitness=fit,
                                accuracy=acc, recall=rec)
            records.append(record)
            if best_rec is None or record.fitness > best_rec.fitness:
                best_rec = record
        history.append(records)

        if gen == config.generations - 1:
            break
        order = sorted(range(config.population),
                       key=lambda s: (-records[s].fitness, s))
        next_pop = [population[s] for s in order[:config.elitism]]
        while len(next_pop) < config.population:
            p1 = _tournament(records, rng)
            p2 = _tournament(records, rng)
            child = crossover(population[p1], population[p2], rng)
            next_pop.append(mutate(child, config.mutation_rate, rng))
        population = next_pop

    return SearchResult(best_genome=best_rec.genome,
                        best_fitness=best_rec.fitness, history=history)


def write_search_log(result, path):
    """One JSON line per evaluation, in evaluation order."""
    with open(Path(path), "w") as fh:
        for rec in result.evaluations:
            fh.write(json.dumps({
                "generation": rec.generation,
                "slot": rec.slot,
                "kind": rec.genome.kind.value,
                "hidden_units": rec.genome.hidden_units,
                "fitness": rec.fitness,
                "accuracy": rec.accuracy,
                "recall": rec.recall,
            }) + "\n")
