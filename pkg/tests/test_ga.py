"""Genetic search checks.

Claims proven here:
  * Genome and config invariants are enforced.
  * mutate respects the [30, 100] bound over 10^4 rate-1 draws, clamps
    at the edges, and is the identity at rate 0.
  * crossover takes the rounded midpoint (30 x 100 -> 65), keeps the
    kind from a parent, and maps identical parents to themselves.
  * fitness is deterministic per seed and the weighted combination is
    consistent with its (1,0) / (0,1) projections.
  * search performs exactly population * generations evaluations, keeps
    every evaluated genome in bounds, has non-decreasing best-so-far
    fitness, reaches fitness 1.0 on a separable toy set, is
    bit-reproducible, matches its own parallel run, and names the
    offending genome when an evaluation fails.
"""

import json

import numpy as np
import pytest

from fallkit.datagen import Dataset, DatasetKind
from fallkit.ga import (
    GAConfig,
    Genome,
    crossover,
    fitness,
    mutate,
    search,
    write_search_log,
)
from fallkit.nn import CellKind


def toy_detection(n_per=12, W=10):
    angles = np.vstack([np.ones((n_per, W)), np.zeros((n_per, W))])
    labels = np.array([1] * n_per + [0] * n_per)
    sids = [f"fall-{i:06d}" for i in range(n_per)] + [f"sway-{i:06d}" for i in range(n_per)]
    return Dataset(kind=DatasetKind.DETECTION, angles=angles, source_ids=sids,
                   sensor_rate=100.0, W=W, labels=labels)


def test_genome_and_config_validation():
    with pytest.raises(ValueError):
        Genome(CellKind.GRU, 29)
    with pytest.raises(ValueError):
        Genome(CellKind.GRU, 101)
    with pytest.raises(ValueError):
        Genome("GRU", 50)
    with pytest.raises(ValueError):
        GAConfig(population=4, elitism=4)
    with pytest.raises(ValueError):
        GAConfig(mutation_rate=1.5)
    with pytest.raises(ValueError):
        GAConfig(weight_accuracy=0.7, weight_recall=0.7)
    with pytest.raises(ValueError):
        GAConfig(weight_accuracy=-0.1, weight_recall=1.1)


def test_mutate_identity_and_bounds():
    rng = np.random.default_rng(0)
    g = Genome(CellKind.LSTM, 55)
    for _ in range(50):
        assert mutate(g, 0.0, rng) == g

    rng = np.random.default_rng(1)
    seen_units = set()
    seen_kinds = set()
    for _ in range(10_000):
        m = mutate(Genome(CellKind.GRU, 65), 1.0, rng)
        assert 30 <= m.hidden_units <= 100
        assert m.kind in (CellKind.GRU, CellKind.LSTM, CellKind.BILSTM)
        seen_units.add(m.hidden_units)
        seen_kinds.add(m.kind)
    assert seen_units == set(range(55, 76))
    assert len(seen_kinds) == 3

    # top-edge clamping: positive shifts stick at 100
    rng = np.random.default_rng(2)
    tops = [mutate(Genome(CellKind.GRU, 100), 1.0, rng).hidden_units
            for _ in range(200)]
    assert max(tops) == 100 and min(tops) == 90


def test_crossover():
    rng = np.random.default_rng(3)
    a = Genome(CellKind.GRU, 30)
    b = Genome(CellKind.LSTM, 100)
    kinds = set()
    for _ in range(100):
        child = crossover(a, b, rng)
        assert child.hidden_units == 65
        kinds.add(child.kind)
    assert kinds == {CellKind.GRU, CellKind.LSTM}
    same = Genome(CellKind.BILSTM, 42)
    assert crossover(same, same, rng) == same
    assert crossover(Genome(CellKind.GRU, 30), Genome(CellKind.GRU, 31),
                     rng).hidden_units == 31


def test_fitness_deterministic_and_weighted():
    ds = toy_detection()
    g = Genome(CellKind.GRU, 30)
    f1 = fitness(g, ds, eval_epochs=3, seed=7)
    f2 = fitness(g, ds, eval_epochs=3, seed=7)
    assert f1 == f2
    f_acc = fitness(g, ds, 3, 7, weight_accuracy=1.0, weight_recall=0.0)
    f_rec = fitness(g, ds, 3, 7, weight_accuracy=0.0, weight_recall=1.0)
    assert f1 == pytest.approx(0.5 * f_acc + 0.5 * f_rec, abs=1e-15)
    # separable toy set trains to perfection even in 3 epochs
    assert fitness(g, ds, 10, 7) == 1.0


def test_search_budget_bounds_and_monotonicity():
    ds = toy_detection()
    cfg = GAConfig(population=4, generations=2, eval_epochs=3, seed=11)
    res = search(ds, cfg)
    evals = res.evaluations
    assert len(evals) == 8
    assert len(res.history) == 2 and all(len(g) == 4 for g in res.history)
    for rec in evals:
        assert 30 <= rec.genome.hidden_units <= 100
        assert rec.genome.kind in (CellKind.GRU, CellKind.LSTM, CellKind.BILSTM)
    # best-so-far across generations never decreases
    best = -np.inf
    gen_best = []
    for gen in res.history:
        best = max(best, max(r.fitness for r in gen))
        gen_best.append(best)
    assert all(b >= a for a, b in zip(gen_best, gen_best[1:]))
    assert res.best_fitness == max(r.fitness for r in evals)
    assert res.best_fitness == 1.0


def test_search_single_generation_is_random_search():
    ds = toy_detection()
    res = search(ds, GAConfig(population=3, generations=1, eval_epochs=2, seed=5))
    assert len(res.history) == 1
    assert len(res.evaluations) == 3


def test_search_deterministic_and_parallel_equivalent():
    ds = toy_detection()
    cfg = GAConfig(population=4, generations=2, eval_epochs=2, seed=13)
    r1 = search(ds, cfg)
    r2 = search(ds, cfg)
    assert r1.history == r2.history
    assert r1.best_genome == r2.best_genome
    r3 = search(ds, cfg, workers=2)
    assert r3.history == r1.history


def test_search_log_format(tmp_path):
    ds = toy_detection()
    res = search(ds, GAConfig(population=3, generations=2, eval_epochs=2, seed=1))
    path = tmp_path / "search.jsonl"
    write_search_log(res, path)
    lines = path.read_text().splitlines()
    assert len(lines) == 6
    for line, rec in zip(lines, res.evaluations):
        obj = json.loads(line)
        assert set(obj) == {"generation", "slot", "kind", "hidden_units",
                            "fitness", "accuracy", "recall"}
        assert obj["generation"] == rec.generation
        assert obj["slot"] == rec.slot
        assert obj["kind"] in ("GRU", "LSTM", "BiLSTM")
        assert obj["fitness"] == rec.fitness


def test_search_surfaces_evaluation_errors():
    n, W = 10, 10
    one_class = Dataset(kind=DatasetKind.DETECTION, angles=np.zeros((n, W)),
                        source_ids=[f"sway-{i:06d}" for i in range(n)],
                        sensor_rate=100.0, W=W, labels=np.zeros(n, dtype=int))
    cfg = GAConfig(population=2, generations=1, eval_epochs=1, seed=0)
    with pytest.raises(RuntimeError, match="generation 0, slot 0"):
        search(one_class, cfg)
