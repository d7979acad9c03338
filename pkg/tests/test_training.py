"""Training loop, loss, optimizer and metric checks.

Claims proven here:
  * Loss values and gradients match hand values and finite differences.
  * Adam: zero gradient leaves weights unchanged; a constant gradient
    drives the per-step magnitude to lr * sign(g); identical seeds give
    identical runs.
  * train(): 0 epochs returns initial weights and empty history; a
    linearly separable toy set reaches accuracy 1.0; training loss is
    non-increasing at a small learning rate; runs are bit-reproducible;
    a one-class detection split is rejected.
  * evaluate(): metrics agree with an independently tallied confusion
    matrix, and the recall/precision conventions for empty denominators
    hold.
"""

import math

import numpy as np
import pytest

from fallkit.datagen import Dataset, DatasetKind
from fallkit.nn import CellKind, HeadKind, LayerSpec, NetworkSpec, init_weights
from fallkit.training import (
    Adam,
    TrainConfig,
    bce_loss,
    evaluate,
    mse_loss,
    stratified_split,
    train,
    write_history_csv,
)

GRU5 = NetworkSpec(1, (LayerSpec(CellKind.GRU, 5),), HeadKind.SIGMOID)


def toy_detection(n_per=20, W=20, hi=1.0, lo=0.0):
    angles = np.vstack([np.full((n_per, W), hi), np.full((n_per, W), lo)])
    labels = np.array([1] * n_per + [0] * n_per)
    sids = [f"fall-{i:06d}" for i in range(n_per)] + [f"sway-{i:06d}" for i in range(n_per)]
    return Dataset(kind=DatasetKind.DETECTION, angles=angles, source_ids=sids,
                   sensor_rate=100.0, W=W, labels=labels)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs=-1)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, adam_beta1=1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=1, validation_fraction=1.0)


def test_bce_values_and_gradient():
    loss, grad = bce_loss(0.5, 1)
    assert loss == pytest.approx(math.log(2.0), abs=1e-15)
    assert bce_loss(0.5, 0)[0] == pytest.approx(math.log(2.0), abs=1e-15)
    assert bce_loss(0.9, 1)[0] == pytest.approx(0.105360515657826, abs=1e-12)
    assert bce_loss(1.0 - 1e-12, 1)[0] < 2e-12
    # gradient vs central finite difference
    for p, y in [(0.3, 1), (0.7, 0), (0.5, 1)]:
        eps = 1e-7
        fd = (bce_loss(p + eps, y)[0] - bce_loss(p - eps, y)[0]) / (2 * eps)
        assert bce_loss(p, y)[1] == pytest.approx(fd, rel=1e-6)
    with pytest.raises(ValueError):
        bce_loss(1.0, 1)
    with pytest.raises(ValueError):
        bce_loss(0.0, 0)


def test_mse_values_and_gradient():
    a = np.array([0.1, 0.2, 0.3])
    assert mse_loss(a, a)[0] == 0.0
    loss, grad = mse_loss(a + 0.5, a)
    assert loss == pytest.approx(0.25, abs=1e-15)
    rng = np.random.default_rng(1)
    pred = rng.normal(size=6)
    target = rng.normal(size=6)
    loss, grad = mse_loss(pred, target)
    eps = 1e-6
    for k in range(6):
        bumped = pred.copy()
        bumped[k] += eps
        fd_hi = mse_loss(bumped, target)[0]
        bumped[k] -= 2 * eps
        fd = (fd_hi - mse_loss(bumped, target)[0]) / (2 * eps)
        assert grad[k] == pytest.approx(fd, rel=1e-8, abs=1e-12)
    with pytest.raises(ValueError):
        mse_loss(np.zeros(3), np.zeros(4))


def test_adam_zero_gradient_and_sign_limit():
    w = {"w": np.array([1.5, -2.0])}
    opt = Adam(w, learning_rate=1e-3)
    opt.step({"w": np.zeros(2)})
    assert np.array_equal(w["w"], [1.5, -2.0])

    w = {"w": np.array([0.0, 0.0])}
    opt = Adam(w, learning_rate=1e-3)
    g = np.array([3.0, -0.5])
    prev = w["w"].copy()
    for _ in range(500):
        prev = w["w"].copy()
        opt.step({"w": g})
    step = prev - w["w"]
    assert np.allclose(step, 1e-3 * np.sign(g), atol=1e-6)

    with pytest.raises(ValueError):
        opt.step({"wrong": g})


def test_stratified_split_balances_classes():
    labels = np.array([0] * 80 + [1] * 20)
    tr, va = stratified_split(labels, 0.2, np.random.default_rng(0))
    assert len(tr) == 80 and len(va) == 20
    assert np.sum(labels[va] == 1) == 4
    assert np.sum(labels[tr] == 1) == 16
    assert len(np.intersect1d(tr, va)) == 0


def test_zero_epochs_returns_initial_weights():
    ds = toy_detection()
    cfg = TrainConfig(epochs=0, seed=5)
    res = train(ds, GRU5, cfg)
    assert res.history == []
    # the weight draw is the first child of the config seed
    fresh = init_weights(GRU5, np.random.SeedSequence(5).spawn(3)[0])
    for name, arr in res.network.parameters().items():
        assert np.array_equal(arr, fresh.parameters()[name])


def test_toy_set_reaches_perfect_accuracy():
    ds = toy_detection()
    res = train(ds, GRU5, TrainConfig(epochs=20, batch_size=8, seed=0))
    assert res.history[-1].accuracy == 1.0
    m = evaluate(res.network, ds)
    assert m.accuracy == 1.0 and m.recall == 1.0 and m.precision == 1.0


def test_training_loss_non_increasing_at_small_lr():
    ds = toy_detection()
    res = train(ds, GRU5, TrainConfig(epochs=15, batch_size=8,
                                      learning_rate=1e-4, seed=1))
    losses = [h.loss for h in res.history]
    assert all(b <= a + 1e-3 for a, b in zip(losses, losses[1:]))


def test_training_deterministic():
    ds = toy_detection()
    cfg = TrainConfig(epochs=5, batch_size=8, seed=3)
    r1 = train(ds, GRU5, cfg)
    r2 = train(ds, GRU5, cfg)
    for name, arr in r1.network.parameters().items():
        assert np.array_equal(arr, r2.network.parameters()[name])
    assert r1.history == r2.history
    assert np.array_equal(r1.train_indices, r2.train_indices)


def test_single_class_rejected():
    n, W = 10, 20
    ds = Dataset(kind=DatasetKind.DETECTION, angles=np.zeros((n, W)),
                 source_ids=[f"sway-{i:06d}" for i in range(n)],
                 sensor_rate=100.0, W=W, labels=np.zeros(n, dtype=int))
    with pytest.raises(ValueError):
        train(ds, GRU5, TrainConfig(epochs=1, seed=0))


def test_forecast_training_reduces_loss():
    # constant-window inputs, target = input value everywhere
    rng = np.random.default_rng(2)
    vals = rng.uniform(-0.5, 0.5, size=60)
    angles = np.repeat(vals[:, None], 20, axis=1)
    targets = np.repeat(vals[:, None], 5, axis=1)
    ds = Dataset(kind=DatasetKind.FORECAST, angles=angles,
                 source_ids=[f"fall-{i:06d}" for i in range(60)],
                 sensor_rate=100.0, W=20, H=5, targets=targets)
    spec = NetworkSpec(1, (LayerSpec(CellKind.GRU, 8),), HeadKind.LINEAR, output_dim=5)
    res = train(ds, spec, TrainConfig(epochs=30, batch_size=8,
                                      learning_rate=1e-2, seed=4))
    assert res.history[-1].loss < 0.1 * res.history[0].loss
    m = evaluate(res.network, ds)
    assert m.accuracy is None and m.recall is None
    assert m.loss < 0.01


def test_metrics_match_independent_tally():
    ds = toy_detection(n_per=25, hi=0.8, lo=0.2)
    net = init_weights(GRU5, 8)
    m = evaluate(net, ds)
    p = np.array([net.predict(row) for row in ds.angles])
    tp = fp = tn = fn = 0
    for prob, label in zip(p, ds.labels):
        guess = 1 if prob > 0.5 else 0
        if guess == 1 and label == 1:
            tp += 1
        elif guess == 1 and label == 0:
            fp += 1
        elif guess == 0 and label == 0:
            tn += 1
        else:
            fn += 1
    assert m.accuracy == (tp + tn) / 50
    assert m.recall == (tp / (tp + fn) if tp + fn else 1.0)
    assert m.precision == (tp / (tp + fp) if tp + fp else 1.0)
    want_loss = float(np.mean([-math.log(q) if yy else -math.log(1 - q)
                               for q, yy in zip(p, ds.labels)]))
    assert m.loss == pytest.approx(want_loss, rel=1e-12)


def test_all_positive_predictor_conventions():
    ds = toy_detection(n_per=10)
    net = init_weights(GRU5, 0)
    for name, arr in net.parameters().items():
        arr[...] = 0.0
    net.set_parameter("head.b", np.array([0.01]))  # p just above 0.5 everywhere
    m = evaluate(net, ds)
    assert m.recall == 1.0
    assert m.accuracy == 0.5 and m.precision == 0.5


def test_history_csv(tmp_path):
    ds = toy_detection()
    res = train(ds, GRU5, TrainConfig(epochs=3, batch_size=8, seed=0))
    path = tmp_path / "hist.csv"
    write_history_csv(res.history, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,loss,val_loss,accuracy,recall,precision"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert int(first[0]) == 1
    assert float(first[1]) == res.history[0].loss

    # forecast history leaves the classification columns empty
    vals = np.random.default_rng(0).uniform(size=30)
    ds_f = Dataset(kind=DatasetKind.FORECAST,
                   angles=np.repeat(vals[:, None], 10, axis=1),
                   source_ids=[f"fall-{i:06d}" for i in range(30)],
                   sensor_rate=100.0, W=10, H=3,
                   targets=np.repeat(vals[:, None], 3, axis=1))
    spec = NetworkSpec(1, (LayerSpec(CellKind.GRU, 4),), HeadKind.LINEAR, output_dim=3)
    res_f = train(ds_f, spec, TrainConfig(epochs=2, batch_size=8, seed=0))
    write_history_csv(res_f.history, path)
    row = path.read_text().splitlines()[1]
    assert row.endswith(",,,")
