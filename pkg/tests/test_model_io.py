"""Model file round-trip and rejection checks."""

import json

import numpy as np
import pytest

from fallkit.model_io import (
    FORMAT_VERSION,
    ModelFormatError,
    from_payload,
    load_model,
    save_model,
    to_payload,
)
from fallkit.nn import CellKind, HeadKind, LayerSpec, NetworkSpec, init_weights

META = {"W": 100, "H": 0, "sensor_rate": 100.0, "feature": "tilt angle (rad)"}


def _nets():
    yield init_weights(
        NetworkSpec(1, (LayerSpec(CellKind.GRU, 7),), HeadKind.SIGMOID), 1)
    yield init_weights(
        NetworkSpec(1, (LayerSpec(CellKind.BILSTM, 4), LayerSpec(CellKind.LSTM, 3)),
                    HeadKind.LINEAR, output_dim=5), 2)


def test_round_trip_bit_exact(tmp_path):
    for k, net in enumerate(_nets()):
        path = tmp_path / f"m{k}.json"
        save_model(net, path, META)
        loaded = load_model(path)
        assert loaded.network.spec == net.spec
        assert loaded.input_meta == META
        assert loaded.provenance is None
        a = net.parameters()
        b = loaded.network.parameters()
        assert list(a) == list(b)
        for name in a:
            assert np.array_equal(a[name], b[name]), name


def test_round_trip_preserves_forward(tmp_path):
    net = init_weights(
        NetworkSpec(1, (LayerSpec(CellKind.GRU, 6),), HeadKind.SIGMOID), 9)
    save_model(net, tmp_path / "m.json", META)
    loaded = load_model(tmp_path / "m.json").network
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.normal(size=30)
        assert loaded.predict(x) == net.predict(x)


def test_provenance_carried(tmp_path):
    net = next(_nets())
    prov = {"dataset": "det.csv", "seed": 4}
    save_model(net, tmp_path / "m.json", META, provenance=prov)
    assert load_model(tmp_path / "m.json").provenance == prov


def test_rejections(tmp_path):
    net = next(_nets())
    payload = to_payload(net, META)

    bad = json.loads(json.dumps(payload))
    bad["format_version"] = 99
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    bad["weights"]["layers"][0]["W_z"] = [[0.1, 0.2]]
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    del bad["weights"]["layers"][0]["U_r"]
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    bad["weights"]["layers"][0]["W_extra"] = [[0.0]]
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    bad["weights"]["head"]["b"] = [float("nan")]
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    bad["spec"]["layers"][0]["kind"] = "Transformer"
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    bad = json.loads(json.dumps(payload))
    del bad["input_meta"]["sensor_rate"]
    with pytest.raises(ModelFormatError):
        from_payload(bad)

    (tmp_path / "garbage.json").write_text("{not json")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "garbage.json")


def test_format_version_constant():
    net = next(_nets())
    assert to_payload(net, META)["format_version"] == FORMAT_VERSION == 1
