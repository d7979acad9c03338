"""Versioned JSON model files.

A model file self-describes everything needed to run the network it
holds: the architecture, the input conventions (window length W,
forecast horizon H, sensor rate, feature description) and a format
version.  Weights are stored as row-major nested lists of float64;
json round-trips Python floats through repr, so serialization is
bit-exact.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .nn import CellKind, HeadKind, LayerSpec, Network, NetworkSpec

FORMAT_VERSION = 1

_CELL_BY_NAME = {k.value: k for k in CellKind}
_HEAD_BY_NAME = {k.value: k for k in HeadKind}


class ModelFormatError(ValueError):
    """Model file is corrupt, mis-versioned, or mis-shaped."""


@dataclass
class LoadedModel:
    network: Network
    input_meta: dict
    provenance: dict | None = None


def spec_to_payload(spec):
    return {
        "input_dim": spec.input_dim,
        "layers": [
            {"kind": ls.kind.value, "hidden_units": ls.hidden_units}
            for ls in spec.layers
        ],
        "head": spec.head.value,
        "output_dim": spec.output_dim,
    }


def spec_from_payload(obj):
    if not isinstance(obj, dict):
        raise ModelFormatError("spec must be an object")
    try:
        layers = tuple(
            LayerSpec(_CELL_BY_NAME[ls["kind"]], int(ls["hidden_units"]))
            for ls in obj["layers"]
        )
        return NetworkSpec(
            input_dim=int(obj["input_dim"]),
            layers=layers,
            head=_HEAD_BY_NAME[obj["head"]],
            output_dim=int(obj.get("output_dim", 1)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"invalid spec: {exc}") from exc


def _check_input_meta(meta):
    if not isinstance(meta, dict):
        raise ModelFormatError("input_meta must be an object")
    for key in ("W", "H", "sensor_rate"):
        if key not in meta:
            raise ModelFormatError(f"input_meta missing {key!r}")
        if not isinstance(meta[key], (int, float)):
            raise ModelFormatError(f"input_meta[{key!r}] must be numeric")
    return meta


def to_payload(network, input_meta, provenance=None):
    _check_input_meta(input_meta)
    weights = {
        "layers": [
            {name: arr.tolist() for name, arr in layer.params().items()}
            for layer in network.layers
        ],
        "head": {name: arr.tolist() for name, arr in network.head.params().items()},
    }
    payload = {
        "format_version": FORMAT_VERSION,
        "spec": spec_to_payload(network.spec),
        "input_meta": dict(input_meta),
        "weights": weights,
    }
    if provenance is not None:
        payload["provenance"] = provenance
    return payload


def _assign_group(target_params, group, where):
    if not isinstance(group, dict):
        raise ModelFormatError(f"{where}: weight group must be an object")
    if set(group) != set(target_params):
        missing = set(target_params) - set(group)
        extra = set(group) - set(target_params)
        raise ModelFormatError(f"{where}: weight keys mismatch "
                               f"(missing {sorted(missing)}, unexpected {sorted(extra)})")
    for name, value in group.items():
        arr = np.asarray(value, dtype=float)
        want = target_params[name].shape
        if arr.shape != want:
            raise ModelFormatError(f"{where}.{name}: expected shape {want}, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ModelFormatError(f"{where}.{name}: non-finite entries")
        target_params[name][...] = arr


def from_payload(payload):
    if not isinstance(payload, dict):
        raise ModelFormatError("model payload must be an object")
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format_version {version!r}")
    spec = spec_from_payload(payload.get("spec"))
    meta = _check_input_meta(payload.get("input_meta"))
    weights = payload.get("weights")
    if not isinstance(weights, dict) or set(weights) != {"layers", "head"}:
        raise ModelFormatError("weights must hold exactly 'layers' and 'head'")

    network = Network(spec)
    groups = weights["layers"]
    if not isinstance(groups, list) or len(groups) != len(network.layers):
        raise ModelFormatError(f"expected {len(network.layers)} layer weight groups")
    for k, (layer, group) in enumerate(zip(network.layers, groups)):
        _assign_group(layer.params(), group, f"layers[{k}]")
    _assign_group(network.head.params(), weights["head"], "head")
    return LoadedModel(network=network, input_meta=meta,
                       provenance=payload.get("provenance"))


def save_model(network, path, input_meta, provenance=None):
    payload = to_payload(network, input_meta, provenance)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path):
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    return from_payload(payload)
