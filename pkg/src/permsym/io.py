"""JSON model/permutation/report files and CSV datasets.

Floats are written with ``repr``, which is the shortest string that parses
back to the same double, so model files round-trip bitwise.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .network import Activation, Dataset, InvalidInputError, LayerWeights, Network, validate
from .symmetry import NetworkPermutation, OrbitCount


class FormatError(InvalidInputError):
    """A file that does not parse or violates the document schema."""


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{what}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise FormatError(f"{where}: expected a number, got {value!r}")
    return float(value)


def model_to_dict(net: Network) -> dict:
    layers = []
    for l in net.layers:
        entry = {"weights": l.weights.tolist()}
        if l.bias is not None:
            entry["bias"] = l.bias.tolist()
        layers.append(entry)
    return {
        "hidden_activation": net.hidden_activation.value,
        "output_activation": net.output_activation.value,
        "layers": layers,
    }


def model_from_dict(doc) -> Network:
    if not isinstance(doc, dict):
        raise FormatError("model: top level must be an object")
    acts = {}
    for key in ("hidden_activation", "output_activation"):
        value = doc.get(key, "tanh" if key == "hidden_activation" else "identity")
        try:
            acts[key] = Activation(value)
        except ValueError:
            choices = ", ".join(a.value for a in Activation)
            raise FormatError(f"{key}: unknown activation {value!r} (choose from {choices})") from None
    raw_layers = doc.get("layers")
    if not isinstance(raw_layers, list) or not raw_layers:
        raise FormatError("layers: expected a non-empty array")
    layers = []
    for idx, raw in enumerate(raw_layers):
        where = f"layers[{idx}]"
        if not isinstance(raw, dict) or "weights" not in raw:
            raise FormatError(f"{where}: expected an object with 'weights'")
        rows = raw["weights"]
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise FormatError(f"{where}.weights: expected a non-empty array of rows")
        if len({len(r) for r in rows}) != 1 or not rows[0]:
            raise FormatError(f"{where}.weights: rows must be non-empty and of equal length")
        w = np.array([[_number(v, f"{where}.weights[{i}][{j}]") for j, v in enumerate(r)]
                      for i, r in enumerate(rows)])
        b = None
        if raw.get("bias") is not None:
            if not isinstance(raw["bias"], list):
                raise FormatError(f"{where}.bias: expected an array")
            b = np.array([_number(v, f"{where}.bias[{k}]") for k, v in enumerate(raw["bias"])])
        layers.append(LayerWeights(w, b))
    net = Network(tuple(layers), acts["hidden_activation"], acts["output_activation"])
    report = validate(net)
    if not report.ok:
        raise FormatError("; ".join(f"layers[{l - 1}]: {msg}" for l, msg in report.violations))
    return net


def dumps_model(net: Network) -> str:
    return json.dumps(model_to_dict(net), indent=2, allow_nan=False) + "\n"


def loads_model(text: str) -> Network:
    return model_from_dict(_load_json(text, "model"))


def save_model(net: Network, path) -> None:
    Path(path).write_text(dumps_model(net))


def load_model(path) -> Network:
    return loads_model(_read(path))


def permutation_to_dict(p: NetworkPermutation) -> dict:
    return {"per_layer": p.one_based()}


def permutation_from_dict(doc) -> NetworkPermutation:
    if not isinstance(doc, dict) or not isinstance(doc.get("per_layer"), list):
        raise FormatError("permutation: expected an object with a 'per_layer' array")
    for idx, layer in enumerate(doc["per_layer"]):
        if not isinstance(layer, list) or not all(
                isinstance(v, int) and not isinstance(v, bool) for v in layer):
            raise FormatError(f"per_layer[{idx}]: expected an array of integers")
    try:
        return NetworkPermutation.from_one_based(doc["per_layer"])
    except InvalidInputError as exc:
        raise FormatError(f"per_layer: {exc} (indices are one-based)") from None


def save_permutation(p: NetworkPermutation, path) -> None:
    Path(path).write_text(json.dumps(permutation_to_dict(p)) + "\n")


def load_permutation(path) -> NetworkPermutation:
    return permutation_from_dict(_load_json(_read(path), "permutation"))


def orbit_to_dict(count: OrbitCount) -> dict:
    return {"exact": str(count.exact), "digits": count.digits, "log10": count.log10}


def load_dataset(path, n_inputs: int, n_targets: int) -> Dataset:
    """Read ``n_inputs`` input columns followed by ``n_targets`` target columns per line."""
    inputs, targets = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if row[0].lstrip().startswith("#"):
                continue
            if len(row) != n_inputs + n_targets:
                raise FormatError(
                    f"{path}: line {lineno}: expected {n_inputs + n_targets} columns, got {len(row)}")
            try:
                values = [float(c) for c in row]
            except ValueError:
                raise FormatError(f"{path}: line {lineno}: non-numeric value") from None
            if not all(np.isfinite(values)):
                raise FormatError(f"{path}: line {lineno}: non-finite value")
            inputs.append(values[:n_inputs])
            targets.append(values[n_inputs:])
    if not inputs:
        raise FormatError(f"{path}: no samples")
    return Dataset(np.array(inputs), np.array(targets))


def save_dataset(data: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for x, y in zip(data.inputs, data.targets):
            writer.writerow([repr(float(v)) for v in np.concatenate([x, y])])


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
