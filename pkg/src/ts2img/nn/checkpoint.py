"""Checkpoint layout: a JSON manifest plus one TSIM blob per array.

A checkpoint directory holds manifest.json next to a params/ directory
with one tensor file for every parameter and state array. The manifest
records the layer specs (kind, name, trainable flag, constructor
arguments), the input shape, the seed, the format version, and free-form
provenance. Loading rebuilds the layers, then installs every blob,
validating each shape against the freshly built architecture.
"""

from __future__ import annotations

import json
import subprocess
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import FormatError, ShapeError
from ..imageio import read_tensor, write_tensor
from .layers import LAYER_KINDS
from .model import FusionModel, Model

MANIFEST_NAME = "manifest.json"
PARAMS_DIR = "params"
FORMAT_VERSION = 1


def build_provenance(dataset_id: str = "", seed: int | None = None) -> dict:
    """Source dataset id, seed, and a build identifier for the manifest."""
    return {
        "dataset_id": dataset_id,
        "seed": seed,
        "build": _describe_build(),
    }


def _describe_build() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True,
            text=True,
            timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    return f"ts2img-{__version__}"


def _layer_entry(layer) -> dict:
    return {
        "kind": layer.kind,
        "name": layer.name,
        "trainable": bool(layer.trainable),
        "config": layer.config(),
    }


def _model_section(model: Model) -> dict:
    return {
        "input_shape": list(model.input_shape),
        "seed": model.seed,
        "dtype": model.dtype.name,
        "layers": [_layer_entry(layer) for layer in model.layers],
    }


def _save_arrays(model: Model, params_dir: Path, prefix: str = "") -> dict:
    entries = {}
    for name, value in model.parameters().items():
        filename = f"{prefix}{name}.tsim"
        write_tensor(value, params_dir / filename)
        entries[f"{prefix}{name}"] = {
            "file": filename,
            "dims": list(np.asarray(value).shape),
        }
    return entries


def save_checkpoint(model, directory, provenance: dict | None = None) -> Path:
    """Write a model (sequential or fusion) to a checkpoint directory."""
    directory = Path(directory)
    params_dir = directory / PARAMS_DIR
    params_dir.mkdir(parents=True, exist_ok=True)
    manifest: dict = {
        "format_version": FORMAT_VERSION,
        "provenance": provenance or build_provenance(),
    }
    if isinstance(model, FusionModel):
        manifest["model_kind"] = "fusion"
        manifest["branches"] = {
            "image": _model_section(model.branch_image),
            "raw": _model_section(model.branch_raw),
        }
        manifest["head"] = _model_section(model.head)
        manifest["seed"] = model.seed
        entries = {}
        entries.update(_save_arrays(model.branch_image, params_dir, "image."))
        entries.update(_save_arrays(model.branch_raw, params_dir, "raw."))
        entries.update(_save_arrays(model.head, params_dir, "head."))
    else:
        manifest["model_kind"] = "sequential"
        manifest["model"] = _model_section(model)
        entries = _save_arrays(model, params_dir)
    manifest["params"] = entries
    with open(directory / MANIFEST_NAME, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return directory


def _build_layers(section: dict):
    layers = []
    for entry in section["layers"]:
        kind = entry["kind"]
        if kind not in LAYER_KINDS:
            raise FormatError(f"manifest names unknown layer kind {kind!r}")
        layer = LAYER_KINDS[kind](**entry["config"], name=entry["name"])
        layer.trainable = bool(entry["trainable"])
        layers.append(layer)
    return layers


def _build_model(section: dict) -> Model:
    return Model(
        _build_layers(section),
        tuple(section["input_shape"]),
        seed=int(section["seed"]),
        dtype=np.dtype(section["dtype"]),
    )


def _load_arrays(model, entries: dict, params_dir: Path, prefix: str = "") -> None:
    expected = model.parameters()
    for name, current in expected.items():
        key = f"{prefix}{name}"
        if key not in entries:
            raise FormatError(f"manifest is missing parameter entry {key!r}")
        entry = entries[key]
        value = read_tensor(params_dir / entry["file"])
        if tuple(entry["dims"]) != tuple(value.shape):
            raise ShapeError(
                f"parameter {key!r}: stored dims {tuple(value.shape)} do not match "
                f"manifest dims {tuple(entry['dims'])}"
            )
        if tuple(value.shape) != tuple(np.asarray(current).shape):
            raise ShapeError(
                f"parameter {key!r}: stored shape {tuple(value.shape)} does not match "
                f"architecture shape {tuple(np.asarray(current).shape)}"
            )
        model.set_parameter(name, value)


def load_manifest(directory) -> dict:
    path = Path(directory) / MANIFEST_NAME
    if not path.is_file():
        raise FormatError(f"no {MANIFEST_NAME} in {directory}")
    with open(path) as f:
        try:
            manifest = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError(f"manifest is not valid JSON: {e}") from None
    version = manifest.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint format version {version!r}")
    return manifest


def load_checkpoint(directory):
    """Rebuild a model from a checkpoint directory, validating every shape."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    params_dir = directory / PARAMS_DIR
    entries = manifest["params"]
    if manifest.get("model_kind") == "fusion":
        branch_image = _build_model(manifest["branches"]["image"])
        branch_raw = _build_model(manifest["branches"]["raw"])
        head_section = manifest["head"]
        head_layers = _build_layers(head_section)
        fused = FusionModel(
            branch_image, branch_raw, head_layers, seed=int(manifest["seed"])
        )
        _load_arrays(branch_image, entries, params_dir, "image.")
        _load_arrays(branch_raw, entries, params_dir, "raw.")
        _load_arrays(fused.head, entries, params_dir, "head.")
        return fused
    model = _build_model(manifest["model"])
    _load_arrays(model, entries, params_dir)
    return model
