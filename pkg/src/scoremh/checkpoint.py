"""Portable JSON checkpoints for score and acceptance networks.

Parameters are stored as row-major float lists serialized with shortest
round-trip decimal representation, so a load reproduces bit-identical
forward outputs.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .errors import CheckpointError
from .nets import AcceptanceNet, ScoreNet

FORMAT_VERSION = 1


def _params_payload(net) -> dict:
    out = {}
    for name, p in net.parameters():
        out[name] = {"shape": list(p.value.shape), "data": p.value.ravel().tolist()}
    return out


def _load_params(net, payload: dict, path: str) -> None:
    for name, p in net.parameters():
        if name not in payload:
            raise CheckpointError(f"{path}: missing parameter {name!r}")
        entry = payload[name]
        arr = np.asarray(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if tuple(p.value.shape) != shape:
            raise CheckpointError(
                f"{path}: parameter {name!r} shape {shape} does not match architecture {p.value.shape}"
            )
        p.value[...] = arr.reshape(shape)


def save_score_net(path, net: ScoreNet, manifest: Optional[dict] = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "score_net",
        "architecture": {"dim": net.dim, "hidden": net.hidden, "activation": "softplus"},
        "params": _params_payload(net),
        "manifest": manifest or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def save_acceptance_net(path, net: AcceptanceNet, manifest: Optional[dict] = None) -> None:
    doc = {
        "format_version": FORMAT_VERSION,
        "kind": "acceptance_net",
        "architecture": {
            "dim": net.dim,
            "hidden": net.hidden,
            "n_blocks": net.n_blocks,
            "activation": "gelu",
        },
        "params": _params_payload(net),
        "manifest": manifest or {},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def _read(path) -> dict:
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise CheckpointError(f"{path}: unreadable checkpoint ({e})") from None
    if doc.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {doc.get('format_version')}")
    return doc


def load_score_net(path) -> tuple[ScoreNet, dict]:
    doc = _read(path)
    if doc.get("kind") != "score_net":
        raise CheckpointError(f"{path}: expected a score_net checkpoint, got {doc.get('kind')!r}")
    arch = doc["architecture"]
    net = ScoreNet(int(arch["dim"]), int(arch["hidden"]), seed=0)
    _load_params(net, doc["params"], str(path))
    return net, doc.get("manifest", {})


def load_acceptance_net(path) -> tuple[AcceptanceNet, dict]:
    doc = _read(path)
    if doc.get("kind") != "acceptance_net":
        raise CheckpointError(
            f"{path}: expected an acceptance_net checkpoint, got {doc.get('kind')!r}"
        )
    arch = doc["architecture"]
    net = AcceptanceNet(int(arch["dim"]), int(arch["hidden"]), int(arch["n_blocks"]), seed=0)
    _load_params(net, doc["params"], str(path))
    return net, doc.get("manifest", {})
