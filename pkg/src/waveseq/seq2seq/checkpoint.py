"""Checkpoint directories: binary parameters plus a key=value manifest.

Layout::

    <dir>/params.bin      ParamSet binary
    <dir>/manifest.txt    key=value lines, values JSON encoded
    <dir>/optimizer.npz   optional optimizer state
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np

from ..net.params import ParamSet
from ..optim import OptimizerState
from .model import model_from_config

PARAMS = "params.bin"
MANIFEST = "manifest.txt"
OPTIMIZER = "optimizer.npz"


@dataclass
class Checkpoint:
    model: Any
    manifest: Dict[str, Any] = field(default_factory=dict)
    optimizer_state: Optional[OptimizerState] = None


def _dump_manifest(entries: Dict[str, Any]) -> str:
    return "".join(f"{k}={json.dumps(v, sort_keys=True)}\n" for k, v in entries.items())


def _parse_manifest(text: str) -> Dict[str, Any]:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"manifest line {lineno}: expected key=value")
        out[key.strip()] = json.loads(value)
    return out


def save_checkpoint(directory, model, manifest: Optional[Dict[str, Any]] = None,
                    optimizer_state: Optional[OptimizerState] = None) -> Path:
    """Write ``model`` and its manifest; the model config is always recorded."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    entries = {"model": model.config(), "n_params": len(model.params)}
    entries.update(manifest or {})
    model.params.save(d / PARAMS)
    (d / MANIFEST).write_text(_dump_manifest(entries))
    if optimizer_state is not None:
        arrays = {"step": np.array(optimizer_state.step), "m": optimizer_state.m, "v": optimizer_state.v}
        if optimizer_state.v_max is not None:
            arrays["v_max"] = optimizer_state.v_max
        np.savez(d / OPTIMIZER, **arrays)
    return d


def load_checkpoint(directory) -> Checkpoint:
    d = Path(directory)
    manifest = _parse_manifest((d / MANIFEST).read_text())
    model = model_from_config(manifest["model"])
    params = ParamSet.load(d / PARAMS)
    if params.catalog != model.catalog:
        raise ValueError("parameter catalog does not match the manifest's model config")
    model.params = params
    state = None
    if (d / OPTIMIZER).exists():
        with np.load(d / OPTIMIZER) as z:
            state = OptimizerState(int(z["step"]), z["m"].copy(), z["v"].copy(),
                                   z["v_max"].copy() if "v_max" in z else None)
    return Checkpoint(model, manifest, state)
