"""Self-describing checkpoint files.

A checkpoint is a single JSON document with a versioned header, the
model and training configs, the vocabulary, and flat base64-encoded
little-endian parameter arrays.
"""

from __future__ import annotations

import base64
import json
from typing import Optional, Tuple

import numpy as np
import torch

from .model import TranslatorConfig, TranslatorModel
from .train import TrainingConfig
from .vocab import TokenVocabulary

FORMAT = "ir2mol-translator-checkpoint"
VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64}


class CheckpointError(ValueError):
    pass


def save_checkpoint(
    path,
    model: TranslatorModel,
    vocab: TokenVocabulary,
    training: Optional[TrainingConfig] = None,
    metadata: Optional[dict] = None,
) -> None:
    params = {}
    for name, p in model.state_dict().items():
        arr = p.detach().cpu().numpy()
        dtype = str(arr.dtype)
        if dtype not in _DTYPES:
            raise CheckpointError(f"unsupported parameter dtype {dtype}")
        le = np.ascontiguousarray(arr, dtype=np.dtype(arr.dtype).newbyteorder("<"))
        params[name] = {
            "shape": list(arr.shape),
            "dtype": dtype,
            "data": base64.b64encode(le.tobytes()).decode("ascii"),
        }
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": model.config.to_dict(),
        "training": training.to_dict() if training else None,
        "vocab": list(vocab.tokens),
        "metadata": metadata or {},
        "params": params,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path) -> Tuple[TranslatorModel, TokenVocabulary, dict]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT:
        raise CheckpointError(f"{path}: not a translator checkpoint")
    if doc.get("version") != VERSION:
        raise CheckpointError(f"{path}: unsupported version {doc.get('version')}")
    config = TranslatorConfig.from_dict(doc["config"])
    vocab = TokenVocabulary(tuple(doc["vocab"]))
    model = TranslatorModel(config)
    state = {}
    for name, entry in doc["params"].items():
        dtype = _DTYPES[entry["dtype"]]
        arr = np.frombuffer(
            base64.b64decode(entry["data"]), dtype=np.dtype(dtype).newbyteorder("<")
        ).reshape(entry["shape"])
        state[name] = torch.as_tensor(arr.astype(dtype, copy=True))
    model.load_state_dict(state)
    model.eval()
    return model, vocab, doc.get("metadata", {})
