"""JSON ingestion for models, distortion tables and objective tables.

Model files look like::

    {"alphabets": {"U": 2, "S": 2, "X": 3, "Y": 3},
     "P_us": [[...], [...]],          # [u][s]
     "T": [...],                      # [x][s][y]
     "Q_x_us": [...],                 # optional, [u][s][x]
     "P_usz": [...],                  # optional, [u][s][z]
     "Q_w_usx": [...]}                # optional aux kernel, [u][s][x][w]
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import ChannelLaw, InputPolicy, ModelError, SourceStateModel, check_alphabets


class ParseError(ValueError):
    pass


@dataclass
class ModelFile:
    source: SourceStateModel
    channel: ChannelLaw
    policy: Optional[InputPolicy] = None
    aux: Optional[np.ndarray] = None


def _load_json(text: str, what: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{what}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


def _array(doc: dict, key: str, ndim: int, what: str) -> np.ndarray:
    if key not in doc:
        raise ParseError(f"{what}: missing field {key!r}")
    try:
        a = np.asarray(doc[key], dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{what}: field {key!r} is not a rectangular numeric array") from None
    if a.ndim != ndim:
        raise ParseError(f"{what}: field {key!r} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{what}: field {key!r} has non-finite entries")
    return a


def model_from_dict(doc, what: str = "model") -> ModelFile:
    if not isinstance(doc, dict):
        raise ParseError(f"{what}: top level must be an object")
    P_us = _array(doc, "P_us", 2, what)
    T = _array(doc, "T", 3, what)
    P_usz = _array(doc, "P_usz", 3, what) if "P_usz" in doc else None
    Q = _array(doc, "Q_x_us", 3, what) if "Q_x_us" in doc else None
    aux = _array(doc, "Q_w_usx", 4, what) if "Q_w_usx" in doc else None

    sizes = doc.get("alphabets")
    if sizes is not None:
        if not isinstance(sizes, dict):
            raise ParseError(f"{what}: field 'alphabets' must be an object")
        actual = {"U": P_us.shape[0], "S": P_us.shape[1], "X": T.shape[0], "Y": T.shape[2]}
        for k, v in sizes.items():
            if k in actual and v != actual[k]:
                raise ParseError(f"{what}: alphabets.{k} = {v} but the tables imply {actual[k]}")
    try:
        src = SourceStateModel.from_array(P_us, P_usz)
        ch = ChannelLaw.from_array(T)
        pol = InputPolicy.from_array(Q) if Q is not None else None
        check_alphabets(src, ch, pol)
    except (ModelError, ValueError) as e:
        raise ParseError(f"{what}: {e}") from None
    if aux is not None:
        if aux.shape[:3] != (src.U.size, src.S.size, ch.X.size):
            raise ParseError(f"{what}: field 'Q_w_usx' has shape {aux.shape}, "
                             f"expected ({src.U.size}, {src.S.size}, {ch.X.size}, |W|)")
        if np.any(aux < 0) or not np.allclose(aux.sum(axis=-1), 1.0, atol=1e-9):
            raise ParseError(f"{what}: field 'Q_w_usx' rows must be probability vectors")
    return ModelFile(src, ch, pol, aux)


def model_to_dict(m: ModelFile) -> dict:
    P = np.asarray(m.source.P_us.table)
    T = np.asarray(m.channel.T.table)
    doc = {"alphabets": {"U": P.shape[0], "S": P.shape[1], "X": T.shape[0], "Y": T.shape[2]},
           "P_us": P.tolist(), "T": T.tolist()}
    if m.policy is not None:
        doc["Q_x_us"] = np.asarray(m.policy.Q.table).tolist()
    if m.source.P_usz is not None:
        doc["P_usz"] = np.asarray(m.source.P_usz.table).tolist()
    if m.aux is not None:
        doc["Q_w_usx"] = np.asarray(m.aux).tolist()
    return doc


def load_model(path: str) -> ModelFile:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(_load_json(fh.read(), path), path)


def load_policy(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        doc = _load_json(fh.read(), path)
    if isinstance(doc, dict):
        return _array(doc, "Q_x_us", 3, path)
    return _array({"Q_x_us": doc}, "Q_x_us", 3, path)


def load_distortion(path: str, nu: int, nx: int) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        doc = _load_json(fh.read(), path)
    d = _array(doc if isinstance(doc, dict) else {"d": doc}, "d", 2, path)
    if d.shape != (nu, nx):
        raise ParseError(f"{path}: field 'd' has shape {d.shape}, expected ({nu}, {nx})")
    if np.any(d < 0):
        raise ParseError(f"{path}: field 'd' must be nonnegative")
    return d


def load_objective(path: str, shape: tuple) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        doc = _load_json(fh.read(), path)
    nu = _array(doc if isinstance(doc, dict) else {"nu": doc}, "nu", 4, path)
    if nu.shape != tuple(shape):
        raise ParseError(f"{path}: field 'nu' has shape {nu.shape}, expected {tuple(shape)}")
    return nu
