"""Versioned binary persistence for fitted models.

Layout, all little-endian:

    magic "ALMD" | version u16 | kind u8-len + ascii | meta u32-len + JSON
    | array count u16 | per array: name u8-len + ascii, ndim u8,
      dims u32 each, float64 payload

The JSON block holds constructor arguments and class labels; arrays hold
every learned tensor.  Loading reconstructs a fitted estimator of the same
kind and refuses files with an unknown magic or a newer version.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from ..validation import SpecError
from .elm import ElmClassifier
from .lstm import LstmClassifier
from .pca import PrincipalComponents
from .scaling import SymmetricMinMaxScaler

MAGIC = b"ALMD"
VERSION = 1


def _encode_classes(classes):
    arr = np.asarray(classes)
    if arr.dtype.kind in ("U", "S"):
        return [str(c) for c in classes], "str"
    if arr.dtype.kind in ("i", "u"):
        return [int(c) for c in classes], "int"
    raise SpecError(f"cannot serialize class labels of dtype {arr.dtype}")


def _decode_classes(values, kind):
    return np.asarray(values) if kind == "str" \
        else np.asarray(values, dtype=np.int64)


def _pack(kind, meta, arrays):
    out = [MAGIC, struct.pack("<H", VERSION)]
    kb = kind.encode("ascii")
    out.append(struct.pack("<B", len(kb)))
    out.append(kb)
    mb = json.dumps(meta, sort_keys=True).encode("utf-8")
    out.append(struct.pack("<I", len(mb)))
    out.append(mb)
    out.append(struct.pack("<H", len(arrays)))
    for name, arr in arrays.items():
        nb = name.encode("ascii")
        a = np.ascontiguousarray(arr, dtype="<f8")
        out.append(struct.pack("<B", len(nb)))
        out.append(nb)
        out.append(struct.pack("<B", a.ndim))
        out.append(struct.pack(f"<{a.ndim}I", *a.shape) if a.ndim else b"")
        out.append(a.tobytes())
    return b"".join(out)


class _Reader:

    def __init__(self, blob):
        self.blob = blob
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.blob):
            raise SpecError("truncated model file")
        chunk = self.blob[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt):
        vals = struct.unpack(fmt, self.take(struct.calcsize(fmt)))
        return vals[0] if len(vals) == 1 else vals


def _unpack(blob):
    r = _Reader(blob)
    if r.take(4) != MAGIC:
        raise SpecError("not a model file: bad magic")
    version = r.unpack("<H")
    if version > VERSION:
        raise SpecError(f"unsupported model file version {version}")
    kind = r.take(r.unpack("<B")).decode("ascii")
    meta = json.loads(r.take(r.unpack("<I")).decode("utf-8"))
    arrays = {}
    for _ in range(r.unpack("<H")):
        name = r.take(r.unpack("<B")).decode("ascii")
        ndim = r.unpack("<B")
        dims = struct.unpack(f"<{ndim}I", r.take(4 * ndim))
        shape = tuple(dims)
        count = int(np.prod(shape)) if shape else 1
        data = np.frombuffer(r.take(8 * count), dtype="<f8")
        arrays[name] = data.reshape(shape).copy()
    return kind, meta, arrays


def save_model(path, model):
    """Write a fitted model; the format depends only on its learned state."""
    if isinstance(model, PrincipalComponents):
        kind = "pca"
        meta = {"n_components": model.n_components}
        arrays = {"mean": model.mean_, "components": model.components_,
                  "explained_variance": model.explained_variance_}
    elif isinstance(model, SymmetricMinMaxScaler):
        kind, meta = "minmax", {}
        arrays = {"min": model.min_, "max": model.max_}
    elif isinstance(model, ElmClassifier):
        kind = "elm"
        classes, ckind = _encode_classes(model.classes_)
        meta = {"hidden": model.hidden, "seed": model.seed,
                "ridge": model.ridge, "classes": classes,
                "classes_kind": ckind}
        arrays = {"input_weights": model.input_weights_,
                  "biases": model.biases_,
                  "output_weights": model.output_weights_}
    elif isinstance(model, LstmClassifier):
        kind = "lstm"
        classes, ckind = _encode_classes(model.classes_)
        meta = {"layers": list(model.layers), "lr": model.lr,
                "momentum": model.momentum, "epochs": model.epochs,
                "patience": model.patience, "clip_norm": model.clip_norm,
                "seed": model.seed,
                "validation_fraction": model.validation_fraction,
                "classes": classes, "classes_kind": ckind,
                "param_names": sorted(model._params)}
        arrays = {f"p_{k}": v for k, v in model._params.items()}
        arrays["loss_curve"] = np.asarray(model.loss_curve_)
    else:
        raise SpecError(f"cannot serialize model of type {type(model).__name__}")
    Path(path).write_bytes(_pack(kind, meta, arrays))


def load_model(path):
    kind, meta, arrays = _unpack(Path(path).read_bytes())
    if kind == "pca":
        model = PrincipalComponents(n_components=meta["n_components"])
        model.mean_ = arrays["mean"]
        model.components_ = arrays["components"]
        model.explained_variance_ = arrays["explained_variance"]
    elif kind == "minmax":
        model = SymmetricMinMaxScaler()
        model.min_ = arrays["min"]
        model.max_ = arrays["max"]
    elif kind == "elm":
        model = ElmClassifier(hidden=meta["hidden"], seed=meta["seed"],
                              ridge=meta["ridge"])
        model.classes_ = _decode_classes(meta["classes"], meta["classes_kind"])
        model.input_weights_ = arrays["input_weights"]
        model.biases_ = arrays["biases"]
        model.output_weights_ = arrays["output_weights"]
    elif kind == "lstm":
        model = LstmClassifier(
            layers=tuple(meta["layers"]), lr=meta["lr"],
            momentum=meta["momentum"], epochs=meta["epochs"],
            patience=meta["patience"], clip_norm=meta["clip_norm"],
            seed=meta["seed"],
            validation_fraction=meta["validation_fraction"],
        )
        model.classes_ = _decode_classes(meta["classes"], meta["classes_kind"])
        model._params = {k: arrays[f"p_{k}"] for k in meta["param_names"]}
        model.loss_curve_ = arrays["loss_curve"]
        model.n_epochs_ = model.loss_curve_.size
    else:
        raise SpecError(f"unknown model kind {kind!r}")
    return model


def save_loss_curve(path, curve):
    """Loss-per-epoch CSV with a one-line header."""
    curve = np.asarray(curve, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for k, v in enumerate(curve):
            fh.write(f"{k},{v:.10g}\n")
