"""JSON checkpoint files (format tag ``bpnmf-ckpt-1``).

One document holds the hyperparameters, dimensions, iteration count, RNG
seed and named arrays stored as flat row-major lists with their shape.
Floats are written with ``repr`` precision, so arrays round-trip
bit-exactly, and keys are sorted so equal states give equal bytes.

Kinds in use: ``ssmf`` (six variational arrays, plus the final mask
``S``), ``gibbs`` (``W``, ``H``, ``S``, ``pi``), ``data`` (``X``) and
``truth`` (``W``, ``H``, ``S``, ``pi``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .model import Hyperparams, VariationalParams

FORMAT = "bpnmf-ckpt-1"


@dataclass
class Checkpoint:
    kind: str
    arrays: dict
    hyperparams: Hyperparams | None = None
    iteration: int = 0
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def dims(self) -> dict:
        dims = {}
        for name, arr in self.arrays.items():
            if name in ("X", "W", "nuW"):
                dims["F"] = int(arr.shape[0])
            if name in ("X", "H", "nuH", "S"):
                dims["T"] = int(arr.shape[1])
            if name in ("W", "nuW"):
                dims["K"] = int(arr.shape[1])
        return dims


def _encode(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    if arr.dtype.kind in "iub":
        return {"dtype": "int64", "shape": list(arr.shape), "data": [int(v) for v in arr.ravel()]}
    return {"dtype": "float64", "shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}


def _decode(name: str, obj) -> np.ndarray:
    try:
        dtype = {"int64": np.int64, "float64": np.float64}[obj["dtype"]]
        shape = tuple(int(s) for s in obj["shape"])
        return np.array(obj["data"], dtype=dtype).reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError("format-mismatch", f"array {name!r} is malformed: {exc}") from exc


def dumps(ckpt: Checkpoint) -> str:
    doc = {
        "format": FORMAT,
        "kind": ckpt.kind,
        "hyperparams": ckpt.hyperparams.to_dict() if ckpt.hyperparams else None,
        "dims": ckpt.dims,
        "iteration": int(ckpt.iteration),
        "seed": None if ckpt.seed is None else int(ckpt.seed),
        "meta": ckpt.meta,
        "arrays": {name: _encode(arr) for name, arr in ckpt.arrays.items()},
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def loads(text: str) -> Checkpoint:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError("format-mismatch", f"not a JSON document: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise FormatError("format-mismatch", f"expected format {FORMAT!r}")
    hp = doc.get("hyperparams")
    return Checkpoint(
        kind=doc.get("kind", ""),
        arrays={name: _decode(name, obj) for name, obj in doc.get("arrays", {}).items()},
        hyperparams=Hyperparams(**hp) if hp else None,
        iteration=int(doc.get("iteration", 0)),
        seed=doc.get("seed"),
        meta=doc.get("meta") or {},
    )


def save(path, ckpt: Checkpoint) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(dumps(ckpt))
    os.replace(tmp, path)


def load(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def require(ckpt: Checkpoint, kind: str | tuple, names) -> None:
    kinds = (kind,) if isinstance(kind, str) else kind
    if ckpt.kind not in kinds:
        raise FormatError("format-mismatch", f"expected a {'/'.join(kinds)} checkpoint, got {ckpt.kind!r}")
    missing = [n for n in names if n not in ckpt.arrays]
    if missing:
        raise FormatError("format-mismatch", f"checkpoint lacks arrays {missing}")


def variational_checkpoint(q: VariationalParams, h: Hyperparams, iteration: int, seed: int,
                           mask=None, meta=None) -> Checkpoint:
    arrays = dict(q.as_dict())
    if mask is not None:
        arrays["S"] = np.asarray(mask, dtype=np.int64)
    return Checkpoint("ssmf", arrays, h, iteration, seed, meta or {})


def to_variational(ckpt: Checkpoint) -> VariationalParams:
    require(ckpt, "ssmf", VariationalParams.ARRAYS)
    return VariationalParams(**{n: ckpt.arrays[n] for n in VariationalParams.ARRAYS})


def posterior_factors(ckpt: Checkpoint):
    """``(W, H * S, pi)`` point estimates used for reconstruction and diagnostics.

    SSMF checkpoints give posterior means with the stored final mask;
    Gibbs checkpoints give the retained sample.
    """
    if ckpt.kind == "ssmf":
        q = to_variational(ckpt)
        S = ckpt.arrays.get("S")
        if S is None:
            raise FormatError("format-mismatch", "SSMF checkpoint has no final mask")
        return q.mean_W(), q.mean_H() * S, q.mean_pi()
    require(ckpt, ("gibbs", "truth"), ("W", "H", "S", "pi"))
    a = ckpt.arrays
    return a["W"], a["H"] * a["S"], a["pi"]
