"""Dataset and configuration (de)serialization.

Floats are written with ``repr``, which is the shortest decimal string that
round-trips to the same double, so CSV and JSON-lines files reproduce the
arrays bit-for-bit.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .core import Dataset, Provenance


def _fmt(v: float) -> str:
    return repr(float(v))


def write_dataset_csv(S: Dataset, path) -> None:
    header = [f"x_{j}" for j in range(S.d)] + ["y", "provenance"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(S.n):
            prov = Provenance.DIRTY.value if S.dirty[i] else Provenance.CLEAN.value
            writer.writerow([_fmt(v) for v in S.X[i]] + [int(S.y[i]), prov])


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[-2:] != ["y", "provenance"]:
            raise ValueError(f"{path}: header must end with y,provenance")
        d = len(header) - 2
        if header[:d] != [f"x_{j}" for j in range(d)]:
            raise ValueError(f"{path}: unexpected feature columns")
        X, y, dirty = [], [], []
        for row in reader:
            if not row:
                continue
            X.append([float(v) for v in row[:d]])
            y.append(int(row[d]))
            dirty.append(Provenance(row[d + 1]) is Provenance.DIRTY)
    return Dataset(np.array(X, dtype=float).reshape(-1, d), y, dirty, d=d)


def write_dataset_jsonl(S: Dataset, path) -> None:
    with open(path, "w") as fh:
        for i in range(S.n):
            prov = Provenance.DIRTY.value if S.dirty[i] else Provenance.CLEAN.value
            rec = {"x": [float(v) for v in S.X[i]], "y": int(S.y[i]), "prov": prov}
            fh.write(json.dumps(rec) + "\n")


def read_dataset_jsonl(path, d: int | None = None) -> Dataset:
    X, y, dirty = [], [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            X.append(rec["x"])
            y.append(rec["y"])
            dirty.append(Provenance(rec["prov"]) is Provenance.DIRTY)
    if not X and d is None:
        raise ValueError(f"{path}: empty file, dimension unknown")
    d = len(X[0]) if X else d
    return Dataset(np.array(X, dtype=float).reshape(-1, d), y, dirty, d=d)


def read_dataset(path) -> Dataset:
    path = Path(path)
    if path.suffix in (".jsonl", ".ndjson"):
        return read_dataset_jsonl(path)
    return read_dataset_csv(path)


def write_vector_csv(v, path, name: str = "q") -> None:
    with open(path, "w", newline="") as fh:
        fh.write(name + "\n")
        for val in np.asarray(v, dtype=float):
            fh.write(_fmt(val) + "\n")


def read_vector_csv(path) -> np.ndarray:
    with open(path) as fh:
        next(fh)
        return np.array([float(line) for line in fh if line.strip()])


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def json_default(o):
    """Encode numpy scalars and arrays as their plain Python counterparts."""
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"Object of type {type(o).__name__} is not JSON serializable")


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=json_default)
        fh.write("\n")
