"""Plain CSV/JSON writers. Floats are printed with 17 significant digits."""
from __future__ import annotations

import csv
import json
import math
import os
from typing import Any, Iterable, Sequence

import numpy as np

from .panel import format_float


def _encode(obj: Any, indent: str, level: int) -> str:
    pad = indent * (level + 1)
    end = indent * level
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return format_float(x) if math.isfinite(x) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, 0)}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_encode(v, indent, 0) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    return _encode(obj, "  ", 0) + "\n"


def write_json(path: str | os.PathLike, obj: Any) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        x = float(v)
        return format_float(x) if math.isfinite(x) else "nan"
    return str(v)


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def write_matrix(path: str | os.PathLike, labels: Sequence[str], values: np.ndarray) -> None:
    """Labeled square matrix: header ``id,<label_1>,...``; one row per label."""
    write_csv(path, ["id", *labels], ([lab, *values[i]] for i, lab in enumerate(labels)))


def weights_json(w: np.ndarray) -> str:
    return "[" + ",".join(format_float(float(x)) for x in w) + "]"


def frontier_rows(points, realized=None):
    for k, p in enumerate(points):
        r = None if realized is None else float(realized[k])
        yield (p.target_return, p.risk, r, weights_json(p.weights.weights))


FRONTIER_HEADER = ("target_return", "predicted_risk", "realized_risk", "weights_json")
