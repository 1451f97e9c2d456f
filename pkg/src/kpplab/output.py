"""Byte-stable CSV and JSON writers; floats use 17 significant digits."""
from __future__ import annotations

import json
import math
import os

import numpy as np

from .config import FORMAT_VERSION


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def header_line(config_hash: str) -> str:
    return f"# format_version={FORMAT_VERSION} config_sha256={config_hash}"


def write_csv(path, columns, rows, config_hash: str):
    lines = [header_line(config_hash), ",".join(columns)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _json_value(v, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format(v, ".17g")
    if isinstance(v, str):
        return _json_string(v)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{pad}{_json_string(str(k))}: {_json_value(x, indent, level + 1)}"
                 for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        if len(v) == 0:
            return "[]"
        items = [_json_value(x, indent, level + 1) for x in v]
        return "[" + ", ".join(items) + "]"
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _json_string(s: str) -> str:
    return json.dumps(s)


def dumps(obj, indent: int = 2) -> str:
    """JSON text with 17-digit floats; non-finite values as NaN/Infinity."""
    return _json_value(obj, indent, 0) + "\n"


def write_json(path, obj, config_hash: str):
    body = {"format_version": FORMAT_VERSION, "config_sha256": config_hash}
    body.update(obj)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(body))


def resolve_out_dir(cli_out: str | None, config_dir: str | None) -> str:
    """``--out`` first, then the config's ``output.dir``, then ``KPP_LAB_OUT``."""
    out = cli_out or config_dir or os.environ.get("KPP_LAB_OUT") or "kpplab_out"
    os.makedirs(out, exist_ok=True)
    return out
