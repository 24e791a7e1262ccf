"""Report trees and their text / JSON / CSV renderings.

A report is a plain nested structure of dicts, lists and scalars with a
fixed key order.  JSON carries every number at full precision; text rounds
floats for reading; CSV flattens the tree to ``path,value`` rows.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Any

FORMATS = ("text", "json", "csv")


def mva(x: float) -> float:
    """Round to the model's 1e-9 MVA resolution (and drop negative zero)."""
    return round(x, 9) + 0.0


def rating(x: float) -> float:
    """Bisection results are good to 1e-6 MVA."""
    return round(x, 6) + 0.0


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def flatten(tree: Any, prefix: str = "") -> list[tuple[str, Any]]:
    if isinstance(tree, dict):
        rows = []
        for k, v in tree.items():
            rows += flatten(v, f"{prefix}.{k}" if prefix else str(k))
        return rows
    if isinstance(tree, (list, tuple)):
        rows = []
        for i, v in enumerate(tree):
            rows += flatten(v, f"{prefix}.{i}" if prefix else str(i))
        return rows
    return [(prefix, tree)]


def lookup(tree: Any, path: str) -> Any:
    node = tree
    for part in path.split("."):
        node = node[int(part)] if isinstance(node, list) else node[part]
    return node


def _scalar_text(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6f}" if math.isfinite(v) else str(v)
    return str(v)


def _text(tree, indent=0, out=None) -> list[str]:
    out = [] if out is None else out
    pad = "  " * indent
    if isinstance(tree, dict):
        for k, v in tree.items():
            if isinstance(v, (dict, list)) and v:
                out.append(f"{pad}{k}:")
                _text(v, indent + 1, out)
            elif isinstance(v, (dict, list)):
                out.append(f"{pad}{k}: (none)")
            else:
                out.append(f"{pad}{k}: {_scalar_text(v)}")
    elif isinstance(tree, list):
        for i, v in enumerate(tree):
            if isinstance(v, (dict, list)):
                out.append(f"{pad}[{i}]")
                _text(v, indent + 1, out)
            else:
                out.append(f"{pad}- {_scalar_text(v)}")
    else:
        out.append(pad + _scalar_text(tree))
    return out


def render(tree: Any, fmt: str = "text") -> str:
    if fmt == "json":
        return json.dumps(_json_safe(tree), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["path", "value"])
        for path, value in flatten(_json_safe(tree)):
            w.writerow([path, "" if value is None else json.dumps(value) if isinstance(value, bool) else value])
        return buf.getvalue()
    if fmt == "text":
        return "\n".join(_text(tree)) + "\n"
    raise ValueError(f"unknown format {fmt!r}")
