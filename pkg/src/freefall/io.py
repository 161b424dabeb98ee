"""CSV/JSON writers.  Every artifact starts with ``#`` lines echoing its inputs.

Floats are written with 17 significant digits so that reruns with the same
inputs produce byte-identical files and values round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from typing import Iterable, Mapping, Sequence, TextIO

from . import __version__


def _fmt(value) -> str:
    if isinstance(value, float):
        return "{:.17g}".format(value)
    return str(value)


def write_metadata(fh: TextIO, metadata: Mapping):
    fh.write(f"# freefall {__version__}\n")
    for key in sorted(metadata):
        fh.write(f"# {key} = {_fmt(metadata[key])}\n")


def write_table(path, header: Sequence[str], rows: Iterable[Sequence[float]], metadata: Mapping):
    with open(path, "w", newline="") as fh:
        write_metadata(fh, metadata)
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(float(v)) if not isinstance(v, str) else v for v in row])


def read_table(path) -> tuple:
    """(metadata dict of strings, header, rows as float lists)."""
    meta, rows, header = {}, [], None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if " = " in line:
                    k, v = line[1:].split(" = ", 1)
                    meta[k.strip()] = v
                continue
            cells = line.split(",")
            if header is None:
                header = cells
            else:
                rows.append([c if c.isidentifier() else float(c) for c in cells])
    return meta, header, rows


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def write_json(path, payload: Mapping, metadata: Mapping):
    doc = {"metadata": dict(sorted(metadata.items()), version=__version__), **payload}
    with open(path, "w") as fh:
        json.dump(_clean(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")
