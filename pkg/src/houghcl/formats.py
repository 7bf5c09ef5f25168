"""Text formats: DFG feature grids, match JSON and benchmark CSV/JSON.

DFG layout::

    DFG 1
    S_h S_w E
    <E reals>        # one line per cell, row-major, S_h*S_w lines

Reals are written with 17 significant digits, so a float64 grid survives a
write/read round trip bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .errors import FormatError
from .features import FeatureGrid
from .matchers import CorrespondenceMap

DFG_MAGIC = "DFG 1"


def dumps_dfg(grid: FeatureGrid) -> str:
    lines = [DFG_MAGIC, f"{grid.height} {grid.width} {grid.dim}"]
    lines += [" ".join(f"{x:.17g}" for x in vec) for vec in grid.vectors]
    return "\n".join(lines) + "\n"


def loads_dfg(text: str) -> FeatureGrid:
    lines = text.splitlines()
    if not lines or lines[0].strip() != DFG_MAGIC:
        raise FormatError(f"expected magic {DFG_MAGIC!r}", line=1)
    if len(lines) < 2:
        raise FormatError("missing 'S_h S_w E' header", line=2)
    parts = lines[1].split()
    try:
        s_h, s_w, dim = (int(p) for p in parts)
    except ValueError:
        raise FormatError(f"header must be three integers, got {lines[1]!r}", line=2) from None
    if min(s_h, s_w, dim) < 1:
        raise FormatError("grid dimensions must be >= 1", line=2)
    n = s_h * s_w
    body = lines[2:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != n:
        # point at the first missing or first surplus line
        raise FormatError(f"expected {n} cell lines, found {len(body)}", line=3 + min(len(body), n))
    data = np.empty((n, dim))
    for c, line in enumerate(body):
        lineno = c + 3
        tokens = line.split()
        if len(tokens) != dim:
            raise FormatError(f"expected {dim} values, found {len(tokens)}", line=lineno)
        try:
            row = [float(t) for t in tokens]
        except ValueError:
            raise FormatError(f"unparseable real in {line!r}", line=lineno) from None
        if not all(math.isfinite(x) for x in row):
            raise FormatError("non-finite value", line=lineno)
        data[c] = row
    return FeatureGrid.from_vectors(data, s_h, s_w)


def write_dfg(path, grid: FeatureGrid) -> None:
    Path(path).write_text(dumps_dfg(grid))


def read_dfg(path) -> FeatureGrid:
    return loads_dfg(Path(path).read_text())


def match_to_dict(corr: CorrespondenceMap, s_h: int, s_w: int, matcher: str) -> dict:
    matches = []
    for q, (k, s) in enumerate(zip(corr.keys, corr.scores)):
        present = k >= 0
        matches.append({
            "query": q,
            "key": int(k) if present else None,
            "score": float(s) if present else None,
        })
    return {"s_h": s_h, "s_w": s_w, "matcher": matcher, "matches": matches}


def match_from_dict(obj: dict) -> tuple[CorrespondenceMap, int, int]:
    try:
        s_h, s_w = int(obj["s_h"]), int(obj["s_w"])
        entries = sorted(obj["matches"], key=lambda m: m["query"])
        if [m["query"] for m in entries] != list(range(s_h * s_w)):
            raise FormatError("matches must list every query index exactly once")
        keys = [-1 if m["key"] is None else int(m["key"]) for m in entries]
        scores = [math.nan if m["key"] is None or m["score"] is None else float(m["score"]) for m in entries]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed match JSON: {exc}") from None
    return CorrespondenceMap(keys, scores, s_h * s_w), s_h, s_w


def write_match_json(path, corr: CorrespondenceMap, s_h: int, s_w: int, matcher: str) -> None:
    Path(path).write_text(json.dumps(match_to_dict(corr, s_h, s_w, matcher), indent=1) + "\n")


def read_match_json(path) -> tuple[CorrespondenceMap, int, int]:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return match_from_dict(obj)


BENCH_COLUMNS = (
    "seed", "matcher", "s", "outlier_frac", "clutter_frac",
    "noise_sigma", "overlap_cells", "accuracy", "mean_score",
)


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for rec in records:
        row = asdict(rec)
        writer.writerow([_fmt(row[c]) for c in BENCH_COLUMNS])
    return buf.getvalue()


def _json_value(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def records_to_json(records, meta: dict | None = None) -> str:
    names = [f.name for f in fields(records[0])] if records else list(BENCH_COLUMNS)
    out = {"records": [{n: _json_value(getattr(r, n)) for n in names} for r in records]}
    if meta is not None:
        out = {"config": meta, **out}
    return json.dumps(out, indent=1, sort_keys=False) + "\n"
