"""CSV output with a versioned header and JSON run manifests."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

CSV_HEADER = "# seqgen-csv v1"


def _fmt(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return repr(v)
    return v


def write_csv(path, columns, rows, comments=()) -> Path:
    """Write ``rows`` under a ``# seqgen-csv v1`` line and optional ``#`` comments.

    Floats use ``repr`` so identical inputs give byte-identical files.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(CSV_HEADER + "\n")
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def read_csv(path):
    """Return ``(columns, rows)`` with comment lines skipped; values stay strings."""
    with Path(path).open(newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rd = csv.reader(lines)
    cols = next(rd)
    return cols, [r for r in rd]


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(out) -> Path:
    out = Path(out)
    return out.with_name(out.stem + ".manifest.json")


def _jsonable(v):
    if isinstance(v, Path):
        return str(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if hasattr(v, "item"):
        return v.item()
    return v


def write_manifest(out, subcommand: str, params: dict, seed, version: str,
                   duration: float, extra: dict | None = None) -> Path:
    """Manifest next to ``out`` recording how it was produced and its digest."""
    out = Path(out)
    doc = {
        "subcommand": subcommand,
        "params": _jsonable(params),
        "seed": seed,
        "version": version,
        "outputs": {out.name: sha256_of(out)},
        "duration_s": round(duration, 6),
    }
    if extra:
        doc["extra"] = _jsonable(extra)
    mp = manifest_path(out)
    mp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return mp


def verify_manifest(mpath) -> bool:
    """True if every listed output still matches its recorded digest."""
    mpath = Path(mpath)
    doc = json.loads(mpath.read_text())
    return all(sha256_of(mpath.parent / name) == digest for name, digest in doc["outputs"].items())
