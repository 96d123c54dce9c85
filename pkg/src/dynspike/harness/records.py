"""Result persistence: crash-safe JSONL records plus CSV summaries.

Output directory layout is stable: ``records.jsonl`` (one record per run,
appended and flushed as results arrive), ``summary.csv`` (aggregates), and
``plotdata/*.csv`` shaped as (x, y, ylo, yhi) for external plotting.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

__all__ = ["RecordWriter", "read_records", "aggregate"]


def _jsonable(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


class RecordWriter:
    def __init__(self, out_dir, config_hash: str, backend: str):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        (self.out_dir / "plotdata").mkdir(exist_ok=True)
        self.config_hash = config_hash
        self.backend = backend
        self._records_path = self.out_dir / "records.jsonl"

    def append(self, record: dict):
        record = {"config_hash": self.config_hash, "backend": self.backend, **record}
        with open(self._records_path, "a") as fh:
            fh.write(json.dumps(_jsonable(record), sort_keys=True) + "\n")
            fh.flush()
        return record

    def write_summary(self, rows: list[dict], name: str = "summary.csv"):
        if not rows:
            return
        cols = list(rows[0].keys())
        with open(self.out_dir / name, "w") as fh:
            fh.write(",".join(cols) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(row.get(c)) for c in cols) + "\n")

    def write_plotdata(self, name: str, x, y, ylo=None, yhi=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ylo = y if ylo is None else np.asarray(ylo, dtype=float)
        yhi = y if yhi is None else np.asarray(yhi, dtype=float)
        with open(self.out_dir / "plotdata" / f"{name}.csv", "w") as fh:
            fh.write("x,y,ylo,yhi\n")
            for row in zip(x, y, ylo, yhi):
                fh.write(",".join(f"{v:.10g}" for v in row) + "\n")

    def save_json(self, name: str, payload: dict):
        with open(self.out_dir / name, "w") as fh:
            json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def read_records(out_dir):
    path = Path(out_dir) / "records.jsonl"
    if not path.exists():
        return []
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def aggregate(values) -> dict:
    arr = np.asarray([v for v in values if v is not None], dtype=float)
    if len(arr) == 0:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(arr.mean()), "std": float(arr.std()), "n": int(len(arr))}
