"""Metric rows, tables and the on-disk report (report.json plus one CSV per table)."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__


@dataclass
class Metric:
    """One acceptance check: ``value <op> tolerance``."""

    name: str
    criterion: str  # acceptance item, e.g. "A7b"
    value: float
    tolerance: float
    op: str = "<="  # "<=" or ">="
    note: str = ""

    @property
    def passed(self) -> bool:
        v = float(self.value)
        if math.isnan(v):
            return False
        if self.op == "<=":
            return v <= self.tolerance
        if self.op == ">=":
            return v >= self.tolerance
        raise ValueError(f"unknown comparison {self.op!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "criterion": self.criterion,
            "value": _clean(self.value),
            "op": self.op,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "note": self.note,
        }


@dataclass
class Table:
    header: list[str]
    rows: list[list] = field(default_factory=list)

    def add(self, *row):
        if len(row) != len(self.header):
            raise ValueError(f"row has {len(row)} fields, header has {len(self.header)}")
        self.rows.append(list(row))

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _clean(v):
    """JSON-safe scalar/list (NaN and inf become strings)."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_clean(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


@dataclass
class ExperimentReport:
    config: dict
    metrics: list[Metric] = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    tables: dict[str, Table] = field(default_factory=dict)
    info: dict = field(default_factory=dict)
    wall_time: float = 0.0
    version: str = __version__

    @property
    def passed(self) -> bool:
        return all(m.passed for m in self.metrics)

    def metric(self, name: str) -> Metric:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)

    def by_criterion(self, criterion: str) -> list[Metric]:
        return [m for m in self.metrics if m.criterion == criterion]

    def check(self, name, criterion, value, tolerance, op="<=", note=""):
        m = Metric(name, criterion, float(value), float(tolerance), op, note)
        self.metrics.append(m)
        return m

    def to_dict(self) -> dict:
        return {
            "config": _clean(self.config),
            "version": self.version,
            "wall_time_s": self.wall_time,
            "passed": self.passed,
            "metrics": [m.to_dict() for m in self.metrics],
            "fitted": _clean(self.fitted),
            "info": _clean(self.info),
            "tables": sorted(self.tables),
        }

    def metrics_table(self) -> Table:
        t = Table(["criterion", "name", "value", "op", "tolerance", "passed"])
        for m in self.metrics:
            t.add(m.criterion, m.name, m.value, m.op, m.tolerance, m.passed)
        return t

    def write(self, out_dir) -> Path:
        """Write report.json, metrics.csv and <table>.csv into ``out_dir`` (each file atomically)."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write(out / "report.json", json.dumps(self.to_dict(), indent=2) + "\n")
        _atomic_write(out / "metrics.csv", self.metrics_table().to_csv_text())
        for name, table in sorted(self.tables.items()):
            _atomic_write(out / f"{name}.csv", table.to_csv_text())
        return out


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
