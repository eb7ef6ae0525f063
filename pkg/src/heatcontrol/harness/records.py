"""Run records and their on-disk formats.

Every float is written with 17 significant digits so that records round-trip
bit-exactly. ``record.json`` holds no wall-clock values, so reruns with the
same seed reproduce it byte for byte; timings go to ``timing.json`` and to the
``runtime_s`` column of ``sweep.csv``.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .config import ScenarioConfig

RECORD_FILE = "record.json"
TIMING_FILE = "timing.json"
FIELDS_HEADER = ("x", "t", "y")
PAIRINGS_HEADER = ("sample_id", "lhs", "rhs", "residual", "pass")
SWEEP_HEADER = ("param", "value", "predicted", "measured", "runtime_s", "verdict")
WALL_CLOCK_COLUMNS = ("runtime_s",)


def fmt(value):
    """Text form of a scalar: floats with 17 significant digits, bools lowercase."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "NaN"
        if math.isinf(v):
            return "Infinity" if v > 0 else "-Infinity"
        return format(v, ".17g")
    return str(value)


def dumps(obj, indent=0):
    """JSON text with floats at 17 significant digits and sorted keys."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in sorted(obj.items())]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    return fmt(obj)


def to_plain(obj):
    """Convert numpy containers and scalars to builtin types recursively."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


@dataclass
class RunRecord:
    """Everything a run produced, with the config embedded so it stands alone."""

    config: dict
    scalars: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)
    norms: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    runtime_s: float = 0.0
    version: str = __version__

    @property
    def kind(self):
        return self.config["kind"]

    @property
    def passed(self):
        return all(self.verdicts.values())

    def to_dict(self):
        """Reproducible content only: wall-clock columns are left to ``timing_dict``."""
        tables = {}
        for name, table in self.tables.items():
            keep = [i for i, h in enumerate(table["header"]) if h not in WALL_CLOCK_COLUMNS]
            tables[name] = {
                "header": [table["header"][i] for i in keep],
                "rows": [[row[i] for i in keep] for row in table["rows"]],
            }
        return to_plain({
            "version": self.version,
            "config": self.config,
            "scalars": self.scalars,
            "verdicts": self.verdicts,
            "tables": tables,
            "norms": self.norms,
        })

    def timing_dict(self):
        out = {"runtime_s": self.runtime_s}
        for name, table in self.tables.items():
            for i, h in enumerate(table["header"]):
                if h in WALL_CLOCK_COLUMNS:
                    out[f"{name}.{h}"] = [row[i] for row in table["rows"]]
        return to_plain(out)


def validate_record(data):
    """Check a loaded record's structure and re-validate its embedded config."""
    for key in ("version", "config", "scalars", "verdicts", "tables", "norms"):
        if key not in data:
            raise ValueError(f"record is missing {key!r}")
    cfg = ScenarioConfig.from_dict(data["config"])
    for name, value in data["verdicts"].items():
        if not isinstance(value, bool):
            raise ValueError(f"verdict {name!r} is not a boolean")
    for name, table in data["tables"].items():
        header = table.get("header")
        rows = table.get("rows")
        if header is None or rows is None or any(len(r) != len(header) for r in rows):
            raise ValueError(f"table {name!r} is malformed")
    return cfg


def load_record(path):
    path = Path(path)
    if path.is_dir():
        path = path / RECORD_FILE
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise OSError(f"cannot read record {path}: {exc}") from exc
    validate_record(data)
    return RunRecord(
        config=data["config"], scalars=data["scalars"], verdicts=data["verdicts"],
        tables=data["tables"], norms=data["norms"], version=data["version"],
    )


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def downsample(x, times, states, max_cells=512):
    """Thin a space-time field to at most ``max_cells`` points in each direction."""
    xi = np.unique(np.linspace(0, x.size - 1, min(max_cells, x.size)).round().astype(int))
    ti = np.unique(np.linspace(0, len(times) - 1, min(max_cells, len(times))).round().astype(int))
    return x[xi], np.asarray(times)[ti], [np.asarray(states[i])[xi] for i in ti]


def emit_outputs(record, out_dir):
    """Write record.json, timing.json, scalars.csv, norms.csv and any tables or field dumps."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []

    def put(name, text):
        path = out / name
        try:
            path.write_text(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc}") from exc
        written.append(path)

    put(RECORD_FILE, dumps(record.to_dict()) + "\n")
    put(TIMING_FILE, dumps(record.timing_dict()) + "\n")
    scalars = [(k, v) for k, v in sorted(record.scalars.items()) if not isinstance(v, (list, dict))]
    _write_csv(out / "scalars.csv", ("name", "value"), scalars)
    written.append(out / "scalars.csv")
    if record.norms:
        _write_csv(out / "norms.csv", ("t", "l2", "min", "max"), record.norms)
        written.append(out / "norms.csv")
    if record.fields:
        f = record.fields
        rows = ((xv, t, yv) for t, ys in zip(f["t"], f["y"]) for xv, yv in zip(f["x"], ys))
        _write_csv(out / "fields.csv", FIELDS_HEADER, rows)
        written.append(out / "fields.csv")
    for name, table in record.tables.items():
        _write_csv(out / f"{name}.csv", table["header"], table["rows"])
        written.append(out / f"{name}.csv")
    return written
