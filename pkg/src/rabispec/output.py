"""CSV / JSON emitters.  Floats are written with 17 significant digits."""
from __future__ import annotations

import contextlib
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


def json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return v if math.isfinite(v) else fmt(v)
    return value


@contextlib.contextmanager
def open_sink(path):
    if path in (None, "-"):
        yield sys.stdout
        sys.stdout.flush()
        return
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        yield fh


def write_table(path, fmt_name, columns, rows, meta):
    """Stream ``rows`` (iterables matching ``columns``) to CSV, or collect them to JSON."""
    with open_sink(path) as fh:
        if fmt_name == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([fmt(v) for v in row])
                fh.flush()
        else:
            body = {"meta": meta,
                    "rows": [{c: json_value(v) for c, v in zip(columns, row)} for row in rows]}
            json.dump(body, fh, indent=2, allow_nan=False)
            fh.write("\n")


def write_matrix(path, fmt_name, result, meta):
    with open_sink(path) as fh:
        if fmt_name == "csv":
            writer = csv.writer(fh, lineterminator="\n")
            fh.write(f"# axis1: {result.axis1_name}\n")
            fh.write(f"# axis2: {result.axis2_name}\n")
            writer.writerow([f"{result.axis1_name}\\{result.axis2_name}"]
                            + [fmt(v) for v in result.axis2_values])
            for a, row in zip(result.axis1_values, result.precision):
                writer.writerow([fmt(a)] + [fmt(v) for v in row])
        else:
            body = {
                "meta": meta,
                "axis1": {"name": result.axis1_name, "values": [json_value(v) for v in result.axis1_values]},
                "axis2": {"name": result.axis2_name, "values": [json_value(v) for v in result.axis2_values]},
                "matrix": [[json_value(v) for v in row] for row in result.precision],
                "sub_sql": [[bool(v) for v in row] for row in result.sub_sql],
            }
            json.dump(body, fh, indent=2, allow_nan=False)
            fh.write("\n")


def read_csv(path):
    """Header and float rows of a table written by :func:`write_table`."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(row for row in fh if not row.startswith("#"))
        header = next(reader)
        return header, [[float(x) if x else math.nan for x in row] for row in reader]
