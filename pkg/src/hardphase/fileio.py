"""Deterministic CSV, JSON and flat key-value config files."""
import csv
import io
import json
import math
import os

import numpy as np

HEADERS = {
    "profile": ("r", "ybar", "rho", "p", "m", "lambda", "mu"),
    "trajectory": ("tau", "w1", "w2"),
    "spectrum": ("kappa", "R", "M", "nu_star", "residual", "classification"),
    "evolution": ("t", "norm", "energy"),
    "family": ("kappa", "R", "M", "rho_c", "compactness"),
    "asymptotics": ("kappa", "r1", "r2", "nodes", "rho", "p", "mass", "mu_slope", "metric",
                    "redshift_oscillation"),
    "operator": ("y", "K_diag", "K_off", "Mw"),
    "snapshot": ("y", "zeta"),
    "critical": ("kappa_star", "kappa_lo", "kappa_hi", "nu_lo", "nu_hi", "evaluations"),
}


class FormatError(ValueError):
    """Malformed CSV or config text."""


def format_value(value):
    """Text for one cell: floats at 17 significant digits, others via str."""
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return f"{value:.17g}"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        if len(row) != len(header):
            raise FormatError(f"row has {len(row)} cells, header has {len(header)}")
        writer.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_text(path, text):
    """Write UTF-8 text with LF line endings via a temporary file and rename."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
    return path


def write_csv(path, header, rows):
    return write_text(path, render_csv(header, rows))


def write_columns(path, header, columns):
    """Write equal-length columns."""
    columns = [np.asarray(c) for c in columns]
    return write_csv(path, header, zip(*(c.tolist() for c in columns)))


def _parse_cell(text):
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Return (header, columns); numeric columns come back as float arrays."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path} is empty")
    header = tuple(rows[0])
    body = rows[1:]
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise FormatError(f"{path}:{i + 2}: expected {len(header)} cells")
    cols = []
    for j in range(len(header)):
        cells = [_parse_cell(r[j]) for r in body]
        if all(isinstance(c, float) for c in cells):
            cols.append(np.array(cells, dtype=float))
        else:
            cols.append([r[j] for r in body])
    return header, cols


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else format_value(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def render_json(data):
    return json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n"


def write_json(path, data):
    return write_text(path, render_json(data))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def render_config(mapping):
    """Flat ``key = value`` lines in sorted key order."""
    lines = []
    for key in sorted(mapping):
        value = mapping[key]
        if isinstance(value, (list, tuple)):
            text = ",".join(format_value(v) for v in value)
        else:
            text = format_value(value)
        if "\n" in text or "=" in key or key != key.strip() or not key:
            raise FormatError(f"cannot render key {key!r}")
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"


def parse_config(text):
    """Parse flat ``key = value`` text; '#' starts a comment line. Values stay strings."""
    out = {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"line {n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise FormatError(f"line {n}: empty key")
        if key in out:
            raise FormatError(f"line {n}: duplicate key {key!r}")
        out[key] = value
    return out


def read_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
