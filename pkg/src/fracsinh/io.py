"""Profiles as ``x,u`` CSV, reports as JSON, both at 15 significant digits."""

import csv
import json
from pathlib import Path

import numpy as np

DIGITS = 15


def fmt(v):
    return f"{float(v):.{DIGITS}g}"


def rounded(obj):
    """Recursively round floats to DIGITS significant digits (numpy scalars included)."""
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [rounded(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return float(fmt(v)) if np.isfinite(v) else None
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(rounded(obj), indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def write_profile(path, x, u):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u"])
        for a, b in zip(x, u):
            w.writerow([fmt(a), fmt(b)])


def read_profile(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["x", "u"]:
        raise ValueError(f"{path}: expected header 'x,u'")
    data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    if data.size == 0:
        raise ValueError(f"{path}: empty profile")
    return data[:, 0], data[:, 1]


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def solve_report_dict(report, verification, energy_value, sigma_perp, config):
    """Report JSON in the documented layout plus a ``config`` block for re-reading."""
    peaks = [{"xi": p["location"], "height": p["height"], "mass": p["local_mass"]}
             for p in verification["peaks"]]
    return {
        "lambda": report.lam,
        "residual_sup": report.residual_sup,
        "newton_iters": report.newton_iters,
        "nodal_count": verification["nodal"]["nodal_count"],
        "peaks": peaks,
        "energy": energy_value,
        "sigma_perp": sigma_perp,
        "config": {"xi": list(config.xis), "signs": list(config.signs)},
    }
