"""Readers and writers for traces, snapshots, RMSE tables and measurement logs."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from rbinit.dead_reckoning import DeadReckoningIncrement
from rbinit.initializer import RangeMeasurement

RMSE_HEADER = ["granularity_deg", "n_particles", "ranging_index", "rmse_m"]
TRACE_HEADER = [
    "ranging_index", "t", "range_m",
    "x_hat", "y_hat", "z_hat", "theta_hat",
    "x0_hat", "y0_hat", "z0_hat", "theta0_hat",
    "P0_xx", "P0_yy", "P0_zz", "P0_thth",
    "converged",
]
TRUTH_HEADER = ["x_true", "y_true", "z_true", "theta_true", "error_m"]


class LogError(ValueError):
    """A measurement log line failed validation."""


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, header, rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_trace(path, rows) -> None:
    with_truth = bool(rows) and "truth" in rows[0]
    header = TRACE_HEADER + (TRUTH_HEADER if with_truth else [])
    out = []
    for r in rows:
        line = [r["ranging_index"], r["t"], r["range_m"], *r["x_hat"], *r["x0_hat"], *r["P0_diag"],
                r["converged"]]
        if with_truth:
            line += [*r["truth"], r["error_m"]]
        out.append(line)
    write_csv(path, header, out)


def write_rmse(path, rows) -> None:
    write_csv(path, RMSE_HEADER, [[r[k] for k in RMSE_HEADER] for r in rows])


def write_jsonl(path, records) -> None:
    with Path(path).open("w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=False) + "\n")


def events_to_log(events) -> list[dict]:
    """Measurement-log records for ``(kind, t, payload)`` events."""
    out = []
    for kind, t, p in events:
        if kind == "dr":
            out.append({"t": t, "dr": p.as_array().tolist(), "Q_diag": np.diag(p.Q).tolist()})
        else:
            out.append({"t": t, "range": p.value, "ref": p.ref_position.tolist()})
    return out


def _floats(v, n, what, lineno):
    if not isinstance(v, list) or len(v) != n:
        raise LogError(f"line {lineno}: {what} must be a list of {n} numbers")
    try:
        out = [float(x) for x in v]
    except (TypeError, ValueError):
        raise LogError(f"line {lineno}: {what} must be numeric") from None
    if not all(math.isfinite(x) for x in out):
        raise LogError(f"line {lineno}: {what} must be finite")
    return out


def read_log(path) -> list:
    """Parse a JSON-lines measurement log into time-ordered events.

    Each line is ``{"t", "dr", "Q_diag"}`` or ``{"t", "range", "ref"}``.
    Blank lines are skipped; anything else malformed raises :class:`LogError`.
    """
    events = []
    last_t = -math.inf
    with Path(path).open() as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise LogError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(rec, dict) or "t" not in rec:
                raise LogError(f"line {lineno}: expected an object with a 't' field")
            try:
                t = float(rec["t"])
            except (TypeError, ValueError):
                raise LogError(f"line {lineno}: 't' must be a number") from None
            if not math.isfinite(t):
                raise LogError(f"line {lineno}: 't' must be finite")
            if t < last_t:
                raise LogError(f"line {lineno}: timestamp {t} precedes {last_t}")
            last_t = t
            if "dr" in rec and set(rec) <= {"t", "dr", "Q_diag"}:
                u = _floats(rec["dr"], 4, "dr", lineno)
                q = _floats(rec.get("Q_diag", [0, 0, 0, 0]), 4, "Q_diag", lineno)
                if any(x < 0 for x in q):
                    raise LogError(f"line {lineno}: Q_diag must be non-negative")
                events.append(("dr", t, DeadReckoningIncrement.from_diag(u, q)))
            elif "range" in rec and set(rec) == {"t", "range", "ref"}:
                (r,) = _floats([rec["range"]], 1, "range", lineno)
                if r < 0:
                    raise LogError(f"line {lineno}: range must be non-negative")
                ref = _floats(rec["ref"], 3, "ref", lineno)
                events.append(("range", t, RangeMeasurement(r, ref)))
            else:
                raise LogError(f"line {lineno}: not a dead-reckoning or range record")
    return events
