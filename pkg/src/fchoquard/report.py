"""Deterministic JSON and CSV emission of reports."""

from __future__ import annotations

import csv
import io
import json
import math
from datetime import datetime, timezone
from pathlib import Path

from .campaigns import ROW_FIELDS, SweepReport

TIMESTAMP_KEY = "generated_at"


def _clean(obj):
    # JSON has no inf/nan; keep them readable and reversible
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return _clean(obj.item())
    return obj


def to_json(payload: dict, timestamp: bool = True) -> str:
    body = _clean(payload)
    if timestamp:
        body = {**body, TIMESTAMP_KEY: datetime.now(timezone.utc).isoformat(timespec="seconds")}
    return json.dumps(body, sort_keys=True, indent=1) + "\n"


def strip_timestamp(text: str) -> str:
    data = json.loads(text)
    data.pop(TIMESTAMP_KEY, None)
    return json.dumps(data, sort_keys=True, indent=1)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([repr(getattr(r, k)) if isinstance(getattr(r, k), float) else getattr(r, k) for k in ROW_FIELDS])
    return buf.getvalue()


def read_rows_csv(text: str) -> list:
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        row = {}
        for k in ROW_FIELDS:
            v = rec[k]
            if k == "converged":
                row[k] = v == "True"
            elif k == "iterations":
                row[k] = int(v)
            else:
                row[k] = float(v)
        out.append(row)
    return out


def write_report(report: SweepReport, out_dir, stem: str | None = None) -> tuple:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = stem or report.campaign
    jpath = out / f"{stem}.json"
    cpath = out / f"{stem}.csv"
    jpath.write_text(to_json(report.to_dict()), encoding="utf-8")
    cpath.write_text(rows_to_csv(report.rows), encoding="utf-8")
    return jpath, cpath
