"""CSV emitters for run records and the per-figure aggregates."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import tempfile
from collections import defaultdict
from pathlib import Path

import numpy as np
from scipy import stats

from . import __version__

POINT_COLUMNS = ["kind", "cells", "zones", "distribution", "service_rate", "max_mbsfn",
                 "constraint_i_mode", "sigma0_sq"]
REPORT_COLUMNS = ["T_bb", "T_bu", "T_u", "T_total", "serving_ratio", "serving_ratio_users",
                  "rb_gain", "rb_frac_bb", "rb_frac_bu", "rb_frac_uu", "unserved_fraction",
                  "n_areas", "mean_area_size"]
CLASS_COLUMNS = ["served_large", "served_medium", "served_small"]
METRICS_COLUMNS = POINT_COLUMNS + ["seed", "planner"] + REPORT_COLUMNS + CLASS_COLUMNS
SERIES_COLUMNS = POINT_COLUMNS + ["seed", "planner", "frame", "window", "T_bb", "T_bu", "T_u",
                                  "T_total", "T_planned"]


def fmt(x) -> str:
    """Fixed numeric formatting: 6 significant digits; strings pass through."""
    if isinstance(x, str):
        return x
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.6g}"


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(r.get(c, "")) for c in columns])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _record_prefix(rec) -> dict:
    row = {"kind": rec.kind, **rec.point.as_row(), "seed": rec.seed, "planner": rec.planner}
    return row


def metrics_rows(records) -> list[dict]:
    rows = []
    for rec in records:
        row = _record_prefix(rec)
        row.update(rec.report.as_row())
        for name in ("large", "medium", "small"):
            v = rec.served_by_class.get(name)
            row[f"served_{name}"] = "" if v is None else v
        rows.append(row)
    return rows


def series_rows(records) -> list[dict]:
    rows = []
    for rec in records:
        if not rec.timeseries:
            continue
        prefix = _record_prefix(rec)
        for r in rec.timeseries:
            rows.append({**prefix, **r})
    return rows


def write_bundle(records, out_dir, config_echo: dict, extra_manifest: dict | None = None) -> dict:
    """metrics.csv, timeseries.csv (dynamic runs), plans/*.txt and manifest.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_atomic(out / "metrics.csv", _csv_text(METRICS_COLUMNS, metrics_rows(records)))
    series = series_rows(records)
    if series:
        write_atomic(out / "timeseries.csv", _csv_text(SERIES_COLUMNS, series))
    for rec in records:
        if rec.plan_text:
            p = rec.point
            name = (f"{rec.kind}_c{p.cells}_z{p.zones}_{p.distribution}_r{p.service_rate}"
                    f"_m{p.max_mbsfn}_{p.mode}_s{rec.seed}_{rec.planner}.txt")
            write_atomic(out / "plans" / name, rec.plan_text)
    manifest = {
        "config": config_echo,
        "versions": {"embms": __version__, "python": platform.python_version(),
                     "numpy": np.__version__},
        "timings": [{"kind": r.kind, **r.point.as_row(), "seed": r.seed, "planner": r.planner,
                     **{k: round(v, 4) for k, v in r.timings.items()}} for r in records],
        "traces": [{"kind": r.kind, **r.point.as_row(), "seed": r.seed, "planner": r.planner,
                    "stages": [[t.stage, t.n_candidates, t.n_areas, t.T] for t in r.trace]}
                   for r in records],
    }
    if extra_manifest:
        manifest.update(extra_manifest)
    write_atomic(out / "manifest.json", json.dumps(manifest, indent=1, sort_keys=True))
    return manifest


# -- figure aggregates -------------------------------------------------------


def t_interval(values, confidence: float = 0.95) -> tuple[float, float, float]:
    """(mean, low, high) Student-t interval over seeds; zero width for one value."""
    v = np.asarray([x for x in values if not math.isnan(x)], dtype=float)
    if len(v) == 0:
        return math.nan, math.nan, math.nan
    m = float(v.mean())
    if len(v) < 2:
        return m, m, m
    half = float(stats.t.ppf(0.5 + confidence / 2, len(v) - 1) * v.std(ddof=1) / math.sqrt(len(v)))
    return m, m - half, m + half


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _num(s: str) -> float:
    return math.nan if s in ("", None) else float(s)


def aggregate(rows, keys, metrics) -> tuple[list[str], list[dict]]:
    groups: dict[tuple, list[dict]] = defaultdict(list)
    for r in rows:
        groups[tuple(r[k] for k in keys)].append(r)
    columns = list(keys) + ["n"]
    for m in metrics:
        columns += [f"{m}_mean", f"{m}_ci_low", f"{m}_ci_high"]
    out = []
    for key in sorted(groups, key=_sort_key):
        rs = groups[key]
        row = dict(zip(keys, key))
        row["n"] = len(rs)
        for m in metrics:
            row[f"{m}_mean"], row[f"{m}_ci_low"], row[f"{m}_ci_high"] = t_interval(
                [_num(r[m]) for r in rs])
        out.append(row)
    return columns, out


def _sort_key(key):
    out = []
    for k in key:
        try:
            out.append((0, float(k), ""))
        except ValueError:
            out.append((1, 0.0, k))
    return tuple(out)


STATIC_KEYS = ["cells", "zones", "distribution", "service_rate", "max_mbsfn", "constraint_i_mode",
               "planner"]
FIGURES = {
    "fig3_throughput.csv": (STATIC_KEYS, ["T_total", "T_bb", "T_bu", "T_u"]),
    "fig3_area_size.csv": (STATIC_KEYS, ["mean_area_size", "n_areas"]),
    "fig4_metrics.csv": (STATIC_KEYS, ["serving_ratio", "rb_gain", "rb_frac_bb", "rb_frac_bu",
                                       "rb_frac_uu", "unserved_fraction"]),
    "fig5_sweep.csv": (STATIC_KEYS, ["T_total", "n_areas", "serving_ratio", "rb_gain",
                                     "unserved_fraction", "rb_frac_bb", "rb_frac_bu",
                                     "rb_frac_uu"]),
    "fig6_served.csv": (STATIC_KEYS, ["served_large", "served_medium", "served_small",
                                      "unserved_fraction"]),
}
SERIES_KEYS = ["cells", "zones", "distribution", "service_rate", "max_mbsfn", "constraint_i_mode",
               "sigma0_sq", "planner", "frame"]


def write_figures(out_dir) -> list[str]:
    out = Path(out_dir)
    metrics = out / "metrics.csv"
    if not metrics.is_file():
        raise FileNotFoundError(f"missing {metrics}")
    static = [r for r in read_csv(metrics) if r["kind"] == "static"]
    written = []
    for name, (keys, cols) in FIGURES.items():
        columns, rows = aggregate(static, keys, cols)
        write_atomic(out / name, _csv_text(columns, rows))
        written.append(name)
    series = out / "timeseries.csv"
    rows = read_csv(series) if series.is_file() else []
    columns, agg = aggregate(rows, SERIES_KEYS, ["T_total", "T_bb", "T_bu", "T_u", "T_planned"])
    write_atomic(out / "fig9_10_timeseries.csv", _csv_text(columns, agg))
    written.append("fig9_10_timeseries.csv")
    return written
