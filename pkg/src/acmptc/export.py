"""Metrics CSV, summary documents and long-format plot series.

Reals are written with six significant digits through one formatter so the
bytes never depend on locale. Every CSV starts with a ``# acmptc <version>``
comment line; the readers in this package skip ``#`` lines.
"""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from typing import Iterable, Sequence

from . import __version__
from .errors import InputError
from .net_model import csv_rows
from .sim import ComparisonReport, EpisodeResult, MetricsRecord, sign_test_pvalue

METRICS_HEADER = ("t", "stream_id", "delivered_mbps", "latency_ms", "loss_rate", "qos",
                  "utility", "assigned_paths")
SUMMARY_KEYS = ("mean_throughput_mbps", "p95_latency_ms", "mean_loss", "mean_qos",
                "mean_utility", "cumulative_throughput", "violations")
SERIES_HEADER = ("series", "t", "value")


def fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InputError(f"refusing to export non-finite value {x}")
    s = f"{x:.6g}"
    return "0" if s == "-0" else s


def _round6(x: float) -> float:
    return float(fmt(x))


def _writer(sink):
    sink.write(f"# acmptc {__version__}\n")
    return csv.writer(sink, lineterminator="\n")


def write_metrics_csv(records: Iterable[MetricsRecord], sink) -> int:
    """Write records ordered by (t, stream_id); returns the number of data rows."""
    w = _writer(sink)
    w.writerow(METRICS_HEADER)
    n = 0
    for r in sorted(records, key=lambda r: (r.t, r.stream_id)):
        w.writerow([r.t, r.stream_id, fmt(r.delivered_mbps), fmt(r.latency_ms), fmt(r.loss_rate),
                    fmt(r.qos), fmt(r.utility), "|".join(str(i) for i in sorted(r.assigned_paths))])
        n += 1
    return n


def read_metrics_csv(path: str) -> list[MetricsRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = csv_rows(fh)
        _, header = next(rows, (1, None))
        if header is None or tuple(header) != METRICS_HEADER:
            raise InputError(f"{path}: not a metrics CSV")
        out = []
        for lineno, row in rows:
            try:
                paths = tuple(int(x) for x in row[7].split("|") if x)
                out.append(MetricsRecord(int(row[0]), int(row[1]), float(row[2]), float(row[3]),
                                         float(row[4]), float(row[5]), float(row[6]), paths))
            except (ValueError, IndexError):
                raise InputError(f"{path}: line {lineno}: malformed row") from None
    return out


def summary_document(result: EpisodeResult) -> dict:
    doc = {k: _round6(result.summary[k]) for k in SUMMARY_KEYS if k != "violations"}
    doc["violations"] = int(result.violations)
    doc["reallocations"] = int(result.reallocations)
    doc["scheduler"] = result.scheduler
    doc["seed"] = int(result.seed)
    doc["version"] = __version__
    doc["per_stream"] = {
        str(sid): {k: _round6(v) for k, v in sorted(stats.items())}
        for sid, stats in sorted(result.summary.get("per_stream", {}).items())
    }
    return doc


def dump_json(doc, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=False)
        fh.write("\n")


def export_metrics(result: EpisodeResult, out_dir: str, stem: str = "metrics") -> tuple[str, str]:
    """Write ``<stem>.csv`` and ``<stem>_summary.json`` into ``out_dir``."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        write_metrics_csv(result.records, fh)
    json_path = os.path.join(out_dir, f"{stem}_summary.json")
    dump_json(summary_document(result), json_path)
    return csv_path, json_path


def write_series(rows: Iterable[tuple[str, int, float]], sink) -> None:
    w = _writer(sink)
    w.writerow(SERIES_HEADER)
    for series, t, v in rows:
        w.writerow([series, t, fmt(v)])


def write_reward_series(rewards: Sequence[float], sink, series: str = "episode_reward") -> None:
    write_series(((series, ep, r) for ep, r in enumerate(rewards)), sink)


def _per_step(records: Iterable[MetricsRecord], field: str, how: str) -> list[tuple[int, float]]:
    acc: dict[int, list[float]] = defaultdict(list)
    for r in records:
        acc[r.t].append(getattr(r, field))
    if how == "sum":
        return [(t, math.fsum(v)) for t, v in sorted(acc.items())]
    return [(t, math.fsum(v) / len(v)) for t, v in sorted(acc.items())]


def comparison_document(report: ComparisonReport) -> dict:
    ref = report.schedulers[0]
    doc = {"version": __version__, "reference": ref, "seeds": report.seeds,
           "checksums_equal": report.checksums_equal, "means": {}, "paired": {}}
    for name in report.schedulers:
        doc["means"][name] = {k: _round6(v) for k, v in report.means[name].items()}
        if name == ref:
            continue
        doc["paired"][name] = {
            k: {"mean_diff": _round6(math.fsum(d) / len(d)),
                "wins": sum(1 for x in d if x > 0),
                "sign_test_p": _round6(sign_test_pvalue(d))}
            for k, d in report.paired_diffs[name].items()
        }
    return doc


def comparison_series(report: ComparisonReport) -> list[tuple[str, int, float]]:
    """Per-step total delivered throughput averaged over seeds, one series per scheduler."""
    rows = []
    for name in report.schedulers:
        acc: dict[int, list[float]] = defaultdict(list)
        for res in report.results[name]:
            for t, v in _per_step(res.records, "delivered_mbps", "sum"):
                acc[t].append(v)
        rows += [(name, t, math.fsum(v) / len(v)) for t, v in sorted(acc.items())]
    return rows


def export_comparison(report: ComparisonReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    for name in report.schedulers:
        for res in report.results[name]:
            export_metrics(res, out_dir, f"metrics_{name}_seed{res.seed}")
    dump_json(comparison_document(report), os.path.join(out_dir, "comparison.json"))
    with open(os.path.join(out_dir, "throughput_by_scheduler.csv"), "w",
              encoding="utf-8", newline="") as fh:
        write_series(comparison_series(report), fh)


PLOT_FILES = ("throughput_over_time.csv", "latency_distribution.csv", "loss_over_time.csv",
              "throughput_vs_latency.csv")


def plot_series(label: str, records: Sequence[MetricsRecord]) -> dict[str, list]:
    """Long-format rows for the four plot families of one run."""
    recs = sorted(records, key=lambda r: (r.t, r.stream_id))
    thr = _per_step(recs, "delivered_mbps", "sum")
    lat = _per_step(recs, "latency_ms", "mean")
    return {
        "throughput_over_time.csv": [(label, t, v) for t, v in thr],
        "latency_distribution.csv": [(f"{label}/stream{r.stream_id}", r.t, r.latency_ms) for r in recs],
        "loss_over_time.csv": [(label, t, v) for t, v in _per_step(recs, "loss_rate", "mean")],
        "throughput_vs_latency.csv": [(f"{label}/throughput_mbps", t, v) for t, v in thr]
                                     + [(f"{label}/latency_ms", t, v) for t, v in lat],
    }


def export_plots(in_dir: str, out_dir: str) -> list[str]:
    """Collect every metrics CSV under ``in_dir`` into the plot-ready files."""
    found = []
    for root, _, files in os.walk(in_dir):
        for name in files:
            if name.startswith("metrics") and name.endswith(".csv"):
                found.append(os.path.join(root, name))
    if not found:
        raise InputError(f"no metrics CSV found under {in_dir}")
    merged: dict[str, list] = {k: [] for k in PLOT_FILES}
    for path in sorted(found):
        label = os.path.splitext(os.path.relpath(path, in_dir))[0].replace(os.sep, "/")
        for fname, rows in plot_series(label, read_metrics_csv(path)).items():
            merged[fname] += rows
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for fname in PLOT_FILES:
        path = os.path.join(out_dir, fname)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            write_series(merged[fname], fh)
        written.append(path)
    return written
