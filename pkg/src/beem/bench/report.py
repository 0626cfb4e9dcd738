"""Result tables, per-run listings and long-format trace files."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

import numpy as np

from beem.core import FitReport
from beem.metrics import purity_acc

TABLE_COLUMNS = (
    "method", "init", "weight",
    "ACC_mean", "ACC_std", "Homo_mean", "Homo_std", "NMI_mean", "NMI_std",
    "ARI_mean", "ARI_std", "em_steps_mean", "em_steps_std",
)
TRACE_COLUMNS = ("iteration", "cluster_index", "cluster_size", "complete_data_loglik",
                 "temperature", "purity")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if np.isnan(x) else f"{float(x):.4f}"
    return str(x)


def _open_for_write(path: Path):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        return path.open("w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def row_to_dict(row) -> dict:
    d = {"method": row.method, "init": row.init, "weight": row.weight, "dataset": row.dataset,
         "k": row.k, "repeats": row.repeats, "n_ok": row.n_ok}
    d.update(row.stats)
    d["wall_time_mean"] = row.wall_time_mean
    d["wall_time_std"] = row.wall_time_std
    return d


def row_from_dict(d: dict):
    from beem.bench.runner import ResultRow

    fixed = {"method", "init", "weight", "dataset", "k", "repeats", "n_ok", "wall_time_mean", "wall_time_std"}
    stats = {k: float(v) for k, v in d.items() if k not in fixed}
    return ResultRow(d["method"], d["init"], d["weight"], d["dataset"], int(d["k"]), int(d["repeats"]),
                     int(d["n_ok"]), stats, float(d["wall_time_mean"]), float(d["wall_time_std"]))


def emit_table(rows: Sequence, path: Union[str, Path], fmt: Optional[str] = None) -> Path:
    """Write result rows as CSV (fixed columns, 4 decimals) or JSON (full precision).

    CSV carries no wall time so that reruns are byte-identical.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("emit_table needs at least one row")
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "csv").lower()
    if fmt == "csv":
        with _open_for_write(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TABLE_COLUMNS)
            for r in rows:
                d = row_to_dict(r)
                w.writerow([_fmt(d[c]) for c in TABLE_COLUMNS])
    elif fmt == "json":
        with _open_for_write(path) as fh:
            json.dump([row_to_dict(r) for r in rows], fh, indent=2)
            fh.write("\n")
    else:
        raise ValueError(f"unknown table format {fmt!r}")
    return path


def load_table_json(path: Union[str, Path]) -> List:
    with Path(path).open(encoding="utf-8") as fh:
        return [row_from_dict(d) for d in json.load(fh)]


def emit_traces(report: FitReport, path: Union[str, Path], true_labels=None) -> Path:
    """Long format: one row per (iteration, cluster).

    Purity is filled when ground truth is given and per-iteration labels
    were recorded.
    """
    sizes = report.size_trace
    with _open_for_write(Path(path)) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, sz in enumerate(sizes):
            purity = ""
            if true_labels is not None and t < len(report.label_trace):
                purity = f"{purity_acc(true_labels, report.label_trace[t]):.6f}"
            ll = report.loglik_trace[t]
            tau = report.temp_trace[t]
            for c, n in enumerate(sz):
                w.writerow([t + 1, c, int(n), repr(float(ll)), repr(float(tau)), purity])
    return Path(path)


def emit_runs(runs: Iterable, path: Union[str, Path]) -> Path:
    """Per-run metrics; deterministic (no timing)."""
    runs = list(runs)
    extras = sorted({k for r in runs for k in r.extras})
    with _open_for_write(Path(path)) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "seed", "status", "ACC", "Homo", "NMI", "ARI", "em_steps", *extras, "error"])
        for r in runs:
            m = [repr(r.metrics[k]) if r.ok else "" for k in ("ACC", "Homo", "NMI", "ARI")]
            ex = [repr(r.extras[k]) if k in r.extras else "" for k in extras]
            w.writerow([r.index, r.seed, "ok" if r.ok else "failed", *m, r.em_steps if r.ok else "",
                        *ex, r.error or ""])
    return Path(path)


def emit_timing(runs: Iterable, path: Union[str, Path]) -> Path:
    with _open_for_write(Path(path)) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "wall_time_s"])
        for r in runs:
            w.writerow([r.index, f"{r.wall_time:.6f}"])
    return Path(path)


def emit_roc(runs: Iterable, path: Union[str, Path]) -> Optional[Path]:
    """ROC points of every run in long format (run, fpr, tpr)."""
    runs = [r for r in runs if r.roc is not None]
    if not runs:
        return None
    with _open_for_write(Path(path)) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "fpr", "tpr"])
        for r in runs:
            for fpr, tpr in r.roc:
                w.writerow([r.index, repr(float(fpr)), repr(float(tpr))])
    return Path(path)


def write_experiment(result, outdir: Path, write_traces: bool = True) -> None:
    from beem.bench.config import dump_config

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.yaml").write_text(dump_config(result.config), encoding="utf-8")
    emit_table([result.row], outdir / "table.csv")
    emit_table([result.row], outdir / "table.json")
    emit_runs(result.runs, outdir / "runs.csv")
    emit_timing(result.runs, outdir / "timing.csv")
    emit_roc(result.runs, outdir / "roc.csv")
    if write_traces:
        for r in result.runs:
            if r.ok and r.report is not None:
                emit_traces(r.report, outdir / "traces" / f"run_{r.index:03d}.csv", r.true_labels)
