"""The full published experiment grid, regenerated in one call."""
from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from beem.bench.config import ExperimentConfig, config_from_dict
from beem.bench.report import emit_table
from beem.bench.runner import ExperimentError, ResultRow, run_experiment

log = logging.getLogger(__name__)

Published = Dict[str, Tuple[float, float]]  # metric -> (mean, std)
TOLERANCE_FLOOR = 0.05
SUMMARY_METRICS = ("ACC", "Homo", "NMI", "ARI")


def _p(acc, homo, nmi, ari) -> Published:
    return {"ACC": acc, "Homo": homo, "NMI": nmi, "ARI": ari}


@dataclass
class SuiteRow:
    label: str
    config: dict
    published: Optional[Published] = None


@dataclass
class SuiteTable:
    name: str
    rows: List[SuiteRow]
    needs: Optional[str] = None  # data file/dir (relative to data_dir) the table depends on
    repeats: Optional[int] = None  # overrides the per-config default when no global flag is given
    notes: List[str] = field(default_factory=list)


def _cfg(dataset, method, family, init, k, weight=None, **hp) -> dict:
    d = {"dataset": dataset, "method": method, "model_family": family, "init": init, "k": k}
    if weight is not None:
        d["weight_mode"] = weight
    if hp:
        d["method_hyperparams"] = hp
    return d


SQUARE = {"name": "square"}
BALANCED = {"name": "square", "counts": [50, 50, 50, 50]}
RAINBOW = {"name": "rainbow"}


def _hmm(lo, hi):
    return {"name": "random_hmm", "len_lo": lo, "len_hi": hi}


def suite_tables() -> List[SuiteTable]:
    t3 = SuiteTable("table3_unbalanced_square", [
        SuiteRow("BEEM A I", _cfg(SQUARE, "BEEM", "GMM", "A", 4, "I"),
                 _p((0.99, 0.02), (0.96, 0.05), (0.96, 0.07), (0.94, 0.11))),
        SuiteRow("BEEM A II", _cfg(SQUARE, "BEEM", "GMM", "A", 4, "II"),
                 _p((0.85, 0.11), (0.76, 0.18), (0.85, 0.12), (0.72, 0.22))),
        SuiteRow("EM 100 A", _cfg(SQUARE, "EM_RESTARTS", "GMM", "A", 4, restarts=100),
                 _p((1.00, 0.00), (1.00, 0.00), (1.00, 0.00), (1.00, 0.00))),
        SuiteRow("EM A", _cfg(SQUARE, "EM", "GMM", "A", 4),
                 _p((0.86, 0.11), (0.76, 0.18), (0.86, 0.11), (0.75, 0.21))),
        SuiteRow("DAEM A", _cfg(SQUARE, "DAEM", "GMM", "A", 4),
                 _p((0.85, 0.12), (0.76, 0.19), (0.84, 0.12), (0.73, 0.22))),
    ])
    t4 = SuiteTable("table4_balanced_square", [
        SuiteRow("BEEM A I", _cfg(BALANCED, "BEEM", "GMM", "A", 4, "I"),
                 _p((0.91, 0.12), (0.90, 0.13), (0.93, 0.10), (0.87, 0.18))),
        SuiteRow("BEEM A II", _cfg(BALANCED, "BEEM", "GMM", "A", 4, "II"),
                 _p((0.75, 0.09), (0.74, 0.09), (0.85, 0.07), (0.71, 0.09))),
    ])
    t5 = SuiteTable("table5_rainbow", [
        SuiteRow("EM B", _cfg(RAINBOW, "EM", "GMM", "B", 8),
                 _p((0.93, 0.05), (0.89, 0.04), (0.89, 0.04), (0.87, 0.08))),
        SuiteRow("BEEM B", _cfg(RAINBOW, "BEEM", "GMM", "B", 8, "I"),
                 _p((0.96, 0.00), (0.91, 0.01), (0.91, 0.01), (0.91, 0.01))),
        SuiteRow("EM 100 A", _cfg(RAINBOW, "EM_RESTARTS", "GMM", "A", 8, restarts=100),
                 _p((0.49, 0.14), (0.51, 0.14), (0.62, 0.10), (0.41, 0.14))),
        SuiteRow("EM A", _cfg(RAINBOW, "EM", "GMM", "A", 8),
                 _p((0.43, 0.05), (0.46, 0.06), (0.61, 0.05), (0.33, 0.07))),
        SuiteRow("BEEM A", _cfg(RAINBOW, "BEEM", "GMM", "A", 8, "I"),
                 _p((0.93, 0.05), (0.89, 0.04), (0.89, 0.04), (0.87, 0.06))),
        SuiteRow("DAEM A", _cfg(RAINBOW, "DAEM", "GMM", "A", 8),
                 _p((0.75, 0.08), (0.75, 0.06), (0.79, 0.06), (0.66, 0.09))),
    ])
    iris = {"name": "csv", "path": "iris.csv", "label_column": -1}
    t6 = SuiteTable("table6_iris", [
        SuiteRow("EM B", _cfg(iris, "EM", "GMM", "B", 3),
                 _p((0.97, 0.02), (0.90, 0.03), (0.90, 0.03), (0.91, 0.04))),
        SuiteRow("BEEM B", _cfg(iris, "BEEM", "GMM", "B", 3, "I"),
                 _p((0.97, 0.03), (0.90, 0.01), (0.90, 0.02), (0.90, 0.04))),
        SuiteRow("EM 100 A", _cfg(iris, "EM_RESTARTS", "GMM", "A", 3, restarts=100),
                 _p((0.81, 0.13), (0.72, 0.14), (0.76, 0.10), (0.68, 0.16))),
        SuiteRow("EM A", _cfg(iris, "EM", "GMM", "A", 3),
                 _p((0.76, 0.05), (0.61, 0.06), (0.62, 0.06), (0.55, 0.06))),
        SuiteRow("BEEM A", _cfg(iris, "BEEM", "GMM", "A", 3, "I"),
                 _p((0.87, 0.07), (0.72, 0.10), (0.73, 0.10), (0.69, 0.11))),
        SuiteRow("DAEM A", _cfg(iris, "DAEM", "GMM", "A", 3),
                 _p((0.78, 0.02), (0.61, 0.01), (0.62, 0.01), (0.55, 0.01))),
    ], needs="iris.csv")
    short, long_ = _hmm(5, 10), _hmm(20, 50)
    hmm = SuiteTable("random_hmm", [
        SuiteRow("L5-10 EM A", _cfg(short, "EM", "MHMM", "A", 3),
                 _p((0.51, 0.07), (0.13, 0.07), (0.13, 0.08), (0.09, 0.07))),
        SuiteRow("L5-10 EM Smyth", _cfg(short, "EM", "MHMM", "Smyth", 3),
                 _p((0.47, 0.07), (0.09, 0.07), (0.11, 0.08), (0.05, 0.07))),
        SuiteRow("L5-10 BEEM A", _cfg(short, "BEEM", "MHMM", "A", 3, "I"),
                 _p((0.49, 0.06), (0.09, 0.06), (0.10, 0.07), (0.07, 0.07))),
        SuiteRow("L20-50 EM A", _cfg(long_, "EM", "MHMM", "A", 3),
                 _p((0.80, 0.15), (0.64, 0.22), (0.67, 0.20), (0.60, 0.24))),
        SuiteRow("L20-50 EM Smyth", _cfg(long_, "EM", "MHMM", "Smyth", 3),
                 _p((0.71, 0.13), (0.51, 0.18), (0.56, 0.18), (0.49, 0.20))),
        SuiteRow("L20-50 BEEM A", _cfg(long_, "BEEM", "MHMM", "A", 3, "I"),
                 _p((0.87, 0.11), (0.68, 0.19), (0.69, 0.19), (0.68, 0.21))),
    ])
    ab = {"name": "sequence_corpus", "path": "characters", "classes": ["A", "B"]}
    ae = {"name": "sequence_corpus", "path": "characters", "classes": ["A", "B", "C", "D", "E"]}
    chars = SuiteTable("characters", [
        SuiteRow("A-B EM A", _cfg(ab, "EM", "MHMM", "A", 2, best_of=3),
                 _p((1.0, 0), (1.0, 0), (1.0, 0), (1.0, 0))),
        SuiteRow("A-B EM Smyth", _cfg(ab, "EM", "MHMM", "Smyth", 2, best_of=3),
                 _p((1.0, 0), (1.0, 0), (1.0, 0), (1.0, 0))),
        SuiteRow("A-B BEEM A", _cfg(ab, "BEEM", "MHMM", "A", 2, "I", best_of=3),
                 _p((1.0, 0), (1.0, 0), (1.0, 0), (1.0, 0))),
        SuiteRow("A-E EM A", _cfg(ae, "EM", "MHMM", "A", 5, best_of=3),
                 _p((0.96, 0), (0.90, 0), (0.91, 0), (0.90, 0))),
        SuiteRow("A-E EM Smyth", _cfg(ae, "EM", "MHMM", "Smyth", 5, best_of=3),
                 _p((0.96, 0), (0.90, 0), (0.91, 0), (0.89, 0))),
        SuiteRow("A-E BEEM A", _cfg(ae, "BEEM", "MHMM", "A", 5, "I", best_of=3),
                 _p((0.98, 0), (0.95, 0), (0.95, 0), (0.96, 0))),
    ], needs="characters", repeats=1,
        notes=["single best-of-three result per cell; published values carry no spread"])
    gp = SuiteTable("gp_association", [
        SuiteRow("MGP BEEM simple", _cfg({"name": "sinusoid", "variant": "simple"}, "BEEM", "MGP", "A", 2,
                                         "I", max_iters=15, gp_budget=10, noise_variance=0.01)),
        SuiteRow("MGP BEEM complex", _cfg({"name": "sinusoid", "variant": "complex"}, "BEEM", "MGP", "A", 2,
                                          "I", max_iters=15, gp_budget=10, kernel="periodic",
                                          output_variance=0.1, tau0=1.1, alpha=0.97, epsilon=1.0)),
    ], notes=["purity curves and ROC points are in each row's traces/ and roc.csv"])
    return [t3, t4, t5, t6, hmm, chars, gp]


# published repeat counts: 100 for the clustering tables, 50 (simple) and 10 (complex) for the GP runs
DEFAULT_REPEATS = {"MGP BEEM simple": 50, "MGP BEEM complex": 10}


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", label).strip("_").lower()


@dataclass
class CellDelta:
    table: str
    row: str
    metric: str
    computed: float
    published: float
    published_std: float
    delta: float
    flagged: bool


def compare(table: str, label: str, row: ResultRow, published: Published) -> List[CellDelta]:
    out = []
    for m in SUMMARY_METRICS:
        if m not in published:
            continue
        mean, std = published[m]
        got = row.get(m)
        d = got - mean
        out.append(CellDelta(table, label, m, got, mean, std, d, abs(d) > max(2 * std, TOLERANCE_FLOOR)))
    return out


def _resolve(cfg: dict, data_dir: Optional[Path]) -> dict:
    ds = cfg["dataset"]
    if "path" in ds:
        cfg = {**cfg, "dataset": {**ds, "path": str(Path(data_dir) / ds["path"])}}
    return cfg


def paper_suite(outdir, data_dir=None, repeats: Optional[int] = None, jobs: int = 1,
                tables: Optional[List[str]] = None, echo=print) -> List[CellDelta]:
    """Run every table, write ``<outdir>/<table>.csv|json`` plus per-row artifacts,
    and print computed-vs-published deltas. Returns all compared cells.

    Tables needing files under ``data_dir`` are skipped with a warning when the
    files are absent.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    data_dir = Path(data_dir) if data_dir is not None else None
    cells: List[CellDelta] = []
    for table in suite_tables():
        if tables is not None and table.name not in tables:
            continue
        if table.needs is not None and (data_dir is None or not (data_dir / table.needs).exists()):
            where = data_dir / table.needs if data_dir is not None else f"<data-dir>/{table.needs}"
            log.warning("skipping %s: %s not found", table.name, where)
            echo(f"[skip] {table.name}: {where} not found")
            continue
        rows = []
        for srow in table.rows:
            cfg: ExperimentConfig = config_from_dict(_resolve(srow.config, data_dir))
            n = repeats or table.repeats or DEFAULT_REPEATS.get(srow.label, 100)
            cfg = cfg.with_repeats(n)
            try:
                res = run_experiment(cfg, outdir / table.name / _slug(srow.label), jobs=jobs)
            except ExperimentError as exc:
                log.warning("%s / %s: %s", table.name, srow.label, exc)
                echo(f"[fail] {table.name} / {srow.label}: {exc}")
                continue
            rows.append(res.row)
            line = f"{table.name:26s} {srow.label:18s} n={n:<4d} ACC {res.row.get('ACC'):.4f} ({res.row.get('ACC', 'std'):.4f})"
            if "AUROC_mean" in res.row.stats:
                line += f"  AUROC {res.row.get('AUROC'):.4f}"
            echo(line)
            if srow.published:
                cells.extend(compare(table.name, srow.label, res.row, srow.published))
        for note in table.notes:
            echo(f"  note: {note}")
        if rows:
            emit_table(rows, outdir / f"{table.name}.csv")
            emit_table(rows, outdir / f"{table.name}.json")
    _write_summary(cells, outdir / "summary.csv")
    echo("")
    echo(f"{'table':26s} {'row':18s} {'metric':6s} {'ours':>7s} {'pub':>7s} {'delta':>7s}")
    for c in cells:
        flag = "  <-- beyond tolerance" if c.flagged else ""
        echo(f"{c.table:26s} {c.row:18s} {c.metric:6s} {c.computed:7.4f} {c.published:7.2f} {c.delta:+7.4f}{flag}")
    n_flag = sum(c.flagged for c in cells)
    echo(f"{n_flag} of {len(cells)} cells beyond max(2 x published std, {TOLERANCE_FLOOR})")
    return cells


def _write_summary(cells: List[CellDelta], path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["table", "row", "metric", "computed", "published", "published_std", "delta", "flagged"])
        for c in cells:
            w.writerow([c.table, c.row, c.metric, f"{c.computed:.4f}", f"{c.published:.2f}",
                        f"{c.published_std:.2f}", f"{c.delta:+.4f}", int(c.flagged)])
