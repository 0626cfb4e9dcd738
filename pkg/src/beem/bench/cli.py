"""``beem-bench``: run one experiment, the full published grid, or write a dataset."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from beem import datagen
from beem.bench.config import ConfigError, load_config
from beem.bench.runner import ExperimentError, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2

GENERATORS = {
    "square": lambda seed: datagen.gen_square(seed=seed),
    "balanced_square": lambda seed: datagen.gen_square(counts=datagen.SQUARE_BALANCED, seed=seed),
    "rainbow": lambda seed: datagen.gen_rainbow(seed=seed),
    "random_hmm_short": lambda seed: datagen.gen_random_hmms(len_lo=5, len_hi=10, seed=seed),
    "random_hmm_long": lambda seed: datagen.gen_random_hmms(len_lo=20, len_hi=50, seed=seed),
    "sinusoid_simple": lambda seed: datagen.gen_sinusoid_association("simple", seed=seed),
    "sinusoid_complex": lambda seed: datagen.gen_sinusoid_association("complex", seed=seed),
}


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beem-bench", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one experiment described by a YAML config")
    r.add_argument("--config", required=True, type=Path)
    r.add_argument("--outdir", required=True, type=Path)
    r.add_argument("--repeats", type=_positive)
    r.add_argument("--jobs", type=_positive, default=1)
    r.add_argument("--no-traces", action="store_true", help="skip per-run trace files")

    s = sub.add_parser("paper-suite", help="regenerate every published table")
    s.add_argument("--outdir", required=True, type=Path)
    s.add_argument("--data-dir", type=Path, help="directory holding iris.csv and characters/")
    s.add_argument("--repeats", type=_positive, help="override every row's repeat count")
    s.add_argument("--jobs", type=_positive, default=1)
    s.add_argument("--tables", nargs="+", help="run only these tables")

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--dataset", required=True, choices=sorted(GENERATORS))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, type=Path,
                   help="CSV file for vector data; directory (or .json file) for sequences")
    return p


def write_dataset(data, out: Path) -> None:
    """Vectors go to CSV (features then ``label``). Sequences go either to a
    directory of one-file-per-sequence (loadable as a corpus) or to one JSON file."""
    if isinstance(data, datagen.LabeledVectors):
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            d = data.points.shape[1]
            w.writerow([f"x{i}" for i in range(d)] + ["label"])
            for row, lab in zip(data.points, data.labels):
                w.writerow([repr(float(v)) for v in row] + [int(lab)])
        return
    if out.suffix == ".json":
        out.parent.mkdir(parents=True, exist_ok=True)
        doc = {"labels": data.labels.tolist(), "sequences": [np.asarray(s).tolist() for s in data.sequences],
               "spec": data.generator_spec}
        out.write_text(json.dumps(doc), encoding="utf-8")
        return
    out.mkdir(parents=True, exist_ok=True)
    width = len(str(len(data.sequences)))
    for i, (seq, lab) in enumerate(zip(data.sequences, data.labels)):
        tag = chr(ord("A") + int(lab))
        np.savetxt(out / f"{tag}_{i:0{width}d}.txt", np.asarray(seq, dtype=float).reshape(len(seq), -1))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.repeats is not None:
                cfg = cfg.with_repeats(args.repeats)
            res = run_experiment(cfg, args.outdir, jobs=args.jobs, write_traces=not args.no_traces)
            row = res.row
            print(f"{row.method} {row.init} {row.weight} on {row.dataset}: "
                  + " ".join(f"{m} {row.get(m):.4f} ({row.get(m, 'std'):.4f})" for m in ("ACC", "Homo", "NMI", "ARI"))
                  + f"  steps {row.get('em_steps'):.2f}  [{row.n_ok}/{row.repeats} ok]")
            print(f"wrote {args.outdir}")
        elif args.command == "paper-suite":
            from beem.bench.suite import paper_suite

            paper_suite(args.outdir, args.data_dir, repeats=args.repeats, jobs=args.jobs, tables=args.tables)
        else:
            write_dataset(GENERATORS[args.dataset](args.seed), args.out)
            print(f"wrote {args.out}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentError as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
