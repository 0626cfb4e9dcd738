import csv
import json

import numpy as np
import pytest
import yaml

from beem.bench import cli
from beem.bench.config import ConfigError, config_from_dict, dump_config, load_config
from beem.bench.report import TABLE_COLUMNS, TRACE_COLUMNS, emit_table, load_table_json
from beem.bench.runner import DATA_SEED_OFFSET, ExperimentError, load_dataset, run_experiment
from beem.bench.suite import compare, paper_suite, suite_tables
from beem.datagen import gen_square, load_labeled_csv, load_sequence_corpus

BASE = {"dataset": {"name": "square"}, "method": "BEEM", "model_family": "GMM", "init": "A", "k": 4,
        "weight_mode": "I", "repeats": 2}


def cfg(**over):
    return config_from_dict({**BASE, **over})


def write_yaml(tmp_path, doc, name="exp.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(doc))
    return p


# config

def test_config_defaults_and_roundtrip():
    c = config_from_dict({k: v for k, v in BASE.items() if k not in ("weight_mode", "repeats")})
    assert c.repeats == 100 and c.base_seed == 0 and c.weight_label == "I"
    again = config_from_dict(yaml.safe_load(dump_config(c)))
    assert again == c


@pytest.mark.parametrize("over, match", [
    ({"bogus": 1}, "unknown config key"),
    ({"method": "EM", "weight_mode": "I"}, "weight_mode applies to BEEM only"),
    ({"init": "B", "weight_mode": "II"}, "not available"),
    ({"model_family": "MHMM"}, "does not fit"),
    ({"method": "DAEM", "init": "B", "weight_mode": None}, "unsupported combination"),
    ({"method_hyperparams": {"nope": 1}}, "unknown method_hyperparams"),
    ({"dataset": {"name": "square", "sides": 3}}, "unknown parameter"),
    ({"dataset": {"name": "mnist"}}, "not one of"),
    ({"k": 0}, "k must be"),
    ({"repeats": 1.5}, "repeats must be an integer"),
    ({"method": "GIBBS"}, "not one of"),
    ({"dataset": "/no/such/file.csv"}, "does not exist"),
])
def test_config_rejects(over, match):
    with pytest.raises(ConfigError, match=match):
        cfg(**over)


def test_config_missing_keys():
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict({"method": "EM"})


def test_load_config_relative_path(tmp_path):
    (tmp_path / "d.csv").write_text("a,y\n1,0\n2,1\n")
    p = write_yaml(tmp_path, {**BASE, "dataset": "d.csv", "k": 2, "weight_mode": "I"})
    c = load_config(p)
    assert c.dataset.name == "csv" and c.dataset.params["path"] == str(tmp_path / "d.csv")
    (tmp_path / "bad.yaml").write_text("k: [1,\n")
    with pytest.raises(ConfigError, match="YAML"):
        load_config(tmp_path / "bad.yaml")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.yaml")


# runner

def test_data_seed_offset():
    assert np.array_equal(load_dataset(cfg(), 3).points, gen_square(seed=3 + DATA_SEED_OFFSET).points)


def test_repeats_one_gives_zero_std(tmp_path):
    res = run_experiment(cfg(repeats=1), None)
    for m in ("ACC", "Homo", "NMI", "ARI", "em_steps"):
        assert res.row.get(m, "std") == 0.0
    assert res.row.n_ok == 1


def test_run_artifacts_and_traces(tmp_path):
    c = cfg(repeats=2)
    res = run_experiment(c, tmp_path)
    for f in ("config.yaml", "table.csv", "table.json", "runs.csv", "timing.csv"):
        assert (tmp_path / f).exists()
    with (tmp_path / "table.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == TABLE_COLUMNS
    assert all(len(v.split(".")[-1]) == 4 for v in rows[1][3:])
    rep = res.runs[0].report
    with (tmp_path / "traces" / "run_000.csv").open() as fh:
        tr = list(csv.DictReader(fh))
    assert tuple(tr[0]) == TRACE_COLUMNS
    T = len(rep.loglik_trace)
    assert len(tr) == 4 * T
    for t in range(1, T + 1):
        sizes = [int(r["cluster_size"]) for r in tr if int(r["iteration"]) == t]
        assert sum(sizes) == 210
    assert float(tr[-1]["purity"]) >= 0.0


def test_table_json_roundtrip(tmp_path):
    res = run_experiment(cfg(repeats=2), None)
    emit_table([res.row], tmp_path / "t.json")
    (back,) = load_table_json(tmp_path / "t.json")
    assert back.stats == res.row.stats and back.method == "BEEM" and back.n_ok == 2
    with pytest.raises(ValueError):
        emit_table([res.row], tmp_path / "t.xml")
    with pytest.raises(ValueError):
        emit_table([], tmp_path / "t.csv")


def test_runner_deterministic_bytes(tmp_path):
    c = cfg(repeats=3)
    run_experiment(c, tmp_path / "a")
    run_experiment(c, tmp_path / "b")
    for f in ("table.csv", "runs.csv", "traces/run_002.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_runner_parallel_matches_serial(tmp_path):
    c = cfg(method="EM", weight_mode=None, repeats=4)
    a = run_experiment(c, None, jobs=1)
    b = run_experiment(c, None, jobs=2)
    assert a.row.stats == b.row.stats


def test_runner_failure_threshold(tmp_path):
    (tmp_path / "tiny.csv").write_text("a,y\n1,0\n2,1\n")
    c = config_from_dict({**BASE, "dataset": str(tmp_path / "tiny.csv"), "method": "EM",
                          "weight_mode": None, "k": 3})
    with pytest.raises(ExperimentError):
        run_experiment(c, tmp_path / "out")
    with (tmp_path / "out" / "runs.csv").open() as fh:
        assert all(r["status"] == "failed" for r in csv.DictReader(fh))


def test_mgp_run_reports_auroc():
    c = config_from_dict({"dataset": {"name": "sinusoid"}, "method": "BEEM", "model_family": "MGP",
                          "init": "A", "k": 2, "repeats": 1,
                          "method_hyperparams": {"max_iters": 3, "gp_budget": 2}})
    res = run_experiment(c, None)
    assert 0.0 <= res.row.get("AUROC") <= 1.0
    assert res.runs[0].roc[0].tolist() == [0.0, 0.0]


def test_best_of_picks_max_acc():
    c = config_from_dict({"dataset": {"name": "random_hmm", "len_lo": 5, "len_hi": 8, "seqs_per_cluster": 4},
                          "method": "EM", "model_family": "MHMM", "init": "A", "k": 3, "repeats": 1,
                          "method_hyperparams": {"best_of": 3, "max_iters": 5}})
    single = run_experiment(config_from_dict({**c.to_dict(), "method_hyperparams": {"max_iters": 5}}), None)
    best = run_experiment(c, None)
    assert best.row.get("ACC") >= single.row.get("ACC")


# CLI

def test_cli_run_ok(tmp_path, capsys):
    p = write_yaml(tmp_path, BASE)
    assert cli.main(["run", "--config", str(p), "--outdir", str(tmp_path / "o"), "--repeats", "1"]) == 0
    assert "ACC" in capsys.readouterr().out
    assert (tmp_path / "o" / "table.csv").exists()


def test_cli_config_error_exit_1(tmp_path, capsys):
    p = write_yaml(tmp_path, {**BASE, "colour": "red"})
    assert cli.main(["run", "--config", str(p), "--outdir", str(tmp_path / "o")]) == 1
    assert "unknown config key" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "nope.yaml"), "--outdir", str(tmp_path)]) == 1


def test_cli_runtime_error_exit_2(tmp_path):
    (tmp_path / "tiny.csv").write_text("a,y\n1,0\n2,1\n")
    p = write_yaml(tmp_path, {**BASE, "dataset": "tiny.csv", "method": "EM", "weight_mode": None, "k": 3})
    assert cli.main(["run", "--config", str(p), "--outdir", str(tmp_path / "o")]) == 2


def test_cli_bad_arguments_exit_nonzero(tmp_path):
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", "x.yaml", "--outdir", str(tmp_path), "--repeats", "0"])
    with pytest.raises(SystemExit):
        cli.main(["gen", "--dataset", "nosuch", "--out", str(tmp_path / "x.csv")])


def test_cli_gen_vectors_roundtrip(tmp_path):
    out = tmp_path / "sq.csv"
    assert cli.main(["gen", "--dataset", "square", "--seed", "3", "--out", str(out)]) == 0
    d = load_labeled_csv(out, "label")
    ref = gen_square(seed=3)
    assert np.array_equal(d.points, ref.points) and np.array_equal(d.labels, ref.labels)


def test_cli_gen_sequences(tmp_path):
    out = tmp_path / "seqs"
    assert cli.main(["gen", "--dataset", "random_hmm_short", "--seed", "1", "--out", str(out)]) == 0
    corpus = load_sequence_corpus(out)
    assert len(corpus) == 60 and corpus.n_classes == 3
    js = tmp_path / "seqs.json"
    assert cli.main(["gen", "--dataset", "random_hmm_short", "--seed", "1", "--out", str(js)]) == 0
    doc = json.loads(js.read_text())
    assert len(doc["sequences"]) == 60 and doc["spec"]["len_hi"] == 10


# suite

def test_suite_configs_all_validate(tmp_path):
    for table in suite_tables():
        for row in table.rows:
            c = dict(row.config)
            if "path" in c["dataset"]:
                continue
            config_from_dict(c)


def test_suite_skips_missing_data(tmp_path):
    lines = []
    cells = paper_suite(tmp_path, data_dir=tmp_path / "none", repeats=1,
                        tables=["table6_iris", "characters"], echo=lines.append)
    assert cells == []
    assert sum(line.startswith("[skip]") for line in lines) == 2
    assert (tmp_path / "summary.csv").exists()


def test_suite_runs_one_table(tmp_path):
    lines = []
    cells = paper_suite(tmp_path, repeats=1, tables=["table4_balanced_square"], echo=lines.append)
    assert (tmp_path / "table4_balanced_square.csv").exists()
    assert len(cells) == 2 * 4
    assert any("beyond" in line for line in lines)


def test_compare_flags_beyond_tolerance():
    res = run_experiment(cfg(repeats=1), None)
    acc = res.row.get("ACC")
    (cell,) = compare("t", "r", res.row, {"ACC": (acc - 0.04, 0.0)})
    assert not cell.flagged
    (cell,) = compare("t", "r", res.row, {"ACC": (acc - 0.2, 0.05)})
    assert cell.flagged and cell.delta == pytest.approx(0.2)


def test_shipped_configs_load():
    from pathlib import Path

    paths = sorted((Path(__file__).parents[1] / "configs").glob("*.yaml"))
    assert paths
    for p in paths:
        load_config(p)
