import dataclasses
import json

import numpy as np
import pytest

from neuroview.cells import CellKind, InitKind, InitScheme
from neuroview.cli import (
    RunConfig,
    UsageError,
    load_checkpoint,
    main,
    resolve_dataset,
    save_checkpoint,
)
from neuroview.data import load_ucr, save_ucr, synth_separable
from neuroview.network import EncoderConfig, HeadKind
from neuroview.train import TrainConfig, build_model, evaluate, fit


@pytest.fixture(scope="module")
def dataset_files(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    train = synth_separable(2, 8, 1, 6, seed=0)
    test = synth_separable(2, 8, 1, 10, seed=1)
    train_p = root / "Synth_TRAIN.tsv"
    test_p = root / "Synth_TEST.tsv"
    save_ucr(train, train_p)
    save_ucr(test, test_p)
    return root, train_p, test_p


def run_train(dataset_files, out, extra=()):
    root, train_p, test_p = dataset_files
    argv = [
        "train",
        "--train-path", str(train_p),
        "--test-path", str(test_p),
        "--cell", "rnn",
        "--head", "nv",
        "--hidden", "4",
        "--epochs", "40",
        "--seed", "3",
        "--out", str(out),
    ]
    argv.extend(extra)
    return main(argv)


# ------------------------------------------------------------- run config

def test_run_config_roundtrip_writes_all_defaults(tmp_path):
    rc = RunConfig(train_path="a.tsv", hidden_dim=64, bidirectional=True)
    p = tmp_path / "cfg.txt"
    rc.save(p)
    text = p.read_text()
    for f in dataclasses.fields(RunConfig):
        assert f.name in text  # every field written back explicitly
    rc2 = RunConfig.load(p)
    assert rc2 == rc
    q = tmp_path / "cfg2.txt"
    rc2.save(q)
    assert q.read_text() == text


def test_run_config_rejects_unknown_key(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("no_such_field = 1\n")
    with pytest.raises(UsageError, match="unknown config key"):
        RunConfig.load(p)


def test_run_config_rejects_bad_value(tmp_path):
    p = tmp_path / "cfg.txt"
    p.write_text("epochs = many\n")
    with pytest.raises(UsageError, match="bad value"):
        RunConfig.load(p)


# ------------------------------------------------------------- checkpoints

def test_checkpoint_roundtrip_bytes_and_predictions(tmp_path):
    ds = synth_separable(2, 8, 1, 6, seed=5)
    enc = EncoderConfig(CellKind.GRU, 1, 4, ds.horizon)
    model, _ = fit(ds, TrainConfig(epochs=20, seed=5), enc,
                   HeadKind.NEUROVIEW, InitScheme(InitKind.UNIFORM, 5))
    p = tmp_path / "ckpt.json"
    save_checkpoint(p, model, RunConfig(seed=5), metrics={"train_accuracy": 1.0})
    loaded, rc, metrics, adam = load_checkpoint(p)
    assert metrics == {"train_accuracy": 1.0}
    logits_a, _ = model.forward(ds.features())
    logits_b, _ = loaded.forward(ds.features())
    np.testing.assert_array_equal(logits_a, logits_b)

    q = tmp_path / "ckpt2.json"
    save_checkpoint(q, loaded, rc, metrics=metrics, adam=adam)
    assert p.read_bytes() == q.read_bytes()


def test_checkpoint_version_mismatch(tmp_path):
    ds = synth_separable(2, 8, 1, 3, seed=0)
    enc = EncoderConfig(CellKind.SIMPLE_RNN, 1, 3, ds.horizon)
    model = build_model(enc, HeadKind.NEUROVIEW, 2, InitScheme())
    p = tmp_path / "ckpt.json"
    save_checkpoint(p, model, RunConfig())
    doc = json.loads(p.read_text())
    doc["format_version"] = 99
    p.write_text(json.dumps(doc))
    with pytest.raises(UsageError, match="version"):
        load_checkpoint(p)


# ------------------------------------------------------------------- train

def test_train_subcommand_end_to_end(dataset_files, tmp_path, capsys):
    out = tmp_path / "run"
    assert run_train(dataset_files, out) == 0
    captured = capsys.readouterr().out
    assert "test accuracy" in captured
    assert (out / "checkpoint.json").is_file()
    assert (out / "history.csv").is_file()
    assert (out / "run_config.txt").is_file()
    hist = (out / "history.csv").read_text().strip().splitlines()
    assert hist[0] == "epoch,mean_loss,train_acc"
    assert len(hist) == 41


def test_train_missing_dataset_exits_2(tmp_path, capsys):
    code = main(["train", "--train-path", str(tmp_path / "nope.tsv"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "not found" in capsys.readouterr().err


def test_train_no_dataset_exits_2(tmp_path, capsys):
    code = main(["train", "--out", str(tmp_path / "o")])
    assert code == 2


def test_train_epochs_zero_writes_initial_model(dataset_files, tmp_path):
    out = tmp_path / "run0"
    assert run_train(dataset_files, out, extra=["--epochs", "0"]) == 0
    model, rc, _, _ = load_checkpoint(out / "checkpoint.json")
    fresh = build_model(
        model.encoder, HeadKind.NEUROVIEW, 2, InitScheme(InitKind.UNIFORM, rc.seed)
    )
    np.testing.assert_array_equal(model.head.V, fresh.head.V)
    for a, b in zip(model.cells, fresh.cells):
        for k in a.arrays:
            np.testing.assert_array_equal(a.arrays[k], b.arrays[k])


def test_train_seed_env_override(dataset_files, tmp_path, monkeypatch):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    out3 = tmp_path / "c"
    monkeypatch.setenv("NV_SEED", "11")
    assert run_train(dataset_files, out1) == 0
    assert run_train(dataset_files, out2) == 0
    monkeypatch.setenv("NV_SEED", "12")
    assert run_train(dataset_files, out3) == 0
    a, rc_a, _, _ = load_checkpoint(out1 / "checkpoint.json")
    b, rc_b, _, _ = load_checkpoint(out2 / "checkpoint.json")
    c, rc_c, _, _ = load_checkpoint(out3 / "checkpoint.json")
    assert rc_a.seed == 11 and rc_c.seed == 12
    np.testing.assert_array_equal(a.head.V, b.head.V)
    assert not np.array_equal(a.head.V, c.head.V)


def test_train_from_config_file(dataset_files, tmp_path):
    root, train_p, test_p = dataset_files
    rc = RunConfig(
        train_path=str(train_p), test_path=str(test_p), cell="rnn",
        head="nv", hidden_dim=4, epochs=15, seed=1,
        output_dir=str(tmp_path / "cfg_run"),
    )
    cfg_path = tmp_path / "run.cfg"
    rc.save(cfg_path)
    assert main(["train", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "cfg_run" / "checkpoint.json").is_file()


def test_resolve_dataset_by_name_case_insensitive(dataset_files):
    root, train_p, test_p = dataset_files
    tr, te = resolve_dataset(root.name.upper(), str(root.parent))
    assert tr == str(train_p)
    assert te == str(test_p)


def test_resolve_dataset_directory(dataset_files):
    root, train_p, test_p = dataset_files
    tr, te = resolve_dataset(str(root), "unused")
    assert tr == str(train_p)
    assert te == str(test_p)


def test_resolve_dataset_missing():
    with pytest.raises(UsageError, match="could not resolve"):
        resolve_dataset("nothere", "/definitely/missing")


# ------------------------------------------------------------------- sweep

def test_sweep_two_sizes(dataset_files, tmp_path, capsys):
    root, train_p, test_p = dataset_files
    out = tmp_path / "sweep"
    code = main([
        "sweep", "--train-path", str(train_p), "--test-path", str(test_p),
        "--cell", "rnn", "--head", "nv", "--epochs", "30", "--seed", "0",
        "--sizes", "3", "4", "--out", str(out),
    ])
    assert code == 0
    table = (out / "sweep.tsv").read_text().strip().splitlines()
    assert table[0] == "size\ttest_accuracy"
    assert len(table) == 3
    assert (out / "best_checkpoint.json").is_file()
    best_model, _, _, _ = load_checkpoint(out / "best_checkpoint.json")
    rows = [line.split("\t") for line in table[1:]]
    accs = {int(s): float(a) for s, a in rows}
    best_acc = max(accs.values())
    best_size = min(s for s, a in accs.items() if a == best_acc)
    assert best_model.encoder.hidden_dim == best_size


def test_sweep_duplicate_sizes_rejected(dataset_files, tmp_path, capsys):
    root, train_p, test_p = dataset_files
    code = main([
        "sweep", "--train-path", str(train_p), "--test-path", str(test_p),
        "--sizes", "4", "4", "--out", str(tmp_path / "s"),
    ])
    assert code == 2
    assert "duplicate" in capsys.readouterr().err


# --------------------------------------------------------------- evaluate

@pytest.fixture(scope="module")
def trained_run(dataset_files, tmp_path_factory):
    out = tmp_path_factory.mktemp("trained")
    assert run_train(dataset_files, out, extra=["--epochs", "60"]) == 0
    return out


def test_evaluate_subcommand(dataset_files, trained_run, capsys):
    root, train_p, test_p = dataset_files
    code = main(["evaluate", "--checkpoint", str(trained_run / "checkpoint.json"),
                 "--dataset-path", str(test_p)])
    assert code == 0
    out = capsys.readouterr().out
    assert "overall accuracy" in out
    assert "class 0 accuracy" in out


# ---------------------------------------------------------------- inspect

def test_inspect_subcommand(trained_run, tmp_path, capsys):
    out = tmp_path / "analysis"
    code = main(["inspect", "--checkpoint", str(trained_run / "checkpoint.json"),
                 "--classes", "all", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "class 0: top-5 timesteps" in printed
    assert (out / "weight_map_class0.csv").is_file()
    assert (out / "weight_map_class1.csv").is_file()
    assert (out / "class_similarity.csv").is_file()
    assert (out / "manifest.json").is_file()


def test_inspect_rejects_non_nv_checkpoint(dataset_files, tmp_path, capsys):
    out = tmp_path / "last_run"
    assert run_train(dataset_files, out,
                     extra=["--head", "last", "--epochs", "5"]) == 0
    code = main(["inspect", "--checkpoint", str(out / "checkpoint.json"),
                 "--out", str(tmp_path / "x")])
    assert code == 2
    assert "head" in capsys.readouterr().err


def test_inspect_invalid_class(trained_run, tmp_path, capsys):
    code = main(["inspect", "--checkpoint", str(trained_run / "checkpoint.json"),
                 "--classes", "7", "--out", str(tmp_path / "x")])
    assert code == 2


# ----------------------------------------------------------- counterfactual

def test_counterfactual_subcommand(dataset_files, trained_run, tmp_path):
    root, train_p, test_p = dataset_files
    out = tmp_path / "cf.json"
    code = main([
        "counterfactual", "--checkpoint", str(trained_run / "checkpoint.json"),
        "--dataset-path", str(test_p), "--class", "0",
        "--k-list", "0", "1", "3", "--out", str(out),
    ])
    assert code == 0
    rows = json.loads(out.read_text())
    assert [r["k"] for r in rows] == [0, 1, 3]
    # the k = 0 row reproduces the unmodified evaluation
    model, rc, _, _ = load_checkpoint(trained_run / "checkpoint.json")
    ds = load_ucr(test_p)
    base = evaluate(model, ds)
    assert rows[0]["overall_accuracy"] == base.overall_accuracy
    assert rows[0]["zeroed_steps"] == []
    assert len(rows[2]["zeroed_steps"]) == 3


def test_counterfactual_k_too_large(dataset_files, trained_run, tmp_path, capsys):
    root, train_p, test_p = dataset_files
    code = main([
        "counterfactual", "--checkpoint", str(trained_run / "checkpoint.json"),
        "--dataset-path", str(test_p), "--class", "0", "--k-list", "999",
    ])
    assert code == 2
    assert "outside" in capsys.readouterr().err


# ------------------------------------------------------------------ export

def test_export_subcommand(dataset_files, trained_run, tmp_path):
    root, train_p, test_p = dataset_files
    out = tmp_path / "bundle"
    code = main([
        "export", "--checkpoint", str(trained_run / "checkpoint.json"),
        "--dataset-path", str(test_p), "--k-list", "0", "2",
        "--out", str(out),
    ])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert "counterfactuals.json" in manifest["files"]
    assert "class_similarity.csv" in manifest["files"]
    rows = json.loads((out / "counterfactuals.json").read_text())
    assert len(rows) == 4  # 2 classes x 2 k values


# -------------------------------------------------------------------- help

def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    for sub in ("train", "sweep", "evaluate", "inspect", "counterfactual", "export"):
        assert main([sub, "--help"]) == 0
        assert "usage" in capsys.readouterr().out.lower()
