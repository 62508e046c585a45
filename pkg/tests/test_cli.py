"""CLI: exit codes, config merging, environment seed, output files."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from travlr.cli import EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from travlr.dataset import load_config, load_manifest


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_usage_errors_exit_1(capsys):
    code, _, err = run(capsys)
    assert code == EXIT_USAGE
    code, _, err = run(capsys, "generate", "--out", "/tmp/x", "--task", "sorting")
    assert code == EXIT_USAGE
    assert "invalid choice" in err
    code, _, err = run(capsys, "generate", "--out", "/tmp/x")
    assert code == EXIT_USAGE
    assert "task is required" in err
    code, _, _ = run(capsys, "nonsense")
    assert code == EXIT_USAGE


def test_help_exits_0(capsys):
    assert run(capsys, "--help")[0] == 0
    assert run(capsys, "generate", "--help")[0] == 0


def gen_args(out, **kw):
    argv = [
        "generate",
        "--task", kw.pop("task", "comparison"),
        "--out", str(out),
        "--train-size", "16", "--val-size", "8",
        "--ind-test-size", "8", "--ood-test-size", "16",
        "--jobs", "1",
    ]
    for key, value in kw.items():
        argv += [f"--{key.replace('_', '-')}", str(value)]
    return argv


def test_generate_then_verify_round_trip(tmp_path, capsys):
    root = tmp_path / "ds"
    code, out, _ = run(capsys, *gen_args(root, seed=5))
    assert code == EXIT_OK
    assert "comparison" in out
    assert (root / "train" / "manifest.jsonl").exists()
    code, out, _ = run(capsys, "verify", str(root))
    assert code == EXIT_OK
    assert "OK" in out


def test_verify_failure_exits_2_and_writes_report(tmp_path, capsys):
    root = tmp_path / "ds"
    assert run(capsys, *gen_args(root, seed=5))[0] == EXIT_OK
    manifest = root / "val" / "manifest.jsonl"
    lines = manifest.read_text().splitlines()
    data = json.loads(lines[0])
    data["label"] = not data["label"]
    lines[0] = json.dumps(data, separators=(",", ":"))
    manifest.write_text("\n".join(lines) + "\n")
    report_path = tmp_path / "report.json"
    code, out, _ = run(capsys, "verify", str(root), "--report", str(report_path))
    assert code == EXIT_VERIFY
    assert "label_oracle" in out
    report = json.loads(report_path.read_text())
    assert report["ok"] is False
    assert report["violations"]


def test_env_seed_default_and_flag_override(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TRAVLR_SEED", "5")
    env_root = tmp_path / "env"
    assert run(capsys, *gen_args(env_root))[0] == EXIT_OK
    assert load_config(env_root).seed == 5
    flag_root = tmp_path / "flag"
    assert run(capsys, *gen_args(flag_root, seed=9))[0] == EXIT_OK
    assert load_config(flag_root).seed == 9
    monkeypatch.setenv("TRAVLR_SEED", "ten")
    code, _, err = run(capsys, *gen_args(tmp_path / "bad"))
    assert code == EXIT_USAGE
    assert "TRAVLR_SEED" in err


def test_config_file_merge_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "task": "cardinality", "seed": 33,
        "train_size": 16, "val_size": 8, "ind_test_size": 8, "ood_test_size": 16,
        "jobs": 1,
    }))
    root = tmp_path / "from-config"
    code, _, _ = run(capsys, "generate", "--out", str(root), "--config", str(cfg))
    assert code == EXIT_OK
    spec = load_config(root)
    assert spec.task == "cardinality"
    assert spec.seed == 33
    assert spec.sizes.train == 16
    over = tmp_path / "overridden"
    code, _, _ = run(capsys, "generate", "--out", str(over), "--config", str(cfg), "--seed", "44")
    assert code == EXIT_OK
    assert load_config(over).seed == 44


def test_unknown_config_key_exits_1(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"task": "comparison", "grid": 9}))
    code, _, err = run(capsys, "generate", "--out", str(tmp_path / "x"), "--config", str(cfg))
    assert code == EXIT_USAGE
    assert "unknown config keys: grid" in err
    cfg.write_text("[]")
    code, _, err = run(capsys, "generate", "--out", str(tmp_path / "x"), "--config", str(cfg))
    assert code == EXIT_USAGE
    cfg.write_text("{broken")
    code, _, err = run(capsys, "generate", "--out", str(tmp_path / "x"), "--config", str(cfg))
    assert code == EXIT_USAGE
    code, _, err = run(
        capsys, "generate", "--out", str(tmp_path / "x"), "--config", str(tmp_path / "absent.json")
    )
    assert code == EXIT_USAGE


def test_view_and_fewshot_commands(small_dataset, tmp_path, capsys):
    import shutil

    root = tmp_path / "ds"
    shutil.copytree(small_dataset, root)
    code, out, _ = run(capsys, "view", str(root), "--setting", "mixed", "--seed", "3")
    assert code == EXIT_OK
    assert out.count("manifest.mixed.jsonl") == 4
    mixed = load_manifest(root / "train" / "manifest.mixed.jsonl")
    assert sum(r["modality"] == "image_only" for r in mixed) == 10

    code, out, _ = run(capsys, "fewshot", str(root), "--n", "20", "--seed", "1")
    assert code == EXIT_OK
    few_path = Path(out.strip())
    assert few_path.name == "manifest.fewshot20.jsonl"
    subset = load_manifest(few_path)
    assert len(subset) == 20
    assert sum(r["label"] for r in subset) == 10

    code, _, err = run(capsys, "fewshot", str(root), "--n", "400")
    assert code == EXIT_USAGE
    assert "cannot draw" in err

    code, _, _ = run(capsys, "view", str(tmp_path / "missing"), "--setting", "mixed")
    assert code == EXIT_USAGE


def write_preds(path, records, fn):
    path.write_text(
        "\n".join(json.dumps({"id": r["id"], "pred": fn(r)}) for r in records) + "\n"
    )


def test_score_command_single_and_aggregate(small_dataset, tmp_path, capsys):
    manifest = small_dataset / "ind_test" / "manifest.jsonl"
    records = load_manifest(manifest)
    perfect = tmp_path / "perfect.jsonl"
    write_preds(perfect, records, lambda r: r["label"])
    always = tmp_path / "always.jsonl"
    write_preds(always, records, lambda r: True)

    code, out, _ = run(capsys, "score", "--manifest", str(manifest), "--predictions", str(perfect))
    assert code == EXIT_OK
    assert "macro_f1=100.00" in out
    assert "converged=yes" in out

    report_path = tmp_path / "score.json"
    code, out, _ = run(
        capsys, "score", "--manifest", str(manifest),
        "--predictions", str(perfect), str(always),
        "--report", str(report_path),
    )
    assert code == EXIT_OK
    assert "aggregate:" in out
    assert "basis=converged" in out
    doc = json.loads(report_path.read_text())
    assert len(doc["runs"]) == 2
    assert doc["aggregate"]["n_runs"] == 2

    code, _, err = run(
        capsys, "score", "--manifest", str(manifest),
        "--predictions", str(perfect), str(always),
        "--by-pair", str(tmp_path / "pairs.csv"),
    )
    assert code == EXIT_USAGE
    assert "exactly one predictions file" in err


def test_score_command_tables(small_dataset, tmp_path, capsys):
    manifest = small_dataset / "ood_test" / "manifest.jsonl"
    records = load_manifest(manifest)
    preds = tmp_path / "preds.jsonl"
    write_preds(preds, records, lambda r: False)
    pair_csv = tmp_path / "pairs.csv"
    count_csv = tmp_path / "counts.csv"
    code, _, _ = run(
        capsys, "score", "--manifest", str(manifest), "--predictions", str(preds),
        "--by-pair", str(pair_csv), "--by-count", str(count_csv),
    )
    assert code == EXIT_OK
    pair_lines = pair_csv.read_text().splitlines()
    assert pair_lines[0] == "scope,a,b,n,n_wrong,error_rate"
    assert len(pair_lines) == 1 + 72
    assert count_csv.read_text().splitlines()[0] == "total_objects,n,n_wrong,error_rate"
    # count matrix is cardinality-only; comparison records must be refused
    code, _, err = run(
        capsys, "score", "--manifest", str(manifest), "--predictions", str(preds),
        "--count-matrix", str(tmp_path / "matrix.csv"),
    )
    assert code == EXIT_USAGE


def test_score_missing_prediction_exits_1(small_dataset, tmp_path, capsys):
    manifest = small_dataset / "val" / "manifest.jsonl"
    records = load_manifest(manifest)
    partial = tmp_path / "partial.jsonl"
    write_preds(partial, records[:-1], lambda r: True)
    code, _, err = run(capsys, "score", "--manifest", str(manifest), "--predictions", str(partial))
    assert code == EXIT_USAGE
    assert "missing" in err.lower()


def test_inspect_command(small_dataset, capsys):
    code, out, _ = run(capsys, "inspect", str(small_dataset), "--head", "2")
    assert code == EXIT_OK
    assert out.count("id:      ") == 2
    assert "A   B   C   D   E   F" in out

    target = load_manifest(small_dataset / "train" / "manifest.jsonl")[7]
    code, out, _ = run(capsys, "inspect", str(small_dataset), "--id", target["id"])
    assert code == EXIT_OK
    assert target["id"] in out
    assert target["caption"] in out

    code, _, err = run(capsys, "inspect", str(small_dataset), "--id", "comparison-train-999")
    assert code == EXIT_USAGE
    assert "not in" in err
