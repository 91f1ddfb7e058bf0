import pandas as pd
import pytest

from core.datasets import write_dataset
from core.report import read_records
from main import build_config, build_parser, main


@pytest.fixture
def clouds_csv(tmp_path, two_clouds):
    path = tmp_path / "clouds.csv"
    write_dataset(two_clouds, str(path))
    return str(path)


def base_args(dataset, out):
    return [
        "--dataset", dataset,
        "--m", "5",
        "--runs", "2",
        "--sweeps", "50",
        "--penalty", "2000",
        "--out", out,
        "--no-cache",
    ]


def test_main_runs_and_prints_table(tmp_path, clouds_csv, capsys):
    out = str(tmp_path / "records.jsonl")
    argv = base_args(clouds_csv, out) + ["--method", "da-cr", "hac", "--seed", "0", "1", "--stats"]
    assert main(argv) == 0

    printed = capsys.readouterr().out
    assert "clouds: n=20 d=2 classes=2 cv=0.0" in printed
    assert "da-cr" in printed and "hac" in printed
    assert "**" in printed
    assert len(read_records(out)) == 4 + 2


def test_main_writes_table_csv(tmp_path, clouds_csv):
    table = tmp_path / "table.csv"
    argv = base_args(clouds_csv, str(tmp_path / "r.jsonl"))
    assert main(argv + ["--method", "hac", "--k", "2", "3", "--table-csv", str(table)]) == 0
    frame = pd.read_csv(table)
    assert frame[frame["dataset"] != "# Best"]["k"].tolist() == [2, 3]
    assert frame[frame["dataset"] == "# Best"]["best_count"].tolist() == [1, 1]


def test_missing_dataset_exits_with_tagged_message(tmp_path, capsys):
    code = main(base_args(str(tmp_path / "absent.csv"), str(tmp_path / "r.jsonl")))
    assert code == 1
    assert capsys.readouterr().err.startswith("[data]")


def test_invalid_configuration_exits_nonzero(tmp_path, clouds_csv, capsys):
    argv = base_args(clouds_csv, str(tmp_path / "r.jsonl")) + ["--runs", "0"]
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("[config]")


def test_failed_seeds_exit_nonzero(tmp_path, clouds_csv, capsys):
    argv = base_args(clouds_csv, str(tmp_path / "r.jsonl")) + ["--method", "hac", "--k", "40"]
    assert main(argv) == 1
    assert "[partition]" in capsys.readouterr().err


def test_unlabeled_dataset_needs_k(tmp_path, capsys):
    path = tmp_path / "plain.csv"
    path.write_text("a,b\n0,0\n1,1\n5,5\n6,6\n")
    assert main(base_args(str(path), str(tmp_path / "r.jsonl"))) == 1
    assert "--k" in capsys.readouterr().err


def test_build_config_from_flags(two_clouds):
    args = build_parser().parse_args(
        ["--dataset", "clouds", "--k", "2", "4", "--seed", "3", "--time-limit", "1.5"]
    )
    config = build_config(args, two_clouds)
    assert config.k_mode == "explicit"
    assert config.k_values == [2, 4]
    assert config.seeds == [3]
    assert config.anneal.time_limit == 1.5
    assert config.ensemble.k_true == 2


def test_build_config_k_mode(two_clouds):
    args = build_parser().parse_args(["--dataset", "clouds", "--k-mode", "2k_true"])
    config = build_config(args, two_clouds)
    assert config.resolve_k(two_clouds.num_classes) == [4]
