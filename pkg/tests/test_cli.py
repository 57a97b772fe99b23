"""Tests for the command-line front end."""

import json

import pytest

from bmtomo.cli import build_parser, main


def _parse(argv):
    return build_parser().parse_args(argv)


def test_run_word_is_optional(capsys, tmp_path):
    argv = [
        "--experiment", "accuracy_boxplot", "--n", "1",
        "--estimator", "bm:1", "--m", "64", "--seeds", "2",
        "--iterations", "80", "--burnin", "20",
        "--out", str(tmp_path),
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(["run"] + argv) == 0
    second = capsys.readouterr().out
    assert first == second


def test_seed_argument_forms():
    argv = ["run", "--experiment", "accuracy_boxplot", "--estimator", "bm:1"]
    assert _parse(argv + ["--seeds", "4"]).seeds == (0, 1, 2, 3)
    assert _parse(argv + ["--seeds", "3,7,11"]).seeds == (3, 7, 11)
    with pytest.raises(SystemExit):
        _parse(argv + ["--seeds", "0.5"])
    with pytest.raises(SystemExit):
        _parse(argv + ["--seeds", "0"])


def test_lambda_argument_forms():
    argv = ["run", "--experiment", "accuracy_boxplot", "--estimator", "bm:1"]
    assert _parse(argv + ["--lambda", "m/2"]).lam is None
    assert _parse(argv + ["--lambda", "512"]).lam == 512.0
    with pytest.raises(SystemExit):
        _parse(argv + ["--lambda", "-3"])
    with pytest.raises(SystemExit):
        _parse(argv + ["--lambda", "half"])


def test_grid_and_n_parsing():
    argv = [
        "run", "--experiment", "slope_vs_m", "--estimator", "bm:2",
        "--m-grid", "32,64,128", "--n", "3",
    ]
    args = _parse(argv)
    assert args.m_grid == (32, 64, 128)
    assert args.n == (3,)
    assert _parse(
        ["run", "--experiment", "timing_table", "--estimator", "prob", "--n", "2,3"]
    ).n == (2, 3)


def test_estimators_are_repeatable():
    args = _parse(
        [
            "run", "--experiment", "accuracy_boxplot",
            "--estimator", "bm:2", "--estimator", "prob",
        ]
    )
    assert args.estimators == ["bm:2", "prob"]


def test_invalid_choices_exit():
    with pytest.raises(SystemExit):
        _parse(["run", "--experiment", "scatter", "--estimator", "bm:1"])
    with pytest.raises(SystemExit):
        _parse(
            ["run", "--experiment", "accuracy_boxplot", "--estimator", "bm:1",
             "--design", "adaptive"]
        )
    # estimator specs are validated when the config is built
    with pytest.raises(SystemExit):
        main(["run", "--experiment", "accuracy_boxplot", "--estimator", "bm:zero"])
    with pytest.raises(SystemExit):
        main(["run", "--experiment", "accuracy_boxplot"])  # no estimator


def test_end_to_end_writes_artifacts(capsys, tmp_path):
    code = main(
        [
            "run", "--experiment", "accuracy_boxplot", "--n", "1",
            "--target", "rank1", "--estimator", "bm:1", "--estimator", "prob",
            "--m", "64", "--seeds", "2", "--iterations", "100", "--burnin", "30",
            "--out", str(tmp_path),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "rows: 4" in out
    assert str(tmp_path / "errors.csv") in out
    record = json.loads((tmp_path / "record.json").read_text())
    assert record["config"]["experiment"] == "accuracy_boxplot"
    assert len(record["rows"]) == 4
    assert (tmp_path / "errors.csv").exists()


def test_serve_parser():
    args = _parse(["serve", "--port", "9001"])
    assert (args.command, args.host, args.port) == ("serve", "127.0.0.1", 9001)
