import json

import pytest

from dualtrack_plots.cli import cli

from conftest import HEADER


def test_positional_mode(two_traces, tmp_path, capsys):
    out = tmp_path / "fig.png"
    code = cli([str(two_traces[0]), str(two_traces[1]),
                "--x", "both", "--out", str(out)])
    assert code == 0
    assert out.exists()
    assert out.with_suffix(".svg").exists()
    assert "wrote" in capsys.readouterr().out


def test_spec_mode(two_traces, tmp_path):
    spec = {
        "series": [
            {"path": str(two_traces[0]), "label": "schedule 0.90"},
            {"path": str(two_traces[1]), "label": "fixed budget"},
        ],
        "out": str(tmp_path / "fig.png"),
    }
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps(spec))
    assert cli(["--spec", str(spec_path)]) == 0
    assert (tmp_path / "fig.svg").exists()


def test_labels_must_match_csvs(two_traces, tmp_path, capsys):
    code = cli([str(two_traces[0]), str(two_traces[1]),
                "--out", str(tmp_path / "f.png"), "--label", "only-one"])
    assert code == 1
    assert "labels" in capsys.readouterr().err


def test_malformed_csv_fails_cleanly(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(HEADER.replace(",gap", "") + "\n0,0,0,0,1.0,0,0,0,0,0\n")
    code = cli([str(bad), "--out", str(tmp_path / "f.png")])
    assert code == 1
    err = capsys.readouterr().err
    assert "gap" in err and "missing" in err


def test_missing_inputs_usage(capsys):
    assert cli([]) == 1
    assert cli(["--out", "x.png"]) == 1


def test_spec_excludes_positional(two_traces, tmp_path, capsys):
    spec_path = tmp_path / "spec.json"
    spec_path.write_text("{}")
    assert cli(["--spec", str(spec_path), str(two_traces[0])]) == 1


def test_missing_file(tmp_path, capsys):
    assert cli([str(tmp_path / "ghost.csv"), "--out", str(tmp_path / "f.png")]) == 1
