import json
import subprocess
import sys

from fusionkz.cli import main


def test_fusion_table_csv(tmp_path):
    out = tmp_path / "t.csv"
    code = main(["fusion-table", "--algebra", "A1", "--level", "2", "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert len(lines) == 4
    assert "(0):1,(2):1" in lines[2]


def test_fusion_table_trivial_level(tmp_path, capsys):
    code = main(["fusion-table", "--algebra", "A1", "--level", "0"])
    assert code == 0
    assert "size=1x1" in capsys.readouterr().out


def test_fusion_table_json_deterministic(tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    argv = ["fusion-table", "--algebra", "A2", "--level", "1", "--format", "json"]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_missing_level_is_usage_error():
    proc = subprocess.run(
        [sys.executable, "-m", "fusionkz.cli", "fusion-table", "--algebra", "A1"],
        capture_output=True,
    )
    assert proc.returncode == 2


def test_inadmissible_weight_is_usage_error(capsys):
    code = main(
        ["associator", "--algebra", "A1", "--level", "1", "--weights", "2,1,1"]
    )
    assert code == 2
    assert "not admissible" in capsys.readouterr().err


def test_bad_algebra_label(capsys):
    code = main(["fusion-table", "--algebra", "Q", "--level", "1"])
    assert code == 2


def test_bad_z0_is_usage_error(capsys):
    code = main(
        ["associator", "--algebra", "A1", "--level", "1",
         "--weights", "1,1,1", "--z0", "2"]
    )
    assert code == 2


def test_negative_level_is_usage_error(capsys):
    code = main(["fusion-table", "--algebra", "A1", "--level", "-1"])
    assert code == 2


def test_too_few_bits_is_usage_error(capsys):
    code = main(
        ["associator", "--algebra", "A1", "--level", "1",
         "--weights", "1,1,1", "--bits", "32"]
    )
    assert code == 2


def test_associator_trivial_weights(tmp_path, capsys):
    out = tmp_path / "a.json"
    code = main(
        [
            "associator", "--algebra", "A1", "--level", "1",
            "--weights", "0,0,0", "--bits", "96", "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert doc["report"]["dims"]["kernel_right"] == 0


def test_associator_artifact_and_exit(tmp_path):
    out = tmp_path / "a.json"
    code = main(
        [
            "associator", "--algebra", "A1", "--level", "1",
            "--weights", "1,1,1", "--bits", "128", "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    assert doc["config"]["weights"] == [[1], [1], [1]]
    assert doc["associator"]["z0"] == "1/2"


def test_associator_needs_three_weights(capsys):
    code = main(["associator", "--algebra", "A1", "--level", "1", "--weights", "1,1"])
    assert code == 2


def test_verify_unit(tmp_path):
    out = tmp_path / "u.json"
    code = main(
        ["verify", "unit", "--algebra", "A1", "--level", "3", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["passed"] is True


def test_verify_oracle(tmp_path):
    out = tmp_path / "o.json"
    code = main(
        [
            "verify", "oracle", "--algebra", "A1", "--level", "1",
            "--weights", "1,1,1", "--bits", "96", "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["checks"][0]["name"] == "series-vs-integration"


def test_verify_pentagon_needs_four_weights(capsys):
    code = main(
        ["verify", "pentagon", "--algebra", "A1", "--level", "1", "--weights", "1,1,1"]
    )
    assert code == 2


def test_associator_artifact_deterministic(tmp_path):
    out1 = tmp_path / "a1.json"
    out2 = tmp_path / "a2.json"
    argv = [
        "associator", "--algebra", "A1", "--level", "1",
        "--weights", "1,1,1", "--bits", "96",
    ]
    assert main(argv + ["--out", str(out1)]) == 0
    assert main(argv + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_verify_all(tmp_path):
    out = tmp_path / "all.json"
    code = main(
        [
            "verify", "all", "--algebra", "A1", "--level", "1",
            "--weights", "1,1,1,1", "--bits", "96", "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    names = {c["name"] for c in doc["checks"]}
    assert names == {"unit-isomorphisms", "series-vs-integration", "pentagon"}
    assert doc["passed"] is True


def test_env_bits_override(tmp_path, monkeypatch):
    monkeypatch.setenv("FUSIONKZ_BITS", "96")
    out = tmp_path / "a.json"
    code = main(
        [
            "associator", "--algebra", "A1", "--level", "1",
            "--weights", "0,0,0", "--out", str(out),
        ]
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["precision_bits"] == 96
