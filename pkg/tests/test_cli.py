import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from gtbr.cli import EXIT_INVALID, EXIT_MISMATCH, EXIT_OK, EXIT_RESOURCE, main

GOLDEN = Path(__file__).parent / "golden" / "table.csv"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def utility_json(capsys, *argv):
    code, out, _ = run(capsys, "utility", *argv, "--format", "json")
    assert code == EXIT_OK
    return json.loads(out)


def test_utility_examples(capsys):
    assert round(utility_json(capsys, "--stbr", "4,3,6")["H"], 2) == 20.04
    report = utility_json(capsys, "--gtbr", "N=4", "r=6,3,3,0", "B=6,6,6")
    assert round(report["H"], 2) == 20.92
    assert report["g0"] == "1980161"
    assert report["table_sizes"] == [1, 7, 7, 7, 7]
    assert utility_json(capsys, "--stbr", "1,0,0")["H"] == 0


def test_utility_text_and_spec_file(capsys, tmp_path):
    path = tmp_path / "g.json"
    path.write_text(json.dumps({"N": 4, "r": [6, 3, 3, 0], "B": [6, 6, 6]}))
    code, out, _ = run(capsys, "utility", "--spec", str(path))
    assert code == EXIT_OK
    assert out.splitlines()[0] == "H = 20.9172 bits"


@pytest.mark.parametrize(
    "argv",
    [
        ["utility", "--gtbr", "N=3", "r=1,1", "B=1"],
        ["utility", "--stbr", "4,3"],
        ["utility", "--gtbr", "r=1,-1", "B=2"],
        ["utility"],
        ["optimize", "--stbr", "4,3,16"],
        ["optimize", "--gtbr", "N=4", "r=6,3,3,0", "B=6,6,6"],
        ["utility", "--spec", "/nonexistent/spec.json"],
    ],
)
def test_invalid_input_exit_code(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == EXIT_INVALID
    assert err.startswith("error:")


def test_resource_limit_exit_code(capsys):
    code, _, _ = run(capsys, "optimize", "--stbr", "4,3,6", "--max-candidates", "5")
    assert code == EXIT_RESOURCE
    code, _, _ = run(capsys, "optimize", "--stbr", "5,3,9", "--time-limit", "0")
    assert code == EXIT_RESOURCE


def test_optimize_rows(capsys):
    code, out, _ = run(capsys, "optimize", "--stbr", "4,3,12")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["r_star"], r["B_star"], r["inc_pct"]) for r in rows] == [("12 0 0 0", "12 12 12", "7.23")]
    code, out, _ = run(capsys, "optimize", "--stbr", "1,1,2", "--format", "json")
    data = json.loads(out)
    assert data["optima"] == [{"r": [1], "B": []}]


def test_optimize_ties(capsys):
    code, out, _ = run(capsys, "optimize", "--stbr", "4,6,12", "--jobs", "2")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["r_star"], r["B_star"]) for r in rows] == [("11 7 6 0", "11 13 12"), ("12 7 5 0", "12 13 11")]


def test_optimize_json_is_stable(capsys):
    outs = [run(capsys, "optimize", "--stbr", "4,3,6", "--format", "json")[1] for _ in range(2)]
    assert outs[0] == outs[1]


def test_sweep_depth(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "B", "--values", "6,9,12", "--N", "4", "--r", "3")
    assert code == EXIT_OK
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [round(float(r["H_g"]), 2) for r in rows] == [20.92, 21.44, 21.55]
    assert rows[0]["diff"] == ""
    diffs = [float(r["diff"]) for r in rows[1:]]
    assert diffs[0] > diffs[1] > 0


def test_sweep_single_value(capsys):
    code, out, _ = run(capsys, "sweep", "--axis", "r", "--values", "3", "--N", "4", "--B", "12")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and rows[0]["diff"] == ""


def test_sweep_needs_fixed_parameter(capsys):
    with pytest.raises(SystemExit):
        main(["sweep", "--axis", "B", "--values", "6:9", "--N", "4"])


def test_reproduce_subset_matches_golden(capsys):
    code, out, err = run(capsys, "reproduce-table", "--rows", "4,3,6", "4,3,9", "--golden")
    assert code == EXIT_OK and err == ""
    golden = GOLDEN.read_text().splitlines()
    assert out.splitlines() == golden[:4]


def test_reproduce_golden_mismatch_exit(capsys):
    # the published H_g for this envelope is rounded past the comparison tolerance
    code, _, err = run(capsys, "reproduce-table", "--rows", "4,3,12", "--golden")
    assert code == EXIT_MISMATCH
    assert "MISMATCH (4, 3, 12)" in err
    code, _, _ = run(capsys, "reproduce-table", "--rows", "4,3,12")
    assert code == EXIT_OK


def test_reproduce_unknown_row(capsys):
    code, _, _ = run(capsys, "reproduce-table", "--rows", "4,3,7")
    assert code == EXIT_INVALID


def test_golden_file_shape():
    rows = list(csv.DictReader(GOLDEN.open()))
    assert len(rows) == 17
    assert len({(r["N"], r["r"], r["B"]) for r in rows}) == 15


def test_sample_deterministic(capsys, tmp_path):
    argv = ["sample", "--gtbr", "N=4", "r=6,3,3,0", "B=6,6,6", "--n", "2000", "--seed", "7", "--format", "json"]
    first = run(capsys, *argv)[1]
    second = run(capsys, *argv)[1]
    assert first == second
    report = json.loads(first)
    assert abs(report["mean_bits"] - report["exact_bits"]) <= 3 * report["stderr"] + 1e-9
    assert report["ci95"][0] - 1e-9 <= report["exact_bits"] <= report["ci95"][1] + 1e-9


def test_encode_decode_files(capsys, tmp_path):
    payload = tmp_path / "payload.bin"
    payload.write_bytes(b"traffic shaping")
    frames = tmp_path / "frames.bin"
    back = tmp_path / "back.bin"
    spec = ["--gtbr", "N=4", "r=6,3,3,0", "B=6,6,6"]
    assert run(capsys, "encode", *spec, "--in", str(payload), "--out", str(frames), "--chain")[0] == EXIT_OK
    assert run(capsys, "decode", *spec, "--in", str(frames), "--out", str(back))[0] == EXIT_OK
    assert back.read_bytes() == b"traffic shaping"


def test_encode_decode_text_single_frame(capsys, tmp_path):
    payload = tmp_path / "bits.txt"
    payload.write_text("1011")
    frames = tmp_path / "f.bin"
    back = tmp_path / "back.txt"
    spec = ["--stbr", "4,3,6"]
    run(capsys, "encode", *spec, "--text", "--in", str(payload), "--out", str(frames))
    run(capsys, "decode", *spec, "--text", "--in", str(frames), "--out", str(back))
    assert back.read_text().strip() == "1011"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "gtbr", "utility", "--stbr", "4,3,6"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("H = 20.0355")
