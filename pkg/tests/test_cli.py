import io
import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from mkdv5 import painleve, scattering, tables
from mkdv5.cli import main

DATA = Path(__file__).parent / "data"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_scatter_csv(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, _, _ = run(["scatter", "--amp", "0.3", "--n", "512", "--L", "24", "--out", str(out)], capsys)
    assert code == 0
    with open(out) as fh:
        d = scattering.read_csv(fh)
    assert d.unitarity_defect <= 1e-8
    assert d.k.size == 321


def test_scatter_json(capsys):
    code, out, _ = run(["scatter", "--amp", "0.3", "--n", "512", "--L", "24", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["rows"]) == 321 and "unitarity_defect" in doc["meta"]


def test_evolve(capsys, tmp_path):
    ck = tmp_path / "last.bin"
    code, out, _ = run(["evolve", "--n", "256", "--L", "32", "--dt", "1e-4", "--t", "0.001,0.002",
                        "--checkpoint", str(ck)], capsys)
    assert code == 0
    meta, cols, rows = tables.read_table(io.StringIO(out))
    assert cols == ["t", "x", "u"] and len(rows) == 512
    assert len(meta["mass"]) == 2
    assert ck.read_bytes()[:5] == b"MKDV5"


def test_asym_from_data(capsys, tmp_path):
    path = tmp_path / "s.csv"
    run(["scatter", "--amp", "0.3", "--n", "512", "--L", "24", "--out", str(path)], capsys)
    code, out, _ = run(["asym", "--data", str(path), "--x", "0,-2e5", "--t", "100",
                        "--ray-k0", "1.0"], capsys)
    assert code == 0
    _, cols, rows = tables.read_table(io.StringIO(out))
    assert cols[:3] == ["x", "t", "region"]
    assert [r[2] for r in rows] == ["V", "III", "I"]
    assert rows[2][6] != 0


def test_painleve_commands(capsys, tmp_path):
    prof = tmp_path / "p.csv"
    code, _, _ = run(["painleve", "integrate", "--state", "1e-3,0,0,0", "--y-end", "2",
                      "--out", str(prof)], capsys)
    assert code == 0
    code, out, err = run(["painleve", "residual", "--input", str(prof)], capsys)
    assert code == 0 and "sup |R|" in err
    with open(prof) as fh:
        p = painleve.read_profile_csv(fh)
    assert p.y[-1] == 2.0


def test_painleve_extract(capsys, tmp_path):
    code, out, _ = run(["painleve", "extract", "--config", str(DATA / "smoke.json"),
                        "--t", "1", "--y-max", "3"], capsys)
    assert code == 0
    p = painleve.read_profile_csv(io.StringIO(out))
    assert p.source == "extracted" and p.t == 1.0


def test_selfcheck_codes(capsys):
    code, out, _ = run(["selfcheck"], capsys)
    assert code == 0 and "FAIL" not in out
    code, out, _ = run(["selfcheck", "--fault", "nonlinearity-sign"], capsys)
    assert code == 4 and "FAIL evolution/form-equivalence" in out
    code, out, _ = run(["selfcheck", "--conservation-tol", "1e-14"], capsys)
    assert code == 4 and "FAIL evolution/conservation" in out


@pytest.mark.parametrize("argv", [["scatter", "--n", "300"],
                                  ["painleve", "integrate", "--state", "1,2"],
                                  ["compare", "--config", "/nonexistent.json"],
                                  ["evolve", "--n", "256", "--L", "32"]])
def test_invalid_arguments_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2 and "error" in err


def test_numerical_failure_exit_3(capsys):
    code, _, err = run(["painleve", "integrate", "--state", "10,10,10,10"], capsys)
    assert code == 3 and "blew up" in err
    code, _, err = run(["evolve", "--n", "512", "--L", "32", "--amp", "0.3", "--dt", "0.01",
                        "--t", "0.5"], capsys)
    assert code == 3 and "smaller dt" in err


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as e:
        main(["scatter", "--format", "xml"])
    assert e.value.code == 2


def test_compare_smoke(capsys):
    code, out, _ = run(["compare", "--config", str(DATA / "smoke.json")], capsys)
    assert code == 0
    _, cols, rows = tables.read_table(io.StringIO(out))
    assert cols[-1] == "err_ratio" and len(rows) == 10
    assert all(r[7] is None or r[7] <= 10 for r in rows)


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mkdv5", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "selfcheck" in res.stdout
