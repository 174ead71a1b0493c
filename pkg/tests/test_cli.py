import json

import pytest

from twistabc.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def tree_file(tmp_path):
    p = tmp_path / "tree.txt"
    p.write_text("-\n0\n0 0\n")
    return p


def test_tree_check(capsys, tmp_path, tree_file):
    code, out, _ = run(capsys, "tree", "check", str(tree_file), "--n-max", "3")
    assert code == 0 and json.loads(out)["verdicts"]["closed"]
    bad = tmp_path / "bad.txt"
    bad.write_text("-\n0 0\n")
    code, _, err = run(capsys, "tree", "check", str(bad))
    assert code == 1 and "NotClosed" in err


def test_missing_file_is_config_error(capsys, tmp_path):
    code, _, err = run(capsys, "tree", "check", str(tmp_path / "nope.txt"))
    assert code == 2 and "cannot read" in err


def test_twist_verify(capsys, tmp_path):
    params = tmp_path / "p.json"
    params.write_text('{"C": [1, 1], "l": [2, 2]}')
    code, out, _ = run(capsys, "--out", str(tmp_path), "twist", "verify", "--params", str(params),
                       "--trials", "3")
    assert code == 0 and all(json.loads(out)["verdicts"].values())
    assert (tmp_path / "twist_verify.json").exists()


def test_twist_build_from_toml(capsys, tmp_path):
    params = tmp_path / "p.toml"
    params.write_text("C = [1]\nl = [2]\n")
    blocks = tmp_path / "blocks.txt"
    blocks.write_text("1\n2\n3\n1\n")
    code, out, _ = run(capsys, "twist", "build", "--params", str(params), "--level", "0",
                       "--blocks", str(blocks))
    assert code == 0 and out.startswith("level=1")


def test_fbar_command(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    a.write_text("1 2 3 1 2\n")
    b.write_text("2 1 3 2\n")
    code, out, _ = run(capsys, "fbar", str(a), str(b), "--witness")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "1/3" and lines[1].startswith("approx")
    assert len(lines) == 2 + 3


def test_abc_simulate_histogram(capsys):
    code, out, _ = run(capsys, "abc", "simulate", "--level", "1")
    rep = json.loads(out)
    assert code == 0 and rep["histogram_list"] == [7, 9, 8, 8, 8, 8, 8, 8]


def test_feldman_verify(capsys):
    code, out, _ = run(capsys, "feldman", "verify", "1", "2", "1")
    assert code == 0 and json.loads(out)["verdicts"]["patterns"]


def test_subst_verify_reports_part3(capsys):
    code, out, err = run(capsys, "subst", "verify")
    rep = json.loads(out)
    assert code == 1 and "part3" in err
    assert rep["verdicts"]["part1"] and rep["verdicts"]["part2"]


def test_cascade(capsys):
    code, out, _ = run(capsys, "reduce", "cascade", "--levels", "4")
    assert code == 0 and all(json.loads(out)["verdicts"].values())


def test_reduce_build_is_reproducible(capsys, tmp_path, tree_file):
    dirs = [tmp_path / "a", tmp_path / "b"]
    for d in dirs:
        code, _, _ = run(capsys, "--out", str(d), "reduce", "build", "--tree", str(tree_file),
                         "--n-max", "3", "--levels", "1")
        assert code == 0
    names = sorted(p.name for p in dirs[0].iterdir())
    assert "level1.odometer.txt" in names and "ledger.json" in names
    for name in names:
        assert (dirs[0] / name).read_bytes() == (dirs[1] / name).read_bytes(), name
    code, out, _ = run(capsys, "reduce", "verify", str(dirs[0]))
    assert code == 0 and all(json.loads(out)["verdicts"].values())


def test_eta_even_parity(capsys, tmp_path):
    t = tmp_path / "short.txt"
    t.write_text("-\n0\n1\n")
    code, out, _ = run(capsys, "reduce", "eta", "--tree", str(t), "--n-max", "3", "--level", "1",
                       "--s", "2")
    assert code == 1 and json.loads(out)["error"] == "EvenParity"
