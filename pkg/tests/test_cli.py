import io
import json
import subprocess
import sys

import pytest

from genehist.cli import main, parse_range
from genehist.history import parse_history
from genehist.sampling import validate
from genehist.species_tree import caterpillar


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


def test_parse_range():
    assert parse_range("4") == [4]
    assert parse_range("2..5") == [2, 3, 4, 5]


def test_count_caterpillar4():
    code, out = run("count", "--tree", "builtin:caterpillar:4", "--model", "udl", "--n", "1..8")
    assert code == 0
    assert out.splitlines()[0] == "n,count"
    assert [int(l.split(",")[1]) for l in out.splitlines()[1:]] == [
        4, 39, 495, 7235, 115303, 1948791, 34379505, 626684162,
    ]


def test_count_complete4():
    code, out = run("count", "--tree", "builtin:complete:4", "--model", "udl", "--n", "1..3")
    assert out == "n,count\n1,16\n2,616\n3,28832\n"


def test_count_single_leaf_udlt_is_catalan():
    a = run("count", "--tree", "builtin:caterpillar:1", "--model", "udlt", "--n", "1..5")[1]
    b = run("count", "--tree", "builtin:caterpillar:1", "--model", "udl", "--n", "1..5")[1]
    assert a == b


def test_count_json_uses_strings_for_counts():
    code, out = run("count", "--tree", "builtin:caterpillar:3", "--model", "udl", "--n", "40", "--format", "json")
    rows = json.loads(out)
    assert isinstance(rows[0]["count"], str) and int(rows[0]["count"]) > 2**64


def test_count_from_file_and_ranking(tmp_path):
    tree = tmp_path / "t.nwk"
    tree.write_text("((A,B)X,(C,D)Y)R;\n")
    ranking = tmp_path / "r.tsv"
    ranking.write_text("R\t1\nX\t2\nY\t3\n")
    code, out = run("count", "--tree", str(tree), "--ranking", str(ranking), "--model", "rdlt", "--n", "1..3")
    assert code == 0 and out.splitlines()[1] == "1,4"


def test_sample_output_and_stats(tmp_path):
    stats = tmp_path / "stats.csv"
    code, out = run(
        "sample", "--tree", "builtin:caterpillar:3", "--model", "udlt", "--n", "6",
        "--samples", "25", "--seed", "3", "--stats", str(stats), "--check",
    )
    assert code == 0
    t = caterpillar(3)
    lines = out.splitlines()
    assert len(lines) == 25
    for line in lines:
        h = parse_history(line, t.labels)
        assert h.size == 6 and validate(h, t, "udlt") is None
    rows = stats.read_text().splitlines()
    assert rows[0] == "index,score,n_S,n_D,n_L,n_T,n_extant"
    assert len(rows) == 26


def test_sample_deterministic():
    args = ["sample", "--tree", "builtin:random:7:2", "--model", "udl", "--n", "15", "--samples", "10", "--seed", "9"]
    assert run(*args) == run(*args)
    assert run(*args)[1] != run(*args[:-1], "10")[1]


def test_growth():
    code, out = run("growth", "--tree", "builtin:caterpillar:2", "--model", "udl", "--n", "400")
    row = out.splitlines()[1].split(",")
    assert 0.995 <= float(row[3]) <= 1.005
    code, out = run("growth", "--tree", "builtin:caterpillar:1", "--model", "udl", "--n", "200")
    assert float(out.splitlines()[1].split(",")[1]) == pytest.approx(4, rel=0.01)


def test_growth_dlt_has_no_exact_value():
    code, out = run("growth", "--tree", "builtin:caterpillar:3", "--model", "udlt", "--n", "30")
    assert out.splitlines()[1].endswith(",,")


def test_asym_rows():
    code, out = run("asym", "--k", "1..2", "--h", "0..1")
    rows = {l.split(",")[0]: l.split(",") for l in out.splitlines()[1:]}
    assert rows["caterpillar:1"][2:5] == ["0.25", "4.0", "0.14104739588693907"]
    h0 = rows["complete:0"]
    assert float(h0[5]) == pytest.approx(0.141047, abs=1e-6)
    assert float(h0[4]) == pytest.approx(0.070524, abs=1e-6)
    assert float(rows["complete:1"][2]) == pytest.approx(float(rows["caterpillar:2"][2]), abs=1e-14)


def test_invariance_pass():
    code, out = run("invariance", "--k", "2..3", "--n", "1..8")
    assert code == 0
    assert all(l.endswith("PASS") for l in out.splitlines()[1:])


def test_extremal():
    code, out = run("extremal", "--k", "4..6")
    assert code == 0 and out.count("PASS") == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["count", "--tree", "builtin:caterpillar:3", "--model", "rdl", "--n", "3"],
        ["count", "--tree", "builtin:caterpillar:3", "--model", "udl", "--ranking", "unique", "--n", "3"],
        ["count", "--tree", "builtin:caterpillar:0", "--model", "udl", "--n", "3"],
        ["count", "--tree", "missing.nwk", "--model", "udl", "--n", "3"],
        ["count", "--tree", "(A,B,C)R;", "--model", "udl", "--n", "3"],
        ["count", "--tree", "builtin:caterpillar:3", "--model", "xyz", "--n", "3"],
        ["count", "--tree", "builtin:caterpillar:3", "--model", "udl", "--n", "5..2"],
        ["count", "--tree", "builtin:complete:2", "--model", "rdl", "--ranking", "unique", "--n", "3"],
        ["asym"],
        ["nonsense"],
    ],
)
def test_usage_errors(argv):
    assert main(argv, out=io.StringIO()) == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "genehist", "count", "--tree", "builtin:caterpillar:2", "--model", "udl", "--n", "1..3"],
        capture_output=True,
        check=True,
    )
    assert proc.stdout == b"n,count\n1,2\n2,7\n3,34\n"
