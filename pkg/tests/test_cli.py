import json
import math

import pytest

from fidshadow.cli import RunConfig, main
from fidshadow.errors import ValidationError
from fidshadow.quantum_core import random_channel
from fidshadow.serialize import ParseError, channel_from_json, channel_to_json, dumps, fmt, parse_source

BIT_FLIP = {"dim": 2, "kraus": [[[[0, 0], [1, 0]], [[0, 0], [0, 0]]], [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]]}
PROJ = {"dim": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [0, 0]]], [[[0, 0], [0, 0]], [[0, 0], [1, 0]]]]}
NON_COMMUTING = {"dim": 2, "kraus": [[[[0.6, 0], [0, 0]], [[0, 0], [-0.6, 0]]], [[[0, 0], [0.8, 0]], [[0.8, 0], [0, 0]]]]}


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def header_and_rows(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    return json.loads(lines[0][2:]), lines[1], [l.split(",") for l in lines[2:]]


def test_channel_json_round_trip_is_bit_exact():
    ch = random_channel(3, 2, 4)
    back = channel_from_json(json.loads(dumps(channel_to_json(ch))))
    assert back == ch


def test_fmt():
    assert fmt(math.inf) == "inf"
    assert float(fmt(0.1 + 0.2)) == 0.1 + 0.2


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_source([1, 2])
    with pytest.raises(ParseError):
        parse_source({"family": "unknown"})
    with pytest.raises(ParseError):
        parse_source({"family": "qubit_unitary"})
    with pytest.raises(ParseError):
        parse_source({"kraus": [[["a"]]]})


def test_family_shorthands():
    assert parse_source({"family": "pauli", "p": [0.7, 0.1, 0.1, 0.1]}).channel.m == 4
    src = parse_source({"family": "mixed_unitary", "terms": [
        {"p": 0.5, "axis": [0, 0, 1], "angle": 1.0}, {"p": 0.5, "axis": [1, 0, 0], "angle": 2.0}]})
    assert src.analytic().normalization() == pytest.approx(1.0, abs=1e-6)
    assert parse_source({"family": "schur", "eigs": [[0.6, 0.8], [0.8, 0.6]]}).schur is not None


def test_pdf_qutrit_cusps(capsys):
    code, out = run(capsys, "pdf", "--family", "qutrit_unitary", "--alpha", "1.5707963", "--beta", "4.1887902",
                    "--deterministic")
    assert code == 0
    head, cols, rows = header_and_rows(out)
    assert cols == "F,P"
    assert head["cusps"] == pytest.approx([0.0669873, 0.25, 0.5], abs=1e-7)
    assert len(rows) == 2001


def test_pdf_marks_singularity(capsys):
    code, out = run(capsys, "pdf", "--family", "qubit_unitary", "--alpha", str(math.pi / 2), "--grid", "5")
    _, _, rows = header_and_rows(out)
    assert [r[1] for r in rows if r[0] == "0.5"] == ["inf"]


def test_extremes_bit_flip(tmp_path, capsys):
    code, out = run(capsys, "extremes", write(tmp_path, "c.json", BIT_FLIP))
    assert code == 0
    res = json.loads(out)
    assert res["F_min"] == 0.0
    assert res["F_max"] == pytest.approx(0.5, abs=1e-12)


def test_minfid_sweep(capsys):
    code, out = run(capsys, "minfid", "--family", "schur", "--sweep-p", "11", "--deterministic")
    _, cols, rows = header_and_rows(out)
    assert len(rows) == 11
    for r in rows:
        p = float(r[0])
        assert float(r[1]) == pytest.approx((1 + 2 * math.sqrt(p * (1 - p))) / 2, abs=1e-9)


def test_minfid_single(capsys):
    code, out = run(capsys, "minfid", "--family", "schur", "--eigs", "[[0.6, 0.8], [0.8, 0.6]]")
    res = json.loads(out)
    assert res["F_min"] == pytest.approx((1 + 2 * 0.48) / 2)
    assert res["F_max"] == pytest.approx(1.0)
    assert res["location"] == "interior"


def test_randomized_outputs_are_reproducible(tmp_path, capsys):
    path = write(tmp_path, "b.json", PROJ)
    args = ["pdf", path, "--method", "montecarlo", "--samples", "2000", "--seed", "5", "--bins", "10",
            "--deterministic"]
    _, first = run(capsys, *args)
    _, second = run(capsys, *args)
    assert first == second
    head, _, _ = header_and_rows(first)
    assert (head["seed"], head["n"], head["workers"]) == (5, 2000, 1)
    assert "version" in head and "timestamp" not in head


def test_timestamp_without_deterministic(capsys):
    _, out = run(capsys, "mean", "--family", "qubit_unitary", "--alpha", "1.0")
    assert "timestamp" in json.loads(out)


def test_workers_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("FIDSHADOW_WORKERS", "3")
    _, out = run(capsys, "mean", write(tmp_path, "b.json", PROJ), "--samples", "100", "--deterministic")
    assert json.loads(out)["workers"] == 3


def test_simplex_and_epsilon_methods(tmp_path, capsys):
    code, out = run(capsys, "pdf", write(tmp_path, "b.json", PROJ), "--method", "simplex", "--samples", "1000")
    assert code == 0
    code, out = run(capsys, "pdf", "--family", "qubit_unitary", "--alpha", "1.0", "--method", "epsilon",
                    "--samples", "1000", "--epsilon", "0.1")
    assert code == 0 and header_and_rows(out)[0]["epsilon"] == 0.1


def test_shadow_command(tmp_path, capsys):
    out_path = tmp_path / "cloud.csv"
    code, _ = run(capsys, "shadow", write(tmp_path, "b.json", PROJ), "--samples", "500", "--out", str(out_path))
    head, cols, rows = header_and_rows(out_path.read_text())
    assert code == 0 and cols == "r_1,r_2" and len(rows) == 500
    assert head["uniformity"]["applicable"]


def test_discriminate_command(tmp_path, capsys):
    a, b = write(tmp_path, "b.json", PROJ), write(tmp_path, "c.json", BIT_FLIP)
    code, out = run(capsys, "discriminate", a, b, "--samples", "1000", "--seed", "2")
    rep = json.loads(out)["report"]
    assert code == 0 and rep["verdict"] == "distinct"


def test_mean_command(capsys):
    _, out = run(capsys, "mean", "--family", "qubit_unitary", "--alpha", str(math.pi / 3))
    assert json.loads(out)["mean"] == pytest.approx(5 / 6, abs=1e-9)


@pytest.mark.parametrize("argv,code", [
    (["pdf", "--family", "qubit_unitary"], 2),
    (["extremes", "missing.json"], 2),
    (["pdf", "--method", "bogus"], 2),
])
def test_parse_failures(argv, code, capsys):
    if argv[1:2] == ["--method"]:
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == code
    else:
        assert main(argv) == code


def test_validation_exit_code(tmp_path, capsys):
    bad = {"kraus": [[[[2, 0]]]]}
    assert main(["extremes", write(tmp_path, "bad.json", bad)]) == 3
    assert main(["mean", "--samples", "0", write(tmp_path, "b.json", PROJ)]) == 3


def test_inapplicable_exit_code(tmp_path, capsys):
    assert main(["pdf", write(tmp_path, "x.json", NON_COMMUTING), "--method", "simplex", "--samples", "10"]) == 5
    assert main(["pdf", write(tmp_path, "b.json", PROJ), "--method", "analytic"]) == 5


def test_run_config_invariants():
    with pytest.raises(ValidationError):
        RunConfig(command="pdf", bins=1)
    with pytest.raises(ValidationError):
        RunConfig(command="extremes", method="simplex")
