from __future__ import annotations

import json
from pathlib import Path

import pytest

from conftest import point_equivalence
from qfunctor import io
from qfunctor.cli import EXIT_FAIL, EXIT_INPUT, EXIT_OK, main
from qfunctor.quantfunctor import quantize_object
from qfunctor.groupoid import (
    Bibundle,
    cyclic_table,
    group_groupoid,
    identity_bibundle,
    pair_groupoid,
    reverse_bibundle,
    symmetric3_table,
)

SAMPLES = Path(__file__).resolve().parent.parent / "samples"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def write(tmp_path, name, obj) -> Path:
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return p


# -- documents --------------------------------------------------------------------

@pytest.mark.parametrize("G", [pair_groupoid(3), group_groupoid(symmetric3_table(), name="S3")])
def test_groupoid_round_trip(G):
    H = io.groupoid_from_doc(json.loads(io.dumps(io.groupoid_to_doc(G))))
    assert H == G


def test_bibundle_round_trip():
    for B in (point_equivalence(3), identity_bibundle(group_groupoid(cyclic_table(3)))):
        assert io.bibundle_from_doc(json.loads(io.dumps(io.bibundle_to_doc(B)))) == B


def test_samples_load():
    assert io.load_groupoid(SAMPLES / "pair3.json") == pair_groupoid(3)
    assert io.load_groupoid(SAMPLES / "z2.json").n_arr == 2
    assert io.load_bibundle(SAMPLES / "equivalence.json") == point_equivalence(2)
    assert io.load_bibundle(SAMPLES / "equivalence_reverse.json") == reverse_bibundle(point_equivalence(2))


def test_json_syntax_error_has_line_and_column(tmp_path):
    p = write(tmp_path, "bad.json", '{\n "kind": "groupoid",\n "pair": 3,,\n}')
    with pytest.raises(io.ParseError) as exc:
        io.load(p)
    assert exc.value.where == f"{p}:3:12"


def test_schema_errors_have_json_paths(tmp_path):
    p = write(tmp_path, "g.json", {"kind": "groupoid", "n_obj": 1, "src": [0], "tgt": [0], "unit": [0], "inv": [0],
                                   "comp": [[0, 0, 0], [0, 5]]})
    with pytest.raises(io.ParseError) as exc:
        io.load(p)
    assert exc.value.where == f"{p}:$.comp[1]"
    p = write(tmp_path, "b.json", {"kind": "bibundle", "left": {"pair": 1}, "right": {"kind": "groupoid", "pair": 1},
                                   "size": 1, "lanchor": [0], "ranchor": [0], "lact": [[0, 0, 0]], "ract": [[0, 7, 0]]})
    with pytest.raises(io.ParseError) as exc:
        io.load(p)
    assert exc.value.where == f"{p}:$.ract[0]"
    p = write(tmp_path, "c.json", {"kind": "bibundle", "left": {"kind": "groupoid", "group": "Z9"}})
    with pytest.raises(io.ParseError) as exc:
        io.load(p)
    assert exc.value.where == f"{p}:$.left.group"
    p = write(tmp_path, "d.json", {"kind": "thing"})
    with pytest.raises(io.ParseError):
        io.load(p)


def test_nested_groupoid_path(tmp_path):
    (tmp_path / "g.json").write_text(json.dumps({"kind": "groupoid", "pair": 2}))
    doc = io.bibundle_to_doc(point_equivalence(2))
    doc["left"] = "g.json"
    p = write(tmp_path, "b.json", doc)
    assert io.load_bibundle(p) == point_equivalence(2)


def test_algebra_dump_is_exact():
    doc = io.algebra_to_doc(quantize_object(pair_groupoid(2)))
    assert doc["dimension_vector"] == [2] and doc["classical"] == "A*(Pair(2))"
    assert doc["embed_residual"] < 1e-9


# -- CLI ----------------------------------------------------------------------------

def test_validate(capsys, tmp_path):
    code, out, _ = run(capsys, "validate", SAMPLES / "pair3.json", SAMPLES / "equivalence.json")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["ok"] and rep["reports"][1]["principal"]
    G = group_groupoid(cyclic_table(3))
    doc = io.groupoid_to_doc(G)
    doc["comp"] = [[a, b, 0 if (a, b) == (1, 1) else c] for a, b, c in doc["comp"]]
    code, out, _ = run(capsys, "validate", write(tmp_path, "bad.json", doc))
    assert code == EXIT_FAIL
    assert any(v["axiom"] == "associativity" for v in json.loads(out)["reports"][0]["violations"])


def test_compose_and_quantize(capsys, tmp_path):
    code, out, _ = run(capsys, "compose", SAMPLES / "equivalence.json", SAMPLES / "equivalence_reverse.json")
    assert code == EXIT_OK and json.loads(out)["size"] == 4
    code, out, _ = run(capsys, "quantize", SAMPLES / "equivalence.json")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["morita"] == "preserved"
    assert rep["left_algebra"]["dimension_vector"] == [2]
    code, out, _ = run(capsys, "quantize", SAMPLES / "z2.json", "--out", tmp_path / "a.json")
    assert code == EXIT_OK and out == ""
    assert json.loads((tmp_path / "a.json").read_text())["dimension_vector"] == [1, 1]


def test_functoriality_worked_pair(capsys):
    code, out, _ = run(capsys, "functoriality", SAMPLES / "equivalence.json", SAMPLES / "equivalence_reverse.json",
                       "--witness")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["ok"] and "witness" in rep


def test_kk(capsys):
    code, out, _ = run(capsys, "kk", SAMPLES / "equivalence.json", SAMPLES / "equivalence_reverse.json")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["functorial"] and rep["class"]["matrix"] == [[1]]


def test_torus_morita(capsys):
    code, out, _ = run(capsys, "torus-morita", "(0+1*sqrt(2))/1", "(1+1*sqrt(5))/2")
    assert code == EXIT_OK
    assert out.splitlines()[0] == "NOT Morita equivalent; classical tori Morita equivalent (cited)"
    code, out, _ = run(capsys, "torus-morita", "(0+1*sqrt(2))/1", "(1+1*sqrt(2))/1")
    assert out.splitlines()[0] == "Morita equivalent (GL(2,Z) orbit)"
    assert json.loads("\n".join(out.splitlines()[1:]))["witness"] is not None


def test_moyal_check(capsys):
    code, out, _ = run(capsys, "moyal-check", "--K", 5, "--seed", 7, "--count", 20)
    assert code == EXIT_OK and json.loads(out)["ok"]
    code, out, _ = run(capsys, "moyal-check", "--f", "q1", "--g", "p1")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["star"][1] == "-1/2*i"


def test_strictfield_table(capsys):
    code, out, _ = run(capsys, "strictfield", "--q-range", "11:31:10", "--eps", 0.5)
    lines = out.splitlines()
    assert code == EXIT_OK and lines[0] == "hbar\tdefect\tnorm"
    assert len(lines) == 1 + 3 + 1 + 1
    assert lines[-2].startswith("0\t")


def test_input_errors_exit_2(capsys, tmp_path):
    code, _, err = run(capsys, "validate", tmp_path / "missing.json")
    assert code == EXIT_INPUT and "parse error" in err
    code, _, err = run(capsys, "torus-morita", "sqrt(2)", "(1+1*sqrt(5))/2")
    assert code == EXIT_INPUT
    code, _, err = run(capsys, "moyal-check", "--f", "q1^", "--g", "p1")
    assert code == EXIT_INPUT
    Z2 = group_groupoid(cyclic_table(2))
    B = Bibundle.from_maps(pair_groupoid(2), Z2, 2, [0, 1], [0, 0], lambda g, m: g // 2, lambda m, h: m)
    code, _, err = run(capsys, "quantize", write(tmp_path, "np.json", io.bibundle_to_doc(B)))
    assert code == EXIT_INPUT and "not a principal" in err


def test_deterministic_reports(capsys):
    a = run(capsys, "moyal-check", "--seed", 3, "--count", 10)[1]
    b = run(capsys, "moyal-check", "--seed", 3, "--count", 10)[1]
    assert a == b
    a = run(capsys, "functoriality", SAMPLES / "equivalence.json", SAMPLES / "equivalence_reverse.json", "--witness")[1]
    b = run(capsys, "functoriality", SAMPLES / "equivalence.json", SAMPLES / "equivalence_reverse.json", "--witness")[1]
    assert a == b


@pytest.mark.slow
def test_corpus_bit_reproducible(capsys):
    a = run(capsys, "corpus", "--seed", 3)
    b = run(capsys, "corpus", "--seed", 3)
    assert a[0] == EXIT_OK and a == b
