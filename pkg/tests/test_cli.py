import json
import subprocess
import sys

import pytest

from tsvf.cli import format_complex, main, parse_complex

ORTHOGONAL = """\
id = orth
[space]
site = a, b
[pre]
a = 1, 0
[post]
b = 1, 0
"""

NON_HERMITIAN = """\
id = nh
[space]
site = a, b
[pre]
a = 1, 0
b = 1, 0
[post]
a = 1, 0
[observable up]
a | b = 1, 0
"""


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list(capsys):
    code, out, _ = run(capsys, "list")
    assert code == 0
    ids = [line.split()[0] for line in out.splitlines()]
    assert ids == ["two-box", "hydrogen", "n-body", "photon", "fock"]


def test_list_json(capsys):
    code, out, _ = run(capsys, "list", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert [s["id"] for s in data["scenarios"]] == ["two-box", "hydrogen", "n-body", "photon", "fock"]
    assert set(data["scenarios"][2]["params"]) == {"n", "c"}


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["list", "--bogus"])
    assert err.value.code == 2


@pytest.mark.parametrize(
    "argv,expected",
    [
        (["weak", "two-box", "--obs", "LL"], -1),
        (["weak", "n-body", "--n", "6", "--c", "0.5", "--obs", "full-L"], 2),
        (["weak", "fock", "--n", "4", "--obs", "a1*a2*a3*a4"], 1),
    ],
)
def test_weak_examples(capsys, argv, expected):
    code, out, _ = run(capsys, *argv, "--format", "json")
    assert code == 0
    wv = json.loads(out)["weak_values"][0]
    assert wv["re"] == pytest.approx(expected, abs=1e-12)
    assert wv["im"] == pytest.approx(0, abs=1e-12)


def test_weak_table_renders_crisp_zero(capsys):
    code, out, _ = run(capsys, "weak", "two-box", "--obs", "L1", "--obs", "LL")
    assert code == 0
    assert out.splitlines() == ["L1  0+0i", "LL  -1+0i"]


def test_weak_complex_c(capsys):
    code, out, _ = run(capsys, "weak", "n-body", "--c", "2i", "--obs", "full-L")
    assert code == 0
    assert out.split()[-1] == "0-0.5i"


def test_orthogonal_names_overlap(capsys, tmp_path):
    path = tmp_path / "orth.scenario"
    path.write_text(ORTHOGONAL)
    code, _, err = run(capsys, "weak", str(path), "--obs", "full-a")
    assert code == 3
    assert "|<Phi|Psi>| = 0.000e+00" in err


def test_hierarchy_n_body(capsys):
    code, out, _ = run(capsys, "hierarchy", "n-body", "--n", "5", "--c", "1", "--labels", "L", "--format", "json")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["vanishing_orders"] == [1, 2, 3, 4]
    assert rep["emergence_order"] == 5
    assert rep["emergence_value"] == pytest.approx([1, 0], abs=1e-12)


def test_hierarchy_two_box_csv(capsys):
    code, out, _ = run(capsys, "hierarchy", "two-box", "--labels", "L,R", "--format", "csv")
    assert code == 0
    rows = [l for l in out.splitlines() if not l.startswith("#")]
    assert rows[0] == "order,sites,labels,re,im,magnitude"
    body = [r.split(",") for r in rows[1:]]
    assert len(body) == 8
    got = {(r[1], r[2]): float(r[3]) for r in body}
    expected = {
        ("1", "L"): 0, ("1", "R"): 1, ("2", "L"): 0, ("2", "R"): 1,
        ("1 2", "L L"): -1, ("1 2", "L R"): 1, ("1 2", "R L"): 1, ("1 2", "R R"): 0,
    }
    assert got.keys() == expected.keys()
    for k, v in expected.items():
        assert got[k] == pytest.approx(v, abs=1e-12)


def test_hierarchy_photon(capsys):
    code, out, _ = run(capsys, "hierarchy", "photon", "--n", "2", "--labels", "R", "--format", "json")
    assert code == 0
    assert json.loads(out)["report"]["emergence_order"] == 2


def test_hierarchy_keep_sites(capsys):
    code, out, _ = run(capsys, "hierarchy", "n-body", "--n", "4", "--labels", "L", "--keep", "1,2,3", "--format", "json")
    assert code == 0
    rep = json.loads(out)["report"]
    assert rep["emergence_order"] is None
    assert "no emergence" in rep["note"]


def test_simulate_ll(capsys):
    code, out, _ = run(capsys, "simulate", "two-box", "--obs", "LL", "--g", "0.05", "--trials", "200000", "--seed", "7", "--format", "json")
    assert code == 0
    r = json.loads(out)
    assert abs(r["estimate"] + 1) < 3 * r["std_error"]


def test_simulate_l1(capsys):
    code, out, _ = run(capsys, "simulate", "two-box", "--obs", "L1", "--trials", "200000", "--seed", "3", "--format", "json")
    r = json.loads(out)
    assert code == 0
    assert abs(r["estimate"]) < 3 * r["std_error"]


def test_simulate_zero_g(capsys):
    code, _, err = run(capsys, "simulate", "two-box", "--obs", "LL", "--g", "0")
    assert code == 2
    assert "--g" in err


def test_simulate_non_hermitian(capsys, tmp_path):
    path = tmp_path / "nh.scenario"
    path.write_text(NON_HERMITIAN)
    code, _, err = run(capsys, "simulate", str(path), "--obs", "up", "--trials", "10")
    assert code == 3
    assert "Hermitian" in err


def test_simulate_readings_file(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, _, _ = run(capsys, "simulate", "two-box", "--obs", "LL", "--trials", "50", "--seed", "1", "--readings", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    assert "# seed=1" in lines and "# g=0.05" in lines and "# scenario=two-box" in lines
    assert len(lines) - lines.index("reading") - 1 == 50


def test_abl_two_box(capsys):
    code, out, _ = run(capsys, "abl", "two-box", "--obs", "L1", "--format", "json")
    assert code == 0
    r = json.loads(out)
    assert r["outcomes"][0] == {"eigenvalue": 0.0, "probability": 1.0}
    assert r["certain_outcome"] == 0.0


def test_abl_n_body_certain(capsys):
    code, out, _ = run(capsys, "abl", "n-body", "--n", "4", "--c", "1", "--obs", "full-L", "--format", "json")
    r = json.loads(out)
    assert code == 0
    assert r["outcomes"][1]["probability"] == pytest.approx(1, abs=1e-12)
    assert r["certain_outcome"] == 1.0


def test_abl_n_body_uncertain(capsys):
    code, out, _ = run(capsys, "abl", "n-body", "--n", "4", "--c", "2", "--obs", "full-L", "--format", "json")
    r = json.loads(out)
    assert code == 0
    probs = [o["probability"] for o in r["outcomes"]]
    assert all(0 < p < 1 for p in probs)
    assert r["certain_outcome"] is None


def test_abl_non_dichotomic(capsys, tmp_path):
    path = tmp_path / "three.scenario"
    path.write_text(
        "id = three\n[space]\nsite = a, b, c\n[pre]\na = 1, 0\nb = 1, 0\n[post]\na = 1, 0\n"
        "[observable levels]\nb | b = 1, 0\nc | c = 2, 0\n"
    )
    code, _, err = run(capsys, "abl", str(path), "--obs", "levels")
    assert code == 3
    assert "eigenvalue" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["list", "--format", "csv"],
        ["weak", "photon", "--obs", "full-R", "--format", "csv"],
        ["hierarchy", "n-body", "--n", "4", "--c", "0.1i", "--format", "json"],
        ["hierarchy", "fock", "--format", "csv"],
        ["simulate", "two-box", "--obs", "LL", "--trials", "5000", "--seed", "9", "--format", "csv"],
        ["abl", "n-body", "--obs", "full-L", "--format", "json"],
    ],
)
def test_machine_formats_byte_stable(capsys, argv):
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second and first


def test_out_file(capsys, tmp_path):
    path = tmp_path / "o.json"
    code, out, _ = run(capsys, "weak", "two-box", "--obs", "LL", "--format", "json", "--out", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["weak_values"][0]["re"] == -1


def test_bad_seed(capsys):
    code, _, _ = run(capsys, "simulate", "two-box", "--obs", "LL", "--seed", "-1")
    assert code == 2


def test_parse_and_format_complex():
    assert parse_complex("2i") == 2j
    assert parse_complex("1-0.5j") == 1 - 0.5j
    assert parse_complex("-3") == -3
    assert format_complex(complex(-0.0, -0.0)) == "0+0i"
    assert format_complex(1 / 3 + 2j) == "0.333333333333+2i"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "tsvf", "weak", "two-box", "--obs", "LR"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.strip() == "LR  1+0i"
