import json
import shutil
import subprocess

import pytest

from loophom.cli import main
from loophom.linalg import AbelianGroup
from loophom.spaces import SpaceTag, closed_form_groups

S2_FILE = """\
# loop homology page of S^2, written by hand
x (-2,0) exterior
y (0,1) polynomial
sign y y 1
differential 2 y 2*x*y^2
permanent x
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_compute_table(capsys):
    code, out, _ = run_cli(capsys, "compute", "s^n:even:2", "--max", "6")
    assert code == 0
    assert "     0  Z + Z/2" in out
    assert "verified on window" in out


def test_compute_json_round_trip(capsys):
    code, out, _ = run_cli(capsys, "compute", "cp^n:2", "--max", "10", "--format", "json")
    assert code == 0
    data = json.loads(out)
    assert json.dumps(data, indent=2) + "\n" == out
    s = SpaceTag.parse("cp^n:2")
    for g in data["groups"]:
        assert AbelianGroup(g["free_rank"], tuple(g["torsion"])) == closed_form_groups(s, g["degree"])
    assert {"p", "q", "free_rank", "torsion", "basis"} <= set(data["e_infinity"]["cells"][0])


def test_compute_is_deterministic(capsys):
    outs = {run_cli(capsys, "compute", "s^n:even:4", "--format", "json")[1] for _ in range(2)}
    assert len(outs) == 1


def test_compute_circle(capsys):
    code, out, _ = run_cli(capsys, "compute", "s1", "--max", "3")
    assert code == 0 and "Z[t,t^-1]" in out


def test_space_flag_and_out_file(capsys, tmp_path):
    target = tmp_path / "odd.txt"
    code, out, _ = run_cli(capsys, "compute", "--space", "s^n:odd:3", "--max", "4", "--out", str(target))
    assert code == 0 and out == ""
    assert "E(x) (x) Z[y]" in target.read_text()


@pytest.mark.parametrize("space", ["s^n:odd:5", "s^n:even:2", "cp^n:3"])
def test_verify_all_pass(capsys, space):
    code, out, _ = run_cli(capsys, "verify", space, "--max", "16")
    lines = out.strip().splitlines()
    assert code == 0 and lines and all(line.startswith("PASS") for line in lines)


def test_verify_rational(capsys):
    code, out, _ = run_cli(capsys, "verify", "s^n:even:4", "--coeff", "q", "--max", "16")
    assert code == 0 and "FAIL" not in out


def test_pages_diagram(capsys):
    code, out, _ = run_cli(capsys, "pages", "s^n:even:2", "--page", "2", "--max", "6")
    assert code == 0
    assert out.startswith("E_2 (homological)")
    assert "d_2:" in out and "[[2]]" in out and "[[0]]" in out


def test_pages_json(capsys):
    code, out, _ = run_cli(capsys, "pages", "cp^n:1", "--format", "json", "--max", "6")
    data = json.loads(out)
    assert code == 0 and data["page_index"] == 2
    assert any(e["entries"] == [[2]] or e["entries"] == [[-2]] for e in data["differentials"])


def test_universal_trace(capsys):
    code, out, _ = run_cli(capsys, "universal", "2")
    assert code == 0
    assert "abutment" in out and "naturality" in out
    assert out.rstrip().endswith("(PASS)")


def test_custom_presentation_matches_preset(capsys, tmp_path):
    path = tmp_path / "s2.txt"
    path.write_text(S2_FILE)
    _, custom, _ = run_cli(capsys, "compute", "--presentation", str(path), "--max", "8", "--format", "json")
    _, preset, _ = run_cli(capsys, "compute", "s^n:even:2", "--max", "8", "--format", "json")
    assert json.loads(custom)["groups"] == json.loads(preset)["groups"]


@pytest.mark.parametrize("argv,needle", [
    (["compute", "s^n:odd:4"], "error"),
    (["universal", "3"], "even n"),
    (["pages", "s1"], "closed form"),
])
def test_errors_exit_two(capsys, argv, needle):
    code, _, err = run_cli(capsys, *argv)
    assert code == 2 and needle in err


def test_unbounded_presentation_is_refused(capsys, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("u (-1,1) polynomial\n")
    code, _, err = run_cli(capsys, "compute", "--presentation", str(path))
    assert code == 2 and "window too small" in err


@pytest.mark.skipif(shutil.which("loophom") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["loophom", "verify", "s^n:odd:3", "--max", "10"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("PASS")
