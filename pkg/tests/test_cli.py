import csv
import io
import json
import math

import numpy as np
import pytest

from bmgeom import cli


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_body(tmp_path, doc, name="body.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc)
    return str(p)


def test_constants_exact(capsys):
    code, out, _ = run(["constants", "--n", "2"], capsys)
    assert code == 0
    r = json.loads(out)["results"]
    assert r["a_n"]["exact"] == "1/32"
    assert r["b_n"]["exact"] == "32"
    assert r["d_n"]["exact"] == "83894272"
    assert r["bhat_n"]["exact"] == "2293984"


def test_constants_csv(capsys):
    code, out, _ = run(["constants", "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[0] == ["name", "exact", "value"]
    assert rows[1][0] == "a_n" and float(rows[1][2]) == 1 / 32


def test_bm_square_disc(capsys):
    code, out, _ = run(["bm", "--a", "builtin:square", "--b", "builtin:disc1024",
                        "--grid", "512"], capsys)
    assert code == 0
    r = json.loads(out)["results"]
    assert abs(r["value"] - math.sqrt(2)) < 1e-2
    assert r["replayed_value"] == pytest.approx(r["value"], rel=1e-12)


def test_bm_linear_flag(capsys):
    code, out, _ = run(["bm", "--linear", "--a", "builtin:square", "--b", "builtin:square",
                        "--grid", "256"], capsys)
    assert code == 0
    assert json.loads(out)["results"]["value"] == pytest.approx(1.0, abs=1e-9)


def test_body_file(tmp_path, capsys):
    path = write_body(tmp_path, {"dim": 2, "vertices": [[-1, -1], [1, -1], [1, 1], [-1, 1]]})
    code, out, _ = run(["blellipsoid", "--a", path], capsys)
    assert code == 0
    doc = json.loads(out)
    assert np.allclose(doc["results"]["semi_axes"], 2 / math.sqrt(3), atol=1e-9)
    assert len(doc["parameters"]["a_sha256"]) == 64


@pytest.mark.parametrize("doc,where", [
    ("{not json", "line 1"),
    ({"dim": 4, "vertices": []}, "dim"),
    ({"dim": 2}, "vertices"),
    ({"dim": 2, "vertices": [[0, 0], [1, "x"], [0, 1]]}, "vertices[1]"),
    ([1, 2], None),
])
def test_parse_errors(tmp_path, capsys, doc, where):
    path = write_body(tmp_path, doc)
    code, out, err = run(["blellipsoid", "--a", path], capsys)
    assert code == cli.EXIT_INPUT
    e = json.loads(out)["results"]["error"]
    assert e["type"] == "ParseError"
    if where:
        assert where in e["message"]
    assert err.startswith("bmgeom blellipsoid:")


def test_missing_file(capsys):
    code, out, _ = run(["blellipsoid", "--a", "/nonexistent/body.json"], capsys)
    assert code == cli.EXIT_INPUT


def test_wrong_dimension(capsys):
    code, _, _ = run(["section", "--a", "builtin:square"], capsys)
    assert code == cli.EXIT_INPUT


def test_bad_theta(capsys):
    code, _, _ = run(["section", "--a", "builtin:cube", "--theta", "0,0"], capsys)
    assert code == cli.EXIT_INPUT


def test_degenerate_body_is_input_error(tmp_path, capsys):
    path = write_body(tmp_path, {"dim": 2, "vertices": [[0, 0], [1, 0], [2, 0]]})
    code, _, _ = run(["vnj", "--a", path], capsys)
    assert code == cli.EXIT_INPUT


def test_stablewindow_precondition_exit(capsys):
    code, out, _ = run(["stablewindow", "--a", "builtin:square", "--eps", "0.1",
                        "--delta-prime", "1.0"], capsys)
    assert code == cli.EXIT_FAILED
    assert json.loads(out)["results"]["error"]["type"] == "PreconditionViolated"


def test_section_cube_hexagon(capsys):
    code, out, _ = run(["section", "--a", "builtin:cube", "--theta", "1,1,1"], capsys)
    assert code == 0
    v = np.array(json.loads(out)["results"]["vertices"])
    assert v.shape == (6, 2)
    assert np.allclose(np.linalg.norm(v, axis=1), math.sqrt(2), atol=1e-9)


def test_out_file(tmp_path, capsys):
    dest = tmp_path / "r.csv"
    code, out, _ = run(["section", "--a", "builtin:cube", "--format", "csv", "--out", str(dest)],
                       capsys)
    assert code == 0 and out == ""
    rows = list(csv.reader(dest.open()))
    assert rows[0] == ["u", "v"] and len(rows) == 5


def replay_roundtrip(tmp_path, capsys, argv):
    rep = tmp_path / "rep.json"
    assert cli.main(argv + ["--out", str(rep)]) == 0
    code, out, _ = run(["replay", str(rep)], capsys)
    assert json.loads(out)["match"] is True
    return code


@pytest.mark.parametrize("argv", [
    ["constants", "--n", "3"],
    ["bm", "--a", "builtin:triangle", "--b", "builtin:ngon:5", "--grid", "256"],
    ["bl", "--a", "builtin:square", "--b", "builtin:disc256", "--grid", "512"],
    ["vnj", "--a", "builtin:ngon:6", "--grid", "256"],
    ["isoprofile", "--a", "builtin:ngon:5", "--grid", "512"],
    ["centeredsection", "--a", "builtin:octahedron", "--subdiv", "1"],
])
def test_replay_bit_for_bit(tmp_path, capsys, argv):
    assert replay_roundtrip(tmp_path, capsys, argv) == 0


def test_replay_body_file(tmp_path, capsys):
    path = write_body(tmp_path, {"dim": 2, "vertices": [[-2, 0], [-1, -1], [1, -1], [2, 0], [1, 1], [-1, 1]]})
    assert replay_roundtrip(tmp_path, capsys, ["vnj", "--a", path, "--grid", "256"]) == 0


def test_replay_detects_changed_body(tmp_path, capsys):
    path = write_body(tmp_path, {"dim": 2, "vertices": [[-2, 0], [-1, -1], [1, -1], [2, 0], [1, 1], [-1, 1]]})
    rep = tmp_path / "rep.json"
    cli.main(["vnj", "--a", path, "--grid", "256", "--out", str(rep)])
    write_body(tmp_path, {"dim": 2, "vertices": [[-3, 0], [-1, -1], [1, -1], [3, 0], [1, 1], [-1, 1]]})
    code, out, _ = run(["replay", str(rep)], capsys)
    assert code == cli.EXIT_FAILED
    assert json.loads(out)["match"] is False


def test_replay_detects_tampered_results(tmp_path, capsys):
    rep = tmp_path / "rep.json"
    cli.main(["constants", "--out", str(rep)])
    doc = json.loads(rep.read_text())
    doc["results"]["C_n"] = 0.0
    rep.write_text(json.dumps(doc))
    code, _, _ = run(["replay", str(rep)], capsys)
    assert code == cli.EXIT_FAILED


def test_report_has_no_nan(capsys):
    code, out, _ = run(["isoprofile", "--a", "builtin:disc512", "--grid", "256"], capsys)
    assert code == 0
    json.loads(out)
    assert "NaN" not in out and "Infinity" not in out


def test_svg_deterministic(tmp_path):
    rows = [(0.01, 0.05), (0.03, 0.08), (0.1, 0.12)]
    ref = {"c": 0.25, "power": 1 / 3, "label": "fit"}
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    cli.emit_svg_scatter(rows, ref, str(a))
    cli.emit_svg_scatter(rows, ref, str(b))
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("<svg") and "log-log" in text
    assert text.count("<circle") == len(rows) + 1


def test_svg_linear_axes(tmp_path):
    p = tmp_path / "z.svg"
    cli.emit_svg_scatter([(0.0, 0.0), (0.1, 0.2)], None, str(p))
    assert "linear" in p.read_text()
    with pytest.raises(ValueError):
        cli.emit_svg_scatter([], None, str(p))


def test_fieldexp_with_plot(tmp_path, capsys):
    svg1, svg2 = tmp_path / "1.svg", tmp_path / "2.svg"
    args = ["fieldexp", "--t", "0.2,0.4", "--subdiv", "0", "--pairs", "20", "--grid", "256"]
    assert cli.main(args + ["--plot", str(svg1), "--out", str(tmp_path / "r.json")]) == 0
    assert cli.main(args + ["--plot", str(svg2), "--out", str(tmp_path / "s.json")]) == 0
    assert svg1.read_bytes() == svg2.read_bytes()
    capsys.readouterr()
    code, out, _ = run(["replay", str(tmp_path / "r.json")], capsys)
    assert code == 0
