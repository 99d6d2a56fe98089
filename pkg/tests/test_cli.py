import json
import subprocess
import sys

import pytest

from weightlab.cli import main, run_command


def run(*argv):
    return run_command(list(argv))


def as_json(res):
    return json.loads(res.output)


def test_verify_lower_product_gevrey():
    res = run("verify", "lower-product", "--sigma", "gevrey(1)", "--tau", "gevrey(1)")
    assert res.code == 0
    doc = as_json(res)
    assert all(c["state"] == "Holds" for c in doc["claims"])
    assert doc["config"]["p_max"] == 400


def test_fn_index_bracket_contains_two():
    res = run("fn", "index", "--expr", "idpow(0.5)", "--which", "gamma")
    assert res.code == 0
    b = as_json(res)["gamma"]
    assert b["lower"] <= 2.0 <= b["upper"]
    assert "gamma_bar" not in as_json(res)


def test_conj_upper_ill_defined_exits_65():
    res = run("conj", "upper", "--sigma", "gevrey(1)", "--tau", "gevrey(1)")
    assert res.code == 65
    assert res.diagnostic["error"] == "well-definedness-error"
    assert as_json(res)["guard"]["state"] == "Fails"


def test_usage_errors_exit_64():
    for argv in (["bogus"], ["fn", "eval"], ["fn", "eval", "--expr", "gevrey(-1)"], ["verify", "division"],
                 ["seq", "gen"], ["fn", "eval", "--expr", "gevrey(1)", "--t-min", "5", "--t-max", "1"]):
        res = run(*argv)
        assert res.code == 64, argv
        assert "error" in as_json(res)
    assert as_json(run("fn", "eval", "--expr", "gevrey(-1)"))["offset"] == 7


def test_domain_error_exits_65(tmp_path):
    seq = tmp_path / "g.json"
    assert main(["seq", "gen", "--alpha", "1", "--p-max", "10", "--out", str(seq)]) == 0
    res = run("fn", "eval", "--expr", f'assoc("{seq}")', "--t-max", "1e3")
    assert res.code == 65 and res.diagnostic["error"] == "domain-error"


def test_fn_eval_csv_headers():
    res = run("fn", "eval", "--expr", "idpow(1)", "--t-points", "4", "--t-max", "1000")
    lines = res.output.splitlines()
    header = [x for x in lines if x.startswith("#")]
    assert any(x.startswith("# grid:") for x in header) and any("tol_rel" in x for x in header)
    body = [x for x in lines if not x.startswith("#")]
    assert body[0] == "t,value" and len(body) == 5
    t, v = map(float, body[-1].split(","))
    assert t == v == 1000.0


def test_conj_lower_csv_columns():
    res = run("conj", "lower", "--sigma", "idpow(1)", "--tau", "idpow(1)", "--t-points", "3")
    assert res.code == 0
    body = [x for x in res.output.splitlines() if not x.startswith("#")]
    assert body[0] == "t,value,s_opt"
    t, v, s = map(float, body[1].split(","))
    assert v == pytest.approx(2 * t ** 0.5, rel=1e-9)


def test_reports_are_byte_identical():
    argv = ["verify", "division", "--omega", "gevrey(3)", "--alpha", "1"]
    a, b = run(*argv), run(*argv)
    assert a.code == 0 and a.output == b.output


def test_seq_workflow(tmp_path):
    g1, g2 = tmp_path / "g1.json", tmp_path / "g2.json"
    assert main(["seq", "gen", "--alpha", "1", "--out", str(g1)]) == 0
    assert main(["seq", "gen", "--alpha", "2", "--out", str(g2)]) == 0
    assert run("seq", "check", str(g2)).code == 0
    assert run("seq", "rel", str(g1), str(g2), "--kind", "triangle").code == 0
    assert run("seq", "rel", str(g2), str(g1)).code == 1
    assert run("seq", "rel", str(g1), str(tmp_path / "nope.json")).code == 64
    vals = run("seq", "gen", "--values", "1,1,2,6,24")
    assert as_json(vals)["sequence"]["p_max"] == 4


def test_matrix_workflow(tmp_path):
    m1, m2 = tmp_path / "m1.json", tmp_path / "m2.json"
    assert main(["matrix", "build", "--expr", "gevrey(1)", "--out", str(m1)]) == 0
    assert main(["matrix", "build", "--expr", "gevrey(2)", "--out", str(m2)]) == 0
    res = run("matrix", "check", str(m1))
    assert res.code == 0, as_json(res)
    assert run("matrix", "rel", str(m1), str(m2), "--kind", "triangle").code == 0
    assert run("matrix", "rel", str(m2), str(m1)).code == 1


def test_fn_check_reports_fails_for_gevrey():
    # omega_{G^1} ~ t fails (omega_5) and strong non-quasianalyticity
    res = run("fn", "check", "--expr", "gevrey(1)")
    assert res.code == 1
    v = as_json(res)["verdicts"]
    assert v["omega1"]["state"] == "Holds" and v["omega5"]["state"] == "Fails"


def test_config_file_and_flags(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("t_points = 3\nt_max = 100\n")
    res = run("fn", "eval", "--expr", "idpow(1)", "--config", str(cfg), "--format", "json", "--t-points", "5")
    doc = as_json(res)
    assert doc["config"]["t_points"] == 5 and doc["config"]["t_max"] == 100
    assert len(doc["result"]["t"]) == 5
    cfg.write_text("unknown = 1\n")
    assert run("fn", "eval", "--expr", "idpow(1)", "--config", str(cfg)).code == 64


def test_report_render(tmp_path):
    rep = tmp_path / "ob.json"
    assert main(["verify", "obstruction", "--out", str(rep)]) == 0
    res = run("report", "render", str(rep), "--format", "csv")
    lines = res.output.splitlines()
    assert "id,state,margin,description" in lines
    assert any(x.startswith("crossing,Holds") for x in lines)
    assert any(x.startswith("# p_max:") for x in lines)
    assert json.loads(run("report", "render", str(rep), "--format", "json").output)["suite"] == "obstruction"


def test_verify_params_file(tmp_path):
    p = tmp_path / "params.json"
    p.write_text(json.dumps({"alpha": 1.0, "mu_abs": 2.0, "C": 1e6, "n_max": 200}))
    res = run("verify", "obstruction", "--params", str(p))
    assert res.code == 0
    assert as_json(res)["params"]["C"] == 1e6


def test_verify_perturb_flips_exit_code():
    res = run("verify", "division", "--omega", "gevrey(3)", "--alpha", "1", "--perturb")
    assert res.code == 1


def test_help_exits_zero():
    assert run("--help").code == 0


def test_console_entry_point_module():
    proc = subprocess.run([sys.executable, "-m", "weightlab", "seq", "gen", "--alpha", "1", "--p-max", "3"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["sequence"]["p_max"] == 3
