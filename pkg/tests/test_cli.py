"""CLI surface: subcommands, exit codes, JSON determinism, file input."""

import json


from conformal_gap_lab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_catalogue_lists_metrics(capsys):
    code, out, _ = run(capsys, "catalogue")
    assert code == 0
    assert "fubini_study" in out and "pp_wave" in out


def test_analyze_fubini_study_point(capsys):
    code, out, _ = run(capsys, "analyze", "fubini_study",
                       "--point", "0.3,0.7,0.5,0.9", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["schema"] == "conformal-gap-lab/1"
    assert abs(data["points"][0]["scalar_curvature"] - 48.0) < 1e-7


def test_analyze_pp_wave_invariants(capsys):
    code, out, _ = run(capsys, "analyze", "pp_wave", "--point", "0,1,0,0", "--json")
    assert code == 0
    data = json.loads(out)
    row = data["points"][0]
    assert row["ricci_norm"] < 1e-8
    assert row["weyl_norm"] > 1e-3
    assert row["kerw_dim"] == 1


def test_analyze_taub_nut_param(capsys):
    code, out, _ = run(capsys, "analyze", "taub_nut", "--param", "m=2.0",
                       "--point", "1.5,1.0,0.3,0.2", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["points"][0]["ricci_norm"] < 1e-8


def test_failure_injection_metric_exits_1(capsys):
    code, out, _ = run(capsys, "analyze", "bad_einstein_claim",
                       "--point", "0.1,0.2,0.3,0.4", "--json")
    assert code == 1
    data = json.loads(out)
    assert data["pass"] is False
    assert any(not c["passed"] for c in data["scale_checks"])


def test_unknown_metric_exits_2(capsys):
    code, _, err = run(capsys, "analyze", "nonsense", "--point", "0,0")
    assert code == 2
    assert "unknown metric" in err


def test_malformed_point_exits_2(capsys):
    code, _, err = run(capsys, "analyze", "pp_wave", "--point", "0,1")
    assert code == 2


def test_domain_violation_exits_2(capsys):
    code, _, err = run(capsys, "analyze", "taub_nut", "--point", "-3,1,0,0")
    assert code == 2


def test_usage_error_exits_2(capsys):
    assert main(["analyze"]) == 2
    assert main(["verify", "not_a_theorem"]) == 2


def test_kerw_pp_split(capsys):
    code, out, _ = run(capsys, "kerw", "pp_split", "--point", "0.2,0.5,0.1,0.3",
                       "--json")
    assert code == 0
    data = json.loads(out)
    assert data["dim"] == 2
    assert data["bound"] == 2


def test_verify_theorem_cli(capsys):
    code, out, _ = run(capsys, "verify", "t_riem", "--case", "b", "--n", "5", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["pass"] is True
    rank_check = next(c for c in data["checks"] if c["name"] == "family_rank")
    assert rank_check["passed"]


def test_verify_rflat_cli(capsys):
    code, out, _ = run(capsys, "verify", "rflat", "--metric", "pp_split", "--json")
    assert code == 0


def test_dims_deterministic_json(capsys):
    code1, out1, _ = run(capsys, "dims", "pp_split", "--seed", "5", "--json")
    code2, out2, _ = run(capsys, "dims", "pp_split", "--seed", "5", "--json")
    assert code1 == code2 == 0
    assert out1 == out2
    data = json.loads(out1)
    assert data["dims"]["d_ae"] == {"exact": True, "lower": 3, "upper": 3}


def test_env_seed_default(capsys, monkeypatch):
    monkeypatch.setenv("CGL_SEED", "11")
    code, out, _ = run(capsys, "analyze", "pp_split", "--json")
    assert code == 0
    assert json.loads(out)["seed"] == 11


def test_rescale_invariance_cli(capsys):
    code, out, _ = run(capsys, "rescale", "pp_split", "--omega", "exp(x/9)",
                       "--point", "0.1,0.4,0.2,0.0", "--json")
    assert code == 0
    data = json.loads(out)
    assert all(c["passed"] for c in data["checks"])


def test_metric_file_input(tmp_path, capsys):
    path = tmp_path / "cone_line.metric"
    path.write_text(
        "dim = 3\nsignature = 0,3\n"
        "g 1 1 : 1\ng 2 2 : x1^2\ng 3 3 : 1\ndomain : x1 - 0.1\n"
    )
    code, out, _ = run(capsys, "analyze", str(path), "--point", "1.0,0.3,0.0", "--json")
    assert code == 0
    data = json.loads(out)
    assert data["metric"] == "cone_line"
    # a cone crossed with a line is flat away from the tip
    assert abs(data["points"][0]["scalar_curvature"]) < 1e-10


def test_out_flag_writes_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code = main(["analyze", "pp_wave", "--point", "0,1,0,0", "--json",
                 "--out", str(target)])
    assert code == 0
    data = json.loads(target.read_text())
    assert data["metric"] == "pp_wave"
