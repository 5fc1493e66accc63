"""Tests for the batch command-line front-end."""

import json

import pytest

from qmbs.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def data_section(text):
    """CSV payload: everything from the metadata block on, minus comments."""
    lines = text.splitlines()
    starts = [i for i, ln in enumerate(lines) if ln.startswith("# ")]
    if starts:
        lines = lines[starts[0]:]
    return [ln for ln in lines if not ln.startswith("#")]


def test_ie_slider_prints_table_value(capsys):
    code, out, _ = run(capsys, "ie-slider", "--N", "5", "--d", "2",
                       "--beta", "1")
    assert code == 0
    assert "1-p = 0.57183" in out
    rows = data_section(out)
    assert rows[0] == "N,d,beta,one_minus_p"
    assert rows[1].startswith("5,2,1,0.5718315")


def test_ie_slider_beta_two(capsys):
    code, out, _ = run(capsys, "ie-slider", "--N", "5", "--d", "2",
                       "--beta", "2")
    assert code == 0
    assert "0.5718" not in out
    assert data_section(out)[1].startswith("5,2,2,0.63937")


def test_motzkin_entropy_rows_and_entropy(capsys):
    code, out, _ = run(capsys, "motzkin-entropy", "--n", "4")
    assert code == 0
    assert "S = 1.3921" in out
    rows = data_section(out)
    assert rows[0] == "m,p_exact,p"
    assert rows[1].startswith("0,4/9,")
    assert rows[2].startswith("1,4/9,")
    assert rows[3].startswith("2,1/9,")


def test_ff_regimes_frustrated(capsys):
    code, out, _ = run(capsys, "ff-regimes", "--d", "4", "--r", "6",
                       "--N", "20")
    assert code == 0
    assert out.splitlines()[0] == "frustrated"
    assert "# regime=frustrated" in out


def test_ff_regimes_product(capsys):
    code, out, _ = run(capsys, "ff-regimes", "--d", "3", "--r", "2",
                       "--N", "8")
    assert code == 0
    assert out.splitlines()[0] == "ff_product"


def test_supertree_verify_ok(capsys):
    code, out, _ = run(capsys, "supertree-verify", "--n", "4")
    assert code == 0
    assert "OK" in out


def test_motzkin_gap_slope(capsys):
    code, out, _ = run(capsys, "motzkin-gap", "--nmin", "3", "--nmax", "6")
    assert code == 0
    meta = dict(ln[2:].split("=", 1) for ln in out.splitlines()
                if ln.startswith("# ") and "=" in ln)
    assert -3.3 < float(meta["loglog_slope"]) < -2.5


def test_d4_entropy(capsys):
    code, out, _ = run(capsys, "d4-entropy", "--n", "3")
    assert code == 0
    rows = data_section(out)
    assert rows[0] == "m,multiplicity,p"
    assert len(rows) == 1 + 4  # m = 0..3


def test_bad_subcommand_exits_2(capsys):
    assert run(capsys, "no-such-command")[0] == 2


def test_bad_flag_value_exits_2(capsys):
    assert run(capsys, "ie-slider", "--N", "five", "--d", "2")[0] == 2


def test_even_N_closed_form_exits_2(capsys):
    code, _, err = run(capsys, "ie-slider", "--N", "4", "--d", "2")
    assert code == 2
    assert "odd N" in err


def test_invalid_range_exits_2(capsys):
    assert run(capsys, "motzkin-gap", "--nmin", "9", "--nmax", "3")[0] == 2


def test_json_format(capsys):
    code, out, _ = run(capsys, "motzkin-entropy", "--n", "4",
                       "--format", "json")
    assert code == 0
    payload = out[out.index("{"):]
    doc = json.loads(payload)
    assert doc["columns"] == ["m", "p_exact", "p"]
    assert doc["rows"][0][1] == "4/9"
    assert doc["metadata"]["subcommand"] == "motzkin-entropy"


def test_output_file_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "ie-density", "--N", "3", "--d", "2",
                         "--trials", "100", "--bins", "8", "--seed", "7",
                         "--out", str(path))
        assert code == 0
    strip = lambda p: [ln for ln in p.read_text().splitlines()
                       if not ln.startswith("# wall_time")]
    assert strip(a) == strip(b)


def test_seed_changes_mc_output(tmp_path, capsys):
    outs = []
    for seed in ("1", "2"):
        p = tmp_path / f"s{seed}.csv"
        run(capsys, "ie-density", "--N", "3", "--d", "2", "--trials", "100",
            "--bins", "8", "--seed", seed, "--out", str(p))
        outs.append(data_section(p.read_text()))
    assert outs[0] != outs[1]


def test_qmbs_seed_env_default(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("QMBS_SEED", "7")
    p_env = tmp_path / "env.csv"
    run(capsys, "ie-density", "--N", "3", "--d", "2", "--trials", "100",
        "--bins", "8", "--out", str(p_env))
    monkeypatch.delenv("QMBS_SEED")
    p_flag = tmp_path / "flag.csv"
    run(capsys, "ie-density", "--N", "3", "--d", "2", "--trials", "100",
        "--bins", "8", "--seed", "7", "--out", str(p_flag))
    strip = lambda p: [ln for ln in p.read_text().splitlines()
                       if not ln.startswith("# wall_time")]
    assert strip(p_env) == strip(p_flag)


def test_config_file_defaults_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 5, "d": 2, "beta": 2}))
    code, out, _ = run(capsys, "ie-slider", "--N", "5", "--d", "2",
                       "--config", str(cfg))
    assert code == 0
    assert "0.63937" in out  # config supplied beta=2
    code, out, _ = run(capsys, "ie-slider", "--N", "5", "--d", "2",
                       "--beta", "1", "--config", str(cfg))
    assert code == 0
    assert "0.57183" in out  # explicit flag wins


def test_config_unknown_key_exits_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"nope": 1}))
    code, _, err = run(capsys, "ie-slider", "--N", "5", "--d", "2",
                       "--config", str(cfg))
    assert code == 2
    assert "nope" in err


def test_threads_flag_does_not_change_results(capsys):
    _, out1, _ = run(capsys, "motzkin-entropy", "--n", "8")
    _, out2, _ = run(capsys, "motzkin-entropy", "--n", "8", "--threads", "1")
    assert data_section(out1) == data_section(out2)


def test_mps_gs_motzkin_smoke(capsys):
    code, out, _ = run(capsys, "mps-gs", "--model", "motzkin", "--N", "4",
                       "--chi", "4", "--max-sweeps", "400")
    assert code == 0
    rows = data_section(out)
    assert rows[0] == "sweep,energy"
    final = float(rows[-1].split(",")[1])
    assert final < 1e-2
