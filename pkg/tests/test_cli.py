import csv
import io

import pytest

from mimo_sdof.cli import UsageError, main, parse_int_range


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.mark.parametrize("text,expected", [
    ("64..2048x2", [64, 128, 256, 512, 1024, 2048]),
    ("1..4", [1, 2, 3, 4]),
    ("1..9+4", [1, 5, 9]),
    ("2,3,5", [2, 3, 5]),
    ("7", [7]),
    (4, [4]),
])
def test_parse_int_range(text, expected):
    assert parse_int_range(text) == expected


@pytest.mark.parametrize("bad", ["", "4..2", "a..b", "1..8x1", "0", "1,,2"])
def test_parse_int_range_rejects(bad):
    with pytest.raises(UsageError):
        parse_int_range(bad)


def test_sdof_table_full_grid(capsys):
    code, out, _ = run(capsys, "sdof-table", "--m", "64..2048x2", "--n", "64..1024x2")
    assert code == 0
    r = rows(out)
    assert len(r) == 30
    cell = {(int(x["M"]), int(x["N"])): x["lower"] for x in r}
    assert cell[64, 64] == "42.6667" and cell[1024, 1024] == "682.6667" and cell[128, 64] == "64"


def test_sdof_table_single_rows(capsys):
    _, out, _ = run(capsys, "sdof-table", "--m", 2, "--n", 3)
    (r,) = rows(out)
    assert float(r["lower"]) == 1.2
    _, out, _ = run(capsys, "sdof-table", "--m", 1, "--n", 4)
    assert rows(out)[0]["lower"] == "0"


def test_sdof_table_usage_errors(capsys):
    assert run(capsys, "sdof-table", "--m", "4..2", "--n", 3)[0] == 2
    assert run(capsys, "sdof-table", "--m", 2)[0] == 2
    assert run(capsys, "no-such-command")[0] == 2


@pytest.mark.parametrize("m,n,taus", [(3, 2, ("2", "2", "1")), (2, 3, ("3", "1", "0")), (5, 2, ("2", "2", "2"))])
def test_optimize_examples(capsys, m, n, taus):
    code, out, _ = run(capsys, "optimize", "--m", m, "--n", n)
    (r,) = rows(out)
    assert code == 0
    assert (r["tau1"], r["tau2"], r["tau3"]) == taus
    assert r["agree"] == "true"


def test_verify_ranks_single_config(capsys):
    code, out, _ = run(capsys, "verify-ranks", "--m", 2, "--n", 3, "--draws", 1)
    assert code == 0
    assert [r["matrix"] for r in rows(out)] == ["A", "B", "H1", "interferer"]


def test_verify_ranks_violation_exit_codes(capsys):
    code, _, err = run(capsys, "verify-ranks", "--m", 3, "--n", 2, "--draws", 2, "--violate-security")
    assert code == 1
    assert "gap security M=3 N=2 draw=0 measured=2 predicted=2" in err
    code, _, _ = run(capsys, "verify-ranks", "--m", 3, "--n", 2, "--draws", 2, "--violate-security",
                     "--expect-violation")
    assert code == 0
    code, _, _ = run(capsys, "verify-ranks", "--m", 3, "--n", 2, "--draws", 2, "--violate-decoding",
                     "--expect-violation")
    assert code == 0


def test_verify_ranks_with_appendix(capsys):
    code, out, _ = run(capsys, "verify-ranks", "--m", "2,3", "--n", "2,3", "--draws", 2, "--appendix")
    assert code == 0
    names = {r["matrix"] for r in rows(out)}
    assert {"U", "L", "UL", "UL=target", "Q", "H12_II_Phi"} <= names


def test_simulate_compare_rows(capsys):
    code, out, _ = run(capsys, "simulate", "--scheme", "alignment", "--compare", "ia-d", "--m", 3, "--n", 2,
                       "--snr", "10,20,30", "--trials", 100)
    assert code == 0
    r = rows(out)
    assert len(r) == 6
    at30 = {x["scheme"]: float(x["secure_sum"]) for x in r if x["snr_db"] == "30.000000"}
    assert at30["alignment"] >= at30["ia-d"]


def test_simulate_zero_snr(capsys):
    code, out, _ = run(capsys, "simulate", "--scheme", "decoding", "--m", 2, "--n", 3, "--snr", 0,
                       "--snr-unit", "linear", "--trials", 5)
    assert code == 0
    assert float(rows(out)[0]["secure_sum"]) == 0.0


def test_simulate_slope_check(capsys):
    code, out, err = run(capsys, "simulate", "--m", 2, "--n", 3, "--slope", "40,60", "--trials", 100)
    assert code == 0 and "pass" in err
    assert len(rows(out)) == 2
    code, _, err = run(capsys, "simulate", "--m", 2, "--n", 3, "--slope", "40,60", "--trials", 20,
                       "--tau", "3,2,0")
    assert code == 1 and "FAIL" in err


def test_simulate_scheme_mismatch_is_usage_error(capsys):
    assert run(capsys, "simulate", "--scheme", "alignment", "--m", 2, "--n", 3, "--trials", 2)[0] == 2
    assert run(capsys, "simulate", "--compare", "ia-d", "--m", 2, "--n", 3, "--trials", 2)[0] == 2


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "exp.toml"
    cfg.write_text('m = 3\nn = 2\ntrials = 4\nsnr = "20"\nseed = 5\n')
    _, out, _ = run(capsys, "simulate", "--config", cfg)
    (r,) = rows(out)
    assert (r["M"], r["trials"], r["snr_db"]) == ("3", "4", "20.000000")
    _, out, _ = run(capsys, "simulate", "--config", cfg, "--trials", 6)
    assert rows(out)[0]["trials"] == "6"
    bad = tmp_path / "bad.toml"
    bad.write_text("colour = 1\n")
    assert run(capsys, "simulate", "--config", bad)[0] == 2
    nested = tmp_path / "nested.toml"
    nested.write_text("[section]\nm = 1\n")
    assert run(capsys, "simulate", "--config", nested)[0] == 2


def test_outputs_are_byte_identical(tmp_path, capsys):
    blobs = []
    for k in range(2):
        out = tmp_path / f"r{k}.csv"
        plot = tmp_path / f"p{k}.csv"
        assert main(["sweep", "--m", "2..4", "--n", "2,3", "--snr", "10,30", "--trials", "5", "--seed", "3",
                     "--compare", "ia-d", "-o", str(out), "--plot-data", str(plot)]) == 0
        blobs.append((out.read_bytes(), plot.read_bytes()))
    capsys.readouterr()
    assert blobs[0] == blobs[1]
    assert blobs[0][1].decode().splitlines()[0] == "x,y,series"
    assert b"ia-d" in blobs[0][0]


def test_simulate_with_trajectory(tmp_path, capsys):
    from mimo_sdof.channel import synth_trajectory, write_trajectory_csv

    path = tmp_path / "traj.csv"
    write_trajectory_csv(synth_trajectory("roundabout", 200), path)
    code, out, _ = run(capsys, "simulate", "--m", 3, "--n", 2, "--trajectory", path, "--tx-power-dbm", "10",
                       "--trials", 5)
    assert code == 0
    (r,) = rows(out)
    assert r["snr_db"] == "99.000000" and float(r["secure_sum"]) > 0
    assert run(capsys, "simulate", "--m", 3, "--n", 2, "--trajectory", path, "--synth", "roundabout")[0] == 2
