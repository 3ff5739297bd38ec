import io
import json
import shutil
import subprocess

import numpy as np
import pytest

from drcn import cli, figures
from drcn.figures import load_reference


def run(*argv):
    buf = io.StringIO()
    code = cli.main(list(argv), out=buf)
    return code, buf.getvalue()


def result_line(text):
    line = [l for l in text.splitlines() if l.startswith("RESULT ")][-1]
    return dict(kv.split("=") for kv in line.split()[1:])


def test_rate_sim_fig3_plateau(tmp_path):
    out = tmp_path / "r.json"
    code, text = run("rate", "--h1", "0.15", "--h2", "1", "--h3", "1", "--p", "100",
                     "--scheme", "sim", "--out", str(out))
    assert code == 0
    rate = float(result_line(text)["sim"])
    assert 1.66276292279473 <= rate <= 1.66276292279473 + 2e-3
    report = json.loads(out.read_text())
    assert report["schemes"]["sim"]["rate"] == pytest.approx(rate, rel=1e-14)
    assert set(report["schemes"]["sim"]["argmax"]) == {"alpha", "beta", "gamma"}
    assert report["config"]["P1"] == 100.0


def test_rate_ordering_error(capsys):
    code, _ = run("rate", "--h1", "1", "--h2", "0.5", "--p", "1")
    assert code == 1
    assert "OrderingError" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["rate", "--h1", "0.1", "--h2", "1", "--p", "1", "--p1", "1"],
    ["rate", "--h1", "0.1", "--h2", "1", "--p1", "1"],
    ["rate", "--h1", "0.1", "--h2", "1", "--p", "-1"],
    ["rate", "--h1", "nan", "--h2", "1", "--p", "1"],
    ["threshold", "--h1", "0.1", "--h2", "1", "--p", "1", "-g", "-0.5"],
    ["sweep", "--h1", "0.1", "--h2", "1", "--var", "h3", "--from", "0", "--to", "1",
     "--points", "3", "--log"],
])
def test_config_errors_exit_1(argv):
    assert run(*argv)[0] == 1


def test_argparse_errors_exit_1():
    with pytest.raises(SystemExit) as exc:
        cli.main(["rate", "--h2", "1"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["bogus"])
    assert exc.value.code == 1


def test_io_error_exit_3(tmp_path):
    bad = tmp_path / "missing" / "x.csv"
    code, _ = run("sweep", "--h1", "0.15", "--h2", "1", "--p", "100", "--var", "h3",
                  "--from", "0.5", "--to", "1", "--points", "2", "--scheme", "sim", "--out", str(bad))
    assert code == 3


def test_sweep_linear_two_points_is_deterministic(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        code, _ = run("sweep", "--h1", "0.15", "--h2", "1", "--p", "100", "--var", "h3",
                      "--from", "0.5", "--to", "2", "--points", "2", "--scheme", "sim",
                      "--out", str(p))
        assert code == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    lines = paths[0].read_text().splitlines()
    assert lines[0] == "abscissa,r_sim"
    assert [l.split(",")[0] for l in lines[1:]] == ["0.5", "2"]


def test_sweep_snr2_in_db_to_stdout():
    code, text = run("sweep", "--h1", "0.5", "--h2", "1", "--h3", "2", "--var", "snr2",
                     "--from", "0", "--to", "20", "--points", "3", "--scheme", "sim")
    assert code == 0
    rows = [l.split(",") for l in text.splitlines()[1:]]
    assert [float(r[0]) for r in rows] == [1.0, 10.0, 100.0]
    assert float(rows[2][1]) == pytest.approx(1.6628, abs=2e-3)


def test_threshold_on_at_strong_d2d():
    code, text = run("threshold", "--h1", "0.15", "--h2", "1", "--h3", "10", "--p", "100",
                     "-g", "0.5")
    assert code == 0
    assert text.splitlines()[0] == "relay ON"
    res = result_line(text)
    assert res["relay"] == "on"
    assert float(res["gain"]) == pytest.approx(float(res["r_sim"]) - float(res["r_nocoop"]))
    assert float(res["gain"]) > 1.0


def test_threshold_without_d2d_reports_actual_gain():
    # with h3 = 0 the sim scheme still beats the baseline by the two-way gain
    code, text = run("threshold", "--h1", "0.15", "--h2", "1", "--h3", "0", "--p", "100",
                     "-g", "0.5")
    assert text.splitlines()[0] == "relay OFF"
    gain = float(result_line(text)["gain"])
    assert 0.0 < gain < 0.5
    code, text = run("threshold", "--h1", "0.15", "--h2", "1", "--h3", "0", "--p", "100",
                     "-g", str(gain * 1.001))
    assert text.splitlines()[0] == "relay OFF"
    code, text = run("threshold", "--h1", "0.15", "--h2", "1", "--h3", "0", "--p", "100",
                     "-g", "0")
    assert text.splitlines()[0] == "relay ON"


def test_figure_command_with_stubbed_solvers(tmp_path, monkeypatch):
    def fake_curves(base, variable, xs, schemes, cf_exponent, sim_tol, sep_tol):
        ref = load_reference("fig4")
        out = {"abscissa": np.asarray(xs)}
        for s in schemes:
            col = figures.COLUMNS[s]
            out[col] = np.interp(xs, *ref.curves[col])
        return out

    monkeypatch.setattr(figures, "compute_curves", fake_curves)
    code, text = run("figure", "fig4", "--cf-exponent", "3", "--out", str(tmp_path))
    assert code == 0, text
    assert "FAIL" not in text
    assert (tmp_path / "fig4_cf3.csv").exists() and not (tmp_path / "fig4_cf2.csv").exists()

    def bad_curves(*args, **kw):
        out = fake_curves(*args, **kw)
        if "r_nocoop" in out:
            out["r_nocoop"] = out["r_nocoop"] + 0.1
        return out

    monkeypatch.setattr(figures, "compute_curves", bad_curves)
    code, text = run("figure", "fig4", "--out", str(tmp_path))
    assert code == 2
    assert "FAIL  fig4 r_nocoop at 20 dB" in text


@pytest.mark.skipif(shutil.which("drcn") is None, reason="console script not installed")
def test_console_script_exit_codes():
    ok = subprocess.run(["drcn", "rate", "--h1", "0.15", "--h2", "1", "--h3", "1", "--p", "100",
                         "--scheme", "sim"], capture_output=True, text=True)
    assert ok.returncode == 0 and "RESULT sim=" in ok.stdout
    bad = subprocess.run(["drcn", "rate", "--h1", "1", "--h2", "0.5", "--p", "1"],
                         capture_output=True, text=True)
    assert bad.returncode == 1 and "h2**2 >= h1**2" in bad.stderr
