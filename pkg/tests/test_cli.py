import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest

from zfstats.cli import main
from zfstats.config import ConfigError, load_settings, noise_power_watts


def run(argv):
    out = io.StringIO()
    code = main(argv, out=out)
    return code, out.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "net.cfg"
    path.write_text("# small network\nusers_per_cell = 4\nantennas = 8\nseed = 5  # layout seed\n")
    return path


def test_analytic_table(cfg_file):
    code, text = run(["analytic", "--config", str(cfg_file)])
    assert code == 0
    table = rows(text)
    assert list(table[0]) == ["user", "case", "E_S", "Var_S", "E_I", "Var_I"]
    assert len(table) == 9 * 4 * 2
    case2 = [r for r in table if r["case"] == "2"]
    assert all(float(r["Var_S"]) == 0.0 for r in case2)


def test_three_layer_precedence(cfg_file):
    settings = load_settings(cfg_file, ["users_per_cell=3"])
    assert settings["users_per_cell"] == 3  # command line beats file
    assert settings["antennas"] == 8  # file beats default
    assert settings["cells"] == 9  # default survives
    code, text = run(["analytic", "--config", str(cfg_file), "--set", "users_per_cell=3"])
    assert code == 0 and len(rows(text)) == 9 * 3 * 2


def test_missing_antennas_is_usage_error():
    code, _ = run(["analytic"])
    assert code == 2


def test_missing_config_file(tmp_path, capsys):
    code, _ = run(["analytic", "--config", str(tmp_path / "nope.cfg")])
    assert code == 2
    assert "--config" in capsys.readouterr().err


def test_unknown_key_lists_valid_keys(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("antenas = 20\n")
    assert run(["analytic", "--config", str(path)])[0] == 2
    err = capsys.readouterr().err
    assert "antenas" in err and "users_per_cell" in err


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["analytic", "--antenna", "20"])
    assert info.value.code == 2


def test_invalid_rate_grid_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["outage", "--antennas", "12", "--rate-grid", "1:2"])
    assert info.value.code == 2


def test_noise_modes():
    density = noise_power_watts(load_settings())
    assert density == pytest.approx(10 ** ((-174 + 10 * math.log10(9e5) - 30) / 10), rel=1e-12)
    assert density == pytest.approx(3.583e-15, rel=1e-3)
    total = noise_power_watts(load_settings(overrides=["noise_mode=total"]))
    assert total == pytest.approx(10 ** ((-174 - 30) / 10), rel=1e-12)
    with pytest.raises(ConfigError):
        load_settings(overrides=["noise_mode=loud"])


def test_outage_rates_in_bits(tmp_path):
    common = ["outage", "--case", "2", "--family", "gamma", "--antennas", "12",
              "--drops", "1", "--fadings", "30"]
    code, bits = run(common + ["--rate-units", "bits", "--rate-grid", "0.5:6:12"])
    assert code == 0
    ln2 = math.log(2.0)
    code, nats = run(common + ["--rate-grid", f"{0.5 * ln2!r}:{6 * ln2!r}:12"])
    assert code == 0
    rb, rn = rows(bits), rows(nats)
    assert list(rb[0]) == ["R0", "analytic_outage", "empirical_outage", "abs_error"]
    np.testing.assert_allclose([float(r["R0"]) for r in rb], np.linspace(0.5, 6, 12), rtol=1e-12)
    for a, b in zip(rb, rn):
        assert float(a["analytic_outage"]) == pytest.approx(float(b["analytic_outage"]), abs=1e-12)
        assert float(a["empirical_outage"]) == float(b["empirical_outage"])


def test_kstest_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    src = tmp_path / "samples.csv"
    with open(src, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["value"])
        w.writerows([[repr(float(v))] for v in rng.gamma(4.0, 2.0, 2000)])
    dest = tmp_path / "ks.csv"
    assert run(["kstest", str(src), "--output", str(dest)])[0] == 0
    table = {r["family"]: r for r in rows(dest.read_text())}
    assert set(table) == {"gamma", "lognormal", "normal"}
    assert table["gamma"]["reject_5pct"] == "0"
    assert 0 <= float(table["gamma"]["p_value"]) <= 1


def test_kstest_rejects_file_without_value_column(tmp_path):
    src = tmp_path / "other.csv"
    src.write_text("R0,analytic\n0.1,0.2\n")
    assert run(["kstest", str(src)])[0] == 1


def test_unwritable_output_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code, _ = run(["simulate", "--antennas", "12", "--drops", "1", "--fadings", "10",
                   "--output-dir", str(blocker / "sub")])
    assert code == 1


def test_simulate_uses_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("ZFSTATS_OUTPUT_DIR", str(tmp_path / "env"))
    code, text = run(["simulate", "--antennas", "12", "--drops", "1", "--fadings", "10",
                      "--outputs", "moments,kstest"])
    assert code == 0
    assert (tmp_path / "env" / "moments.csv").is_file()
    assert (tmp_path / "env" / "kstest.csv").is_file()
    assert not (tmp_path / "env" / "outage.csv").exists()
    moments = rows((tmp_path / "env" / "moments.csv").read_text())
    assert list(moments[0]) == ["M", "case", "drop", "user", "stat", "analytic", "empirical",
                                "rel_error"]
    assert len(moments) == 2 * 4 * 90


def test_reproduce_fig2_small(tmp_path):
    out = tmp_path / "fig2"
    code, _ = run(["reproduce", "fig2", "--drops", "2", "--fadings", "20", "--output-dir", str(out)])
    assert code == 0
    outage = rows((out / "outage.csv").read_text())
    assert {r["case"] for r in outage} == {"1"}
    assert {r["M"] for r in outage} == {"12", "20", "40"}
    manifest = (out / "manifest.txt").read_text()
    assert "figure = fig2" in manifest and "rmse[M=12,case=1,gamma]" in manifest


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "zfstats", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for sub in ("analytic", "simulate", "kstest", "outage", "reproduce"):
        assert sub in proc.stdout
