import re
import subprocess
import sys

import pytest

from qlink.cli import build_parser, main
from qlink.config import ConfigError, load_config, load_preset, parse_config_text, resolve_config


def test_parse_valid_and_defaults():
    v = parse_config_text("link.dimension = 3  # qutrit\nlantern.extinction_db = -15, -16, -17\n")
    assert v == {"link.dimension": 3, "lantern.extinction_db": (-15.0, -16.0, -17.0)}


def test_validation_reports_every_bad_line():
    text = "\n".join([
        "detector.efficiency = 1.2",
        "# comment",
        "fiber.excess_loss_db = -0.5",
        "link.colour = red",
        "garbage",
        "detector.dark_count_prob = -1e-6",
    ])
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text, "bad.cfg")
    errs = exc.value.errors
    assert [int(re.match(r"line (\d+)", e).group(1)) for e in errs] == [1, 3, 4, 5, 6]
    assert "[0, 1]" in errs[0] and ">= 0" in errs[1]


def test_cross_field_error_surfaces_on_load(tmp_path):
    p = tmp_path / "x.cfg"
    p.write_text("link.dimension = 3\nlantern.extinction_db = -15, -16\n")
    with pytest.raises(ConfigError):
        load_config(p)


def test_presets_load():
    for name in ("ideal", "paper_b2b", "paper_500m"):
        cfg = load_preset(name).architecture()
        assert cfg.dim == 2
    rc = load_preset("paper_500m")
    demux = rc.base_architecture().lanterns[1]
    assert demux.insertion_loss_db == 3.25
    per_lantern = rc.with_values(**{"lantern.loss_reading": "per_lantern"}).base_architecture()
    assert per_lantern.lanterns[1].insertion_loss_db == 6.5
    assert resolve_config("paper_500m.cfg").source == "paper_500m"


def test_missing_config_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.cfg"
    assert main(["sweep", "--config", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_invalid_config_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("detector.efficiency = 2\n")
    assert main(["matrix", "--config", str(p), "--output-dir", str(tmp_path)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_runtime_failure_exit_1(tmp_path, capsys):
    p = tmp_path / "q.cfg"
    p.write_text("link.dimension = 3\nlantern.extinction_db = -inf\n")
    assert main(["matrix", "--config", str(p), "--output-dir", str(tmp_path)]) == 1
    assert "two-mode" in capsys.readouterr().err


def test_unknown_flag_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--bogus"])
    assert exc.value.code == 2


@pytest.mark.parametrize("argv,flags", [
    (["sweep"], ["--config", "--fit", "--seed", "--output-dir", "--format", "--basis", "--gates", "--steps"]),
    (["matrix"], ["--config", "--seed", "--output-dir", "--format", "--gates-per-cell"]),
    (["losssweep"], ["--config", "--fit", "--max-db", "--steps", "--target-qber"]),
    (["dimtable"], ["--dmax", "--lantern-db", "--accounting", "--output-dir"]),
    (["drift", "synth"], ["--minutes", "--mod-hz", "--sample-rate", "--sigma", "--relax-time", "--seed"]),
    (["drift", "spectrum"], ["--window", "--out", "--output-dir"]),
    (["drift", "compare"], ["--band-lo", "--band-hi", "--tolerance", "--window"]),
])
def test_help_lists_flags(argv, flags, capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(argv + ["--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for f in flags:
        assert f in out


def _single(directory, pattern):
    found = sorted(directory.glob(pattern))
    assert len(found) == 1, found
    return found[0]


def test_sweep_byte_identical_and_mub2(tmp_path, capsys):
    for sub in ("a", "b"):
        assert main(["sweep", "--config", "paper_500m", "--basis", "mub1", "--seed", "7",
                     "--steps", "21", "--gates", "3000", "--output-dir", str(tmp_path / sub)]) == 0
    a = _single(tmp_path / "a", "sweep_*_7.csv")
    b = _single(tmp_path / "b", "sweep_*_7.csv")
    assert a.read_bytes() == b.read_bytes()
    assert _single(tmp_path / "a", "sweep_*_7.manifest.txt").exists()
    assert _single(tmp_path / "a", "sweep_*_7.D1.dat").exists()
    capsys.readouterr()
    assert main(["sweep", "--basis", "mub2", "--steps", "11", "--gates", "3000",
                 "--output-dir", str(tmp_path / "c")]) == 0
    out = capsys.readouterr().out
    assert "bob_phase: 1.5707963267948966" in out


def test_output_dir_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("QLINK_OUTPUT_DIR", str(tmp_path / "env"))
    assert main(["dimtable", "--dmax", "3"]) == 0
    assert _single(tmp_path / "env", "dimtable_*_0.csv").exists()


def test_dimtable_rows(tmp_path, capsys):
    assert main(["dimtable", "--dmax", "8", "--lantern-db", "0.7", "--output-dir", str(tmp_path)]) == 0
    rows = _single(tmp_path, "dimtable_*.csv").read_text().splitlines()
    assert rows[0] == "d,timebin_transmission,fmf_gain"
    d, t, g = rows[1].split(",")
    assert d == "2" and float(t) == 0.5 and abs(float(g) - 0.70) < 0.01
    assert rows[-1].startswith("8,0.125,")


def test_losssweep_fit_qber11(tmp_path, capsys):
    assert main(["losssweep", "--fit", "fit_qber11", "--steps", "11", "--output-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    thr = float(re.search(r"threshold_db: ([0-9.]+)", out).group(1))
    assert abs(thr - 3.85) < 0.05
    km = float(re.search(r"threshold_km: ([0-9.]+)", out).group(1))
    assert abs(km - 17.5) < 0.3


def test_matrix_json(tmp_path):
    assert main(["matrix", "--config", "ideal", "--gates-per-cell", "500", "--format", "json",
                 "--output-dir", str(tmp_path)]) == 0
    assert _single(tmp_path, "matrix_*.json").read_text().startswith("{")


def test_drift_synth_spectrum_compare(tmp_path, capsys):
    d = str(tmp_path)
    assert main(["drift", "synth", "--minutes", "0.5", "--mod-hz", "100", "--seed", "3", "--output-dir", d]) == 0
    out = capsys.readouterr().out
    assert "synthetic stand-in" in out
    assert main(["drift", "spectrum", "--output-dir", d]) == 0
    out = capsys.readouterr().out
    assert float(re.search(r"peak_hz: ([0-9.]+)", out).group(1)) == pytest.approx(100.0, abs=1 / 30)
    trace = _single(tmp_path, "drift_synth_*.csv")
    spec = _single(tmp_path, "drift_spectrum_*.csv")
    assert main(["drift", "compare", str(trace), str(spec)]) == 0
    out = capsys.readouterr().out
    assert "ratio: 1" in out and "indistinguishable" in out
    assert main(["drift", "compare", str(trace), str(tmp_path / "missing.csv")]) == 2


def test_drift_spectrum_without_input(tmp_path):
    assert main(["drift", "spectrum", "--output-dir", str(tmp_path)]) == 2


def test_console_script_module_entry(tmp_path):
    r = subprocess.run([sys.executable, "-m", "qlink.cli", "dimtable", "--dmax", "2", "--output-dir", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "d=2" in r.stdout
