import json

import numpy as np
import pytest

from polywell import cli
from polywell.core import PolywellError

SMALL = ["--figure", "1", "--xmin", "-30", "--xmax", "30", "--dx", "0.05", "--dt", "0.05",
         "--tmax", "20", "--snapshots", "10"]


def test_presets():
    assert cli.preset(1).q == 0.2
    assert cli.preset(6).mass == 11.0
    p8 = cli.preset(8)
    assert (p8.mode, p8.packet, p8.well, p8.tmax) == ("oracle", "square", "square", 1000.0)
    assert cli.preset(7).delta == 2.0
    with pytest.raises(PolywellError, match="invalid figure"):
        cli.preset(9)


def test_resolution_defaults():
    cfg = cli.validate(cli.preset(1))
    assert cfg.dx == pytest.approx(0.02) and cfg.dt == pytest.approx(0.016)
    assert cfg.cadence == pytest.approx(50.0)
    assert cfg.xmin == -cfg.xmax and cfg.xmax % 10 == 0


@pytest.mark.parametrize("figure", range(1, 9))
def test_dump_parse_round_trip(figure):
    cfg = cli.validate(cli.preset(figure))
    again = cli.build_config(cli.parse_config(cli.dump_config(cfg)), {})
    assert again == cfg


def test_dry_run_prints_config(capsys):
    assert cli.main(["simulate", *SMALL, "--dry-run"]) == 0
    text = capsys.readouterr().out
    values = cli.parse_config(text)
    assert values["q"] == 0.2 and values["xmin"] == -30.0 and values["snapshots"] == (10.0,)


def test_flags_override_config_file(tmp_path, capsys):
    conf = tmp_path / "run.conf"
    conf.write_text("figure = 2\nmass = 15  # heavier\ntmax = 100\n")
    assert cli.main(["simulate", "--config", str(conf), "--tmax", "50", "--dry-run"]) == 0
    values = cli.parse_config(capsys.readouterr().out)
    assert (values["q"], values["mass"], values["tmax"]) == (0.6, 15.0, 50.0)


def test_error_exit_is_json(capsys):
    assert cli.main(["simulate", "--figure", "9", "--dry-run"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "invalid figure"
    assert cli.main(["simulate", "--figure", "1", "--x0", "500", "--xmax", "30", "--dry-run"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "invalid config"


def test_bad_config_line():
    with pytest.raises(PolywellError, match="unknown key"):
        cli.parse_config("colour = red\n")
    with pytest.raises(PolywellError, match="expected key = value"):
        cli.parse_config("q 0.2\n")
    with pytest.raises(PolywellError, match="bad value"):
        cli.parse_config("q = fast\n")


def test_spectrum_command(tmp_path, capsys):
    assert cli.main(["spectrum", "--mass", "20", "--depth", "1", "--half-width", "1",
                     "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "detuning +0.04" in out
    doc = json.loads((tmp_path / "spectrum.json").read_text())
    assert len(doc["states"]) == 5
    assert doc["detuning"]["multiple"] == 4


def test_simulate_outputs_are_deterministic(tmp_path, capsys):
    a = tmp_path / "a"
    names = ["psi_t10.csv", "psi_t20.csv", "report.json"]
    assert cli.main(["simulate", *SMALL, "--out-dir", str(a)]) == 0
    first = {n: (a / n).read_bytes() for n in names}
    assert cli.main(["simulate", *SMALL, "--out-dir", str(a)]) == 0
    capsys.readouterr()
    assert sorted(p.name for p in a.iterdir()) == names
    assert all((a / n).read_bytes() == first[n] for n in names)
    raw = (a / "psi_t10.csv").read_bytes()
    assert raw.startswith(b"x,re,im,abs2\n") and b"\r" not in raw
    doc = json.loads((a / "report.json").read_text())
    assert doc["run"]["valid"] and doc["run"]["steps"] == 400
    assert doc["snapshots"] == ["psi_t10.csv", "psi_t20.csv"]


def test_csv_round_trip(tmp_path):
    x = np.linspace(-1, 1, 11)
    psi = np.exp(1j * x) / 3
    cli.write_csv(tmp_path / "s_t0.csv", x, psi)
    x2, psi2 = cli.read_csv(tmp_path / "s_t0.csv")
    assert np.array_equal(x, x2) and np.array_equal(psi, psi2)


def test_diagnose_written_snapshots(tmp_path, capsys):
    run_dir = tmp_path / "run"
    args = ["--figure", "1", "--xmin", "-30", "--xmax", "30", "--dx", "0.05", "--dt", "0.05",
            "--q", "1", "--tmax", "60", "--snapshots", "20,40"]
    assert cli.main(["simulate", *args, "--out-dir", str(run_dir)]) == 0
    files = sorted(str(p) for p in run_dir.glob("psi_t*.csv"))
    assert cli.main(["diagnose", *files, *args, "--out-dir", str(tmp_path / "diag")]) == 0
    capsys.readouterr()
    diag = json.loads((tmp_path / "diag" / "report.json").read_text())["report"]
    direct = json.loads((run_dir / "report.json").read_text())["report"]
    assert diag["p_refl"] == pytest.approx(direct["p_refl"], abs=1e-12)
    assert [p["t"] for p in diag["track"]] == [20.0, 40.0, 60.0]
    assert cli.main(["diagnose", str(tmp_path / "nope.csv"), *args]) == 2


def test_sweep_keeps_parameter_order(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("POLYWELL_THREADS", "1")
    assert cli.main(["sweep", *SMALL, "--param", "q", "--values", "0.4,0.2",
                     "--out-dir", str(tmp_path)]) == 0
    capsys.readouterr()
    doc = json.loads((tmp_path / "sweep.json").read_text())
    assert [p["value"] for p in doc["points"]] == ["0.4", "0.2"]
    assert (tmp_path / "q=0.4" / "report.json").exists()
    assert cli.main(["sweep", *SMALL, "--param", "figure", "--values", "1", "--dry-run"]) == 0
    assert cli.main(["sweep", *SMALL, "--param", "figure", "--values", "1"]) == 2
