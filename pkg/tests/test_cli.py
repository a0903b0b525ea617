import json

import pytest

from spike_music.cli import main
from spike_music.config import ConfigError, RunConfig, load_config, resolve_config_path


@pytest.mark.parametrize("name", ["var_vs_N", "var_vs_snr", "reference"])
def test_bundled_config_roundtrip(name):
    path = resolve_config_path(name)
    raw = json.loads(path.read_text())
    cfg = RunConfig.from_dict(raw)
    assert cfg.to_dict() == raw
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


def test_sweep_configs_match_setup():
    by_size = load_config("var_vs_N")
    assert by_size.N == list(range(5, 55, 5)) and by_size.n == [2 * N for N in by_size.N]
    assert by_size.snr_db == [10.0] and by_size.trials == 2000
    by_snr = load_config("var_vs_snr.json")
    assert by_snr.N == [20] and by_snr.trials == 5000
    assert min(by_snr.snr_db) == -2 and max(by_snr.snr_db) == 20
    assert len(by_snr.scenarios()) == len(by_snr.snr_db)


@pytest.mark.parametrize(
    "patch, field",
    [
        ({"trials": 0}, "trials"),
        ({"grid_size": 16}, "grid_size"),
        ({"bogus": 1}, "bogus"),
        ({"powers": [1.0, 1.0]}, "snr_db"),
        ({"angles": [0.5, 0.5]}, "distinct"),
        ({"method": "esprit"}, "method"),
    ],
)
def test_validation_names_field(patch, field):
    raw = json.loads(resolve_config_path("reference").read_text())
    raw.update(patch)
    with pytest.raises(ConfigError, match=field):
        RunConfig.from_dict(raw)


def test_scalar_fields_accepted():
    cfg = RunConfig.from_dict({"N": 20, "n": 40, "angles": [0.5], "snr_db": 10})
    assert cfg.N == [20] and cfg.snr_db == [10]


def test_missing_config():
    with pytest.raises(ConfigError):
        load_config("does_not_exist")


def test_predict_reference_point(capsys):
    assert main(["predict", "--c", "0.5", "--snr-db", "10", "--D", "1"]) == 0
    out = capsys.readouterr().out
    assert "11.55" in out and "0.947619" in out and "2.653266" in out and "2.4" in out


def test_predict_undetectable(capsys):
    assert main(["predict", "--c", "0.5", "--snr-db", "-3"]) == 0
    out = capsys.readouterr().out
    assert "undetectable" in out and "-1.5051 dB" in out


def test_predict_omega(capsys):
    assert main(["predict", "--c", "1.0", "--omega-sq", "2", "--D", "1"]) == 0
    assert " 4.5 " in capsys.readouterr().out


def test_spectrum(tmp_path, capsys):
    assert main(["spectrum", "--config", "reference", "--seed", "1", "--output", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    peaks = [float(line.split()[1].split("=")[1]) for line in out.splitlines() if line.startswith("peak")]
    assert len(peaks) == 2
    assert abs(peaks[0] - 0.5) < 0.05 and abs(peaks[1] - 1.0) < 0.05
    assert (tmp_path / "spectrum_spike_seed1.csv").exists()


def test_spectrum_classical_and_dump(tmp_path, capsys):
    args = ["spectrum", "--config", "reference", "--seed", "1", "--method", "classical"]
    assert main([*args, "--output", str(tmp_path), "--dump-observation"]) == 0
    assert len([l for l in capsys.readouterr().out.splitlines() if l.startswith("peak")]) == 2
    assert (tmp_path / "observation_seed1" / "sigma.bin").stat().st_size == 20 * 40 * 16


def test_spectrum_small_grid_refused(capsys):
    assert main(["spectrum", "--config", "reference", "--grid-size", "16"]) == 2
    assert "grid_size" in capsys.readouterr().err


def test_spectrum_requires_config():
    with pytest.raises(SystemExit):
        main(["spectrum"])


def test_sweep_trials_zero(capsys):
    assert main(["sweep", "--config", "var_vs_N", "--trials", "0"]) == 2
    assert "trials" in capsys.readouterr().err


def test_sweep_small(tmp_path, capsys, monkeypatch):
    cfg = load_config("reference").to_dict()
    cfg.update(trials=5, stem="small")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    monkeypatch.setenv("SPIKE_MUSIC_OUTPUT", str(tmp_path / "env_out"))
    assert main(["sweep", "--config", str(path)]) == 0
    assert (tmp_path / "env_out" / "small.csv").exists()
    assert (tmp_path / "env_out" / "small.json").exists()
    assert "ratio" in capsys.readouterr().out
    # --output beats the environment
    assert main(["sweep", "--config", str(path), "--output", str(tmp_path / "flag_out")]) == 0
    assert (tmp_path / "flag_out" / "small.csv").exists()


def test_verify_fast(capsys):
    assert main(["verify", "fast"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out


def test_verify_unknown_level():
    with pytest.raises(SystemExit) as exc:
        main(["verify", "medium"])
    assert exc.value.code == 2


@pytest.mark.parametrize("cmd", ["predict", "spectrum", "sweep", "verify"])
def test_help(cmd):
    with pytest.raises(SystemExit) as exc:
        main([cmd, "--help"])
    assert exc.value.code == 0
