import json

import pytest

from spintorus import config, symbol


def test_presets_build():
    for name in config.PRESETS:
        cfg = config.build(config.resolve(preset=name))
        assert cfg.central is not None


def test_coulomb_file(tmp_path):
    path = tmp_path / "sys.json"
    path.write_text(json.dumps({"potential": "coulomb", "alpha": 0.1, "c": 2.0}))
    system = config.resolve(str(path))
    cfg = config.build(system)
    assert cfg.coupling == pytest.approx(0.1)
    assert cfg.c == 2.0


def test_environment_default(tmp_path, monkeypatch):
    path = tmp_path / "env.json"
    path.write_text(json.dumps({"potential": "harmonic", "k": 0.5}))
    monkeypatch.setenv(config.ENV_VAR, str(path))
    assert config.resolve()["potential"] == "harmonic"
    assert config.resolve(preset="kepler")["potential"] == "coulomb"


def test_polynomial_keys_are_normalized():
    a = config.normalize({"potential": "polynomial", "coefficients": {"-1": -0.1, 2: 0.5}})
    b = config.normalize({"potential": "polynomial", "coefficients": {2: 0.5, -1: -0.1}})
    assert config.config_hash(a) == config.config_hash(b)
    cfg = config.build(a)
    assert cfg.central.energy(2.0) == pytest.approx(-0.05 + 2.0)


def test_hash_tracks_content():
    a = config.resolve(preset="kepler")
    b = config.resolve(preset="kepler", overrides={"alpha": 0.01})
    assert config.config_hash(a) != config.config_hash(b)
    assert config.config_hash(a) == config.config_hash(dict(a))
    assert config.build(a).coupling == pytest.approx(symbol.ALPHA_FS)


@pytest.mark.parametrize("raw", [
    {"potential": "yukawa"},
    {"potential": "coulomb", "alpha": -1},
    {"potential": "coulomb", "mass": 0},
    {"potential": "coulomb", "spin": 1},
    {"potential": "polynomial"},
    [1, 2],
])
def test_invalid_descriptions(raw):
    with pytest.raises(config.ConfigError):
        config.normalize(raw)


def test_unreadable_files(tmp_path):
    with pytest.raises(config.ConfigError):
        config.load_file(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(config.ConfigError):
        config.load_file(bad)
