import json

import pytest

from afdforge.config import ConfigError, config_text, defaults, derive_seed, load_config, parse_config_text


def test_defaults():
    cfg = defaults()
    assert cfg["timeframe"] == "1d" and cfg["folds"] == 10 and cfg["classifiers"] == ["nb", "lm", "svm"]
    assert cfg["skips"] is True and cfg["dump"] is None
    cfg["classifiers"].append("x")
    assert defaults()["classifiers"] == ["nb", "lm", "svm"]


def test_precedence(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("timeframe = 2d\nfolds = 5\nseed = 3\n")
    assert load_config(str(conf), env={})["timeframe"] == "2d"
    assert load_config(str(conf), env={"AFDFORGE_TIMEFRAME": "36h"})["timeframe"] == "36h"
    cfg = load_config(str(conf), env={"AFDFORGE_TIMEFRAME": "36h", "AFDFORGE_SEED": "9"}, overrides={"timeframe": "1d"})
    assert cfg["timeframe"] == "1d" and cfg["seed"] == 9 and cfg["folds"] == 5
    assert load_config(str(conf), env={}, overrides={"folds": None})["folds"] == 5
    assert load_config(env={"AFDFORGE_C": "0.5", "OTHER": "x"})["C"] == 0.5


def test_bad_values_are_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="timeframe"):
        parse_config_text("timeframe = 2d\ntimeframe = 1d\n")
    assert parse_config_text("folds = 4\nfolds = 4\n") == {"folds": 4}
    for text in ("colour = red", "folds = 0", "skips = maybe", "timeframe = soon", "sampling = random", "no equals"):
        with pytest.raises(ConfigError):
            parse_config_text(text)
    with pytest.raises(ConfigError):
        load_config(env={"AFDFORGE_FOLDS": "-1"})
    with pytest.raises(ConfigError):
        load_config(env={}, overrides={"speed": 3})


def test_relative_paths_follow_the_file(tmp_path):
    sub = tmp_path / "conf"
    sub.mkdir()
    (sub / "a.conf").write_text("dump = data/dump.xml\nblock_log = /abs/log.xml\n")
    cfg = load_config(str(sub / "a.conf"), env={})
    assert cfg["dump"] == str(sub / "data" / "dump.xml") and cfg["block_log"] == "/abs/log.xml"


def test_text_round_trip_and_manifest_source(tmp_path):
    cfg = load_config(env={}, overrides={"timeframes": "13h,1d", "skips": False, "seed": 4})
    assert parse_config_text(config_text(cfg)) == {k: v for k, v in cfg.items()}
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"config": cfg, "status": "ok"}))
    assert load_config(str(manifest), env={}) == cfg


def test_derived_seeds():
    assert derive_seed(7, "sample") == derive_seed(7, "sample")
    assert derive_seed(7, "sample") != derive_seed(7, "folds") != derive_seed(8, "folds")
    assert 0 <= derive_seed(0, "x") < 2**32
