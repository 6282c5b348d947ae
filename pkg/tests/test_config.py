import json
from decimal import Decimal
from pathlib import Path

import pytest

from nafas.catalog import Level
from nafas.config import ConfigError, read_config_file, resolve_settings

# setting -> (flag value, env var, env value, config key, config value, default, parsed per layer)
LAYERS = {
    "level": ("advanced", "NAFAS_LEVEL", "m", "default_level", "b", Level.BEGINNER,
              {"flag": Level.ADVANCED, "env": Level.MEDIUM, "config": Level.BEGINNER}),
    "prep_seconds": ("7", "NAFAS_PREP_SECONDS", "5", "prep_seconds", 4, Decimal(3),
                     {"flag": Decimal(7), "env": Decimal(5), "config": Decimal(4)}),
    "silent": (True, "NAFAS_SILENT", "0", "silent", True, False,
               {"flag": True, "env": False, "config": True}),
    "ascii": (False, "NAFAS_ASCII", "yes", "ascii", False, False,
              {"flag": False, "env": True, "config": False}),
}
ORDER = ["flag", "env", "config", "default"]
PAIRS = [(hi, lo) for i, hi in enumerate(ORDER) for lo in ORDER[i + 1:]]


@pytest.mark.parametrize("name", LAYERS)
@pytest.mark.parametrize("winner, loser", PAIRS)
def test_precedence_pairs(name, winner, loser):
    flag, env_key, env_value, cfg_key, cfg_value, default, parsed = LAYERS[name]
    layers = {winner, loser}
    env = {"HOME": "/nonexistent"}
    config = {}
    kwargs = {}
    if "flag" in layers:
        kwargs[name] = flag
    if "env" in layers:
        env[env_key] = env_value
    if "config" in layers:
        config[cfg_key] = cfg_value
    settings = resolve_settings(env, config, **kwargs)
    expected = default if winner == "default" else parsed[winner]
    assert getattr(settings, name) == expected


def test_defaults():
    s = resolve_settings({"HOME": "/home/u"}, {})
    assert s.level is Level.BEGINNER
    assert s.preparation_ms == 3000
    assert not s.silent and not s.ascii and s.color
    assert s.history_path == Path("/home/u/.local/share/nafas/history.jsonl")
    assert s.programs_path == Path("/home/u/.config/nafas/programs.json")
    assert not s.programs_required


def test_paths_flag_over_env():
    env = {"HOME": "/h", "NAFAS_PROGRAMS": "/env/p.json", "NAFAS_HISTORY": "/env/h.jsonl"}
    s = resolve_settings(env, {}, programs_path="/flag/p.json", history_path="/flag/h.jsonl")
    assert (s.programs_path, s.history_path) == (Path("/flag/p.json"), Path("/flag/h.jsonl"))
    s = resolve_settings(env, {})
    assert (s.programs_path, s.history_path) == (Path("/env/p.json"), Path("/env/h.jsonl"))
    assert s.programs_required


def test_xdg_dirs():
    s = resolve_settings({"XDG_CONFIG_HOME": "/c", "XDG_DATA_HOME": "/d"}, {})
    assert s.programs_path == Path("/c/nafas/programs.json")
    assert s.history_path == Path("/d/nafas/history.jsonl")


def test_no_color():
    assert not resolve_settings({"HOME": "/h", "NO_COLOR": "1"}, {}).color
    assert not resolve_settings({"HOME": "/h"}, {}, no_color=True).color


def test_config_file_location(tmp_path):
    cfg = tmp_path / ".config" / "nafas"
    cfg.mkdir(parents=True)
    (cfg / "config.json").write_text(json.dumps({"default_level": "advanced", "prep_seconds": 0.5}))
    s = resolve_settings({"HOME": str(tmp_path)})
    assert s.level is Level.ADVANCED
    assert s.preparation_ms == 500


@pytest.mark.parametrize(
    "content", ['{"colour": true}', "[]", "{", '{"silent": "maybe"}', '{"prep_seconds": -1}', '{"prep_seconds": 0.0001}']
)
def test_bad_config(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(content)
    with pytest.raises(ConfigError):
        resolve_settings({"HOME": "/h"}, read_config_file(path))


def test_bad_env_value():
    with pytest.raises(ConfigError):
        resolve_settings({"HOME": "/h", "NAFAS_LEVEL": "expert"}, {})
