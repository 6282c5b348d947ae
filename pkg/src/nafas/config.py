"""Settings resolution: flags > environment > config file > defaults."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Mapping

from nafas.catalog import Level, UnknownLevel

DEFAULT_PREP_SECONDS = Decimal(3)
CONFIG_KEYS = ("default_level", "prep_seconds", "silent", "ascii")

ENV_LEVEL = "NAFAS_LEVEL"
ENV_PREP = "NAFAS_PREP_SECONDS"
ENV_SILENT = "NAFAS_SILENT"
ENV_ASCII = "NAFAS_ASCII"
ENV_PROGRAMS = "NAFAS_PROGRAMS"
ENV_HISTORY = "NAFAS_HISTORY"
ENV_CONFIG = "NAFAS_CONFIG"

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off", ""}


class ConfigError(ValueError):
    pass


def config_dir(env: Mapping[str, str]) -> Path:
    base = env.get("XDG_CONFIG_HOME") or str(Path(env.get("HOME", "~")).expanduser() / ".config")
    return Path(base) / "nafas"


def data_dir(env: Mapping[str, str]) -> Path:
    base = env.get("XDG_DATA_HOME") or str(Path(env.get("HOME", "~")).expanduser() / ".local" / "share")
    return Path(base) / "nafas"


def parse_bool(value: Any, where: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.strip().lower() in _TRUE | _FALSE:
        return value.strip().lower() in _TRUE
    raise ConfigError(f"{where}: expected a boolean, got {value!r}")


def parse_prep_seconds(value: Any, where: str) -> Decimal:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected seconds, got {value!r}")
    try:
        seconds = Decimal(str(value))
    except InvalidOperation:
        raise ConfigError(f"{where}: expected seconds, got {value!r}") from None
    if not seconds.is_finite() or seconds < 0:
        raise ConfigError(f"{where}: must be a nonnegative number of seconds")
    if seconds * 1000 != (seconds * 1000).to_integral_value():
        raise ConfigError(f"{where}: finer than a millisecond")
    return seconds


def parse_level(value: Any, where: str) -> Level:
    if isinstance(value, Level):
        return value
    try:
        return Level.parse(str(value))
    except UnknownLevel:
        raise ConfigError(f"{where}: unknown level {value!r}") from None


def read_config_file(path: Path) -> dict[str, Any]:
    if not path.exists():
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {sorted(unknown)}")
    return data


@dataclass(frozen=True)
class Settings:
    level: Level = Level.BEGINNER
    prep_seconds: Decimal = DEFAULT_PREP_SECONDS
    silent: bool = False
    ascii: bool = False
    color: bool = True
    programs_path: Path | None = None
    # an explicitly named programs file must exist
    programs_required: bool = False
    history_path: Path | None = None

    @property
    def preparation_ms(self) -> int:
        return int(self.prep_seconds * 1000)


def _pick(flag, env: Mapping[str, str], env_key: str, config: Mapping[str, Any], config_key: str, parse, default):
    if flag is not None:
        return parse(flag, "command line")
    if env.get(env_key) not in (None, ""):
        return parse(env[env_key], env_key)
    if config_key in config:
        return parse(config[config_key], f"config {config_key}")
    return default


def resolve_settings(
    env: Mapping[str, str] | None = None,
    config: Mapping[str, Any] | None = None,
    *,
    level: Level | str | None = None,
    prep_seconds: Decimal | str | None = None,
    silent: bool | None = None,
    ascii: bool | None = None,
    no_color: bool = False,
    programs_path: str | Path | None = None,
    history_path: str | Path | None = None,
) -> Settings:
    """Merge every source. ``config`` defaults to the file the environment points at."""
    env = os.environ if env is None else env
    if config is None:
        path = Path(env[ENV_CONFIG]) if env.get(ENV_CONFIG) else config_dir(env) / "config.json"
        config = read_config_file(path)

    if programs_path is not None:
        programs, required = Path(programs_path), True
    elif env.get(ENV_PROGRAMS):
        programs, required = Path(env[ENV_PROGRAMS]), True
    else:
        programs, required = config_dir(env) / "programs.json", False

    if history_path is not None:
        history = Path(history_path)
    elif env.get(ENV_HISTORY):
        history = Path(env[ENV_HISTORY])
    else:
        history = data_dir(env) / "history.jsonl"

    return Settings(
        level=_pick(level, env, ENV_LEVEL, config, "default_level", parse_level, Level.BEGINNER),
        prep_seconds=_pick(prep_seconds, env, ENV_PREP, config, "prep_seconds", parse_prep_seconds, DEFAULT_PREP_SECONDS),
        silent=_pick(silent, env, ENV_SILENT, config, "silent", parse_bool, False),
        ascii=_pick(ascii, env, ENV_ASCII, config, "ascii", parse_bool, False),
        # https://no-color.org: any non-empty value disables color
        color=not (no_color or env.get("NO_COLOR")),
        programs_path=programs,
        programs_required=required,
        history_path=history,
    )
