"""Run configuration: defaults, flat ``key = value`` files, environment and flags.

Later sources win: defaults < config file < ``AFDFORGE_*`` environment < command-line flags.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass
from typing import Any

from .timeutil import parse_duration

ENV_PREFIX = "AFDFORGE_"


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"config key {key!r}: {message}")
        self.key = key


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options: str) -> Callable[[str], str]:
    def parse(text: str) -> str:
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return parse


def _positive(kind: type) -> Callable[[str], Any]:
    def parse(text: str):
        value = kind(text)
        if value <= 0:
            raise ValueError(f"must be positive, got {text!r}")
        return value

    return parse


def _str_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _duration_list(text: str) -> list[str]:
    items = _str_list(text)
    for item in items:
        parse_duration(item)
    return items


def _duration(text: str) -> str:
    parse_duration(text)
    return text.strip()


def _optional_path(text: str) -> str | None:
    return text.strip() or None


@dataclass(frozen=True)
class Option:
    parse: Callable[[str], Any]
    default: Any
    help: str


OPTIONS: dict[str, Option] = {
    "dump": Option(_optional_path, None, "pages-meta-history XML dump (.xml, .bz2, .gz)"),
    "block_log": Option(_optional_path, None, "block log (logging XML or TSV)"),
    "prefix": Option(str, "Wikipedia:Articles for deletion/", "page title prefix"),
    "template_patterns": Option(_optional_path, None, "AfD boilerplate pattern file"),
    "signature_patterns": Option(_optional_path, None, "custom signature pattern file"),
    "block_filter": Option(_choice("blacklist", "whitelist"), "blacklist", "block comment filter mode"),
    "block_terms": Option(_optional_path, None, "term list replacing the default for the mode"),
    "timeframe": Option(_duration, "1d", "labeling timeframe"),
    "window": Option(_duration, "1d", "sliding window size"),
    "sliding_window": Option(_parse_bool, False, "merge posts with the sliding window"),
    "balance": Option(_choice("random", "chronological"), "random", "balancing strategy"),
    "folds": Option(_positive(int), 10, "cross-validation folds"),
    "sampling": Option(_choice("stratified", "linear_per_class", "linear_global"), "stratified", "fold sampling"),
    "features": Option(_choice("full-text", "function-words"), "full-text", "feature set"),
    "classifiers": Option(_str_list, ["nb", "lm", "svm"], "classifiers to evaluate"),
    "delta": Option(_positive(float), 1.0, "NB smoothing"),
    "C": Option(_positive(float), 1.0, "SVM regularization"),
    "order": Option(_positive(int), 4, "LM order"),
    "skips": Option(_parse_bool, True, "LM skip patterns"),
    "seed": Option(int, 0, "top-level random seed"),
    "timeframes": Option(_duration_list, [], "sweep timeframes (empty: no sweep)"),
    "horizon": Option(_duration, "7d", "delta histogram range"),
    "bucket": Option(_duration, "1h", "delta histogram bucket"),
    "top_terms": Option(int, 20, "number of top weighted terms to report"),
}


def defaults() -> dict[str, Any]:
    return {k: (list(o.default) if isinstance(o.default, list) else o.default) for k, o in OPTIONS.items()}


def parse_value(key: str, text: str) -> Any:
    if key not in OPTIONS:
        raise ConfigError(key, "unknown key")
    try:
        return OPTIONS[key].parse(text)
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def render_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(str(v) for v in value)
    if value is None:
        return ""
    return str(value)


def parse_config_text(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines (``#`` comments); a key given twice with different values is an error."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", "expected key = value")
        value = value.strip()
        if key in raw and raw[key] != value:
            raise ConfigError(key, f"conflicting values {raw[key]!r} and {value!r}")
        raw[key] = value
    return {k: parse_value(k, v) for k, v in raw.items()}


def load_config(path: str | None = None, env: Mapping[str, str] | None = None, overrides: Mapping[str, Any] | None = None) -> dict[str, Any]:
    """Resolve the configuration; ``overrides`` (command-line flags) win, ``None`` values are ignored.

    ``path`` may also be a run manifest, whose recorded configuration is reused.
    Relative paths in a config file are taken relative to the file.
    """
    config = defaults()
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        base = os.path.dirname(os.path.abspath(path))
        if text.lstrip().startswith("{"):
            manifest = json.loads(text)
            loaded = {k: parse_value(k, render_value(v)) for k, v in manifest.get("config", {}).items()}
        else:
            loaded = parse_config_text(text)
            for key in ("dump", "block_log", "template_patterns", "signature_patterns", "block_terms"):
                if loaded.get(key) and not os.path.isabs(loaded[key]):
                    loaded[key] = os.path.join(base, loaded[key])
        config.update(loaded)
    env = os.environ if env is None else env
    for name, value in env.items():
        if name.startswith(ENV_PREFIX):
            key = name[len(ENV_PREFIX):]
            key = key if key in OPTIONS else key.lower()
            config[key] = parse_value(key, value)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in OPTIONS:
            raise ConfigError(key, "unknown key")
        config[key] = parse_value(key, render_value(value))
    return config


def config_text(config: Mapping[str, Any]) -> str:
    return "".join(f"{k} = {render_value(config[k])}\n" for k in OPTIONS if k in config)


def derive_seed(seed: int, stage: str) -> int:
    """Per-stage seed derived from the top-level seed."""
    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")
