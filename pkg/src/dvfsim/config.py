"""Flat key-value config files with [section] headers.

One format serves device presets, experiment configs, and website-profile
catalogs. No nesting, `#`/`;` comments, case-sensitive keys. Parse errors
carry file name and line number so CLI diagnostics stay actionable.
"""

from __future__ import annotations

import configparser
from pathlib import Path


class ConfigError(Exception):
    """Raised for unreadable, malformed, or incomplete config files."""


def read_config(path: str | Path) -> dict[str, dict[str, str]]:
    """Parse a config file into {section: {key: raw-string-value}}."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # keep key case
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror or exc}") from exc
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    return {name: dict(parser[name]) for name in parser.sections()}


class Section:
    """Typed accessors over one section, with located error messages."""

    def __init__(self, origin: str, name: str, values: dict[str, str]):
        self.origin = origin
        self.name = name
        self.values = values

    def _fail(self, key: str, why: str) -> ConfigError:
        return ConfigError(f"{self.origin}: [{self.name}] {key}: {why}")

    def has(self, key: str) -> bool:
        return key in self.values

    def get_str(self, key: str, default: str | None = None) -> str:
        if key not in self.values:
            if default is not None:
                return default
            raise self._fail(key, "missing required key")
        return self.values[key].strip()

    def get_float(self, key: str, default: float | None = None) -> float:
        if key not in self.values and default is not None:
            return default
        raw = self.get_str(key)
        try:
            return float(raw)
        except ValueError:
            raise self._fail(key, f"expected a number, got {raw!r}") from None

    def get_int(self, key: str, default: int | None = None) -> int:
        if key not in self.values and default is not None:
            return default
        raw = self.get_str(key)
        try:
            return int(raw, 0)
        except ValueError:
            raise self._fail(key, f"expected an integer, got {raw!r}") from None

    def get_bool(self, key: str, default: bool | None = None) -> bool:
        if key not in self.values and default is not None:
            return default
        raw = self.get_str(key).lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise self._fail(key, f"expected a boolean, got {raw!r}")

    def items(self) -> list[tuple[str, str]]:
        return list(self.values.items())


def sections_of(path: str | Path) -> dict[str, Section]:
    """Read a config file and wrap every section for typed access."""
    path = Path(path)
    raw = read_config(path)
    return {name: Section(str(path), name, values) for name, values in raw.items()}


def require_section(sections: dict[str, Section], name: str, origin: str) -> Section:
    if name not in sections:
        raise ConfigError(f"{origin}: missing required [{name}] section")
    return sections[name]
