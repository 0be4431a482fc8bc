"""Tunable pipeline constants and their `key = value` file format.

Every numeric rule the pipeline applies lives here so scenarios can
override it: source-credibility threshold, corroboration count,
type-match threshold, and the casualty-to-severity bucket table.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError

# (max_casualties, severity) rows; counts above the last row map to 5.
DEFAULT_BUCKETS = ((0, 1), (2, 2), (5, 3), (10, 4))


@dataclass(frozen=True)
class PipelineConfig:
    credibility_threshold: float = 0.6
    corroboration_min: int = 2
    match_threshold: Fraction = Fraction(1, 2)
    severity_buckets: tuple[tuple[int, int], ...] = DEFAULT_BUCKETS


def _parse_buckets(text: str) -> tuple[tuple[int, int], ...]:
    rows = []
    for chunk in text.split(","):
        bound, _, sev = chunk.strip().partition(":")
        try:
            rows.append((int(bound), int(sev)))
        except ValueError as exc:
            raise ConfigError(f"bad severity bucket {chunk.strip()!r}") from exc
    if rows != sorted(rows):
        raise ConfigError("severity buckets must be sorted by casualty bound")
    return tuple(rows)


def load_config(text: str) -> PipelineConfig:
    """Parse `key = value` lines; unknown keys are errors, comments ignored."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        if not sep or not key or not value:
            raise ConfigError(f"expected 'key = value' on line {lineno}: {raw!r}")
        try:
            if key == "credibility_threshold":
                values[key] = float(value)
            elif key == "corroboration_min":
                values[key] = int(value)
            elif key == "match_threshold":
                values[key] = Fraction(value)
            elif key == "severity_buckets":
                values[key] = _parse_buckets(value)
            else:
                raise ConfigError(f"unknown config key {key!r} on line {lineno}")
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key} on line {lineno}: {value!r}") from exc
    return PipelineConfig(**values)


def load_config_file(path: str) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return load_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
