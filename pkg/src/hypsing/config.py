"""Instance configuration: schema-validated JSON documents.

A config names the partial-fraction source (explicit terms or a registry
generator), the half-plane offset (a number or "auto"), the sampling window
and spacing, and optional named tolerance overrides.  The schema_version
field is mandatory so old documents fail loudly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .geometry import Rect
from .meromorphic import MeromorphicSum, make_h0

__all__ = [
    "DEFAULT_TOLERANCES",
    "GENERATORS",
    "InstanceConfig",
    "build_sum",
    "load_config",
    "parse_config",
]

SCHEMA_VERSION = 1

GENERATORS = {"h0": make_h0}

DEFAULT_TOLERANCES: dict[str, float] = {
    "trunc_tol": 1e-8,
    "zero_tol": 1e-10,
    "class_tol": 1e-6,
    "curvature_tol": 1e-4,
    "monodromy_tol": 1e-8,
    "schwarzian_tol": 1e-5,
    "cone_angle_rel_tol": 0.05,
    "cusp_theta_limit": 0.3,
    "lambda0_resolution": 0.0,  # 0 means: derive from window and spacing
}

_WINDOW_SCHEMA = {
    "type": "object",
    "required": ["x0", "x1", "y0", "y1"],
    "additionalProperties": False,
    "properties": {k: {"type": "number"} for k in ("x0", "x1", "y0", "y1")},
}

_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "source", "window", "spacing"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "source": {
            "type": "object",
            "oneOf": [
                {
                    "required": ["terms"],
                    "additionalProperties": False,
                    "properties": {
                        "terms": {
                            "type": "array",
                            "minItems": 1,
                            "items": {
                                "type": "array",
                                "minItems": 4,
                                "maxItems": 4,
                                "items": {"type": "number"},
                            },
                        }
                    },
                },
                {
                    "required": ["generator"],
                    "additionalProperties": False,
                    "properties": {
                        "generator": {"enum": sorted(GENERATORS)},
                        "tail_start": {"type": "integer", "minimum": 1},
                    },
                },
            ],
        },
        "lambda": {"oneOf": [{"type": "number"}, {"const": "auto"}]},
        "window": _WINDOW_SCHEMA,
        "spacing": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
    },
}


@dataclass(frozen=True)
class InstanceConfig:
    """Parsed, validated instance description."""

    terms: tuple[tuple[float, float, float, float], ...] | None
    generator: str | None
    tail_start: int
    lam: float | str
    window: Rect
    spacing: float
    tolerances: dict[str, float] = field(default_factory=dict)

    def tolerance(self, name: str, overrides: dict[str, float] | None = None) -> float:
        if overrides and name in overrides:
            return overrides[name]
        if name in self.tolerances:
            return self.tolerances[name]
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance name {name!r}")
        return DEFAULT_TOLERANCES[name]


def parse_config(doc: dict) -> InstanceConfig:
    """Validate a config document and build the typed view of it."""
    try:
        jsonschema.validate(doc, _SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config rejected: {exc.message}") from exc
    for name in doc.get("tolerances", {}):
        if name not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance name {name!r}")
    source = doc["source"]
    window = doc["window"]
    try:
        rect = Rect(window["x0"], window["x1"], window["y0"], window["y1"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return InstanceConfig(
        terms=tuple(tuple(t) for t in source["terms"]) if "terms" in source else None,
        generator=source.get("generator"),
        tail_start=int(source.get("tail_start", 7)),
        lam=doc.get("lambda", "auto"),
        window=rect,
        spacing=float(doc["spacing"]),
        tolerances=dict(doc.get("tolerances", {})),
    )


def load_config(path: str | Path) -> InstanceConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(doc)


def build_sum(cfg: InstanceConfig) -> MeromorphicSum:
    """Realize the configured partial-fraction sum."""
    try:
        if cfg.terms is not None:
            return MeromorphicSum(
                tuple((complex(a, b), complex(c, d)) for a, b, c, d in cfg.terms)
            )
        return GENERATORS[cfg.generator](tail_start=cfg.tail_start)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"unusable source: {exc}") from exc
