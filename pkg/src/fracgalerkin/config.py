"""Run configuration documents (YAML or JSON) with strict key checking.

A document mirrors :class:`~fracgalerkin.sweep.RunConfig`::

    problem: example5
    kind: caputo
    s: [7/4, 3/2]
    params: {theta: -0.25}
    k_min: -1
    k_max: 5
    newton: {tol: 1.0e-12, max_iters: 30, damping: true}
    quadrature: {order: 16, ratio: 0.15, levels: 12, origin_levels: 60}
    output: {format: csv, path: null}

Command-line flags are merged on top of the document before validation.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from fractions import Fraction
from pathlib import Path

import yaml

from fracgalerkin.newton import NewtonConfig
from fracgalerkin.quadrature import QuadratureSettings
from fracgalerkin.sweep import RunConfig


class ConfigError(ValueError):
    """Invalid configuration document or flag value."""


SCHEMA: dict = {
    "problem": None,
    "kind": None,
    "s": None,
    "params": {"theta": None},
    "custom": "any",
    "k_min": None,
    "k_max": None,
    "newton": {"tol": None, "max_iters": None, "damping": None},
    "quadrature": {"order": None, "ratio": None, "levels": None, "origin_levels": None},
    "output": {"format": None, "path": None},
}


def parse_number(value) -> float:
    """Accept numbers and strings such as ``"7/4"`` or ``"1.75"``."""
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(Fraction(str(value).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse {value!r} as a number") from None


def _check_keys(doc: Mapping, schema: Mapping, path: str = "") -> None:
    for key, value in doc.items():
        where = f"{path}{key}"
        if key not in schema:
            raise ConfigError(f"unknown configuration key {where!r}")
        sub = schema[key]
        if isinstance(sub, dict):
            if not isinstance(value, Mapping):
                raise ConfigError(f"{where!r} must be a mapping")
            _check_keys(value, sub, where + ".")


def _deep_merge(base: Mapping, top: Mapping) -> dict:
    out = dict(base)
    for key, value in top.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def load_document(path: str | Path) -> dict:
    """Read a YAML or JSON file (JSON is valid YAML, but parsed as JSON by suffix)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {str(path)!r}: {exc.strerror}") from exc
    try:
        doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"malformed configuration {str(path)!r}: {exc}") from exc
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ConfigError(f"configuration {str(path)!r} must be a mapping at the top level")
    return doc


def parse_config(document: Mapping | None = None, overrides: Mapping | None = None) -> RunConfig:
    """Validate ``document`` merged with ``overrides`` (flags win) into a RunConfig."""
    document = dict(document or {})
    overrides = dict(overrides or {})
    _check_keys(document, SCHEMA)
    _check_keys(overrides, SCHEMA)
    doc = _deep_merge(document, overrides)
    d = RunConfig()

    s = doc.get("s", list(d.s_values))
    s_list = s if isinstance(s, (list, tuple)) else [s]
    newton = doc.get("newton", {})
    quad = doc.get("quadrature", {})
    output = doc.get("output", {})
    params = {k: parse_number(v) for k, v in doc.get("params", {}).items()}
    try:
        return RunConfig(
            problem=str(doc.get("problem", d.problem)),
            kind=doc.get("kind", d.kind),
            s_values=tuple(parse_number(v) for v in s_list),
            params=params,
            custom=doc.get("custom"),
            k_min=_int(doc.get("k_min", d.k_min), "k_min"),
            k_max=_int(doc.get("k_max", d.k_max), "k_max"),
            newton=NewtonConfig(
                max_iters=_int(newton.get("max_iters", d.newton.max_iters), "newton.max_iters"),
                residual_tol=parse_number(newton.get("tol", d.newton.residual_tol)),
                damping=bool(newton.get("damping", d.newton.damping)),
            ),
            quad=QuadratureSettings(
                order=_int(quad.get("order", d.quad.order), "quadrature.order"),
                ratio=parse_number(quad.get("ratio", d.quad.ratio)),
                levels=_int(quad.get("levels", d.quad.levels), "quadrature.levels"),
                origin_levels=_int(
                    quad.get("origin_levels", d.quad.origin_levels), "quadrature.origin_levels"
                ),
            ),
            format=str(output.get("format", d.format)),
            out=output.get("path", d.out),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _int(value, name: str) -> int:
    v = parse_number(value)
    if v != int(v):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(v)
