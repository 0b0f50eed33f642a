"""YAML scenario documents: parsing with defaults, provenance, and serialization.

A document has up to five top-level sections::

    dynamics:  {n_paths, bandwidth_range, latency_range, loss_range, ...}
    streams:   [{expected_rate_mbps, weight_gamma_j, max_paths}, ...]
    control:   {sel_alpha, ..., QoS_min}
    agent:     {discount, learning_rate, epsilon_start, ...}
    run:       {horizon, scheduler, scenario_kind, trace_path, stream_trace_path}

Every omitted key takes its default. ``run.scenario_kind`` first derives the
dynamics defaults for that scenario; keys written explicitly under
``dynamics`` always win, which keeps serialize/parse a fixed point.
"""

from __future__ import annotations

import math
import os
import re
import types
import typing
from dataclasses import fields, replace
from typing import Any

import yaml

from .control import ControlParams, StreamSpec
from .drl.agent import AgentConfig
from .errors import ConfigError
from .net_model import DynamicsConfig
from .sim import ScenarioConfig, default_streams, make_scenario

RUN_KEYS = ("horizon", "scheduler", "scenario_kind", "trace_path", "stream_trace_path")
SECTIONS = ("dynamics", "streams", "control", "agent", "run")


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e-3`` (no dot, unsigned exponent) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                |[-+]?[0-9][0-9_]*[eE][-+]?[0-9]+
                |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                |[-+]?\.(?:inf|Inf|INF)
                |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


def _coerce(key: str, hint: Any, value: Any) -> Any:
    """Check ``value`` against a field annotation and convert lists to tuples."""
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{key}: must be finite")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}")
        return value
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(f"{key}[{i}]", args[0], v) for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(f"{key}: expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(f"{key}[{i}]", a, v) for i, (a, v) in enumerate(zip(args, value)))
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for a in args:
            if a is type(None):
                continue
            try:
                return _coerce(key, a, value)
            except ConfigError as exc:
                errors.append(str(exc))
        raise ConfigError(errors[-1] if errors else f"{key}: bad value {value!r}")
    raise ConfigError(f"{key}: unsupported field type {hint!r}")


def _build(cls, section: str, data: Any, base, provenance: dict, skip=()) -> Any:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    known = {f.name: f for f in fields(cls) if f.name not in skip}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{section}: unknown key {unknown[0]!r}")
    hints = typing.get_type_hints(cls)
    updates = {}
    for name in known:
        if name in data:
            updates[name] = _coerce(f"{section}.{name}", hints[name], data[name])
            provenance[f"{section}.{name}"] = "document"
        else:
            provenance.setdefault(f"{section}.{name}", "default")
    return replace(base, **updates)


def _parse_streams(data: Any, provenance: dict) -> tuple[StreamSpec, ...]:
    if data is None:
        for s in default_streams():
            provenance[f"streams[{s.stream_id}]"] = "default"
        return default_streams()
    if not isinstance(data, list) or not data:
        raise ConfigError("streams: expected a non-empty list")
    out = []
    for i, item in enumerate(data):
        item = dict(item) if isinstance(item, dict) else item
        if isinstance(item, dict):
            item.setdefault("stream_id", i)
        spec = _build(StreamSpec, f"streams[{i}]", item, StreamSpec(i, 1.0), provenance)
        if "expected_rate_mbps" not in item:
            raise ConfigError(f"streams[{i}]: expected_rate_mbps is required")
        out.append(spec)
    return tuple(out)


def parse_document(doc: Any) -> tuple[ScenarioConfig, dict[str, str]]:
    """Build a validated config from a loaded YAML tree; also return provenance."""
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a mapping")
    unknown = sorted(set(doc) - set(SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section {unknown[0]!r}")
    prov: dict[str, str] = {}
    run = _build(ScenarioConfig, "run", doc.get("run"), ScenarioConfig(), prov,
                 skip=("dynamics", "streams", "control", "agent"))
    if run.scenario_kind not in ("steady", "variable", "extreme"):
        raise ConfigError(f"run.scenario_kind: unknown kind {run.scenario_kind!r}")
    dyn_base = make_scenario(run.scenario_kind, ScenarioConfig()).dynamics
    dyn = _build(DynamicsConfig, "dynamics", doc.get("dynamics"), dyn_base, prov)
    if run.scenario_kind != "variable":
        for f in fields(DynamicsConfig):
            key = f"dynamics.{f.name}"
            if prov[key] == "default" and getattr(dyn_base, f.name) != getattr(DynamicsConfig(), f.name):
                prov[key] = f"scenario:{run.scenario_kind}"
    cfg = replace(
        run,
        dynamics=dyn,
        streams=_parse_streams(doc.get("streams"), prov),
        control=_build(ControlParams, "control", doc.get("control"), ControlParams(), prov),
        agent=_build(AgentConfig, "agent", doc.get("agent"), AgentConfig(), prov),
    )
    cfg.validate()
    return cfg, prov


def parse_config(text: str) -> ScenarioConfig:
    return explain_config(text)[0]


def explain_config(text: str) -> tuple[ScenarioConfig, dict[str, str]]:
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return parse_document(doc)


def load_config(path: str | None) -> tuple[ScenarioConfig, dict[str, str]]:
    if path is None:
        return explain_config("")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    cfg, prov = explain_config(text)
    # relative trace paths are relative to the document, not the working directory
    base = os.path.dirname(os.path.abspath(path))
    fix = {k: os.path.normpath(os.path.join(base, v)) for k in ("trace_path", "stream_trace_path")
           if (v := getattr(cfg, k)) and not os.path.isabs(v)}
    return (replace(cfg, **fix) if fix else cfg), prov


def _plain(v: Any) -> Any:
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


def config_to_document(cfg: ScenarioConfig) -> dict:
    def section(obj, skip=()):
        return {f.name: _plain(getattr(obj, f.name)) for f in fields(obj) if f.name not in skip}

    return {
        "dynamics": section(cfg.dynamics),
        "streams": [section(s) for s in cfg.streams],
        "control": section(cfg.control),
        "agent": section(cfg.agent),
        "run": {k: getattr(cfg, k) for k in RUN_KEYS},
    }


def serialize_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_document(cfg), sort_keys=False, default_flow_style=None)


def explain_lines(cfg: ScenarioConfig, prov: dict[str, str]) -> list[str]:
    """One ``key = value  (source)`` line per leaf field."""
    doc = config_to_document(cfg)
    lines = []
    for sec in SECTIONS:
        body = doc[sec]
        if sec == "streams":
            for i, s in enumerate(body):
                src = prov.get(f"streams[{i}]")
                for k, v in s.items():
                    lines.append(f"streams[{i}].{k} = {v}  ({src or prov.get(f'streams[{i}].{k}', 'default')})")
            continue
        for k, v in body.items():
            lines.append(f"{sec}.{k} = {v}  ({prov.get(f'{sec}.{k}', 'default')})")
    return lines


