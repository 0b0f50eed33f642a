"""Agent checkpoints as JSON.

Floats go through ``repr`` (the json module's default), which round-trips
float64 exactly, so save -> load -> save reproduces the file byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from typing import Sequence

import numpy as np

from . import __version__
from .drl.agent import Agent, AgentConfig
from .drl.nets import MlpParams
from .errors import InputError, ShapeError

FORMAT = "acmptc-checkpoint/1"


def _net_doc(p: MlpParams) -> dict:
    return {"sizes": list(p.sizes),
            "weights": [w.tolist() for w in p.weights],
            "biases": [b.tolist() for b in p.biases]}


def _net_from(doc: dict) -> MlpParams:
    try:
        params = MlpParams([np.array(w, dtype=np.float64) for w in doc["weights"]],
                           [np.array(b, dtype=np.float64) for b in doc["biases"]])
    except (KeyError, TypeError, ValueError, ShapeError) as exc:
        raise InputError(f"malformed network in checkpoint: {exc}") from None
    if list(params.sizes) != list(doc.get("sizes", params.sizes)):
        raise InputError("checkpoint layer sizes disagree with stored arrays")
    if not params.all_finite():
        raise InputError("checkpoint holds non-finite parameters")
    return params


def dumps(agents: Sequence[Agent], meta: dict | None = None,
          config: AgentConfig | None = None) -> str:
    doc = {
        "format": FORMAT,
        "version": __version__,
        "meta": meta or {},
        "agent_config": None if config is None else
        {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(config).items()},
        "agents": [{"agent_id": a.agent_id, "actor": _net_doc(a.actor), "critic": _net_doc(a.critic)}
                   for a in agents],
    }
    return json.dumps(doc, indent=1) + "\n"


def loads(text: str) -> tuple[list[Agent], dict]:
    """Agents plus the metadata dict; a stored AgentConfig appears as ``meta["agent_config"]``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"checkpoint is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise InputError("not an acmptc checkpoint")
    agents = [Agent(int(a["agent_id"]), _net_from(a["actor"]), _net_from(a["critic"]))
              for a in doc.get("agents", [])]
    meta = dict(doc.get("meta", {}))
    if doc.get("agent_config") is not None:
        cfg = dict(doc["agent_config"])
        cfg["hidden"] = tuple(cfg.get("hidden", ()))
        try:
            meta["agent_config"] = AgentConfig(**cfg)
        except TypeError as exc:
            raise InputError(f"bad agent_config in checkpoint: {exc}") from None
    return agents, meta


def save(path: str, agents: Sequence[Agent], meta: dict | None = None,
         config: AgentConfig | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(agents, meta, config))


def load(path: str) -> tuple[list[Agent], dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read checkpoint {path}: {exc.strerror}") from None
    return loads(text)
