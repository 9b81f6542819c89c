"""Strictly validated scenario configuration (JSON documents)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from ..errors import ConfigInvalid, UnknownModel
from ..operators import MODEL_PARAMS, ModelSpec

PROTOCOLS = ("strobe", "sme", "cap", "cd", "identities")
SWEEP_AXES = ("dt", "kappa", "M")
SEED_MAX = 2**64 - 1

TOP_KEYS = {"model", "protocol", "grid", "seed", "oracle", "params", "sweep", "output"}

# key -> (type(s), required, default)
PARAM_SCHEMA = {
    "strobe": {
        "sector": (int, False, 0),
        "mode": (str, False, "conditioned"),
        "freeze": (str, False, "left"),
    },
    "sme": {
        "kappa": ((int, float), True, None),
        "M": (int, False, 64),
        "x": (list, False, None),
        "scheme": (str, False, "kraus"),
        "thin": (int, False, 1),
        "sector": (int, False, 0),
    },
    "cap": {
        "kappa": ((int, float), True, None),
        "mode": (str, False, "two-sector"),
        "lambdas": (list, False, None),
        "sector": (int, False, 0),
    },
    "cd": {
        "sector": (int, False, 0),
    },
    "identities": {
        "count": (int, False, 100),
        "dims": (list, False, [2, 3, 4, 5, 6, 7, 8]),
    },
}

CHOICES = {
    ("strobe", "mode"): ("conditioned", "selective", "channel"),
    ("strobe", "freeze"): ("left", "midpoint"),
    ("sme", "scheme"): ("kraus", "euler"),
    ("cap", "mode"): ("two-sector", "multi-sector"),
}


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    metric: Optional[str] = None


@dataclass(frozen=True)
class ScenarioConfig:
    model: ModelSpec
    protocol: str
    N: int
    T: float
    seed: int = 0
    R: int = 100
    order: int = 4
    params: dict = field(default_factory=dict)
    sweep: Optional[SweepSpec] = None
    out_path: Optional[str] = None
    out_format: str = "csv"

    @property
    def dt(self) -> float:
        return self.T / self.N

    def replace(self, **changes) -> "ScenarioConfig":
        from dataclasses import replace
        return replace(self, **changes)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(v, kind, name):
    if kind == (int, float):
        ok = _is_number(v)
    elif kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, kind)
    if not ok:
        raise ConfigInvalid(name, f"field {name!r} has wrong type {type(v).__name__}")


def _strict(section: dict, allowed, prefix: str):
    if not isinstance(section, dict):
        raise ConfigInvalid(prefix, f"{prefix!r} must be an object")
    for key in section:
        if key not in allowed:
            raise ConfigInvalid(f"{prefix}.{key}" if prefix else key, f"unknown key {key!r}")


def _model(doc) -> ModelSpec:
    _strict(doc, {"name", "params"}, "model")
    if "name" not in doc:
        raise ConfigInvalid("model.name")
    name = doc["name"]
    if name not in MODEL_PARAMS:
        raise ConfigInvalid("model.name", f"unknown model {name!r}")
    params = doc.get("params", {})
    spec = MODEL_PARAMS[name]
    _strict(params, set(spec["required"]) | set(spec["optional"]), "model.params")
    for key in spec["required"]:
        if key not in params:
            raise ConfigInvalid(key, f"model {name!r} needs parameter {key!r}")
    for key, v in params.items():
        if key == "shape":
            if v not in ("linear", "sin2"):
                raise ConfigInvalid("model.params.shape")
        elif not _is_number(v):
            raise ConfigInvalid(f"model.params.{key}")
    try:
        return ModelSpec(name, dict(params))
    except UnknownModel as exc:
        raise ConfigInvalid("model.name", str(exc)) from None


def _params(protocol: str, doc) -> dict:
    schema = PARAM_SCHEMA[protocol]
    _strict(doc, set(schema), "params")
    out = {}
    for key, (kind, required, default) in schema.items():
        if key not in doc:
            if required:
                raise ConfigInvalid(key, f"protocol {protocol!r} needs parameter {key!r}")
            out[key] = default
            continue
        _check_type(doc[key], kind, key)
        out[key] = doc[key]
        if (protocol, key) in CHOICES and doc[key] not in CHOICES[(protocol, key)]:
            raise ConfigInvalid(key, f"{key!r} must be one of {CHOICES[(protocol, key)]}")
    if "kappa" in out and not out["kappa"] >= 0:
        raise ConfigInvalid("kappa", "kappa must be non-negative")
    if protocol == "cap" and out["mode"] == "multi-sector" and out["lambdas"] is None:
        raise ConfigInvalid("lambdas", "multi-sector CAP needs 'lambdas'")
    for key in ("x", "lambdas"):
        if out.get(key) is not None and not all(_is_number(v) for v in out[key]):
            raise ConfigInvalid(key)
    if protocol == "sme" and (out["M"] < 1 or out["thin"] < 1):
        raise ConfigInvalid("M" if out["M"] < 1 else "thin")
    return out


def parse_config(doc: dict) -> ScenarioConfig:
    """Validate a configuration document; raise :class:`ConfigInvalid` naming the bad field."""
    _strict(doc, TOP_KEYS, "")
    for key in ("model", "protocol"):
        if key not in doc:
            raise ConfigInvalid(key)
    model = _model(doc["model"])
    protocol = doc["protocol"]
    if protocol not in PROTOCOLS:
        raise ConfigInvalid("protocol", f"protocol must be one of {PROTOCOLS}")

    grid = doc.get("grid", {})
    _strict(grid, {"N", "T", "dt"}, "grid")
    T = grid.get("T", model.params.get("T"))
    if not _is_number(T) or not T > 0:
        raise ConfigInvalid("T")
    if "N" in grid and "dt" in grid:
        raise ConfigInvalid("grid.dt", "give either grid.N or grid.dt")
    if "dt" in grid:
        if not _is_number(grid["dt"]) or not grid["dt"] > 0:
            raise ConfigInvalid("grid.dt")
        N = max(1, int(round(T / grid["dt"])))
    else:
        N = grid.get("N", 1000)
        if not isinstance(N, int) or isinstance(N, bool) or N < 1:
            raise ConfigInvalid("grid.N")

    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= SEED_MAX:
        raise ConfigInvalid("seed", "seed must be an unsigned 64-bit integer")

    oracle = doc.get("oracle", {})
    _strict(oracle, {"R", "order"}, "oracle")
    R = oracle.get("R", 100)
    order = oracle.get("order", 4)
    if not isinstance(R, int) or R < 10:
        raise ConfigInvalid("oracle.R", "oracle refinement R must be an integer >= 10")
    if order not in (2, 4):
        raise ConfigInvalid("oracle.order")

    params = _params(protocol, doc.get("params", {}))

    sweep = None
    if "sweep" in doc:
        s = doc["sweep"]
        _strict(s, {"axis", "values", "metric"}, "sweep")
        if s.get("axis") not in SWEEP_AXES:
            raise ConfigInvalid("sweep.axis")
        vals = s.get("values")
        if not isinstance(vals, list) or not all(_is_number(v) for v in vals):
            raise ConfigInvalid("sweep.values")
        metric = s.get("metric")
        if metric is not None and not isinstance(metric, str):
            raise ConfigInvalid("sweep.metric")
        sweep = SweepSpec(s["axis"], tuple(vals), metric)

    out = doc.get("output", {})
    _strict(out, {"path", "format"}, "output")
    fmt = out.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigInvalid("output.format")
    path = out.get("path")
    if path is not None and not isinstance(path, str):
        raise ConfigInvalid("output.path")

    return ScenarioConfig(model, protocol, N, float(T), seed, R, order, params, sweep, path, fmt)


def load_config(source) -> ScenarioConfig:
    """Parse a config from a path, a JSON string or an already-decoded mapping."""
    if isinstance(source, dict):
        return parse_config(source)
    text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid("<document>", f"config is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigInvalid("<document>", "config must be a JSON object")
    return parse_config(doc)
