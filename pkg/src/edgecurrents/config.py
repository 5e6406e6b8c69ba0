"""Run configuration: JSON schema, defaults, canonical serialization."""
from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field

import jsonschema

from .experiments import SolveSettings
from .model import ModelParams

MODEL_KEYS = ("B", "L", "V0", "epsilon", "c1", "c2", "m1", "m2", "c_left", "m_left",
              "c_right", "m_right", "W", "layer", "seed_base")

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_opt_pos = {"type": ["number", "null"], "exclusiveMinimum": 0}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["B", "L", "V0", "epsilon"],
    "properties": {
        "B": _pos, "L": {"type": "integer", "minimum": 4}, "V0": _pos, "epsilon": _pos,
        "c1": _pos, "c2": _pos, "m1": _num, "m2": _num,
        "c_left": _pos, "m_left": _num, "c_right": _pos, "m_right": _num,
        "W": _opt_pos, "layer": _opt_pos, "seed_base": {"type": "integer", "minimum": 0},
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "resolution": {"type": "integer", "minimum": 8},
                "tol": _pos,
                "dim_cap": {"type": "integer", "minimum": 1},
                "bulk_margin": {"type": "number", "minimum": 0},
            },
        },
        "experiment": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "seed": {"type": ["integer", "null"], "minimum": 0},
                "L_list": {"type": "array", "items": {"type": "integer", "minimum": 4}, "minItems": 1},
                "p": {"type": "integer", "minimum": 7},
                "theta": {"type": ["number", "null"]},
                "E": {"type": ["number", "null"]},
                "deltas": {"type": ["array", "null"], "items": {"type": "number", "minimum": 0}},
                "fast": {"type": "boolean"},
                "mu_l": {"type": ["number", "null"]},
                "mu_r": {"type": ["number", "null"]},
                "E_F": {"type": ["number", "null"]},
                "spread": _pos,
                "D": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "z_per_gap": {"type": "integer", "minimum": 1},
                "probes": {"type": "integer", "minimum": 1},
                "threshold": _pos,
                "samples": {"type": "integer", "minimum": 1},
                "sample_seed": {"type": "integer", "minimum": 0},
            },
        },
        "seeds": {"oneOf": [{"type": "integer", "minimum": 0},
                            {"type": "array", "items": {"type": "integer", "minimum": 0}}]},
        "out": {"type": ["string", "null"]},
    },
}

SOLVER_DEFAULTS = {"resolution": 8, "tol": 1e-8, "dim_cap": 60000, "bulk_margin": 4.0}
EXPERIMENT_DEFAULTS = {
    "seed": 1, "L_list": [8, 12, 16], "p": 7, "theta": None, "E": None, "deltas": None,
    "fast": False, "mu_l": None, "mu_r": None, "E_F": None, "spread": 0.1, "D": None,
    "z_per_gap": 8, "probes": 32, "threshold": 1e-2, "samples": 10000, "sample_seed": 7,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    params: ModelParams
    solver: dict
    experiment: dict
    seeds: list = field(default_factory=list)
    out: str | None = None

    @property
    def settings(self) -> SolveSettings:
        return SolveSettings(**self.solver)

    def to_document(self) -> dict:
        """Everything that determines results; the output location is left out."""
        doc = {k: getattr(self.params, k) for k in MODEL_KEYS}
        doc["solver"] = dict(self.solver)
        doc["experiment"] = copy.deepcopy(self.experiment)
        doc["seeds"] = list(self.seeds)
        return doc

    def canonical(self) -> str:
        return canonical_json(self.to_document())

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _clean(obj):
    """Replace non-finite floats by None so that output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):     # numpy scalars
        return _clean(obj.item())
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def _path(err) -> str:
    parts = [str(p) for p in err.absolute_path]
    return "config" + "".join(f"[{p}]" if p.isdigit() else f".{p}" for p in parts)


def parse_config(document) -> RunConfig:
    """Validate a JSON document (str or dict) and materialize every default."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON: {err}") from err
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ConfigError(f"{_path(e)}: {e.message}")
    mp = {k: document[k] for k in MODEL_KEYS if k in document}
    params = ModelParams(**mp)            # physical constraints raise ModelError
    solver = {**SOLVER_DEFAULTS, **document.get("solver", {})}
    experiment = {**EXPERIMENT_DEFAULTS, **document.get("experiment", {})}
    seeds = document.get("seeds", 1)
    seeds = list(range(seeds)) if isinstance(seeds, int) else sorted(set(seeds))
    return RunConfig(params, solver, experiment, seeds, document.get("out"))


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
