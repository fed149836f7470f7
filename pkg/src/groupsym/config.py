"""Run configuration: strict parsing, defaults, and canonical serialization.

A run config is a single JSON document with a schema_version.  Parsing is
strict: unknown keys anywhere are rejected by name, required fields are
reported with their path, and every file the config references must exist at
parse time.  parse -> serialize -> parse is the identity on the normalized
form.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "config_hash",
    "APPLICATIONS",
    "SCHEDULE_KINDS",
    "DEFAULT_TOLERANCES",
]

SCHEMA_VERSION = 1
APPLICATIONS = ("gossip", "prob-sym", "quantum-gossip", "dft", "random-state", "dd")
SCHEDULE_KINDS = (
    "cyclic",
    "random-gossip",
    "random-subset",
    "dd-bisection",
    "custom-sequence",
)
RANDOM_SCHEDULE_KINDS = ("random-gossip", "random-subset")
DEFAULT_ALPHA_RANGE = [0.3, 0.7]
DEFAULT_TOLERANCES = {"residual": 1e-8, "delta_floor": 1e-6, "conserved": 1e-9}
DEFAULT_STEPS = {
    "gossip": 1000,
    "prob-sym": 500,
    "quantum-gossip": 500,
    "dft": 500,
    "random-state": 30,
    "dd": 20,
}
DEFAULT_TRIALS = 100000
MAX_STEPS = 1_000_000
MAX_TRIALS = 10_000_000


class ConfigError(ValueError):
    """Configuration rejected; message carries the path to the offending field."""


def _fail(path: str, message: str):
    raise ConfigError(f"{path}: {message}" if path else message)


def _require_keys(obj: dict, allowed, required, path: str):
    if not isinstance(obj, dict):
        _fail(path, f"expected an object, got {type(obj).__name__}")
    for key in obj:
        if key not in allowed:
            _fail(path, f"unknown key {key!r}")
    for key in required:
        if key not in obj:
            _fail(path, f"missing required key {key!r}")


def _as_int(value, path: str, *, lo=None, hi=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, f"expected an integer, got {value!r}")
    if lo is not None and value < lo:
        _fail(path, f"must be >= {lo}, got {value}")
    if hi is not None and value > hi:
        _fail(path, f"must be <= {hi}, got {value}")
    return value


def _as_float(value, path: str, *, positive=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(path, f"expected a number, got {value!r}")
    value = float(value)
    if positive and value <= 0.0:
        _fail(path, f"must be > 0, got {value}")
    return value


def _as_alpha(value, path: str) -> float:
    alpha = _as_float(value, path)
    if not 0.0 < alpha < 1.0:
        _fail(path, f"must lie strictly inside (0, 1), got {alpha}")
    return alpha


def _as_edges(value, m: int, path: str) -> list:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a nonempty list of [j, k] pairs")
    out = []
    for i, edge in enumerate(value):
        if (
            not isinstance(edge, (list, tuple))
            or len(edge) != 2
            or any(isinstance(v, bool) or not isinstance(v, int) for v in edge)
        ):
            _fail(f"{path}[{i}]", f"expected a [j, k] integer pair, got {edge!r}")
        j, k = edge
        if not (0 <= j < m and 0 <= k < m):
            _fail(f"{path}[{i}]", f"nodes must lie in 0..{m - 1}, got ({j}, {k})")
        if j == k:
            _fail(f"{path}[{i}]", f"edge must join two distinct nodes, got ({j}, {k})")
        out.append([j, k])
    return out


def _complete_edges(m: int) -> list:
    return [[j, k] for j in range(m) for k in range(j + 1, m)]


def _check_file(rel_path, base_dir: str, path: str) -> str:
    if not isinstance(rel_path, str) or not rel_path:
        _fail(path, f"expected a file path string, got {rel_path!r}")
    resolved = rel_path if os.path.isabs(rel_path) else os.path.join(base_dir, rel_path)
    if not os.path.isfile(resolved):
        _fail(path, f"referenced file does not exist: {resolved}")
    return rel_path


@dataclass
class RunConfig:
    """Normalized, validated run description."""

    application: str
    params: dict
    schedule: dict
    initial_state: dict
    steps: int
    trials: Optional[int]
    seed: Optional[int]
    tolerances: dict
    output: Optional[str]
    base_dir: str = field(compare=False, default=".")

    def to_dict(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "application": self.application,
            "params": copy.deepcopy(self.params),
            "schedule": copy.deepcopy(self.schedule),
            "initial_state": copy.deepcopy(self.initial_state),
            "steps": self.steps,
            "tolerances": dict(self.tolerances),
        }
        if self.trials is not None:
            out["trials"] = self.trials
        if self.seed is not None:
            out["seed"] = self.seed
        if self.output is not None:
            out["output"] = self.output
        return out

    def resolve(self, rel_path: str) -> str:
        if os.path.isabs(rel_path):
            return rel_path
        return os.path.join(self.base_dir, rel_path)


def _validate_group_spec(spec, base_dir: str, path: str) -> dict:
    _require_keys(spec, {"kind", "n", "m", "path"}, {"kind"}, path)
    kind = spec["kind"]
    if kind == "cyclic":
        _require_keys(spec, {"kind", "n"}, {"kind", "n"}, path)
        return {"kind": "cyclic", "n": _as_int(spec["n"], f"{path}.n", lo=1, hi=1024)}
    if kind == "symmetric":
        _require_keys(spec, {"kind", "m"}, {"kind", "m"}, path)
        return {"kind": "symmetric", "m": _as_int(spec["m"], f"{path}.m", lo=1, hi=8)}
    if kind == "table":
        _require_keys(spec, {"kind", "path"}, {"kind", "path"}, path)
        return {
            "kind": "table",
            "path": _check_file(spec["path"], base_dir, f"{path}.path"),
        }
    _fail(f"{path}.kind", f"unknown group kind {kind!r}")


def _validate_params(app: str, params, base_dir: str) -> dict:
    path = "params"
    if params is None:
        params = {}
    if app == "gossip":
        _require_keys(params, {"m", "n", "edges"}, set(), path)
        m = _as_int(params.get("m", 3), f"{path}.m", lo=2, hi=8)
        n = _as_int(params.get("n", 1), f"{path}.n", lo=1, hi=64)
        edges = _as_edges(params.get("edges", _complete_edges(m)), m, f"{path}.edges")
        return {"m": m, "n": n, "edges": edges}
    if app == "prob-sym":
        _require_keys(params, {"m", "outcome_size", "edges"}, {"m", "outcome_size"}, path)
        m = _as_int(params["m"], f"{path}.m", lo=1, hi=4)
        size = _as_int(params["outcome_size"], f"{path}.outcome_size", lo=1, hi=8)
        edges = _as_edges(params.get("edges", _complete_edges(m)), m, f"{path}.edges")
        return {"m": m, "outcome_size": size, "edges": edges}
    if app == "quantum-gossip":
        _require_keys(params, {"m", "local_dim", "edges"}, {"m", "local_dim"}, path)
        m = _as_int(params["m"], f"{path}.m", lo=1, hi=6)
        d = _as_int(params["local_dim"], f"{path}.local_dim", lo=2, hi=64)
        if d**m > 64:
            _fail(path, f"total dimension {d**m} exceeds the dense cap 64")
        edges = _as_edges(params.get("edges", _complete_edges(m)), m, f"{path}.edges")
        return {"m": m, "local_dim": d, "edges": edges}
    if app == "dft":
        _require_keys(params, {"N"}, {"N"}, path)
        return {"N": _as_int(params["N"], f"{path}.N", lo=1, hi=1024)}
    if app == "random-state":
        _require_keys(params, {"group"}, {"group"}, path)
        return {"group": _validate_group_spec(params["group"], base_dir, f"{path}.group")}
    if app == "dd":
        _require_keys(params, {"dt", "frame_cap"}, set(), path)
        out = {}
        if "dt" in params:
            out["dt"] = _as_float(params["dt"], f"{path}.dt", positive=True)
        if "frame_cap" in params:
            out["frame_cap"] = _as_int(params["frame_cap"], f"{path}.frame_cap", lo=0, hi=20)
        return out
    _fail("application", f"unknown application {app!r}")


def _validate_element_list(value, path: str, *, allow_edges: bool) -> list:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a nonempty list")
    out = []
    for i, entry in enumerate(value):
        if isinstance(entry, bool):
            _fail(f"{path}[{i}]", f"expected an element index, got {entry!r}")
        elif isinstance(entry, int):
            if entry < 0:
                _fail(f"{path}[{i}]", f"element index must be >= 0, got {entry}")
            out.append(entry)
        elif allow_edges and isinstance(entry, (list, tuple)) and len(entry) == 2:
            j, k = entry
            if any(isinstance(v, bool) or not isinstance(v, int) for v in entry) or j == k:
                _fail(f"{path}[{i}]", f"expected an [j, k] edge pair, got {entry!r}")
            out.append([int(j), int(k)])
        elif isinstance(entry, str) and entry:
            out.append(entry)
        else:
            _fail(f"{path}[{i}]", f"unsupported element {entry!r}")
    return out


def _validate_alpha_range(value, path: str) -> list:
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value)
    ):
        _fail(path, f"expected [lo, hi], got {value!r}")
    lo, hi = float(value[0]), float(value[1])
    if not (0.0 < lo < hi < 1.0):
        _fail(path, f"must satisfy 0 < lo < hi < 1, got [{lo}, {hi}]")
    return [lo, hi]


def _validate_schedule(app: str, spec, base_dir: str) -> dict:
    path = "schedule"
    if spec is None:
        if app == "dd":
            _fail(path, "dd runs require a dd-bisection schedule")
        spec = {"kind": "random-gossip"}
    if not isinstance(spec, dict):
        _fail(path, f"expected an object, got {type(spec).__name__}")
    kind = spec.get("kind")
    if kind not in SCHEDULE_KINDS:
        _fail(f"{path}.kind", f"unknown schedule kind {kind!r}")
    allow_edges = app in ("gossip", "prob-sym", "quantum-gossip")
    if app == "dd" and kind != "dd-bisection":
        _fail(f"{path}.kind", "dd runs require kind 'dd-bisection'")
    if kind == "cyclic":
        _require_keys(spec, {"kind", "elements", "alpha"}, {"kind", "elements"}, path)
        return {
            "kind": kind,
            "elements": _validate_element_list(
                spec["elements"], f"{path}.elements", allow_edges=allow_edges
            ),
            "alpha": _as_alpha(spec.get("alpha", 0.5), f"{path}.alpha"),
        }
    if kind in RANDOM_SCHEDULE_KINDS:
        _require_keys(spec, {"kind", "support", "alpha_range", "seed"}, {"kind"}, path)
        out = {
            "kind": kind,
            "alpha_range": _validate_alpha_range(
                spec.get("alpha_range", list(DEFAULT_ALPHA_RANGE)), f"{path}.alpha_range"
            ),
        }
        if "support" in spec:
            out["support"] = _validate_element_list(
                spec["support"], f"{path}.support", allow_edges=allow_edges
            )
        elif not allow_edges:
            _fail(f"{path}.support", "required for this application")
        if "seed" in spec:
            out["seed"] = _as_int(spec["seed"], f"{path}.seed", lo=0, hi=2**64 - 1)
        return out
    if kind == "dd-bisection":
        if app != "dd":
            _fail(f"{path}.kind", "dd-bisection schedules only apply to dd runs")
        _require_keys(spec, {"kind", "chooser", "alpha"}, {"kind", "chooser"}, path)
        return {
            "kind": kind,
            "chooser": _validate_element_list(
                spec["chooser"], f"{path}.chooser", allow_edges=False
            ),
            "alpha": _as_alpha(spec.get("alpha", 0.5), f"{path}.alpha"),
        }
    # custom-sequence
    _require_keys(spec, {"kind", "rows", "path", "policy"}, {"kind"}, path)
    out = {"kind": kind, "policy": spec.get("policy", "cycle")}
    if out["policy"] not in ("cycle", "truncate"):
        _fail(f"{path}.policy", f"must be 'cycle' or 'truncate', got {out['policy']!r}")
    has_rows = "rows" in spec
    has_path = "path" in spec
    if has_rows == has_path:
        _fail(path, "exactly one of 'rows' or 'path' is required")
    if has_rows:
        rows = spec["rows"]
        if not isinstance(rows, list) or not rows:
            _fail(f"{path}.rows", "expected a nonempty list of weight rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or not row:
                _fail(f"{path}.rows[{i}]", "expected a list of numbers")
            for v in row:
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    _fail(f"{path}.rows[{i}]", f"expected numbers, got {v!r}")
        out["rows"] = [[float(v) for v in row] for row in rows]
    else:
        out["path"] = _check_file(spec["path"], base_dir, f"{path}.path")
    return out


def _validate_initial_state(spec, base_dir: str) -> dict:
    path = "initial_state"
    if spec is None:
        return {"source": "random", "scale": 1.0}
    _require_keys(spec, {"source", "data", "path", "scale"}, {"source"}, path)
    source = spec["source"]
    if source == "inline":
        _require_keys(spec, {"source", "data"}, {"source", "data"}, path)
        return {"source": "inline", "data": copy.deepcopy(spec["data"])}
    if source == "file":
        _require_keys(spec, {"source", "path"}, {"source", "path"}, path)
        return {
            "source": "file",
            "path": _check_file(spec["path"], base_dir, f"{path}.path"),
        }
    if source == "random":
        _require_keys(spec, {"source", "scale"}, {"source"}, path)
        return {
            "source": "random",
            "scale": _as_float(spec.get("scale", 1.0), f"{path}.scale", positive=True),
        }
    _fail(f"{path}.source", f"must be 'inline', 'file', or 'random', got {source!r}")


def _validate_tolerances(spec) -> dict:
    path = "tolerances"
    if spec is None:
        return dict(DEFAULT_TOLERANCES)
    _require_keys(spec, set(DEFAULT_TOLERANCES), set(), path)
    out = dict(DEFAULT_TOLERANCES)
    for key in spec:
        out[key] = _as_float(spec[key], f"{path}.{key}", positive=True)
    return out


def parse_config(source, *, base_dir: Optional[str] = None) -> RunConfig:
    """Parse a config from a file path or inline JSON text, strictly validated."""
    if isinstance(source, dict):
        doc = copy.deepcopy(source)
        base = base_dir or os.getcwd()
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            raw = text
            base = base_dir or os.getcwd()
        else:
            if not os.path.isfile(text):
                raise ConfigError(f"config file does not exist: {text}")
            with open(text) as fh:
                raw = fh.read()
            base = base_dir or os.path.dirname(os.path.abspath(text))
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc

    _require_keys(
        doc,
        {
            "schema_version",
            "application",
            "params",
            "schedule",
            "initial_state",
            "steps",
            "trials",
            "seed",
            "tolerances",
            "output",
        },
        {"schema_version", "application"},
        "",
    )
    version = doc["schema_version"]
    if version != SCHEMA_VERSION:
        _fail("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    app = doc["application"]
    if app not in APPLICATIONS:
        _fail(
            "application",
            f"unknown application {app!r}; expected one of {', '.join(APPLICATIONS)}",
        )

    params = _validate_params(app, doc.get("params"), base)
    schedule = _validate_schedule(app, doc.get("schedule"), base)
    initial_state = _validate_initial_state(doc.get("initial_state"), base)
    steps = _as_int(doc.get("steps", DEFAULT_STEPS[app]), "steps", lo=0, hi=MAX_STEPS)

    trials = doc.get("trials")
    if app == "random-state":
        trials = _as_int(
            trials if trials is not None else DEFAULT_TRIALS, "trials", lo=1, hi=MAX_TRIALS
        )
    elif trials is not None:
        _fail("trials", "only applies to random-state runs")

    seed = doc.get("seed")
    if seed is not None:
        seed = _as_int(seed, "seed", lo=0, hi=2**64 - 1)

    tolerances = _validate_tolerances(doc.get("tolerances"))

    output = doc.get("output")
    if output is not None and (not isinstance(output, str) or not output):
        _fail("output", f"expected a directory path string, got {output!r}")

    needs_seed = []
    if schedule["kind"] in RANDOM_SCHEDULE_KINDS and "seed" not in schedule:
        needs_seed.append("the randomized schedule has no seed of its own")
    if initial_state["source"] == "random":
        needs_seed.append("the initial state is randomized")
    if app == "random-state":
        needs_seed.append("trial sampling is randomized")
    if seed is None and needs_seed:
        _fail("seed", f"required: {'; '.join(needs_seed)}")

    return RunConfig(
        application=app,
        params=params,
        schedule=schedule,
        initial_state=initial_state,
        steps=steps,
        trials=trials,
        seed=seed,
        tolerances=tolerances,
        output=output,
        base_dir=base,
    )


def serialize_config(config: RunConfig, *, indent: int = 2) -> str:
    """Canonical JSON text for a normalized config."""
    return json.dumps(config.to_dict(), indent=indent, sort_keys=True) + "\n"


def config_hash(config: RunConfig) -> str:
    """sha256 of the canonical serialization, hex digest."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
