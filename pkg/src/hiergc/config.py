"""Config-document parsing and validation.

One JSON document drives every CLI subcommand; see README for the field-level
schema. Validation errors always carry the dotted path of the offending field.
"""
from __future__ import annotations

import json
from pathlib import Path

from .errors import ConfigError
from .profiles import EdgeProfile, SystemProfile, WorkerProfile
from .schemes import KINDS, SurvivorPattern
from .sim import ExperimentConfig, SchemeSpec
from .topology import Tolerance, Topology
from .traindemo import StragglerPolicy


def load_document(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(str(path), "config file does not exist")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(str(path), "top-level config must be a JSON object")
    return doc


def _get(doc: dict, path: str, key: str, kind, required=True, default=None):
    here = f"{path}.{key}" if path else key
    if key not in doc or (doc[key] is None and not required):
        if required:
            raise ConfigError(here, "missing required field")
        return default
    value = doc[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(here, f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def parse_topology(doc: dict, path: str = "topology") -> Topology:
    sub = _get(doc, "", path, dict)
    n = _get(sub, path, "n", int)
    m = _get(sub, path, "m", list)
    try:
        return Topology(n, m)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_tolerance(doc: dict, topology: Topology, path: str = "tolerance") -> Tolerance:
    sub = _get(doc, "", path, dict)
    tol = Tolerance(_get(sub, path, "s_e", int), _get(sub, path, "s_w", int))
    try:
        return tol.validate(topology)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc


def parse_profiles(doc: dict, topology: Topology, path: str = "profiles") -> SystemProfile:
    sub = _get(doc, "", path, dict)
    edges_doc = _get(sub, path, "edges", list)
    workers_doc = _get(sub, path, "workers", list)
    edges = []
    for i, e in enumerate(edges_doc):
        here = f"{path}.edges[{i}]"
        if not isinstance(e, dict):
            raise ConfigError(here, "expected an object")
        try:
            edges.append(EdgeProfile(_get(e, here, "tau_ms", float), _get(e, here, "p", float)))
        except ValueError as exc:
            raise ConfigError(here, str(exc)) from exc
    workers = []
    for i, row in enumerate(workers_doc):
        here = f"{path}.workers[{i}]"
        if not isinstance(row, list):
            raise ConfigError(here, "expected a list of worker profiles")
        parsed = []
        for j, w in enumerate(row):
            wpath = f"{here}[{j}]"
            if not isinstance(w, dict):
                raise ConfigError(wpath, "expected an object")
            try:
                parsed.append(
                    WorkerProfile(
                        _get(w, wpath, "c_ms", float),
                        _get(w, wpath, "gamma_per_ms", float),
                        _get(w, wpath, "tau_ms", float),
                        _get(w, wpath, "p", float),
                    )
                )
            except ValueError as exc:
                raise ConfigError(wpath, str(exc)) from exc
        workers.append(tuple(parsed))
    profile = SystemProfile(tuple(edges), tuple(workers))
    try:
        profile.validate(topology)
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
    return profile


def parse_scheme_spec(doc: dict, path: str) -> SchemeSpec:
    kind = _get(doc, path, "kind", str).lower()
    if kind not in KINDS:
        raise ConfigError(f"{path}.kind", f"unknown scheme kind {kind!r}; expected one of {KINDS}")
    return SchemeSpec(
        kind,
        _get(doc, path, "s_e", int, required=False),
        _get(doc, path, "s_w", int, required=False),
    )


def parse_experiment(doc: dict, topology: Topology, profile: SystemProfile, seed: int,
                     trials_override: int | None = None) -> ExperimentConfig:
    sub = _get(doc, "", "experiment", dict)
    schemes_doc = _get(sub, "experiment", "schemes", list)
    if not schemes_doc:
        raise ConfigError("experiment.schemes", "need at least one scheme")
    specs = tuple(
        parse_scheme_spec(s, f"experiment.schemes[{i}]") for i, s in enumerate(schemes_doc)
    )
    K_sweep = _get(sub, "experiment", "K_sweep", list)
    if not K_sweep or not all(isinstance(k, int) and k > 0 for k in K_sweep):
        raise ConfigError("experiment.K_sweep", "expected a non-empty list of positive integers")
    trials = trials_override or _get(sub, "experiment", "trials", int)
    if trials < 1:
        raise ConfigError("experiment.trials", "must be >= 1")
    return ExperimentConfig(topology, profile, specs, tuple(K_sweep), trials, seed)


def parse_policy(doc: dict, path: str) -> StragglerPolicy:
    mode = _get(doc, path, "mode", str)
    pattern = None
    if mode == "fixed":
        pdoc = _get(doc, path, "pattern", dict)
        edges = _get(pdoc, f"{path}.pattern", "edges", list)
        workers = _get(pdoc, f"{path}.pattern", "workers", list)
        pattern = SurvivorPattern(tuple(edges), tuple(tuple(w) for w in workers))
    try:
        return StragglerPolicy(
            mode,
            _get(doc, path, "s_e", int, required=False, default=0),
            _get(doc, path, "s_w", int, required=False, default=0),
            _get(doc, path, "seed", int, required=False, default=0),
            pattern,
        )
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from exc
