"""Scenario documents: JSON in, validated library objects out.

Matrices are row-major nested lists whose entries are ``[re, im]`` pairs (a
bare real number is accepted too). See ``docs/scenario.md`` for the schema.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import Tolerance, from_pairs, to_pairs
from .measurement import Convention, DensityState, ExperimentScript, KrausChannel, Segment
from .system import ControlSystem

__all__ = ["SCHEMA_VERSION", "Scenario", "ScenarioError", "load_scenario", "parse_scenario", "system_to_dict"]

SCHEMA_VERSION = 1
TOL_ENV = "QOBSERVE_TOL"


class ScenarioError(ValueError):
    """Validation failure; ``path`` names the offending field (e.g. ``system.observable``)."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


@dataclass
class Scenario:
    system: ControlSystem
    states: dict[str, DensityState] = field(default_factory=dict)
    scripts: dict[str, ExperimentScript] = field(default_factory=dict)
    channels: dict[str, KrausChannel] = field(default_factory=dict)
    tomography: dict[str, Any] = field(default_factory=dict)
    max_k: int | None = None
    tol: Tolerance = field(default_factory=Tolerance)
    seed: int = 0
    name: str = ""
    expected: dict[str, Any] = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION


def default_tolerance() -> Tolerance:
    raw = os.environ.get(TOL_ENV)
    if not raw:
        return Tolerance()
    try:
        return Tolerance(rank_tol=float(raw))
    except ValueError as exc:
        raise ScenarioError(f"${TOL_ENV}", str(exc)) from None


def _matrix(data, path: str, n: int | None = None) -> np.ndarray:
    if not isinstance(data, list):
        raise ScenarioError(path, "expected a matrix (list of rows)")
    try:
        m = from_pairs(data)
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None
    if not np.all(np.isfinite(m)):
        raise ScenarioError(path, "matrix has non-finite entries")
    if n is not None and m.shape != (n, n):
        raise ScenarioError(path, f"expected a {n}x{n} matrix, got {m.shape[0]}x{m.shape[1]}")
    return m


def _obj(data, path: str) -> dict:
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    return data


def _list(data, path: str) -> list:
    if not isinstance(data, list):
        raise ScenarioError(path, "expected a list")
    return data


def _wrap(path: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(path, str(exc)) from None


def _parse_system(data: dict) -> ControlSystem:
    data = _obj(data, "system")
    obs = _matrix(data.get("observable"), "system.observable")
    n = obs.shape[0]
    if "dim" in data and data["dim"] != n:
        raise ScenarioError("system.dim", f"declared {data['dim']} but observable is {n}x{n}")
    label = str(data.get("label", ""))
    drift = data.get("drift")
    drift = None if drift is None else _matrix(drift, "system.drift", n)
    hams = [
        _matrix(h, f"system.hamiltonians[{i}]", n) for i, h in enumerate(_list(data.get("hamiltonians", []), "system.hamiltonians"))
    ]
    gens = [
        _matrix(g, f"system.generators[{i}]", n) for i, g in enumerate(_list(data.get("generators", []), "system.generators"))
    ]
    for i, g in enumerate(gens):
        if np.abs(g + g.conj().T).max() > 1e-10 * max(1.0, np.abs(g).max()):
            raise ScenarioError(f"system.generators[{i}]", "generator must be skew-Hermitian")
        hams.append(-1j * g)
    for i, h in enumerate(hams[: len(hams) - len(gens)]):
        if np.abs(h - h.conj().T).max() > 1e-10 * max(1.0, np.abs(h).max()):
            raise ScenarioError(f"system.hamiltonians[{i}]", "Hamiltonian must be Hermitian")
    if np.abs(obs - obs.conj().T).max() > 1e-10 * max(1.0, np.abs(obs).max()):
        raise ScenarioError("system.observable", "observable must be Hermitian")
    if not hams and drift is None:
        raise ScenarioError("system", "needs at least one of hamiltonians, generators or drift")
    return _wrap("system", ControlSystem, tuple(hams), obs, drift=drift, label=label)


def _parse_state(data, path: str, n: int | None) -> DensityState:
    data = _obj(data, path)
    m = _matrix(data.get("matrix"), f"{path}.matrix", n)
    conv = data.get("convention", Convention.TRACE_ONE.value)
    try:
        conv = Convention(conv)
    except ValueError:
        raise ScenarioError(f"{path}.convention", f"unknown convention {conv!r}") from None
    if conv is Convention.TRACELESS:
        return _wrap(path, DensityState.traceless, m)
    return _wrap(path, DensityState, m, conv)


def _parse_channel(data, path: str, n: int) -> KrausChannel:
    data = _obj(data, path)
    ops = [_matrix(o, f"{path}.operators[{i}]", n) for i, o in enumerate(_list(data.get("operators"), f"{path}.operators"))]
    labels = data.get("labels")
    return _wrap(path, KrausChannel, tuple(ops), None if labels is None else tuple(labels))


def _parse_segment(data, path: str, n: int, m: int) -> Segment:
    data = _obj(data, path)
    measure = bool(data.get("measure", True))
    if "unitary" in data:
        return _wrap(path, Segment, unitary=_matrix(data["unitary"], f"{path}.unitary", n), measure=measure)
    duration = data.get("duration")
    if not isinstance(duration, (int, float)) or isinstance(duration, bool) or not duration > 0:
        raise ScenarioError(f"{path}.duration", "must be a positive number")
    controls = data.get("controls", [[0.0] * m])
    try:
        c = np.atleast_2d(np.asarray(controls, dtype=float))
    except (TypeError, ValueError):
        raise ScenarioError(f"{path}.controls", "must be a list of control rows") from None
    if c.ndim != 2 or c.shape[1] != m:
        raise ScenarioError(f"{path}.controls", f"each control row needs {m} values")
    return _wrap(path, Segment, duration=float(duration), controls=c, measure=measure)


def _parse_script(data, path: str, sys: ControlSystem, channels: dict) -> ExperimentScript:
    data = _obj(data, path)
    n = sys.dim_n
    segs = [_parse_segment(s, f"{path}.segments[{i}]", n, sys.n_controls) for i, s in enumerate(_list(data.get("segments"), f"{path}.segments"))]
    obs = data.get("observables")
    if obs is not None:
        obs = tuple(_matrix(o, f"{path}.observables[{i}]", n) for i, o in enumerate(_list(obs, f"{path}.observables")))
    ch = data.get("channel")
    if ch is not None:
        if ch not in channels:
            raise ScenarioError(f"{path}.channel", f"unknown channel {ch!r}")
        ch = channels[ch]
    return _wrap(path, ExperimentScript, tuple(segs), observables=obs, channel=ch)


def _parse_tomography(data, states: dict, n: int) -> dict:
    data = _obj(data, "tomography")
    out = {}
    if "permutation" in data:
        p = _obj(data["permutation"], "tomography.permutation")
        name = p.get("state")
        if name not in states:
            raise ScenarioError("tomography.permutation.state", f"unknown state {name!r}")
        x1 = p.get("x1")
        x1 = np.eye(n, dtype=complex) if x1 is None else _matrix(x1, "tomography.permutation.x1", n)
        if np.abs(x1.conj().T @ x1 - np.eye(n)).max() > 1e-9:
            raise ScenarioError("tomography.permutation.x1", "must be unitary")
        out["permutation"] = {"state": name, "x1": x1}
    if "ancilla" in data:
        a = _obj(data["ancilla"], "tomography.ancilla")
        parsed = {}
        for key in ("unknown", "known"):
            sub = a.get(key)
            parsed[key] = _parse_state(sub, f"tomography.ancilla.{key}", None)
        dim = parsed["unknown"].dim * parsed["known"].dim
        parsed["observable"] = _matrix(a.get("observable"), "tomography.ancilla.observable", dim)
        probes = a.get("probes")
        if probes is not None:
            probes = [_matrix(x, f"tomography.ancilla.probes[{i}]", dim) for i, x in enumerate(_list(probes, "tomography.ancilla.probes"))]
            for i, x in enumerate(probes):
                if np.abs(x.conj().T @ x - np.eye(dim)).max() > 1e-9:
                    raise ScenarioError(f"tomography.ancilla.probes[{i}]", "must be unitary")
        parsed["probes"] = probes
        out["ancilla"] = parsed
    return out


def _parse_tol(data, base: Tolerance) -> Tolerance:
    data = _obj(data, "analysis.tol")
    kw = {k: getattr(base, k) for k in ("rank_tol", "eig_tol", "sim_tol")}
    for k, v in data.items():
        if k not in kw:
            raise ScenarioError(f"analysis.tol.{k}", "unknown tolerance")
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ScenarioError(f"analysis.tol.{k}", "must be a number")
        kw[k] = float(v)
    return _wrap("analysis.tol", Tolerance, **kw)


def parse_scenario(doc: dict) -> Scenario:
    """Validate a scenario document and build the library objects it describes."""
    doc = _obj(doc, "$")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ScenarioError("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")
    if "system" not in doc:
        raise ScenarioError("system", "missing")
    sys = _parse_system(doc["system"])
    n = sys.dim_n
    states = {k: _parse_state(v, f"states.{k}", n) for k, v in _obj(doc.get("states", {}), "states").items()}
    channels = {k: _parse_channel(v, f"channels.{k}", n) for k, v in _obj(doc.get("channels", {}), "channels").items()}
    scripts = {k: _parse_script(v, f"scripts.{k}", sys, channels) for k, v in _obj(doc.get("scripts", {}), "scripts").items()}
    tomo = _parse_tomography(doc["tomography"], states, n) if "tomography" in doc else {}

    analysis = _obj(doc.get("analysis", {}), "analysis")
    max_k = analysis.get("max_k")
    if max_k is not None and (not isinstance(max_k, int) or isinstance(max_k, bool) or max_k < 1):
        raise ScenarioError("analysis.max_k", "must be a positive integer")
    seed = analysis.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("analysis.seed", "must be an integer")
    tol = default_tolerance()
    if "tol" in analysis:
        tol = _parse_tol(analysis["tol"], tol)
    return Scenario(
        system=sys,
        states=states,
        scripts=scripts,
        channels=channels,
        tomography=tomo,
        max_k=max_k,
        tol=tol,
        seed=seed,
        name=str(doc.get("name", "")),
        expected=dict(doc.get("expected", {})),
    )


def load_scenario(path: str | os.PathLike) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ScenarioError("$", f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_scenario(doc)


def system_to_dict(sys: ControlSystem) -> dict:
    return {
        "label": sys.label,
        "dim": sys.dim_n,
        "drift": None if sys.drift is None else to_pairs(sys.drift),
        "hamiltonians": [to_pairs(h) for h in sys.hamiltonians],
        "observable": to_pairs(sys.observable),
    }
