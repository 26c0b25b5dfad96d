"""Simulation of evolve/measure experiments with Von Neumann or Kraus back-action.

Outputs are expectation values ``y = Tr(S rho)``; no single-shot sampling.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    SpectralDecomposition,
    Tolerance,
    expm,
    is_hermitian,
    is_unitary,
    pinch,
    spectral,
    to_pairs,
    traceless_shift,
)
from .system import ControlSystem

__all__ = [
    "Convention",
    "DensityState",
    "Segment",
    "ExperimentScript",
    "KrausChannel",
    "MeasurementRecord",
    "propagator",
    "evolve",
    "project",
    "kraus_apply",
    "kraus_dual",
    "run_experiment",
    "pullback_observable",
    "projective_channel",
]


class Convention(str, enum.Enum):
    TRACE_ONE = "trace_one"
    TRACELESS = "traceless_shifted"


@dataclass(frozen=True, eq=False)
class DensityState:
    """A density matrix, either unit-trace or shifted to zero trace.

    ``shift_record`` is the multiple of the identity removed by the shift
    (``1/n`` for a physical state); it is 0 for unshifted states.
    """

    matrix: np.ndarray
    convention: Convention = Convention.TRACE_ONE
    shift_record: float = 0.0

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"state must be a square matrix, got shape {m.shape}")
        conv = Convention(self.convention)
        scale = max(1.0, float(np.abs(m).max(initial=0.0)))
        if not is_hermitian(m, 1e-9 * scale):
            raise ValueError("state must be Hermitian")
        m = 0.5 * (m + m.conj().T)
        tr = np.trace(m).real
        if conv is Convention.TRACE_ONE:
            if abs(tr - 1.0) > 1e-9:
                raise ValueError(f"trace_one state has trace {tr:.6g}")
            if np.linalg.eigvalsh(m).min() < -1e-9:
                raise ValueError("trace_one state is not positive semidefinite")
        elif abs(tr) > 1e-9 * scale:
            raise ValueError(f"traceless state has trace {tr:.6g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "convention", conv)

    @classmethod
    def traceless(cls, m) -> "DensityState":
        """Wrap an already shifted matrix (assumed to come from a unit-trace state)."""
        m = np.asarray(m, dtype=complex)
        return cls(m, Convention.TRACELESS, 1.0 / m.shape[0])

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def shifted(self) -> "DensityState":
        if self.convention is Convention.TRACELESS:
            return self
        return DensityState(traceless_shift(self.matrix), Convention.TRACELESS, 1.0 / self.dim)

    def unshifted(self) -> "DensityState":
        if self.convention is Convention.TRACE_ONE:
            return self
        return DensityState(self.matrix + self.shift_record * np.eye(self.dim), Convention.TRACE_ONE)

    def _replace(self, m) -> "DensityState":
        return DensityState(m, self.convention, self.shift_record)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Non-selective measurement update ``F(rho) = sum Omega rho Omega^*``.

    ``labels[i]`` is the outcome ``m`` that operator ``i`` belongs to.
    """

    operators: tuple[np.ndarray, ...]
    labels: tuple[Hashable, ...] | None = None
    tol: float = 1e-10

    def __post_init__(self):
        ops = tuple(np.array(o, dtype=complex) for o in self.operators)
        if not ops:
            raise ValueError("a Kraus channel needs at least one operator")
        n = ops[0].shape[0]
        for i, o in enumerate(ops):
            if o.shape != (n, n):
                raise ValueError(f"operators[{i}] has shape {o.shape}, expected {(n, n)}")
            o.setflags(write=False)
        labels = tuple(self.labels) if self.labels is not None else tuple(range(len(ops)))
        if len(labels) != len(ops):
            raise ValueError("labels and operators differ in length")
        completeness = sum(o.conj().T @ o for o in ops)
        err = float(np.abs(completeness - np.eye(n)).max())
        if err > self.tol:
            raise ValueError(f"channel is not trace preserving: |sum Omega^* Omega - I| = {err:.3g}")
        object.__setattr__(self, "operators", ops)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def outcomes(self) -> list:
        return list(dict.fromkeys(self.labels))

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return sum(o @ rho @ o.conj().T for o in self.operators)

    def dual(self, s: np.ndarray) -> np.ndarray:
        return sum(o.conj().T @ s @ o for o in self.operators)


def projective_channel(s, tol: Tolerance = DEFAULT_TOL) -> KrausChannel:
    """The Von Neumann measurement of ``S`` written as a Kraus channel of eigenprojectors."""
    dec = spectral(s, tol)
    return KrausChannel(dec.projectors, dec.eigenvalues)


def kraus_apply(ch: KrausChannel, rho):
    if isinstance(rho, DensityState):
        return rho._replace(ch.apply(rho.matrix))
    return ch.apply(np.asarray(rho, dtype=complex))


def kraus_dual(ch: KrausChannel, s) -> np.ndarray:
    return ch.dual(np.asarray(s, dtype=complex))


@dataclass(frozen=True, eq=False)
class Segment:
    """One piece of an experiment: an evolution followed (optionally) by a measurement.

    Either ``unitary`` is given, or ``duration`` together with ``controls`` of
    shape ``(steps, m)`` (a single row of ``m`` values means constant controls).
    """

    duration: float | None = None
    controls: np.ndarray | None = None
    unitary: np.ndarray | None = None
    measure: bool = True

    def __post_init__(self):
        if self.unitary is not None:
            u = np.array(self.unitary, dtype=complex)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise ValueError("segment unitary must be square")
            if not is_unitary(u, 1e-9):
                raise ValueError("segment unitary is not unitary")
            u.setflags(write=False)
            object.__setattr__(self, "unitary", u)
            if self.duration is not None:
                raise ValueError("a segment has either a unitary or a duration, not both")
        else:
            if self.duration is None or not self.duration > 0:
                raise ValueError("segment duration must be positive")
            c = np.atleast_2d(np.asarray(self.controls if self.controls is not None else [[]], dtype=float))
            c.setflags(write=False)
            object.__setattr__(self, "controls", c)

    def to_dict(self) -> dict:
        if self.unitary is not None:
            return {"unitary": to_pairs(self.unitary), "measure": self.measure}
        return {"duration": self.duration, "controls": self.controls.tolist(), "measure": self.measure}


@dataclass(frozen=True, eq=False)
class ExperimentScript:
    """Ordered segments; ``observables[i]`` (raw, possibly with trace) is measured at the i-th measurement.

    With ``channel`` set, every measurement updates the state by that Kraus
    channel instead of the projective pinching.
    """

    segments: tuple[Segment, ...]
    observables: tuple[np.ndarray, ...] | None = None
    channel: KrausChannel | None = None

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        n_meas = sum(s.measure for s in segs)
        if n_meas == 0:
            raise ValueError("an experiment script needs at least one measurement")
        if self.observables is not None:
            obs = tuple(np.array(o, dtype=complex) for o in self.observables)
            if len(obs) != n_meas:
                raise ValueError(f"{len(obs)} observables given for {n_meas} measurements")
            object.__setattr__(self, "observables", obs)

    @property
    def n_measurements(self) -> int:
        return sum(s.measure for s in self.segments)

    @classmethod
    def from_unitaries(cls, unitaries: Sequence, **kwargs) -> "ExperimentScript":
        """Measure after every one of the given propagators ``X_1, ..., X_k``."""
        return cls(tuple(Segment(unitary=u) for u in unitaries), **kwargs)

    def to_dict(self) -> dict:
        return {
            "segments": [s.to_dict() for s in self.segments],
            "observables": None if self.observables is None else [to_pairs(o) for o in self.observables],
            "channel": None if self.channel is None else [to_pairs(o) for o in self.channel.operators],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    outputs: tuple[float, ...]
    raw_outputs: tuple[float, ...]
    post_states: tuple[DensityState, ...]
    script_hash: str

    def to_dict(self) -> dict:
        return {
            "script_hash": self.script_hash,
            "outputs": list(self.outputs),
            "raw_outputs": list(self.raw_outputs),
            "post_states": [
                {"convention": s.convention.value, "matrix": to_pairs(s.matrix)} for s in self.post_states
            ],
        }


def propagator(sys: ControlSystem, duration: float, controls) -> np.ndarray:
    """``X = prod_k exp(-i H(u_k) dt)`` for piecewise-constant controls (later steps on the left)."""
    if not duration > 0:
        raise ValueError("duration must be positive")
    c = np.atleast_2d(np.asarray(controls, dtype=float))
    if c.size == 0:
        c = np.zeros((1, 0))
    if c.shape[1] != sys.n_controls:
        raise ValueError(f"expected {sys.n_controls} controls per step, got {c.shape[1]}")
    dt = duration / c.shape[0]
    x = np.eye(sys.dim_n, dtype=complex)
    for row in c:
        x = expm(-1j * dt * sys.hamiltonian(row)) @ x
    return x


def evolve(rho: DensityState, sys: ControlSystem, duration: float, controls) -> DensityState:
    if rho.dim != sys.dim_n:
        raise ValueError(f"state dimension {rho.dim} does not match system dimension {sys.dim_n}")
    x = propagator(sys, duration, controls)
    return rho._replace(x @ rho.matrix @ x.conj().T)


def project(rho, s_spec: SpectralDecomposition):
    """Von Neumann-Lueders update ``sum_j Pi_j rho Pi_j``."""
    if isinstance(rho, DensityState):
        return rho._replace(pinch(rho.matrix, s_spec))
    return pinch(rho, s_spec)


def run_experiment(
    rho0: DensityState, sys: ControlSystem, script: ExperimentScript, tol: Tolerance = DEFAULT_TOL
) -> MeasurementRecord:
    """Run the evolve/measure alternation and record each expectation value.

    ``outputs`` use the traceless observable, so they do not depend on the state
    convention; ``raw_outputs`` add back the observable's removed trace constant
    and equal ``Tr(S rho)`` for a unit-trace state.
    """
    n = sys.dim_n
    if rho0.dim != n:
        raise ValueError(f"state dimension {rho0.dim} does not match system dimension {n}")
    if script.channel is not None and script.channel.dim != n:
        raise ValueError("channel dimension does not match the system")

    if script.observables is None:
        observables = [(sys.observable, sys.observable_shift)] * script.n_measurements
    else:
        observables = []
        for o in script.observables:
            if o.shape != (n, n):
                raise ValueError(f"observable shape {o.shape} does not match system dimension {n}")
            shift = float(np.trace(o).real / n)
            observables.append((traceless_shift(o), shift))
    spectra: dict[int, SpectralDecomposition] = {}

    rho = rho0.matrix
    outputs, raw, posts = [], [], []
    i_meas = 0
    for seg in script.segments:
        if seg.unitary is not None:
            if seg.unitary.shape != (n, n):
                raise ValueError("segment unitary does not match system dimension")
            x = seg.unitary
        else:
            x = propagator(sys, seg.duration, seg.controls)
        rho = x @ rho @ x.conj().T
        if not seg.measure:
            continue
        s, shift = observables[i_meas]
        y = float(np.real(np.trace(s @ rho)))
        outputs.append(y)
        raw.append(y + shift)
        if script.channel is not None:
            rho = script.channel.apply(rho)
        else:
            key = id(s)
            if key not in spectra:
                spectra[key] = spectral(s, tol)
            rho = pinch(rho, spectra[key])
        posts.append(rho0._replace(rho))
        i_meas += 1
    return MeasurementRecord(tuple(outputs), tuple(raw), tuple(posts), script.digest())


def pullback_observable(s, unitaries: Sequence, back_action) -> np.ndarray:
    """Heisenberg-picture observable ``X_1^* B(X_2^* B(... B(X_k^* S X_k) ...) X_2) X_1``.

    ``back_action`` is a :class:`SpectralDecomposition` (projective pinching, which
    is self-dual) or a :class:`KrausChannel` (its dual map is used). Then
    ``Tr(pullback rho_0)`` is the k-th output of the experiment measuring after
    each ``X_j``.
    """
    if isinstance(back_action, SpectralDecomposition):
        dual = lambda m: pinch(m, back_action)  # noqa: E731
    else:
        dual = back_action.dual
    xs = [np.asarray(u, dtype=complex) for u in unitaries]
    if not xs:
        raise ValueError("need at least one propagator")
    m = xs[-1].conj().T @ np.asarray(s, dtype=complex) @ xs[-1]
    for x in reversed(xs[:-1]):
        m = x.conj().T @ dual(m) @ x
    return m
