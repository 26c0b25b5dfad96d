"""Finite-dimensional quantum control system description."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import is_hermitian, is_skew_hermitian, traceless_shift

__all__ = ["ControlSystem"]


def _frozen(m) -> np.ndarray:
    m = np.array(m, dtype=complex)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """Hamiltonian ``H(u) = H_0 + sum_j u_j H_j`` with an observed Hermitian matrix ``S``.

    All matrices are shifted to zero trace on construction. The constant
    ``Tr(S)/n`` removed from the observable is kept in ``observable_shift`` so raw
    expectation values can be recovered as ``Tr(S_0 rho) + observable_shift``
    for unit-trace ``rho``.
    """

    hamiltonians: tuple[np.ndarray, ...]
    observable: np.ndarray
    drift: np.ndarray | None = None
    label: str = ""
    observable_shift: float = field(default=0.0, init=False)

    def __post_init__(self):
        obs = np.asarray(self.observable, dtype=complex)
        if obs.ndim != 2 or obs.shape[0] != obs.shape[1]:
            raise ValueError(f"observable must be square, got shape {obs.shape}")
        n = obs.shape[0]
        if n < 2:
            raise ValueError("system dimension must be at least 2")
        if not is_hermitian(obs, 1e-10 * max(1.0, np.abs(obs).max())):
            raise ValueError("observable must be Hermitian")
        shift = float(np.trace(obs).real / n)
        object.__setattr__(self, "observable_shift", shift)
        object.__setattr__(self, "observable", _frozen(traceless_shift(0.5 * (obs + obs.conj().T))))

        hams = []
        for j, h in enumerate(self.hamiltonians):
            h = np.asarray(h, dtype=complex)
            if h.shape != (n, n):
                raise ValueError(f"hamiltonians[{j}] has shape {h.shape}, expected {(n, n)}")
            if not is_hermitian(h, 1e-10 * max(1.0, np.abs(h).max())):
                raise ValueError(f"hamiltonians[{j}] must be Hermitian")
            hams.append(_frozen(traceless_shift(h)))
        object.__setattr__(self, "hamiltonians", tuple(hams))

        if self.drift is not None:
            d = np.asarray(self.drift, dtype=complex)
            if d.shape != (n, n):
                raise ValueError(f"drift has shape {d.shape}, expected {(n, n)}")
            if not is_hermitian(d, 1e-10 * max(1.0, np.abs(d).max())):
                raise ValueError("drift must be Hermitian")
            object.__setattr__(self, "drift", _frozen(traceless_shift(d)))
        if not self.hamiltonians and self.drift is None:
            raise ValueError("a control system needs at least one Hamiltonian")

    @classmethod
    def from_generators(cls, generators: Sequence, observable, label: str = "") -> "ControlSystem":
        """Build from skew-Hermitian generators ``B_j = i H_j`` of the dynamical algebra."""
        hams = []
        for j, b in enumerate(generators):
            b = np.asarray(b, dtype=complex)
            if not is_skew_hermitian(b, 1e-10 * max(1.0, np.abs(b).max())):
                raise ValueError(f"generators[{j}] must be skew-Hermitian")
            hams.append(-1j * b)
        return cls(tuple(hams), observable, label=label)

    @property
    def dim_n(self) -> int:
        return self.observable.shape[0]

    @property
    def n_controls(self) -> int:
        return len(self.hamiltonians)

    @property
    def generators(self) -> list[np.ndarray]:
        """Skew-Hermitian generators ``iH_0`` (if any drift) followed by ``iH_j``; zero matrices dropped."""
        hs = ([self.drift] if self.drift is not None else []) + list(self.hamiltonians)
        return [1j * h for h in hs if np.any(np.abs(h) > 0)]

    @property
    def i_observable(self) -> np.ndarray:
        return 1j * self.observable

    def hamiltonian(self, controls) -> np.ndarray:
        u = np.asarray(controls, dtype=float).ravel()
        if u.size != self.n_controls:
            raise ValueError(f"expected {self.n_controls} control values, got {u.size}")
        h = np.zeros((self.dim_n, self.dim_n), dtype=complex)
        if self.drift is not None:
            h = h + self.drift
        for uj, hj in zip(u, self.hamiltonians):
            h = h + uj * hj
        return h

    def reordered(self, order: Sequence[int]) -> "ControlSystem":
        """Same system with the control Hamiltonians permuted."""
        hams = tuple(self.hamiltonians[i] for i in order)
        out = ControlSystem(hams, self.observable, drift=self.drift, label=self.label)
        object.__setattr__(out, "observable_shift", self.observable_shift)
        return out
