"""Observability verdicts, indistinguishability tests and state decomposition."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .linalg import DEFAULT_TOL, OperatorSubspace, Tolerance, _SpanBuilder, expm, to_pairs
from .lie import (
    bracket_span_dim,
    commutator_dimension,
    commutator_dimension_bruteforce,
    dynamical_algebra,
    generalized_observability_space,
    observability_sequence,
)
from .system import ControlSystem

__all__ = [
    "ObservabilityReport",
    "StateDecomposition",
    "analyze",
    "indistinguishable",
    "separation",
    "first_order_condition",
    "decompose_state",
    "sample_propagators",
    "orbit_sample",
]


@dataclass
class ObservabilityReport:
    n: int
    label: str
    dim_L: int
    dims_Vk: list[int]
    saturation_k: int
    saturated: bool
    controllable: bool
    observable_one_step: bool
    observable_k: dict[int, bool]
    observable_overall: bool
    first_order_condition: bool
    first_order_dims: tuple[int, int]
    commutator_dim_formula: int
    observable_shift: float
    saturation_depth: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["observable_k"] = {str(k): v for k, v in self.observable_k.items()}
        d["first_order_dims"] = list(self.first_order_dims)
        return d


@dataclass
class StateDecomposition:
    rho_par: np.ndarray
    rho_perp: np.ndarray
    k_used: int | None = None


def first_order_condition(
    sys: ControlSystem, tol: Tolerance = DEFAULT_TOL, algebra: OperatorSubspace | None = None
) -> tuple[bool, tuple[int, int]]:
    """Compare ``dim [L, iS]`` with ``dim [su(n), iS]``.

    Equality is sufficient for one-step observability, not necessary: a ``False``
    flag says nothing about observability on its own.
    """
    if not np.any(np.abs(sys.observable) > 0):
        raise ValueError("the observable is zero (after removing its trace)")
    if algebra is None:
        algebra = dynamical_algebra(sys, tol)
    d_l = bracket_span_dim(sys.i_observable, algebra.basis, tol)
    d_su = commutator_dimension_bruteforce(sys.observable, tol)
    return d_l == d_su, (d_l, d_su)


def analyze(
    sys: ControlSystem, max_k: int | None = None, tol: Tolerance = DEFAULT_TOL, channel=None
) -> ObservabilityReport:
    """Compute ``L`` and ``V_1, V_2, ...`` up to saturation (or ``max_k``) and all verdicts.

    The overall verdict uses the sum of all computed ``V_k``; for projective
    measurements this is the last one since the spaces are nested.
    """
    n = sys.dim_n
    if max_k is None:
        max_k = n * n
    if max_k < 1:
        raise ValueError("max_k must be at least 1")
    algebra = dynamical_algebra(sys, tol)
    seq = observability_sequence(sys, max_k, channel, tol, algebra)
    spaces = seq[1:]
    dims = [v.dim for v in spaces]
    full = n * n - 1

    last = spaces[-1]
    if last.is_full:
        saturated, saturation_k = True, len(spaces)
    elif len(spaces) >= 2 and last.same_span(spaces[-2], tol):
        saturated, saturation_k = True, len(spaces) - 1
    else:
        saturated, saturation_k = False, len(spaces)

    observable_k = {k + 1: d == full for k, d in enumerate(dims)}
    # sum of all observability spaces (equals the last one for nested spaces)
    union = _SpanBuilder(n, tol)
    for v in spaces:
        for f in v.basis:
            union.add(f)

    flag, dims4 = first_order_condition(sys, tol, algebra)
    return ObservabilityReport(
        n=n,
        label=sys.label,
        dim_L=algebra.dim,
        dims_Vk=dims,
        saturation_k=saturation_k,
        saturated=saturated,
        controllable=algebra.dim == full,
        observable_one_step=dims[0] == full,
        observable_k=observable_k,
        observable_overall=union.full,
        first_order_condition=flag,
        first_order_dims=dims4,
        commutator_dim_formula=commutator_dimension(sys.observable, tol),
        observable_shift=sys.observable_shift,
        saturation_depth=spaces[0].depth,
    )


def _state_matrix(rho) -> np.ndarray:
    return np.asarray(getattr(rho, "matrix", rho), dtype=complex)


def separation(sys: ControlSystem, rho1, rho2, k: int = 1, tol: Tolerance = DEFAULT_TOL, channel=None) -> float:
    """Largest ``|Tr(F (rho1 - rho2))|`` over the orthonormal basis ``F`` of ``V_k``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    a, b = _state_matrix(rho1), _state_matrix(rho2)
    n = sys.dim_n
    if a.shape != (n, n) or b.shape != (n, n):
        raise ValueError("state dimensions do not match the system")
    vk = generalized_observability_space(sys, k, channel, tol)
    diff = a - b
    return float(max((abs(np.trace(f @ diff)) for f in vk.basis), default=0.0))


def indistinguishable(
    sys: ControlSystem, rho1, rho2, k: int = 1, tol: Tolerance = DEFAULT_TOL, channel=None
) -> bool:
    """True iff ``rho1 - rho2`` is orthogonal to ``V_k`` (no k-measurement experiment separates them)."""
    a, b = _state_matrix(rho1), _state_matrix(rho2)
    scale = max(1.0, float(np.linalg.norm(a)), float(np.linalg.norm(b)))
    return bool(separation(sys, a, b, k, tol, channel) < tol.rank_tol * scale)


def decompose_state(rho, vk: OperatorSubspace, tol: Tolerance = DEFAULT_TOL, k_used: int | None = None):
    """Split ``rho`` into the part with ``i rho_par`` in ``V_k`` and the rest."""
    m = _state_matrix(rho)
    if m.shape != (vk.dim_n, vk.dim_n):
        raise ValueError("state and subspace dimensions differ")
    par = -1j * vk.project(1j * m)
    par = 0.5 * (par + par.conj().T)
    return StateDecomposition(par, m - par, k_used)


def sample_propagators(sys: ControlSystem, count: int, seed=None, max_length: int = 8) -> list[np.ndarray]:
    """Random elements ``exp(t_1 B_{j_1}) ... exp(t_r B_{j_r})`` of the reachable group.

    Word length ``r`` is uniform on ``0..max_length``, letters are uniform over
    the generators, and times are uniform on ``[-pi, pi]``.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    gens = sys.generators
    out = []
    for _ in range(count):
        x = np.eye(sys.dim_n, dtype=complex)
        for _ in range(int(rng.integers(0, max_length + 1))):
            b = gens[int(rng.integers(len(gens)))]
            x = expm(rng.uniform(-np.pi, np.pi) * b) @ x
        out.append(x)
    return out


def orbit_sample(sys: ControlSystem, rho0, count: int, seed=None, max_length: int = 8) -> list[np.ndarray]:
    """Random points ``X rho0 X^*`` of the orbit of ``rho0`` (test evidence only, never a verdict)."""
    m = _state_matrix(rho0)
    return [x @ m @ x.conj().T for x in sample_propagators(sys, count, seed, max_length)]


def decomposition_to_dict(d: StateDecomposition) -> dict:
    return {"k_used": d.k_used, "rho_par": to_pairs(d.rho_par), "rho_perp": to_pairs(d.rho_perp)}
