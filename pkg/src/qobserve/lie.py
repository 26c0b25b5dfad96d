"""Bracket closure and subspace stabilisation.

All spans are real spans inside su(n). The closures are computed by a depth
iteration: the elements added at depth ``d`` are bracketed with every element of
the acting set to produce the candidates of depth ``d + 1``, which are fed to a
Gram-Schmidt accumulator in a fixed order. Iteration stops when a depth adds
nothing or the span is all of su(n).
"""

from __future__ import annotations

import logging
from typing import Protocol, Sequence

import numpy as np

from .linalg import (
    DEFAULT_TOL,
    OperatorSubspace,
    Tolerance,
    _SpanBuilder,
    _check_skew,
    gell_mann_basis,
    numerical_rank,
    pinch,
    spectral,
    traceless_shift,
)
from .system import ControlSystem

__all__ = [
    "ClosureError",
    "dynamical_algebra",
    "stabilize",
    "observability_space",
    "generalized_observability_space",
    "observability_sequence",
    "commutator_dimension",
    "bracket_span_dim",
    "commutator_dimension_bruteforce",
    "su",
]

log = logging.getLogger(__name__)


class ClosureError(RuntimeError):
    """A closure failed to saturate within ``n**2 - 1`` depths (floating-point pathology)."""


class DualMap(Protocol):
    def dual(self, s: np.ndarray) -> np.ndarray: ...


def su(n: int) -> OperatorSubspace:
    """The whole of su(n), in the Gell-Mann basis."""
    return OperatorSubspace(n, tuple(gell_mann_basis(n)), (0,) * (n * n - 1))


def _acting_set(algebra) -> list[np.ndarray]:
    if isinstance(algebra, OperatorSubspace):
        return list(algebra.basis)
    return [np.asarray(b, dtype=complex) for b in algebra]


def _close(builder: _SpanBuilder, frontier: list[int], acting: list[np.ndarray], include_frontier=False):
    """Depth iteration on ``builder``; ``frontier`` are indices of the depth-0 elements."""
    n = builder.n
    max_sweeps = n * n - 1
    norms = [np.linalg.norm(b) for b in acting]
    sweeps = 0
    while frontier and not builder.full:
        if sweeps >= max_sweeps:
            raise ClosureError(
                f"closure did not saturate after {max_sweeps} sweeps (dim {builder.dim}, n={n})"
            )
        sweeps += 1
        new = []
        for idx in frontier:
            f = builder.mats[idx]
            depth = builder.depths[idx] + 1
            for b, b_norm in zip(acting, norms):
                if builder.add(b @ f - f @ b, depth, 2.0 * b_norm * np.linalg.norm(f)):
                    new.append(builder.dim - 1)
                if builder.full:
                    break
            if builder.full:
                break
        frontier = new
    return builder


def dynamical_algebra(sys: ControlSystem, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Lie algebra generated by ``iH_0, iH_1, ..., iH_m``.

    Every basis element is bracketed with every generator until nothing new
    appears; a span containing the generators and closed under ``ad`` of each
    generator is closed under the whole algebra (Jacobi identity).
    """
    gens = sys.generators
    if not gens:
        raise ValueError("system has no non-zero generators")
    builder = _SpanBuilder(sys.dim_n, tol)
    for g in gens:
        builder.add(g, 0)
    _close(builder, list(range(builder.dim)), gens)
    return builder.freeze()


def stabilize(seeds: Sequence, algebra, tol: Tolerance = DEFAULT_TOL) -> OperatorSubspace:
    """Smallest subspace containing ``seeds`` and stable under bracketing with ``algebra``.

    Args:
        seeds: skew-Hermitian matrices. Any identity component is dropped, since
            only the traceless part lives in su(n).
        algebra: an :class:`OperatorSubspace` (its basis acts) or any sequence of
            skew-Hermitian matrices, e.g. just the generators of the algebra.
        tol: numerical tolerances.

    Raises:
        ValueError: if every seed is zero (after removing the trace part).
    """
    seeds = [traceless_shift(_check_skew(s, tol, "seed")) for s in seeds]
    if not seeds:
        raise ValueError("stabilize needs at least one seed")
    n = seeds[0].shape[0]
    builder = _SpanBuilder(n, tol)
    for s in seeds:
        if s.shape != (n, n):
            raise ValueError("seeds have inconsistent dimensions")
        builder.add(s, 0)
    if builder.dim == 0:
        raise ValueError("all seeds are zero")
    acting = _acting_set(algebra)
    _close(builder, list(range(builder.dim)), acting)
    return builder.freeze()


def _zero_check(sys: ControlSystem):
    if not np.any(np.abs(sys.observable) > 0):
        raise ValueError("the observable is zero (after removing its trace)")


def observability_space(
    sys: ControlSystem, tol: Tolerance = DEFAULT_TOL, algebra: OperatorSubspace | None = None
) -> OperatorSubspace:
    """Smallest L-stable subspace containing ``iS``.

    The depth of the last basis element (``result.depth``) is the saturation
    depth: the number of nested brackets after which nothing new appears.
    """
    _zero_check(sys)
    if algebra is None:
        algebra = dynamical_algebra(sys, tol)
    return stabilize([sys.i_observable], algebra, tol)


def _back_action_images(space: OperatorSubspace, sys: ControlSystem, channel, tol: Tolerance):
    if channel is None:
        dec = spectral(sys.observable, tol)
        return [pinch(f, dec) for f in space.basis]
    return [channel.dual(f) for f in space.basis]


def observability_sequence(
    sys: ControlSystem,
    max_k: int,
    channel: DualMap | None = None,
    tol: Tolerance = DEFAULT_TOL,
    algebra: OperatorSubspace | None = None,
) -> list[OperatorSubspace]:
    """``[V_0, V_1, ..., V_K]`` stopping at a fixpoint, at su(n), or at ``max_k``.

    ``V_0 = span{iS}``, ``V_1`` is the observability space and
    ``V_k = stab_L(P(V_{k-1}))`` with ``P`` the measurement pinching of ``S``, or
    ``stab_L(F*(V_{k-1}))`` when a Kraus ``channel`` supplies the dual map.
    The list ends with the first ``V_K`` equal (as a span) to ``V_{K-1}`` or
    equal to su(n).
    """
    _zero_check(sys)
    if max_k < 0:
        raise ValueError("max_k must be non-negative")
    if algebra is None:
        algebra = dynamical_algebra(sys, tol)
    n = sys.dim_n
    v0 = stabilize([sys.i_observable], [], tol)
    seq = [v0]
    if max_k == 0:
        return seq
    seq.append(stabilize([sys.i_observable], algebra, tol))
    while len(seq) <= max_k:
        prev = seq[-1]
        if prev.is_full or (len(seq) >= 3 and prev.same_span(seq[-2], tol)):
            break
        # a non-unital dual map can leave an identity component; it never affects traceless states
        images = [traceless_shift(m) for m in _back_action_images(prev, sys, channel, tol)]
        images = [m for m in images if np.linalg.norm(m) > tol.rank_tol]
        if not images:
            nxt = OperatorSubspace(n)
        else:
            nxt = stabilize(images, algebra, tol)
        seq.append(nxt)
        if len(seq) > n * n + 1 and channel is None:
            raise ClosureError("observability spaces failed to saturate")
    return seq


def generalized_observability_space(
    sys: ControlSystem,
    k: int,
    channel: DualMap | None = None,
    tol: Tolerance = DEFAULT_TOL,
    algebra: OperatorSubspace | None = None,
) -> OperatorSubspace:
    """Observability space of order ``k`` (``k = 0`` gives ``span{iS}``).

    Past a fixpoint the recursion is constant, so the last computed space is
    returned for larger ``k``.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    seq = observability_sequence(sys, k, channel, tol, algebra)
    return seq[min(k, len(seq) - 1)]


def commutator_dimension(s, tol: Tolerance = DEFAULT_TOL) -> int:
    """``dim [iS, su(n)] = 2 * sum_{j<k} n_j n_k`` from the eigenvalue multiplicities of ``S``."""
    s = np.asarray(s, dtype=complex)
    if not np.any(np.abs(s) > 0):
        raise ValueError("commutator dimension of the zero matrix is undefined here")
    mults = spectral(s, tol).multiplicities
    total = 0
    for j in range(len(mults)):
        for k in range(j + 1, len(mults)):
            total += mults[j] * mults[k]
    return 2 * total


def bracket_span_dim(x, matrices: Sequence, tol: Tolerance = DEFAULT_TOL) -> int:
    """Dimension of ``span{[x, E] : E in matrices}``."""
    x = np.asarray(x, dtype=complex)
    return numerical_rank([x @ e - e @ x for e in matrices], tol.rank_tol)


def commutator_dimension_bruteforce(s, tol: Tolerance = DEFAULT_TOL) -> int:
    """``dim [iS, su(n)]`` by brackets against the Gell-Mann basis."""
    s = np.asarray(s, dtype=complex)
    if not np.any(np.abs(s) > 0):
        raise ValueError("commutator dimension of the zero matrix is undefined here")
    return bracket_span_dim(1j * s, gell_mann_basis(s.shape[0]), tol)
