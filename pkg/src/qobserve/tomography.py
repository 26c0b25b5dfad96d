"""Initial-state determination from sequences of projective measurements.

Single system: after an initial propagator ``X_1`` every further measurement
only sees the diagonal of ``X_1 rho_0 X_1^*`` (in the eigenbasis of ``S``).
That diagonal is recovered by measuring after permutation matrices, which
permute the diagonal of ``S``, plus the trace constraint.

Coupled system: an unknown ``rho_1`` is joined to a known ancilla state and
the diagonal of ``X (rho_1 (x) rho_2) X^*`` is read out for a few probes
``X``; the diagonals are linear in ``rho_1``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import DEFAULT_TOL, Tolerance, is_unitary, to_pairs
from .measurement import DensityState, ExperimentScript, run_experiment
from .system import ControlSystem

__all__ = [
    "PermutationDesign",
    "ReconstructionResult",
    "AncillaResult",
    "RankDeficientError",
    "design_permutation_experiment",
    "verify_rank_lemma",
    "permutation_matrix",
    "cycle_notation",
    "permutation_script",
    "run_permutation_tomography",
    "solve_diagonal",
    "hermitian_basis",
    "default_probes",
    "complete_unitary",
    "sensitivity_matrix",
    "ancilla_tomography",
]

_LEX_SCAN_MAX_N = 8


class RankDeficientError(ValueError):
    """A linear reconstruction system does not determine all parameters.

    ``unobserved`` holds unit vectors spanning the undetermined parameter
    directions (for ancilla tomography: Hermitian traceless matrices).
    """

    def __init__(self, message: str, unobserved=()):
        super().__init__(message)
        self.unobserved = list(unobserved)


def permutation_matrix(perm: Sequence[int]) -> np.ndarray:
    """Matrix ``P`` with ``(P^T D P)_{ii} = D_{perm[i], perm[i]}`` for diagonal ``D``.

    Column ``i`` of ``P`` is ``e_{perm[i]}``.
    """
    n = len(perm)
    p = np.zeros((n, n), dtype=complex)
    p[list(perm), list(range(n))] = 1.0
    return p


def cycle_notation(perm: Sequence[int]) -> str:
    """One-line cycle notation with 1-based labels, ``()`` for the identity."""
    seen = set()
    cycles = []
    for start in range(len(perm)):
        if start in seen or perm[start] == start:
            seen.add(start)
            continue
        cyc = []
        i = start
        while i not in seen:
            seen.add(i)
            cyc.append(i + 1)
            i = perm[i]
        cycles.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(cycles) or "()"


@dataclass(frozen=True, eq=False)
class PermutationDesign:
    """Permutations of the diagonal of ``S`` chosen so the stacked system has rank ``n``.

    ``design_matrix`` rows are the permuted diagonals in the order of
    ``chosen_permutations`` followed by the all-ones trace row.
    """

    base_observable: np.ndarray
    chosen_permutations: tuple[tuple[int, ...], ...]
    design_matrix: np.ndarray
    values: tuple[float, ...]
    multiplicities: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.base_observable.shape[0]

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self.design_matrix))

    def describe(self) -> list[str]:
        return [cycle_notation(p) for p in self.chosen_permutations]


@dataclass
class ReconstructionResult:
    diagonal: np.ndarray
    residual: float
    condition_estimate: float
    outputs: list[float] = field(default_factory=list)
    permutations: list[str] = field(default_factory=list)
    shift: float = 0.0

    def to_dict(self) -> dict:
        return {
            "diagonal": [float(x) for x in self.diagonal],
            "diagonal_trace_one": [float(x) + self.shift for x in self.diagonal],
            "residual": self.residual,
            "condition_estimate": self.condition_estimate,
            "outputs": [float(y) for y in self.outputs],
            "permutations": list(self.permutations),
        }


def _candidates(n: int):
    if n <= _LEX_SCAN_MAX_N:
        yield from itertools.permutations(range(n))
        return
    # beyond the lexicographic cap the transpositions alone always span the trace-zero directions
    yield tuple(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            p = list(range(n))
            p[i], p[j] = j, i
            yield tuple(p)


def design_permutation_experiment(s, tol: Tolerance = DEFAULT_TOL) -> PermutationDesign:
    """Greedy choice of permutations that, with the trace row, give a rank-``n`` system.

    Permutations are scanned in lexicographic order (transpositions only for
    ``n > 8``); one is kept when its permuted diagonal raises the rank. The
    identity always comes first. ``n - 1`` rows are kept in total.
    """
    s = np.asarray(s, dtype=complex)
    n = s.shape[0]
    if s.ndim != 2 or s.shape != (n, n) or n < 2:
        raise ValueError("observable must be a square matrix of size >= 2")
    scale = max(1.0, float(np.abs(s).max()))
    if np.abs(s - np.diag(np.diag(s))).max() > tol.rank_tol * scale:
        raise ValueError("permutation tomography needs an observable diagonal in the working basis")
    d = np.diag(s).real.copy()
    if abs(d.sum()) > tol.rank_tol * scale * n:
        raise ValueError("observable must be traceless")
    if np.ptp(d) <= tol.eig_tol * scale:
        raise ValueError("observable is scalar: its measurements carry no information on the state")

    ones = np.ones(n) / math.sqrt(n)
    basis = [ones]
    rows, perms = [], []
    seen = set()
    for perm in _candidates(n):
        row = d[list(perm)]
        key = tuple(np.round(row / scale, 12))
        if key in seen:
            continue
        seen.add(key)
        r = row.copy()
        for _ in range(2):
            for q in basis:
                r = r - (q @ r) * q
        rn = np.linalg.norm(r)
        if rn > tol.rank_tol * np.linalg.norm(row):
            basis.append(r / rn)
            rows.append(row)
            perms.append(tuple(int(i) for i in perm))
            if len(basis) == n:
                break
    if len(basis) != n:
        raise RuntimeError("no full-rank permutation design found")

    values, counts = np.unique(np.round(d, 12), return_counts=True)
    design = np.vstack(rows + [np.ones(n)])
    return PermutationDesign(s.copy(), tuple(perms), design, tuple(values.tolist()), tuple(counts.tolist()))


def verify_rank_lemma(values: Sequence[float], tol: float = 1e-10) -> tuple[int, bool]:
    """Rank of the ``n! x n`` matrix whose rows are all permutations of ``values``."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least two values")
    if n > 7:
        raise ValueError("n! enumeration is capped at n = 7; use design_permutation_experiment instead")
    a = np.array([x[list(p)] for p in itertools.permutations(range(n))])
    sv = np.linalg.svd(a, compute_uv=False)
    rank = int(np.sum(sv > tol * max(sv[0], 1e-300))) if sv[0] > 0 else 0
    return rank, rank == n


def permutation_script(x1, design: PermutationDesign) -> ExperimentScript:
    """``X_1`` then ``Xbar_2``, ``Xbar_3 Xbar_2^*``, ... with a measurement after each.

    ``Xbar_j`` is the permutation matrix of the j-th chosen permutation, so the
    j-th measurement sees ``Xbar_j^* S Xbar_j``.
    """
    unitaries = [np.asarray(x1, dtype=complex)]
    prev = permutation_matrix(design.chosen_permutations[0])
    unitaries[0] = prev @ unitaries[0]
    for perm in design.chosen_permutations[1:]:
        cur = permutation_matrix(perm)
        unitaries.append(cur @ prev.conj().T)
        prev = cur
    return ExperimentScript.from_unitaries(unitaries)


def solve_diagonal(design: PermutationDesign, outputs: Sequence[float], trace: float = 0.0):
    """Least-squares solution of ``design_matrix x = [outputs, trace]``."""
    y = np.append(np.asarray(outputs, dtype=float), trace)
    a = design.design_matrix
    if a.shape[0] != y.size:
        raise ValueError(f"{y.size - 1} outputs for a design with {a.shape[0] - 1} measurements")
    sol, *_ = np.linalg.lstsq(a, y, rcond=None)
    if np.linalg.matrix_rank(a) < design.n:
        raise RankDeficientError("singular permutation design")
    residual = float(np.linalg.norm(a @ sol - y))
    return sol, residual, float(np.linalg.cond(a))


def run_permutation_tomography(
    rho0_true: DensityState,
    x1,
    sys: ControlSystem,
    design: PermutationDesign | None = None,
    noise_std: float = 0.0,
    seed=None,
    tol: Tolerance = DEFAULT_TOL,
) -> ReconstructionResult:
    """Simulate the permutation experiment on ``rho0_true`` and rebuild ``diag(X_1 rho_0 X_1^*)``.

    The state is shifted to zero trace first, so the returned diagonal sums to
    zero; add ``result.shift`` to each entry for the unit-trace values. An
    optional seeded Gaussian perturbation of standard deviation ``noise_std`` is
    added to the simulated outputs.
    """
    x1 = np.asarray(x1, dtype=complex)
    if not is_unitary(x1, 1e-9):
        raise ValueError("X1 must be unitary")
    if design is None:
        design = design_permutation_experiment(sys.observable, tol)
    if design.n != sys.dim_n or np.abs(design.base_observable - sys.observable).max() > tol.rank_tol * 10:
        raise ValueError("design was built for a different observable")
    state = rho0_true.shifted()
    record = run_experiment(state, sys, permutation_script(x1, design), tol)
    outputs = np.array(record.outputs)
    if noise_std > 0:
        outputs = outputs + np.random.default_rng(seed).normal(0.0, noise_std, outputs.size)
    diag, residual, cond = solve_diagonal(design, outputs, 0.0)
    return ReconstructionResult(diag, residual, cond, outputs.tolist(), design.describe(), state.shift_record)


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of traceless Hermitian ``n x n`` matrices (Gell-Mann order)."""
    from .linalg import gell_mann_basis

    return [-1j * g for g in gell_mann_basis(n)]


def complete_unitary(columns: Sequence, dim: int) -> np.ndarray:
    """Unitary whose leading columns are the given orthonormal vectors."""
    cols = np.array([np.asarray(c, dtype=complex).ravel() for c in columns]).T
    k = cols.shape[1]
    if np.abs(cols.conj().T @ cols - np.eye(k)).max() > 1e-10:
        raise ValueError("probe columns are not orthonormal")
    rest = np.eye(dim, dtype=complex)
    q, _ = np.linalg.qr(np.hstack([cols, rest]))
    # QR may flip phases of the leading columns; restore them exactly
    q[:, :k] = cols
    return q


def default_probes(n: int, m: int) -> list[np.ndarray]:
    """Probe unitaries ``X_1`` for an ``n``-level system coupled to an ``m``-level ancilla.

    For every unknown parameter a test vector is formed: ``e_j`` for the first
    ``n - 1`` diagonal entries, ``(e_j + e_k)/sqrt 2`` and ``(e_j - i e_k)/sqrt 2``
    for the real and imaginary part of entry ``(j, k)``. Each test vector is
    tensored with a distinct ancilla basis vector and the results become the
    leading columns of ``X_1^*``; ``m`` columns fit in one probe.
    """
    vectors = []
    eye = np.eye(n, dtype=complex)
    for j in range(n - 1):
        vectors.append(eye[j])
    for j in range(n):
        for k in range(j + 1, n):
            vectors.append((eye[j] + eye[k]) / math.sqrt(2))
            vectors.append((eye[j] - 1j * eye[k]) / math.sqrt(2))
    anc = np.eye(m, dtype=complex)
    probes = []
    for start in range(0, len(vectors), m):
        chunk = vectors[start : start + m]
        cols = [np.kron(v, anc[slot]) for slot, v in enumerate(chunk)]
        probes.append(complete_unitary(cols, n * m).conj().T)
    return probes


def _joint_diagonal(x, rho1, rho2) -> np.ndarray:
    joint = np.kron(rho1, rho2)
    return np.real(np.einsum("ij,jk,ik->i", x, joint, x.conj()))


def sensitivity_matrix(probes: Sequence, rho2, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Affine map from ``rho_1`` parameters to the stacked probe diagonals.

    With ``rho_1 = I/n + sum_a theta_a G_a`` (``G_a`` from :func:`hermitian_basis`)
    the diagonals are ``offset + M theta``. Returns ``(M, offset)``.
    """
    rho2 = np.asarray(rho2, dtype=complex)
    basis = hermitian_basis(n)
    cols = []
    offset = []
    for x in probes:
        offset.append(_joint_diagonal(x, np.eye(n) / n, rho2))
        cols.append(np.array([_joint_diagonal(x, g, rho2) for g in basis]).T)
    return np.vstack(cols), np.concatenate(offset)


@dataclass
class AncillaResult:
    rho1: np.ndarray
    parameters: np.ndarray
    diagonals: list[np.ndarray]
    residual: float
    condition_estimate: float

    def to_dict(self) -> dict:
        return {
            "rho1": to_pairs(self.rho1),
            "parameters": [float(t) for t in self.parameters],
            "diagonals": [[float(v) for v in d] for d in self.diagonals],
            "residual": self.residual,
            "condition_estimate": self.condition_estimate,
        }


def ancilla_tomography(
    rho1_unknown: DensityState,
    rho2_known: DensityState,
    s_joint,
    probes: Sequence | None = None,
    noise_std: float = 0.0,
    seed=None,
    tol: Tolerance = DEFAULT_TOL,
) -> AncillaResult:
    """Reconstruct an unknown state by coupling it to a known ancilla.

    For each probe the full permutation experiment is simulated on
    ``rho_1 (x) rho_2`` and the joint diagonal is recovered; the stacked
    diagonals are then inverted for ``rho_1``.

    Raises:
        RankDeficientError: when the probes leave some directions of ``rho_1``
            unobserved; ``err.unobserved`` lists them as Hermitian matrices.
    """
    rho1 = rho1_unknown.unshifted().matrix
    rho2 = rho2_known.unshifted().matrix
    n, m = rho1.shape[0], rho2.shape[0]
    if probes is None:
        probes = default_probes(n, m)
    probes = [np.asarray(x, dtype=complex) for x in probes]
    s_joint = np.asarray(s_joint, dtype=complex)
    if s_joint.shape != (n * m, n * m):
        raise ValueError(f"joint observable must be {n * m}x{n * m}")

    sens, offset = sensitivity_matrix(probes, rho2, n)
    u, sv, vh = np.linalg.svd(sens)
    cutoff = tol.rank_tol * max(sv[0], 1.0) * 10 if sv.size else 0.0
    rank = int(np.sum(sv > cutoff))
    if rank < n * n - 1:
        basis = hermitian_basis(n)
        dirs = [sum(c * g for c, g in zip(row, basis)) for row in vh[rank:]]
        raise RankDeficientError(
            f"probes observe only {rank} of {n * n - 1} state parameters", dirs
        )

    # the joint observable's trace constant plays no role; the system only supplies S
    joint_sys = ControlSystem((np.zeros((n * m, n * m)),), s_joint)
    design = design_permutation_experiment(joint_sys.observable, tol)
    joint_state = DensityState(np.kron(rho1, rho2))
    diagonals = []
    for x in probes:
        res = run_permutation_tomography(joint_state, x, joint_sys, design, noise_std, seed, tol)
        diagonals.append(res.diagonal + res.shift)
    stacked = np.concatenate(diagonals)
    theta, *_ = np.linalg.lstsq(sens, stacked - offset, rcond=None)
    residual = float(np.linalg.norm(sens @ theta + offset - stacked))
    est = np.eye(n, dtype=complex) / n + sum(t * g for t, g in zip(theta, hermitian_basis(n)))
    return AncillaResult(est, theta, diagonals, residual, float(sv[0] / sv[rank - 1]))
