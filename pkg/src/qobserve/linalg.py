"""Dense complex matrix helpers shared by every other module.

Skew-Hermitian matrices are handled as elements of a *real* vector space:
``vec`` flattens a matrix into ``[Re(M).ravel(), Im(M).ravel()]`` so that the
Euclidean dot product of two such vectors equals ``Re Tr(A B^*)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "SpectralDecomposition",
    "OperatorSubspace",
    "commutator",
    "hs_inner",
    "traceless_shift",
    "expm",
    "spectral",
    "pinch",
    "orthonormal_extend",
    "gell_mann_basis",
    "numerical_rank",
    "is_hermitian",
    "is_skew_hermitian",
    "is_unitary",
    "is_traceless",
    "pauli",
    "kron",
    "vec",
    "unvec",
    "to_pairs",
    "from_pairs",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds.

    ``rank_tol`` is relative: a candidate's residual is compared with its norm,
    or with the norm of the inputs it was computed from when that is larger.
    The other two are absolute.
    """

    rank_tol: float = 1e-10
    eig_tol: float = 1e-9
    sim_tol: float = 1e-12

    def __post_init__(self):
        for name in ("rank_tol", "eig_tol", "sim_tol"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")


DEFAULT_TOL = Tolerance()


def _square(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def _same_shape(a, b):
    a = _square(a, "A")
    b = _square(b, "B")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def is_hermitian(a, tol: float = 1e-10) -> bool:
    a = _square(a)
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_skew_hermitian(a, tol: float = 1e-10) -> bool:
    a = _square(a)
    return bool(np.max(np.abs(a + a.conj().T), initial=0.0) <= tol)


def is_unitary(a, tol: float = 1e-10) -> bool:
    a = _square(a)
    return bool(np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))) <= tol)


def is_traceless(a, tol: float = 1e-10) -> bool:
    return bool(abs(np.trace(_square(a))) <= tol)


def commutator(a, b) -> np.ndarray:
    """Return ``AB - BA``."""
    a, b = _same_shape(a, b)
    return a @ b - b @ a


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr(A B^*)``."""
    a, b = _same_shape(a, b)
    return complex(np.vdot(b, a))


def traceless_shift(m) -> np.ndarray:
    m = _square(m)
    n = m.shape[0]
    return m - (np.trace(m) / n) * np.eye(n)


# Pade(13) coefficients and the matching 1-norm bound (Higham 2005).
_PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
_THETA13 = 5.371920351148152


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a degree-13 Pade approximant.

    The input is scaled by ``2**-s`` so that its 1-norm is at most ``theta_13``,
    the rational approximant is evaluated, and the result is squared ``s`` times.
    """
    a = _square(a)
    n = a.shape[0]
    norm1 = float(np.max(np.sum(np.abs(a), axis=0), initial=0.0))
    s = 0
    if norm1 > _THETA13:
        s = int(math.ceil(math.log2(norm1 / _THETA13)))
    a = a / (2.0**s)
    b = _PADE13
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a2 @ a4
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Distinct eigenvalues of a Hermitian matrix with their eigenspace projectors."""

    eigenvalues: tuple[float, ...]
    projectors: tuple[np.ndarray, ...]
    multiplicities: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(sum(self.multiplicities))

    def reconstruct(self) -> np.ndarray:
        return sum(lam * p for lam, p in zip(self.eigenvalues, self.projectors))


def spectral(s, tol: Tolerance = DEFAULT_TOL) -> SpectralDecomposition:
    """Eigen-decompose a Hermitian matrix, merging eigenvalues closer than ``tol.eig_tol``.

    Eigenvalues come out sorted ascending. Each cluster gets the full eigenspace
    projector, so the result does not depend on the eigenvector basis chosen
    inside a degenerate eigenspace.
    """
    s = _square(s, "S")
    scale = max(1.0, float(np.max(np.abs(s), initial=0.0)))
    if not is_hermitian(s, tol.eig_tol * scale):
        raise ValueError("spectral decomposition requires a Hermitian matrix")
    s = 0.5 * (s + s.conj().T)
    values, vectors = np.linalg.eigh(s)
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[i - 1] > tol.eig_tol:
            clusters.append([i])
        else:
            clusters[-1].append(i)
    eigenvalues, projectors, mults = [], [], []
    for idx in clusters:
        v = vectors[:, idx]
        eigenvalues.append(float(np.mean(values[idx])))
        projectors.append(v @ v.conj().T)
        mults.append(len(idx))
    return SpectralDecomposition(tuple(eigenvalues), tuple(projectors), tuple(mults))


def pinch(m, decomposition: SpectralDecomposition) -> np.ndarray:
    """``sum_j Pi_j M Pi_j`` over the eigenspace projectors of an observable."""
    m = _square(m)
    if m.shape[0] != decomposition.dim:
        raise ValueError(f"dimension mismatch: {m.shape[0]} vs {decomposition.dim}")
    return sum(p @ m @ p for p in decomposition.projectors)


def vec(m) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return np.concatenate([m.real.ravel(), m.imag.ravel()])


def unvec(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return (v[: n * n] + 1j * v[n * n :]).reshape(n, n)


def numerical_rank(matrices: Iterable, rel_tol: float = 1e-10) -> int:
    """Rank of the real span of a collection of matrices (SVD, relative cutoff)."""
    rows = [vec(m) for m in matrices]
    if not rows:
        return 0
    sv = np.linalg.svd(np.array(rows), compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > rel_tol * sv[0]))


@dataclass(frozen=True, eq=False)
class OperatorSubspace:
    """Real span of an orthonormal list of skew-Hermitian traceless matrices.

    ``depth_tags[i]`` is the number of brackets that produced ``basis[i]`` from
    the seeds (0 for seeds and, for a Lie algebra, for the generators).
    """

    dim_n: int
    basis: tuple[np.ndarray, ...] = ()
    depth_tags: tuple[int, ...] | None = None
    _coords: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._coords is None:
            coords = np.array([vec(b) for b in self.basis]).reshape(len(self.basis), 2 * self.dim_n**2)
            object.__setattr__(self, "_coords", coords)
        self._coords.setflags(write=False)

    def __len__(self):
        return len(self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def ambient_dim(self) -> int:
        return self.dim_n**2 - 1

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    @property
    def depth(self) -> int:
        return max(self.depth_tags) if self.depth_tags else 0

    @property
    def coords(self) -> np.ndarray:
        """Basis as rows of real coordinates (see :func:`vec`)."""
        return self._coords

    def coefficients(self, m) -> np.ndarray:
        """Real coordinates ``<M, F_a>`` of ``M`` against the basis."""
        return self._coords @ vec(m)

    def project(self, m) -> np.ndarray:
        """Orthogonal projection onto the span (real-linear)."""
        m = np.asarray(m, dtype=complex)
        if not self.basis:
            return np.zeros_like(m)
        return unvec(self._coords.T @ (self._coords @ vec(m)), self.dim_n)

    def residual(self, m) -> float:
        m = np.asarray(m, dtype=complex)
        return float(np.linalg.norm(m - self.project(m)))

    def contains(self, m, tol: Tolerance = DEFAULT_TOL) -> bool:
        m = np.asarray(m, dtype=complex)
        norm = float(np.linalg.norm(m))
        return norm == 0.0 or self.residual(m) <= tol.rank_tol * max(norm, 1.0)

    def contains_subspace(self, other: "OperatorSubspace", tol: Tolerance = DEFAULT_TOL) -> bool:
        return all(self.contains(b, tol) for b in other.basis)

    def same_span(self, other: "OperatorSubspace", tol: Tolerance = DEFAULT_TOL) -> bool:
        return self.dim == other.dim and self.contains_subspace(other, tol)


class _SpanBuilder:
    """Mutable Gram-Schmidt accumulator used inside the closure loops."""

    def __init__(self, n: int, tol: Tolerance):
        self.n = n
        self.tol = tol
        self.capacity = n * n - 1
        self._coords = np.zeros((self.capacity, 2 * n * n))
        self.mats: list[np.ndarray] = []
        self.depths: list[int] = []

    @property
    def dim(self) -> int:
        return len(self.mats)

    @property
    def full(self) -> bool:
        return self.dim >= self.capacity

    def add(self, m: np.ndarray, depth: int = 0, scale: float = 0.0) -> bool:
        """Append the new direction of ``m``, if any.

        ``scale`` is the magnitude of the inputs ``m`` was computed from (e.g.
        ``|A| |B|`` for a bracket); rounding noise is judged against it, so a
        bracket that cancels to ~eps is not mistaken for a new direction.
        """
        v = vec(m)
        norm = np.linalg.norm(v)
        if norm == 0.0 or self.full:
            return False
        q = self._coords[: self.dim]
        r = v
        # two passes of classical Gram-Schmidt keep the basis orthonormal to ~eps
        for _ in range(2):
            r = r - q.T @ (q @ r)
        rnorm = np.linalg.norm(r)
        if rnorm <= self.tol.rank_tol * max(norm, scale):
            return False
        r = r / rnorm
        self._coords[self.dim] = r
        mat = unvec(r, self.n)
        # the residual of a skew-Hermitian traceless matrix stays in that space; re-symmetrise rounding
        mat = 0.5 * (mat - mat.conj().T)
        self.mats.append(mat)
        self.depths.append(depth)
        return True

    def freeze(self) -> OperatorSubspace:
        return OperatorSubspace(
            self.n,
            tuple(self.mats),
            tuple(self.depths),
            _coords=self._coords[: self.dim].copy(),
        )

    @classmethod
    def from_subspace(cls, space: OperatorSubspace, tol: Tolerance) -> "_SpanBuilder":
        b = cls(space.dim_n, tol)
        b._coords[: space.dim] = space.coords
        b.mats = list(space.basis)
        b.depths = list(space.depth_tags or (0,) * space.dim)
        return b


def _check_skew(m, tol: Tolerance, what: str = "candidate") -> np.ndarray:
    m = _square(m, what)
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    if not is_skew_hermitian(m, tol.rank_tol * scale):
        raise ValueError(f"{what} must be skew-Hermitian")
    return m


def orthonormal_extend(
    basis: OperatorSubspace, candidate, tol: Tolerance = DEFAULT_TOL, depth: int = 0
) -> tuple[OperatorSubspace, bool]:
    """Append the normalised residual of ``candidate`` if it leaves ``span(basis)``.

    Returns the (possibly unchanged) subspace and whether an element was added.
    """
    candidate = _check_skew(candidate, tol)
    if candidate.shape[0] != basis.dim_n:
        raise ValueError(f"dimension mismatch: {candidate.shape[0]} vs {basis.dim_n}")
    builder = _SpanBuilder.from_subspace(basis, tol)
    added = builder.add(candidate, depth)
    return (builder.freeze() if added else basis), added


def gell_mann_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of su(n) built from generalized Gell-Mann matrices.

    Each element is ``i * lambda / ||lambda||``. Order: for every pair ``j < k``
    (row-major) the symmetric then the antisymmetric off-diagonal matrix; then the
    ``n - 1`` diagonal matrices ``diag(1, ..., 1, -l, 0, ...)`` for ``l = 1..n-1``.
    """
    if n < 2:
        raise ValueError("su(n) needs n >= 2")
    out = []
    for j in range(n):
        for k in range(j + 1, n):
            sym = np.zeros((n, n), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((n, n), dtype=complex)
            anti[j, k] = -1j
            anti[k, j] = 1j
            out.append(1j * sym / math.sqrt(2))
            out.append(1j * anti / math.sqrt(2))
    for l in range(1, n):
        d = np.zeros(n)
        d[:l] = 1.0
        d[l] = -l
        out.append(1j * np.diag(d).astype(complex) / np.linalg.norm(d))
    return out


# Spin-1/2 operators: Pauli matrices scaled by 1/2.
_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex) / 2,
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex) / 2,
    "z": np.array([[1, 0], [0, -1]], dtype=complex) / 2,
    "1": np.eye(2, dtype=complex),
}


def pauli(label: str) -> np.ndarray:
    """Half-Pauli matrix (``'x'``, ``'y'``, ``'z'``) or the 2x2 identity (``'1'``)."""
    return _PAULI[label].copy()


def kron(*factors) -> np.ndarray:
    out = np.eye(1, dtype=complex)
    for f in factors:
        out = np.kron(out, f)
    return out


def to_pairs(m) -> list:
    """Row-major nested list of ``[re, im]`` pairs."""
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def from_pairs(data: Sequence) -> np.ndarray:
    """Inverse of :func:`to_pairs`; a bare number is accepted as a real entry."""
    rows = []
    for i, row in enumerate(data):
        if not isinstance(row, (list, tuple)):
            raise ValueError(f"row {i} is not a list")
        out_row = []
        for j, entry in enumerate(row):
            if isinstance(entry, (int, float)) and not isinstance(entry, bool):
                out_row.append(complex(entry))
            elif (
                isinstance(entry, (list, tuple))
                and len(entry) == 2
                and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in entry)
            ):
                out_row.append(complex(entry[0], entry[1]))
            else:
                raise ValueError(f"entry [{i}][{j}] must be [re, im] or a real number")
        rows.append(out_row)
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValueError("matrix must be square and non-empty")
    return np.array(rows, dtype=complex)
