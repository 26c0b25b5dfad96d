import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import randmat
from qobserve.lie import (
    ClosureError,
    bracket_span_dim,
    commutator_dimension,
    commutator_dimension_bruteforce,
    dynamical_algebra,
    generalized_observability_space,
    observability_sequence,
    observability_space,
    stabilize,
    su,
)
from qobserve.linalg import (
    OperatorSubspace,
    Tolerance,
    gell_mann_basis,
    hs_inner,
    kron,
    pauli,
    vec,
)
from qobserve.measurement import KrausChannel, projective_channel
from qobserve.system import ControlSystem

sx, sy, sz, one = pauli("x"), pauli("y"), pauli("z"), pauli("1")


def closure_dim_svd(gens, n):
    """Independent oracle: stack every bracket and take the SVD rank until it stops growing."""
    mats = [np.asarray(g, dtype=complex) for g in gens]
    mats = [m - np.trace(m) / n * np.eye(n) for m in mats]

    def rank(ms):
        a = np.array([vec(m) for m in ms])
        sv = np.linalg.svd(a, compute_uv=False)
        return int(np.sum(sv > 1e-9 * sv[0]))

    r = rank(mats)
    while True:
        a = np.array([vec(m) for m in mats])
        u, sv, vh = np.linalg.svd(a, full_matrices=False)
        basis = [m for m in (vh[: int(np.sum(sv > 1e-9 * sv[0]))])]
        basis = [b[: n * n].reshape(n, n) + 1j * b[n * n :].reshape(n, n) for b in basis]
        mats = basis + [a_ @ b - b @ a_ for a_ in basis for b in basis]
        new = rank(mats)
        if new == r:
            return r
        r = new


def spin_one():
    jx = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]]) / np.sqrt(2)
    jy = np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]]) / np.sqrt(2)
    jz = np.diag([1.0, 0.0, -1.0])
    return jx, jy, jz


def test_su_is_full():
    assert su(3).dim == 8 and su(3).is_full


@pytest.mark.parametrize(
    "hams, expected",
    [
        ((sx, sy), 3),
        ((sz,), 1),
        ((kron(sx, one), kron(sz, sz)), 3),
        ((kron(sx, one), kron(one, sx)), 2),
        (spin_one()[:2], 3),
    ],
)
def test_dynamical_algebra_known_dims(hams, expected):
    n = hams[0].shape[0]
    sys = ControlSystem(tuple(hams), np.diag(np.arange(n, dtype=float)))
    assert dynamical_algebra(sys).dim == expected


def test_ising_algebra_span(ising):
    alg = dynamical_algebra(ising)
    for m in (kron(sx, one), kron(sz, sz), kron(sy, sz)):
        assert alg.contains(1j * m)
    assert not alg.contains(1j * kron(sz, one))


@pytest.mark.parametrize("n", [3, 4, 5])
def test_real_generators_give_so_n(n):
    rng = np.random.default_rng(n)
    hams = tuple(1j * (a - a.T) for a in (rng.normal(size=(n, n)) for _ in range(2)))
    sys = ControlSystem(hams, np.diag(np.arange(n, dtype=float)))
    assert dynamical_algebra(sys).dim == n * (n - 1) // 2


@pytest.mark.parametrize("seed", range(8))
def test_algebra_matches_svd_oracle_and_is_conjugation_invariant(seed):
    rng = np.random.default_rng(seed)
    n = 2 + seed % 4
    cut = max(1, n // 2)
    hams = []
    for _ in range(2):
        h = np.zeros((n, n), dtype=complex)
        h[:cut, :cut] = randmat.hermitian(rng, cut)
        h[cut:, cut:] = randmat.hermitian(rng, n - cut)
        hams.append(h)
    u = randmat.unitary(rng, n)
    s = np.diag(np.arange(n, dtype=float))
    plain = dynamical_algebra(ControlSystem(tuple(hams), s)).dim
    rotated = dynamical_algebra(ControlSystem(tuple(u @ h @ u.conj().T for h in hams), s)).dim
    oracle = closure_dim_svd([1j * h for h in hams], n)
    assert plain == rotated == oracle


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 4))
def test_algebra_closed_under_brackets(seed, n):
    rng = np.random.default_rng(seed)
    sys = ControlSystem((randmat.hermitian(rng, n),), randmat.hermitian(rng, n), drift=randmat.hermitian(rng, n))
    alg = dynamical_algebra(sys)
    for g in sys.generators:
        assert alg.contains(g)
    for a in alg.basis[:4]:
        for b in alg.basis[:4]:
            assert alg.contains(a @ b - b @ a)


def test_stabilize_seed_only_when_algebra_empty():
    v = stabilize([1j * sz], [])
    assert v.dim == 1


def test_stabilize_rejects_zero_and_identity_seeds():
    with pytest.raises(ValueError):
        stabilize([np.zeros((2, 2))], [1j * sx])
    with pytest.raises(ValueError):
        stabilize([1j * np.eye(2)], [1j * sx])


def test_stabilize_accepts_subspace_or_generators(ising):
    alg = dynamical_algebra(ising)
    a = stabilize([ising.i_observable], alg)
    b = stabilize([ising.i_observable], ising.generators)
    assert a.same_span(b)


def test_ising_observability_space(ising):
    v = observability_space(ising)
    assert v.dim == 4
    for m in (kron(sz, one), kron(one, sz), kron(sy, one), kron(sx, sz)):
        assert v.contains(1j * m)
    assert not v.contains(1j * kron(sx, one))


def test_observability_space_is_stable(qutrit):
    v = observability_space(qutrit)
    for g in qutrit.generators:
        for f in v.basis:
            assert v.contains(g @ f - f @ g)


def test_saturation_depth_bounded(ising):
    assert observability_space(ising).depth <= 15


def test_zero_observable_rejected():
    sys = ControlSystem((sx,), np.eye(2))
    with pytest.raises(ValueError):
        observability_space(sys)


def test_sequence_qutrit(qutrit):
    seq = observability_sequence(qutrit, 10)
    assert [v.dim for v in seq] == [1, 3, 4, 4]
    for a, b in zip(seq[1:], seq[2:]):
        assert b.contains_subspace(a)


def test_sequence_stops_at_full(rotation_qubit):
    seq = observability_sequence(rotation_qubit, 10)
    assert [v.dim for v in seq] == [1, 3]


def test_sequence_respects_max_k(qutrit):
    assert len(observability_sequence(qutrit, 1)) == 2
    assert len(observability_sequence(qutrit, 0)) == 1
    with pytest.raises(ValueError):
        observability_sequence(qutrit, -1)


def test_generalized_space_past_fixpoint(qutrit):
    assert generalized_observability_space(qutrit, 50).dim == 4
    assert generalized_observability_space(qutrit, 0).dim == 1


def test_projective_channel_matches_pinching(qutrit, ising):
    for sys in (qutrit, ising):
        a = observability_sequence(sys, 6)
        b = observability_sequence(sys, 6, channel=projective_channel(sys.observable))
        assert [v.dim for v in a] == [v.dim for v in b]
        assert a[-1].same_span(b[-1])


def test_identity_channel_adds_nothing(qutrit):
    ch = KrausChannel((np.eye(3),))
    seq = observability_sequence(qutrit, 6, channel=ch)
    assert [v.dim for v in seq] == [1, 3, 3]


def test_nonunital_channel_images_are_traceless(ising):
    rng = np.random.default_rng(2)
    ch = KrausChannel(tuple(randmat.kraus_ops(rng, 4, 2)))
    seq = observability_sequence(ising, 4, channel=ch)
    for v in seq:
        for f in v.basis:
            assert abs(np.trace(f)) < 1e-12


@pytest.mark.parametrize(
    "s, expected",
    [
        (np.diag([1.0, -1.0]), 2),
        (np.diag([1.0, -3.0, 2.0]), 6),
        (np.diag([1.0, 1.0, -2.0]), 4),
        (np.diag([1.0, 0.0, 0.0, -1.0]), 10),
        (np.diag([1.0, 1.0, -1.0, -1.0]), 8),
    ],
)
def test_commutator_dimension_cases(s, expected):
    assert commutator_dimension(s) == expected
    assert commutator_dimension_bruteforce(s) == expected


def test_commutator_dimension_zero_rejected():
    with pytest.raises(ValueError):
        commutator_dimension(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        commutator_dimension_bruteforce(np.zeros((2, 2)))


def test_bracket_span_dim_with_commuting_set():
    assert bracket_span_dim(1j * sz, [1j * sz, 1j * np.eye(2)]) == 0
    assert bracket_span_dim(1j * sz, gell_mann_basis(2)) == 2


def test_closure_error_when_sweep_budget_exhausted():
    import qobserve.lie as lie

    builder = lie._SpanBuilder(2, Tolerance())
    builder.add(1j * sx)
    builder.n = 1  # a 1x1 problem allows zero sweeps, so any frontier trips the guard
    with pytest.raises(ClosureError):
        lie._close(builder, [0], [1j * sy])


def test_hs_orthonormal_output(ising):
    v = observability_space(ising)
    gram = np.array([[hs_inner(a, b) for b in v.basis] for a in v.basis])
    np.testing.assert_allclose(gram, np.eye(v.dim), atol=1e-12)
    assert isinstance(v, OperatorSubspace)
