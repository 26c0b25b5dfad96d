import json

import numpy as np
import pytest

import randmat
from qobserve.examples import example, example_names
from qobserve.lie import generalized_observability_space, observability_space
from qobserve.linalg import Tolerance, pauli, kron
from qobserve.measurement import DensityState, ExperimentScript, KrausChannel, run_experiment
from qobserve.observability import (
    analyze,
    decompose_state,
    decomposition_to_dict,
    first_order_condition,
    indistinguishable,
    orbit_sample,
    sample_propagators,
    separation,
)
from qobserve.scenario import parse_scenario
from qobserve.system import ControlSystem

sx, sz, one = pauli("x"), pauli("z"), pauli("1")


@pytest.mark.parametrize("name", example_names())
def test_examples_match_expected_verdicts(name):
    scn = parse_scenario(example(name))
    report = analyze(scn.system, scn.max_k, scn.tol)
    got = report.to_dict()
    for key, value in scn.expected.items():
        assert got[key] == value, key


def test_ising_report_fields(ising):
    r = analyze(ising)
    assert r.n == 4
    assert r.dims_Vk == [4, 4]
    assert r.saturated and r.saturation_k == 1
    assert r.observable_k == {1: False, 2: False}
    assert r.first_order_dims == (2, 10)
    assert r.commutator_dim_formula == 10
    json.dumps(r.to_dict())


def test_first_order_condition_is_sufficient():
    rng = np.random.default_rng(31)
    hits = 0
    for trial in range(20):
        n = 2 + trial % 3
        hams = tuple(randmat.hermitian(rng, n) for _ in range(1 + trial % 2))
        sys = ControlSystem(hams, randmat.traceless_hermitian(rng, n))
        flag, _ = first_order_condition(sys)
        if flag:
            hits += 1
            assert analyze(sys).observable_one_step
    assert hits > 0


def _ising_state(extra):
    base = np.eye(4) / 4 + 0.1 * np.kron(np.diag([1.0, -1.0]), np.diag([1.0, -1.0]))
    return base + extra


def test_indistinguishable_pair_gives_equal_outputs(ising):
    x2 = np.kron(np.array([[0, 1], [1, 0]]), np.eye(2))
    a = _ising_state(0)
    b = _ising_state(0.1 * x2)
    assert indistinguishable(ising, a, b, k=1)
    assert indistinguishable(ising, a, b, k=3)
    assert separation(ising, a, b) < 1e-12
    # simulation evidence: random control sequences never separate them
    xs = sample_propagators(ising, 12, seed=7)
    for start in range(0, 12, 3):
        script = ExperimentScript.from_unitaries(xs[start : start + 3])
        ya = run_experiment(DensityState(a), ising, script).outputs
        yb = run_experiment(DensityState(b), ising, script).outputs
        np.testing.assert_allclose(ya, yb, atol=1e-12)


def test_distinguishable_pair(ising):
    a = _ising_state(0)
    c = _ising_state(0.1 * np.kron(np.diag([1.0, -1.0]), np.eye(2)))
    assert not indistinguishable(ising, a, c)
    assert separation(ising, a, c) > 0.1


def test_second_measurement_separates_states(qutrit):
    v1 = generalized_observability_space(qutrit, 1)
    v2 = generalized_observability_space(qutrit, 2)
    # a direction in V_2 orthogonal to V_1 separates two states only with two measurements
    direction = None
    for f in v2.basis:
        r = f - v1.project(f)
        if v1.residual(f) > 1e-6:
            direction = -1j * r / np.linalg.norm(r)
            break
    assert direction is not None
    a = np.eye(3) / 3
    b = a + 0.05 * direction
    assert indistinguishable(qutrit, a, b, k=1)
    assert not indistinguishable(qutrit, a, b, k=2)


def test_separation_validates_inputs(ising):
    with pytest.raises(ValueError):
        separation(ising, np.eye(2) / 2, np.eye(2) / 2)
    with pytest.raises(ValueError):
        separation(ising, np.eye(4) / 4, np.eye(4) / 4, k=0)


def test_decompose_state(ising):
    rng = np.random.default_rng(3)
    rho = randmat.state(rng, 4)
    v = observability_space(ising)
    d = decompose_state(rho, v, k_used=1)
    np.testing.assert_allclose(d.rho_par + d.rho_perp, rho, atol=1e-15)
    np.testing.assert_allclose(d.rho_par, d.rho_par.conj().T, atol=1e-15)
    for f in v.basis:
        assert abs(np.trace(f @ d.rho_perp)) < 1e-12
    assert v.contains(1j * d.rho_par)
    doc = decomposition_to_dict(d)
    assert doc["k_used"] == 1


def test_orbit_sample_stays_on_orbit(ising):
    rho = randmat.state(np.random.default_rng(8), 4)
    for point in orbit_sample(ising, rho, 5, seed=1):
        np.testing.assert_allclose(np.linalg.eigvalsh(point), np.linalg.eigvalsh(rho), atol=1e-12)


def test_sample_propagators_deterministic(ising):
    a = sample_propagators(ising, 4, seed=11)
    b = sample_propagators(ising, 4, seed=11)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    with pytest.raises(ValueError):
        sample_propagators(ising, 0)


def test_analyze_with_kraus_channel(ising):
    ch = KrausChannel((np.sqrt(0.5) * np.eye(4), np.sqrt(0.5) * np.diag([1.0, -1.0, -1.0, 1.0])))
    r = analyze(ising, 6, channel=ch)
    assert r.dims_Vk[0] == 4
    assert r.saturated


def test_tolerance_changes_nothing_on_exact_example(ising):
    loose = analyze(ising, tol=Tolerance(rank_tol=1e-6))
    tight = analyze(ising, tol=Tolerance(rank_tol=1e-13))
    assert loose.dims_Vk == tight.dims_Vk


def test_analyze_rejects_bad_max_k(ising):
    with pytest.raises(ValueError):
        analyze(ising, 0)


def test_single_spin_ising_observability(ising):
    sys = ControlSystem(ising.hamiltonians, kron(sz, one), drift=ising.drift)
    r = analyze(sys)
    assert not r.observable_overall
