"""Built-in worked systems, each a complete scenario document."""

from __future__ import annotations

import copy

import numpy as np

from .linalg import kron, pauli, to_pairs
from .scenario import SCHEMA_VERSION

__all__ = ["EXAMPLES", "example", "example_names"]

_X2 = np.array([[0, 1], [1, 0]], dtype=complex)
_Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z2 = np.diag([1.0, -1.0]).astype(complex)
_I2 = np.eye(2, dtype=complex)


def _doc(name, system, **extra) -> dict:
    doc = {"schema_version": SCHEMA_VERSION, "name": name, "system": system}
    doc.update(extra)
    return doc


def _rotation_qubit() -> dict:
    # iS = [[i, 1], [-1, -i]] with L spanned by the SO(2) generator
    i_s = np.array([[1j, 1], [-1, -1j]])
    rotation = np.array([[0, 1], [-1, 0]], dtype=complex)
    return _doc(
        "rotation_qubit",
        {"label": "qubit, one rotation generator", "generators": [to_pairs(rotation)], "observable": to_pairs(-1j * i_s)},
        states={
            "up": {"matrix": to_pairs(np.diag([1.0, 0.0]))},
            "plus": {"matrix": to_pairs(np.full((2, 2), 0.5))},
        },
        scripts={"rotate_then_measure": {"segments": [{"duration": 0.7, "controls": [[1.0]]}]}},
        expected={"dim_L": 1, "dims_Vk": [3], "controllable": False, "observable_one_step": True},
    )


def _ising() -> dict:
    sx, sz, one = pauli("x"), pauli("z"), pauli("1")
    s = kron(sz, one) + kron(one, sz)
    base = np.eye(4) / 4 + 0.1 * np.kron(_Z2, _Z2)
    return _doc(
        "ising",
        {
            "label": "two spins, Ising coupling, field on spin 1",
            "drift": to_pairs(kron(sz, sz)),
            "hamiltonians": [to_pairs(kron(sx, one))],
            "observable": to_pairs(s),
        },
        states={
            "a": {"matrix": to_pairs(base)},
            # differs from "a" along X(x)1, which is orthogonal to the observability space
            "b": {"matrix": to_pairs(base + 0.1 * np.kron(_X2, _I2))},
            "c": {"matrix": to_pairs(base + 0.1 * np.kron(_Z2, _I2))},
        },
        scripts={
            "three_pulses": {
                "segments": [
                    {"duration": 0.4, "controls": [[1.0], [-0.5]]},
                    {"duration": 1.1, "controls": [[0.3]]},
                    {"duration": 0.25, "controls": [[2.0], [0.0], [-1.0]]},
                ]
            }
        },
        expected={
            "dim_L": 3,
            "dims_Vk": [4, 4],
            "controllable": False,
            "observable_one_step": False,
            "observable_overall": False,
            "first_order_condition": False,
            "first_order_dims": [2, 10],
        },
    )


def _qutrit() -> dict:
    gen = np.array([[1j, 0, 2], [0, -1j, 0], [-2, 0, 0]])
    return _doc(
        "qutrit",
        {"label": "qutrit where a second measurement adds information", "generators": [to_pairs(gen)], "observable": to_pairs(np.diag([1.0, -3.0, 2.0]))},
        states={"e1": {"matrix": to_pairs(np.diag([1.0, 0.0, 0.0]))}},
        scripts={
            "two_measurements": {
                "segments": [{"duration": 0.5, "controls": [[1.0]]}, {"duration": 1.3, "controls": [[1.0]]}]
            }
        },
        expected={"dim_L": 1, "dims_Vk": [3, 4, 4], "observable_one_step": False, "observable_overall": False},
    )


def _so2() -> dict:
    rotation = np.array([[0, 1], [-1, 0]], dtype=complex)
    return _doc(
        "so2",
        {"label": "qubit, real rotations, S = diag(1, -1)", "generators": [to_pairs(rotation)], "observable": to_pairs(np.diag([1.0, -1.0]))},
        states={"up": {"matrix": to_pairs(np.diag([1.0, 0.0]))}},
        scripts={
            "two_rotations": {
                "segments": [{"duration": 0.3, "controls": [[1.0]]}, {"duration": 0.9, "controls": [[1.0]]}]
            }
        },
        expected={"dim_L": 1, "dims_Vk": [2, 2], "observable_one_step": False, "observable_overall": False},
    )


def _three_qubit() -> dict:
    sx, sy, sz, one = pauli("x"), pauli("y"), pauli("z"), pauli("1")
    s = kron(sz, one, one) + kron(one, sz, one) + kron(one, one, sz)
    hams = []
    for site in range(3):
        for op in (sx, sy):
            factors = [one, one, one]
            factors[site] = op
            hams.append(to_pairs(kron(*factors)))
    coupling = kron(sz, sz, one) + kron(one, sz, sz)
    m, l = 0.6, 0.2 - 0.15j
    rho1 = np.array([[m, l], [np.conj(l), 1 - m]])
    rho2 = np.kron(np.diag([1 / 3, 2 / 3]), np.diag([1 / 3, 2 / 3]))
    return _doc(
        "three_qubit",
        {"label": "unknown spin coupled to two known spins", "drift": to_pairs(coupling), "hamiltonians": hams, "observable": to_pairs(s)},
        states={"joint": {"matrix": to_pairs(np.kron(rho1, rho2))}},
        tomography={
            "permutation": {"state": "joint"},
            "ancilla": {
                "unknown": {"matrix": to_pairs(rho1)},
                "known": {"matrix": to_pairs(rho2)},
                "observable": to_pairs(s),
            },
        },
        analysis={"max_k": 2},
        expected={"dim_L": 63, "dims_Vk": [63], "controllable": True, "observable_one_step": True},
    )


EXAMPLES = {
    "rotation_qubit": _rotation_qubit,
    "ising": _ising,
    "qutrit": _qutrit,
    "so2": _so2,
    "three_qubit": _three_qubit,
}


def example_names() -> list[str]:
    return list(EXAMPLES)


def example(name: str) -> dict:
    """Scenario document for a built-in example (a fresh copy)."""
    try:
        return copy.deepcopy(EXAMPLES[name]())
    except KeyError:
        raise KeyError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None
