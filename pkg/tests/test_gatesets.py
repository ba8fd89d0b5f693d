import cmath
import math

import numpy as np
import pytest

from qcompile.gatesets import (
    GATE_SET_NAMES,
    GateSet,
    UnknownGateSetError,
    build,
    inverse_of,
)
from qcompile.linalg import dagger, state_key

EXPECTED_SIZES = {"clifford_t": 5, "hrc": 6, "fibonacci": 4, "diffusive": 2, "two_qubit_hrc": 14}

EXPECTED_LABELS = {
    "clifford_t": ("H", "HS", "HSdg", "T", "Tdg"),
    "hrc": ("B1", "B1dg", "B2", "B2dg", "B3", "B3dg"),
    "fibonacci": ("A1", "A1dg", "A2", "A2dg"),
    "diffusive": ("A", "B"),
    "two_qubit_hrc": (
        "B1_1", "B1dg_1", "B1_2", "B1dg_2",
        "B2_1", "B2dg_1", "B2_2", "B2dg_2",
        "B3_1", "B3dg_1", "B3_2", "B3dg_2",
        "CX12", "CX21",
    ),
}


# Independent scalar constructions of every published generator.
def _scalar_h():
    r = 1 / math.sqrt(2)
    return [[r, r], [r, -r]]


def _scalar_s():
    return [[1, 0], [0, 1j]]


def _scalar_t():
    return [[1, 0], [0, cmath.exp(1j * math.pi / 4)]]


def _scalar_b(k):
    r = 1 / math.sqrt(5)
    return {
        1: [[r, 2j * r], [2j * r, r]],
        2: [[r, 2 * r], [-2 * r, r]],
        3: [[(1 + 2j) * r, 0], [0, (1 - 2j) * r]],
    }[k]


def _scalar_fib(k):
    eta = cmath.exp(1j * math.pi / 5)
    phi = (math.sqrt(5) + 1) / 2
    if k == 1:
        return [[eta**-4, 0], [0, eta**3]]
    return [
        [-(phi**-1) * eta**-1, phi**-0.5 * eta**-3],
        [phi**-0.5 * eta**-3, -(phi**-1)],
    ]


_F_PRINTED = [
    [-0.40194 - 0.43507j, -0.36803 - 0.71674j],
    [0.36803 - 0.71674j, -0.40194 + 0.43507j],
]


def _mm(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)] for i in range(2)]


def _dag(a):
    return [[a[j][i].conjugate() for j in range(2)] for i in range(2)]


def _kron(a, b):
    n = len(a) * len(b)
    out = [[0j] * n for _ in range(n)]
    for i in range(len(a)):
        for j in range(len(a)):
            for k in range(len(b)):
                for l in range(len(b)):
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l]
    return out


def _expected_matrices(name):
    eye = [[1, 0], [0, 1]]
    if name == "clifford_t":
        hs = _mm(_scalar_h(), _scalar_s())
        return [_scalar_h(), hs, _dag(hs), _scalar_t(), _dag(_scalar_t())]
    if name == "hrc":
        out = []
        for k in (1, 2, 3):
            out += [_scalar_b(k), _dag(_scalar_b(k))]
        return out
    if name == "fibonacci":
        return [_scalar_fib(1), _dag(_scalar_fib(1)), _scalar_fib(2), _dag(_scalar_fib(2))]
    if name == "diffusive":
        return [_mm(_scalar_h(), _F_PRINTED), _mm(_scalar_t(), _F_PRINTED)]
    if name == "two_qubit_hrc":
        out = []
        for k in (1, 2, 3):
            b = _scalar_b(k)
            out += [_kron(b, eye), _kron(_dag(b), eye), _kron(eye, b), _kron(eye, _dag(b))]
        x = [[0, 1], [1, 0]]
        p0 = [[1, 0], [0, 0]]
        p1 = [[0, 0], [0, 1]]
        cx12 = np.array(_kron(p0, eye)) + np.array(_kron(p1, x))
        cx21 = np.array(_kron(eye, p0)) + np.array(_kron(x, p1))
        return out + [cx12.tolist(), cx21.tolist()]
    raise AssertionError(name)


@pytest.mark.parametrize("name", GATE_SET_NAMES)
def test_sizes_and_labels(name):
    gs = build(name)
    assert len(gs) == EXPECTED_SIZES[name]
    assert gs.labels == EXPECTED_LABELS[name]
    assert gs.dim == 2**gs.qubits


@pytest.mark.parametrize("name", GATE_SET_NAMES)
def test_matrices_match_scalar_rederivation(name):
    # The diffusive mixing matrix is published to 5 decimals and re-unitarized
    # by polar projection, which moves entries by up to ~1.7e-6; everything
    # else is exactly expressible.
    tol = 5e-6 if name == "diffusive" else 1e-12
    gs = build(name)
    for mat, expected in zip(gs.matrices, _expected_matrices(name)):
        assert np.abs(mat - np.array(expected, dtype=np.complex128)).max() < tol


def test_clifford_t_first_gate_is_hadamard(clifford):
    r = 1 / math.sqrt(2)
    assert np.abs(clifford.matrices[0] - np.array([[r, r], [r, -r]])).max() < 1e-15


def test_fibonacci_first_gate_is_a1():
    gs = build("fibonacci")
    eta = cmath.exp(1j * math.pi / 5)
    assert np.abs(gs.matrices[0] - np.diag([eta**-4, eta**3])).max() < 1e-15


@pytest.mark.parametrize("name", GATE_SET_NAMES)
def test_all_gates_unitary(name):
    gs = build(name)
    eye = np.eye(gs.dim)
    for g in gs.matrices:
        assert np.linalg.norm(g.conj().T @ g - eye, ord="fro") < 1e-10


def test_inverse_metadata():
    cl = build("clifford_t")
    assert inverse_of(cl, cl.index_of("H")) == cl.index_of("H")  # self-inverse
    assert inverse_of(cl, cl.index_of("T")) == cl.index_of("Tdg")
    hrc = build("hrc")
    assert inverse_of(hrc, hrc.index_of("B1")) == hrc.index_of("B1dg")
    diff = build("diffusive")
    assert not diff.inverse_closed
    assert inverse_of(diff, 0) is None  # inverse-free by construction


def test_inverse_of_range_check(clifford):
    with pytest.raises(IndexError):
        inverse_of(clifford, 99)


def test_inverse_entries_verified_entrywise():
    for name in GATE_SET_NAMES:
        gs = build(name)
        if not gs.inverse_closed:
            continue
        for i in range(len(gs)):
            j = inverse_of(gs, i)
            assert np.abs(dagger(gs.matrices[i]) - gs.matrices[j]).max() < 1e-10


def test_inverse_closed_sets_are_closed_as_multisets():
    for name in GATE_SET_NAMES:
        gs = build(name)
        if not gs.inverse_closed:
            continue
        keys = sorted(state_key(m) for m in gs.matrices)
        dag_keys = sorted(state_key(dagger(m)) for m in gs.matrices)
        assert keys == dag_keys


def test_two_qubit_wire_disjoint_gates_commute():
    gs = build("two_qubit_hrc")
    wire1 = [m for lab, m in gs.gates if lab.endswith("_1")]
    wire2 = [m for lab, m in gs.gates if lab.endswith("_2")]
    for a in wire1:
        for b in wire2:
            assert np.abs(a @ b - b @ a).max() < 1e-12


def test_unknown_name_lists_valid_sets():
    with pytest.raises(UnknownGateSetError, match="clifford_t.*diffusive.*fibonacci"):
        build("nope")


def test_content_hash_stable_and_distinct():
    assert build("hrc").content_hash == build("hrc").content_hash
    hashes = {build(name).content_hash for name in GATE_SET_NAMES}
    assert len(hashes) == len(GATE_SET_NAMES)


def test_index_of_unknown_label(clifford):
    with pytest.raises(KeyError):
        clifford.index_of("Z")


def test_custom_gate_set_dimension_check():
    with pytest.raises(ValueError, match="dimension"):
        GateSet(name="bad", qubits=2, labels=("H",), matrices=(build("clifford_t").matrices[0],))
