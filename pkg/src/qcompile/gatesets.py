"""Universal basis sets as ordered action spaces.

Five named sets are shipped; their gate ordering is frozen because action
indices are part of the trained-model file contract.  Label vocabularies:

  clifford_t   : H HS HSdg T Tdg          (|A| = 5, inverse-closed)
  hrc          : B1 B1dg B2 B2dg B3 B3dg  (|A| = 6, inverse-closed)
  fibonacci    : A1 A1dg A2 A2dg          (|A| = 4, inverse-closed)
  diffusive    : A B                      (|A| = 2, inverse-free)
  two_qubit_hrc: B1_1 B1dg_1 B1_2 B1dg_2 B2_1 B2dg_1 B2_2 B2dg_2
                 B3_1 B3dg_1 B3_2 B3dg_2 CX12 CX21   (|A| = 14, inverse-closed)

Suffix _1/_2 marks the wire a single-qubit generator acts on; CX12 is a
controlled-NOT with control on wire 1, CX21 the reversed orientation.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .linalg import dagger, identity, unitary

INVERSE_MATCH_TOL = 1e-10


class UnknownGateSetError(ValueError):
    """Raised by build() for names outside the shipped registry."""


@dataclass(frozen=True)
class GateSet:
    name: str
    qubits: int
    labels: tuple[str, ...]
    matrices: tuple[np.ndarray, ...]
    inverse_closed: bool = field(init=False)
    inverse_index: dict[int, int] | None = field(init=False)

    def __post_init__(self):
        dim = 2**self.qubits
        if any(m.shape != (dim, dim) for m in self.matrices):
            raise ValueError(f"all gates of {self.name!r} must have dimension {dim}")
        if len(self.labels) != len(self.matrices):
            raise ValueError("labels and matrices must be parallel")
        inv: dict[int, int] = {}
        for i, g in enumerate(self.matrices):
            gd = dagger(g)
            for j, h in enumerate(self.matrices):
                if np.abs(gd - h).max() < INVERSE_MATCH_TOL:
                    inv[i] = j
                    break
        closed = len(inv) == len(self.matrices)
        object.__setattr__(self, "inverse_closed", closed)
        object.__setattr__(self, "inverse_index", inv if closed else None)

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def dim(self) -> int:
        return 2**self.qubits

    @property
    def gates(self) -> tuple[tuple[str, np.ndarray], ...]:
        return tuple(zip(self.labels, self.matrices))

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no gate labeled {label!r} in set {self.name!r}") from None

    @property
    def content_hash(self) -> str:
        """Stable digest of name, ordering, and matrices; guards model/action-index pairing."""
        h = hashlib.sha256()
        h.update(self.name.encode())
        h.update(str(self.qubits).encode())
        for label, mat in self.gates:
            h.update(label.encode())
            quantized = np.round(np.ascontiguousarray(mat).view(np.float64), 12) + 0.0
            h.update(quantized.tobytes())
        return h.hexdigest()


def inverse_of(gs: GateSet, idx: int) -> int | None:
    """Index of the gate equal to gates[idx]^dag, or None for inverse-free sets."""
    if not 0 <= idx < len(gs):
        raise IndexError(f"action index {idx} out of range for |A|={len(gs)}")
    if gs.inverse_index is None:
        return None
    return gs.inverse_index[idx]


# -- single-qubit generator constants ----------------------------------------

_SQRT2 = np.sqrt(2.0)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / _SQRT2
PHASE_S = np.diag([1.0, 1.0j]).astype(np.complex128)
GATE_T = np.diag([1.0, np.exp(1j * np.pi / 4)]).astype(np.complex128)

_SQRT5 = np.sqrt(5.0)
HRC_B1 = np.array([[1, 2j], [2j, 1]], dtype=np.complex128) / _SQRT5
HRC_B2 = np.array([[1, 2], [-2, 1]], dtype=np.complex128) / _SQRT5
HRC_B3 = np.array([[1 + 2j, 0], [0, 1 - 2j]], dtype=np.complex128) / _SQRT5

_ETA = np.exp(1j * np.pi / 5)
_GOLDEN = (np.sqrt(5.0) + 1.0) / 2.0
FIB_A1 = np.diag([_ETA**-4, _ETA**3]).astype(np.complex128)
FIB_A2 = np.array(
    [
        [-(_GOLDEN**-1) * _ETA**-1, _GOLDEN**-0.5 * _ETA**-3],
        [_GOLDEN**-0.5 * _ETA**-3, -(_GOLDEN**-1)],
    ],
    dtype=np.complex128,
)

# Diffusive mixing matrix, published to 5 decimals (unitary only to ~6e-6);
# re-unitarized by polar projection so products satisfy the construction invariant.
DIFFUSIVE_F_PRINTED = np.array(
    [
        [-0.40194 - 0.43507j, -0.36803 - 0.71674j],
        [0.36803 - 0.71674j, -0.40194 + 0.43507j],
    ],
    dtype=np.complex128,
)


def _polar_unitary(m: np.ndarray) -> np.ndarray:
    w, _, vh = np.linalg.svd(m)
    return w @ vh


DIFFUSIVE_F = _polar_unitary(DIFFUSIVE_F_PRINTED)

PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_P0 = np.diag([1.0, 0.0]).astype(np.complex128)
_P1 = np.diag([0.0, 1.0]).astype(np.complex128)
CNOT_12 = np.kron(_P0, np.eye(2)) + np.kron(_P1, PAULI_X)
CNOT_21 = np.kron(np.eye(2), _P0) + np.kron(PAULI_X, _P1)


def _build_clifford_t() -> GateSet:
    hs = HADAMARD @ PHASE_S
    gates = [
        ("H", HADAMARD),
        ("HS", hs),
        ("HSdg", hs.conj().T),
        ("T", GATE_T),
        ("Tdg", GATE_T.conj().T),
    ]
    return _finish("clifford_t", 1, gates)


def _build_hrc() -> GateSet:
    gates = []
    for label, mat in (("B1", HRC_B1), ("B2", HRC_B2), ("B3", HRC_B3)):
        gates.append((label, mat))
        gates.append((label + "dg", mat.conj().T))
    return _finish("hrc", 1, gates)


def _build_fibonacci() -> GateSet:
    gates = [
        ("A1", FIB_A1),
        ("A1dg", FIB_A1.conj().T),
        ("A2", FIB_A2),
        ("A2dg", FIB_A2.conj().T),
    ]
    return _finish("fibonacci", 1, gates)


def _build_diffusive() -> GateSet:
    gates = [("A", HADAMARD @ DIFFUSIVE_F), ("B", GATE_T @ DIFFUSIVE_F)]
    return _finish("diffusive", 1, gates)


def _build_two_qubit_hrc() -> GateSet:
    eye = np.eye(2)
    gates = []
    for label, mat in (("B1", HRC_B1), ("B2", HRC_B2), ("B3", HRC_B3)):
        for suffix, lifted in (("_1", lambda g: np.kron(g, eye)), ("_2", lambda g: np.kron(eye, g))):
            gates.append((label + suffix, lifted(mat)))
            gates.append((label + "dg" + suffix, lifted(mat.conj().T)))
    gates.append(("CX12", CNOT_12))
    gates.append(("CX21", CNOT_21))
    return _finish("two_qubit_hrc", 2, gates)


def _finish(name: str, qubits: int, gates: list[tuple[str, np.ndarray]]) -> GateSet:
    labels = tuple(label for label, _ in gates)
    matrices = tuple(unitary(mat) for _, mat in gates)
    return GateSet(name=name, qubits=qubits, labels=labels, matrices=matrices)


_REGISTRY = {
    "clifford_t": _build_clifford_t,
    "hrc": _build_hrc,
    "fibonacci": _build_fibonacci,
    "diffusive": _build_diffusive,
    "two_qubit_hrc": _build_two_qubit_hrc,
}

GATE_SET_NAMES = tuple(sorted(_REGISTRY))


def build(name: str) -> GateSet:
    """Construct one of the shipped gate sets by name."""
    try:
        builder = _REGISTRY[name]
    except KeyError:
        valid = ", ".join(GATE_SET_NAMES)
        raise UnknownGateSetError(f"unknown gate set {name!r}; valid names: {valid}") from None
    return builder()


def identity_for(gs: GateSet) -> np.ndarray:
    return identity(gs.dim)
