"""Complex matrix core: validated unitaries, distance metrics, state encoding.

All matrices are dense numpy complex128 arrays of dimension 2 (one qubit) or
4 (two qubits), made read-only at construction so they can be shared freely.
The canonical serialization order everywhere is row-major with real and
imaginary parts interleaved per entry.
"""

from __future__ import annotations

import numpy as np

UNITARITY_TOL = 1e-10
SUPPORTED_DIMS = (2, 4)

# Quantization grid shared by search CLOSED sets and oracle deduplication:
# exact products of the same gates collide, distinct unitaries essentially never do.
KEY_DECIMALS = 9


class DimensionMismatchError(ValueError):
    """Raised when two matrices of different dimensions are combined."""


def unitary(entries, *, tol: float = UNITARITY_TOL) -> np.ndarray:
    """Validate `entries` as a dim-2 or dim-4 unitary and return a frozen copy.

    Raises ValueError unless the matrix is square with dimension 2 or 4 and
    satisfies ||U^dag U - I||_F < tol.
    """
    u = np.array(entries, dtype=np.complex128, order="C")
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {u.shape}")
    dim = u.shape[0]
    if dim not in SUPPORTED_DIMS:
        raise ValueError(f"unsupported dimension {dim}; expected one of {SUPPORTED_DIMS}")
    defect = np.linalg.norm(u.conj().T @ u - np.eye(dim), ord="fro")
    if not defect < tol:
        raise ValueError(f"matrix is not unitary: ||U^dag U - I||_F = {defect:.3e} >= {tol:.0e}")
    u.setflags(write=False)
    return u


def identity(dim: int) -> np.ndarray:
    return unitary(np.eye(dim, dtype=np.complex128))


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> int:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a.shape[0]


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Product a*b, revalidated against the unitarity invariant."""
    _check_same_dim(a, b)
    return unitary(a @ b)


def dagger(u: np.ndarray) -> np.ndarray:
    """Conjugate transpose; dagger(dagger(u)) == u exactly."""
    out = np.ascontiguousarray(u.conj().T)
    out.setflags(write=False)
    return out


def fnorm_dist(un: np.ndarray, u: np.ndarray, *, phase_invariant: bool = False) -> float:
    """Frobenius distance ||Un^dag U - I||_F via the trace form.

    Computed as sqrt(Tr(2I - U^dag Un - Un^dag U)) = sqrt(2D - 2 Re Tr(Un^dag U)).
    Sensitive to the global phase of either argument by default; with
    phase_invariant=True returns min over phi of ||e^{i phi} Un - U||_F,
    which is sqrt(2D - 2 |Tr(Un^dag U)|).
    """
    dim = _check_same_dim(un, u)
    t = np.einsum("ij,ij->", un.conj(), u)  # Tr(Un^dag U)
    val = 2.0 * dim - 2.0 * (abs(t) if phase_invariant else t.real)
    return float(np.sqrt(max(val, 0.0)))


def dist_to_identity(s: np.ndarray) -> float:
    """fnorm_dist(s, I) without materializing the identity (goal-test hot path)."""
    val = 2.0 * s.shape[0] - 2.0 * np.trace(s).real
    return float(np.sqrt(max(val, 0.0)))


def avg_fidelity(un: np.ndarray, u: np.ndarray) -> float:
    """Average gate fidelity over Haar-random pure states, in closed form.

    For M = Un^dag U this is (D + |Tr M|^2) / (D (D+1)).  Invariant under a
    global phase of either argument; equals 1 iff un and u agree up to phase.
    """
    dim = _check_same_dim(un, u)
    t = np.einsum("ij,ij->", un.conj(), u)
    return float((dim + abs(t) ** 2) / (dim * (dim + 1)))


def spectral_dist(un: np.ndarray, u: np.ndarray) -> float:
    """Largest singular value of Un - U (operator 2-norm of the difference)."""
    _check_same_dim(un, u)
    return float(np.linalg.norm(un - u, ord=2))


def encode_state(u: np.ndarray) -> np.ndarray:
    """Flatten a unitary to the real input vector of the value network.

    Length 2*dim^2, row-major, real part then imaginary part per entry.
    Deterministic and injective on distinct matrices.
    """
    return np.ascontiguousarray(u).view(np.float64).ravel().copy()


def encode_batch(unitaries) -> np.ndarray:
    """Stack encode_state over a sequence of same-dimension unitaries, shape (n, 2*dim^2)."""
    arr = np.ascontiguousarray(np.stack(unitaries))
    n = arr.shape[0]
    return arr.view(np.float64).reshape(n, -1).copy()


def state_key(u: np.ndarray, decimals: int = KEY_DECIMALS) -> bytes:
    """Hashable key for a unitary, quantized to a 10^-decimals grid per real component."""
    vec = np.round(np.ascontiguousarray(u).view(np.float64), decimals)
    vec = vec + 0.0  # collapse -0.0 to +0.0 so signed zeros share a key
    return vec.tobytes()


def random_haar(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase correction."""
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return unitary(q)


def format_unitary(u: np.ndarray) -> str:
    """Render in the text format: first line dim, then dim rows of re+imj entries."""
    lines = [str(u.shape[0])]
    for row in u:
        lines.append(" ".join(f"{float(z.real)!r}{float(z.imag):+}j" for z in row))
    return "\n".join(lines) + "\n"


def parse_unitary(text: str) -> np.ndarray:
    """Parse the text format produced by format_unitary; validates unitarity."""
    tokens = text.split()
    if not tokens:
        raise ValueError("empty unitary text")
    try:
        dim = int(tokens[0])
    except ValueError as exc:
        raise ValueError(f"first token must be the dimension, got {tokens[0]!r}") from exc
    need = dim * dim
    if len(tokens) - 1 != need:
        raise ValueError(f"expected {need} entries for dim {dim}, got {len(tokens) - 1}")
    try:
        entries = [complex(tok) for tok in tokens[1:]]
    except ValueError as exc:
        raise ValueError(f"malformed complex entry: {exc}") from exc
    return unitary(np.array(entries, dtype=np.complex128).reshape(dim, dim))
