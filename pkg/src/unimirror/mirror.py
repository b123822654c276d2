"""Unitary mirror circuits that prepare an MPS from ``|0...0>``.

Each site tensor is embedded as one column block of a unitary acting on a
contiguous window of ``n_D + 1`` qubits, where ``n_D`` qubits carry the bond
index (padded to ``2**n_D``). A central gate on ``2 n_D + 1`` qubits seeds the
state from the center tensor; gates then grow it outward, right of the center
using right-orthogonality and left of it using left-orthogonality. The outermost
sites on each side are merged into a single edge gate.

Gate matrices use the big-endian basis of their window (lowest qubit most
significant), matching :func:`unimirror.dense.apply_block`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .dense import DEFAULT_DENSE_LIMIT, DenseState, apply_block, zero_state
from .errors import CapacityError
from .mps import MPS, canonical_deviation, move_center

UNITARY_TOL = 1e-10
CANONICAL_TOL = 1e-8
# residual norm below which a basis vector is treated as already spanned
_SPAN_TOL = 1e-3

ROLES = ("center", "left", "right", "left-edge", "right-edge")


@dataclass(frozen=True)
class MirrorGate:
    first: int
    last: int
    matrix: np.ndarray
    role: str

    @property
    def width(self) -> int:
        return self.last - self.first + 1

    def dagger(self) -> "MirrorGate":
        return MirrorGate(self.first, self.last, self.matrix.conj().T, self.role)


@dataclass
class MirrorCircuit:
    n: int
    D: int
    n_d: int
    n_c: int
    gates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "D": self.D,
            "n_D": self.n_d,
            "n_c": self.n_c,
            "gates": [
                {
                    "span": [g.first, g.last],
                    "role": g.role,
                    "matrix": np.stack([g.matrix.real, g.matrix.imag], axis=-1).tolist(),
                }
                for g in self.gates
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "MirrorCircuit":
        gates = []
        for g in data["gates"]:
            m = np.asarray(g["matrix"], dtype=float)
            gates.append(MirrorGate(g["span"][0], g["span"][1], m[..., 0] + 1j * m[..., 1], g["role"]))
        return cls(data["n"], data["D"], data["n_D"], data["n_c"], gates)


def complete_isometry(columns: np.ndarray, inputs=None) -> np.ndarray:
    """Extend orthonormal ``columns`` to a unitary with ``U[:, inputs[k]] = columns[:, k]``.

    The free columns are the standard basis vectors, taken in index order and
    Gram-Schmidt orthogonalized against everything accepted so far; vectors
    already (numerically) in the span are skipped.
    """
    cols = np.asarray(columns, dtype=complex)
    if cols.ndim == 1:
        cols = cols[:, None]
    dim, m = cols.shape
    inputs = list(range(m)) if inputs is None else [int(k) for k in inputs]
    if len(inputs) != m or len(set(inputs)) != m or any(not 0 <= k < dim for k in inputs):
        raise ValueError("inputs must be distinct basis indices, one per column")
    if not np.allclose(cols.conj().T @ cols, np.eye(m), atol=UNITARY_TOL):
        raise ValueError("columns are not orthonormal")
    basis = np.zeros((dim, dim), dtype=complex)
    basis[:, :m] = cols
    count = m
    for k in range(dim):
        if count == dim:
            break
        v = np.zeros(dim, dtype=complex)
        v[k] = 1.0
        for _ in range(2):
            v -= basis[:, :count] @ (basis[:, :count].conj().T @ v)
        nrm = np.linalg.norm(v)
        if nrm > _SPAN_TOL:
            basis[:, count] = v / nrm
            count += 1
    free = [k for k in range(dim) if k not in set(inputs)]
    u = np.empty((dim, dim), dtype=complex)
    u[:, inputs] = cols
    u[:, free] = basis[:, m:]
    return u


def _contract(tensors) -> np.ndarray:
    """Contract consecutive site tensors into shape (left, 2**k, right), first site most significant."""
    out = tensors[0]
    for a in tensors[1:]:
        out = np.tensordot(out, a, axes=(out.ndim - 1, 0))
    dl, dr = out.shape[0], out.shape[-1]
    return out.reshape(dl, -1, dr)


def _gate(first: int, last: int, columns: np.ndarray, inputs, role: str) -> MirrorGate:
    return MirrorGate(first, last, complete_isometry(columns, inputs), role)


def bond_qubits(mps: MPS) -> int:
    largest = max([1] + mps.bond_dims)
    return math.ceil(math.log2(largest)) if largest > 1 else 0


def build_mirror(mps: MPS, center: int | None = None) -> MirrorCircuit:
    """Mirror circuit ``C_D`` with ``C_D |0...0> = |psi_D>``.

    ``center`` defaults to the MPS center; it is clamped to
    ``[n_D + 1, N - n_D]`` so the central window fits. The input MPS is not
    modified.
    """
    if canonical_deviation(mps) > CANONICAL_TOL:
        raise ValueError("MPS is not in mixed-canonical form")
    n = mps.n
    n_d = bond_qubits(mps)
    d = 2**n_d
    if n < 2 * n_d + 1:
        psi = _contract(mps.copy().tensors).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        gate = _gate(1, n, psi[:, None], [0], "center")
        return MirrorCircuit(n, mps.D, n_d, 1, [gate])

    n_c = mps.center if center is None else center
    n_c = min(max(n_c, n_d + 1), n - n_d)
    work = move_center(mps.copy(), n_c)
    t = work.tensors

    # center: |0..0> -> sum_{i x j} A[i, x, j] |i>|x>|j>
    a = t[n_c - 1]
    padded = np.zeros((d, 2, d), dtype=complex)
    padded[: a.shape[0], :, : a.shape[2]] = a
    center_gate = _gate(n_c - n_d, n_c + n_d, padded.reshape(-1, 1), [0], "center")

    right = []
    r = n - n_c
    for site in range(n_c + 1, n - n_d):
        a = t[site - 1]
        cols = np.zeros((a.shape[0], 2, d), dtype=complex)
        cols[:, :, : a.shape[2]] = a
        right.append(
            _gate(site, site + n_d, cols.reshape(a.shape[0], -1).T, [2 * i for i in range(a.shape[0])], "right")
        )
    if r == n_d and n_d > 0:
        block = _contract(t[n_c:])[:, :, 0]
        right.append(_gate(n_c + 1, n, block.T, range(block.shape[0]), "right-edge"))
    elif r > n_d:
        block = _contract(t[n - n_d - 1 :])[:, :, 0]
        right.append(_gate(n - n_d, n, block.T, [2 * i for i in range(block.shape[0])], "right-edge"))

    left = []
    l_count = n_c - 1
    for site in range(n_c - 1, n_d + 1, -1):
        a = t[site - 1]
        cols = np.zeros((d, 2, a.shape[2]), dtype=complex)
        cols[: a.shape[0]] = a
        left.append(_gate(site - n_d, site, cols.reshape(-1, a.shape[2]), range(a.shape[2]), "left"))
    if l_count == n_d and n_d > 0:
        block = _contract(t[:n_d])[0]
        left.append(_gate(1, n_d, block, range(block.shape[1]), "left-edge"))
    elif l_count > n_d:
        block = _contract(t[: n_d + 1])[0]
        left.append(_gate(1, n_d + 1, block, range(block.shape[1]), "left-edge"))

    gates = [center_gate]
    for k in range(max(len(left), len(right))):
        if k < len(left):
            gates.append(left[k])
        if k < len(right):
            gates.append(right[k])
    return MirrorCircuit(n, mps.D, n_d, n_c, gates)


def inverted_mirror(mirror: MirrorCircuit) -> MirrorCircuit:
    """Daggered gates in reverse order: maps ``|psi_D>`` back to ``|0...0>``."""
    gates = [g.dagger() for g in reversed(mirror.gates)]
    return MirrorCircuit(mirror.n, mirror.D, mirror.n_d, mirror.n_c, gates)


def apply_circuit(state: DenseState, mirror: MirrorCircuit, dense_limit: int = DEFAULT_DENSE_LIMIT) -> DenseState:
    if state.n != mirror.n:
        raise ValueError(f"size mismatch: {state.n} vs {mirror.n} qubits")
    if state.n > dense_limit:
        raise CapacityError(f"{state.n} qubits exceeds the dense limit of {dense_limit}")
    amps = state.amplitudes
    for g in mirror.gates:
        amps = apply_block(amps, state.n, g.first, g.matrix)
    return DenseState(state.n, amps)


def apply_to_zero(mirror: MirrorCircuit, dense_limit: int = DEFAULT_DENSE_LIMIT) -> DenseState:
    if mirror.n > dense_limit:
        raise CapacityError(f"{mirror.n} qubits exceeds the dense limit of {dense_limit}")
    return apply_circuit(zero_state(mirror.n), mirror, dense_limit)


def mirror_fidelity(psi: DenseState, mirror: MirrorCircuit, dense_limit: int = DEFAULT_DENSE_LIMIT) -> float:
    """Probability of the all-zeros outcome after running the inverted mirror on ``psi``."""
    out = apply_circuit(psi, inverted_mirror(mirror), dense_limit)
    return float(min(1.0, abs(out.amplitudes[0]) ** 2))


def mirror_fidelity_shots(psi: DenseState, mirror: MirrorCircuit, shots: int, rng: np.random.Generator):
    """Binomial estimate of the mirror fidelity from ``shots`` all-zeros trials, with its standard error."""
    if shots < 1:
        raise ValueError("shots must be positive")
    f = mirror_fidelity(psi, mirror)
    hits = int(rng.binomial(shots, min(1.0, max(0.0, f))))
    est = hits / shots
    return est, math.sqrt(est * (1.0 - est) / shots)
