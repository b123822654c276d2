"""Exact statevector simulation of monitored circuits (small N).

Amplitudes are little-endian: qubit 1 is the least significant bit of the
basis index. Gate matrices on a contiguous block of qubits ``a..b`` are
big-endian *within the block* (qubit ``a`` most significant), which is the
``|q1 q2>`` convention of :class:`~unimirror.circuit.GateSpec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CircuitInstance, GateSpec, MeasurementRecord, brickwork_pairs, measurement_rng
from .errors import CapacityError, CorruptedStateError, ImpossibleOutcomeError
from .outcomes import decide_outcome
from .pauli import PauliString

DEFAULT_DENSE_LIMIT = 20
NORM_TOL = 1e-10
CORRUPTION_FLOOR = 1e-14


@dataclass
class DenseState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n,):
            raise ValueError(f"expected {2**self.n} amplitudes, got {self.amplitudes.shape}")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "DenseState":
        return DenseState(self.n, self.amplitudes.copy())

    def to_bytes(self) -> bytes:
        """Raw little-endian float64 (re, im) pairs."""
        return self.amplitudes.astype("<c16").tobytes()

    @classmethod
    def from_bytes(cls, n: int, blob: bytes) -> "DenseState":
        return cls(n, np.frombuffer(blob, dtype="<c16").astype(complex))


@dataclass(frozen=True)
class SchmidtSpectrum:
    cut: int
    values: np.ndarray


def zero_state(n: int) -> DenseState:
    amps = np.zeros(2**n, dtype=complex)
    amps[0] = 1.0
    return DenseState(n, amps)


def basis_state(n: int, bits) -> DenseState:
    """``bits[q-1]`` is the value of qubit q."""
    index = sum(int(b) << q for q, b in enumerate(bits))
    amps = np.zeros(2**n, dtype=complex)
    amps[index] = 1.0
    return DenseState(n, amps)


def random_state(n: int, rng: np.random.Generator) -> DenseState:
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    return DenseState(n, v / np.linalg.norm(v))


# ---------------------------------------------------------------------------
# kernels on raw amplitude arrays


def apply_block(amps: np.ndarray, n: int, first: int, matrix: np.ndarray) -> np.ndarray:
    """Apply ``matrix`` to the contiguous qubits ``first..first+k-1``."""
    dim = matrix.shape[0]
    k = dim.bit_length() - 1
    last = first + k - 1
    if first < 1 or last > n or 2**k != dim:
        raise ValueError(f"block {first}..{last} does not fit {n} qubits")
    hi, lo = 2 ** (n - last), 2 ** (first - 1)
    psi = amps.reshape((hi,) + (2,) * k + (lo,))
    # array axes 1..k run over qubits last..first; the gate wants first..last
    order = (0,) + tuple(range(k, 0, -1)) + (k + 1,)
    psi = psi.transpose(order).reshape(hi, dim, lo)
    out = np.matmul(matrix, psi).reshape((hi,) + (2,) * k + (lo,))
    return out.transpose(order).reshape(-1)


def _qubit_view(amps: np.ndarray, n: int, q: int) -> np.ndarray:
    return amps.reshape(2 ** (n - q), 2, 2 ** (q - 1))


def prob_one(amps: np.ndarray, n: int, q: int) -> float:
    v = _qubit_view(amps, n, q)[:, 1, :]
    return float(np.vdot(v, v).real)


def project(amps: np.ndarray, n: int, q: int, bit: int) -> tuple[np.ndarray, float]:
    """Project qubit q onto ``bit`` and renormalize. Returns (amplitudes, branch probability)."""
    out = _qubit_view(amps, n, q).copy()
    out[:, 1 - bit, :] = 0.0
    prob = float(np.vdot(out, out).real)
    if prob < CORRUPTION_FLOOR**2:
        raise ImpossibleOutcomeError(f"outcome {bit} has zero probability", qubit=q)
    return (out / math.sqrt(prob)).reshape(-1), prob


# ---------------------------------------------------------------------------
# public operations


def apply_gate(state: DenseState, gate: GateSpec, check_unitary: bool = False) -> DenseState:
    if gate.q2 != gate.q1 + 1 or gate.q1 < 1 or gate.q2 > state.n:
        raise ValueError(f"pair {gate.pair} out of range for {state.n} qubits")
    if check_unitary and not np.allclose(gate.matrix.conj().T @ gate.matrix, np.eye(4), atol=1e-12):
        raise ValueError("gate matrix is not unitary")
    return DenseState(state.n, apply_block(state.amplitudes, state.n, gate.q1, gate.matrix))


def apply_matrix(state: DenseState, first: int, matrix: np.ndarray) -> DenseState:
    return DenseState(state.n, apply_block(state.amplitudes, state.n, first, matrix))


def measure_qubit(state: DenseState, q: int, rng: np.random.Generator) -> tuple[int, DenseState]:
    """Born-rule measurement of Z on qubit q (shared outcome convention)."""
    p1 = prob_one(state.amplitudes, state.n, q)
    total = float(np.vdot(state.amplitudes, state.amplitudes).real)
    if total < CORRUPTION_FLOOR:
        raise CorruptedStateError("state has vanishing norm")
    bit = decide_outcome(p1 / total, rng)
    amps, _ = project(state.amplitudes, state.n, q, bit)
    return bit, DenseState(state.n, amps)


def _check_capacity(n: int, dense_limit: int):
    if n > dense_limit:
        raise CapacityError(f"{n} qubits exceeds the dense limit of {dense_limit}")


def _run(instance: CircuitInstance, rng, record, dense_limit):
    _check_capacity(instance.n, dense_limit)
    n = instance.n
    amps = zero_state(n).amplitudes
    out_record = {}
    log_prob = 0.0
    for layer in range(1, instance.l + 1):
        for q1, _ in brickwork_pairs(n, layer):
            amps = apply_block(amps, n, q1, instance.gate(layer, q1).matrix)
        for q in instance.measured(layer):
            if record is None:
                bit = decide_outcome(prob_one(amps, n, q), rng)
            else:
                bit = record[(layer, q)]
            try:
                amps, prob = project(amps, n, q, bit)
            except ImpossibleOutcomeError:
                raise ImpossibleOutcomeError(f"outcome {bit} has zero probability", layer, q) from None
            log_prob += math.log(prob)
            out_record[(layer, q)] = bit
    return DenseState(n, amps), out_record, log_prob


def run_monitored(
    instance: CircuitInstance, rng=None, dense_limit: int = DEFAULT_DENSE_LIMIT
) -> tuple[DenseState, MeasurementRecord]:
    """Simulate the circuit, sampling outcomes. Default RNG is the instance's measurement stream."""
    if rng is None:
        rng = measurement_rng(instance.seed)
    state, record, _ = _run(instance, rng, None, dense_limit)
    return state, record


def replay_monitored(
    instance: CircuitInstance, record: MeasurementRecord | None = None, dense_limit: int = DEFAULT_DENSE_LIMIT
) -> tuple[DenseState, float]:
    """Apply a fixed record as projectors. Returns the final state and the record's probability."""
    record = instance.record if record is None else record
    if record is None:
        raise ValueError("instance carries no record")
    state, _, log_prob = _run(instance, None, record, dense_limit)
    return state, math.exp(log_prob)


def schmidt_spectrum(state: DenseState, n: int) -> SchmidtSpectrum:
    """Schmidt weights across the cut {1..n} | {n+1..N}, descending."""
    if not 1 <= n <= state.n - 1:
        raise ValueError(f"cut {n} out of range for {state.n} qubits")
    # little-endian: qubits 1..n are the fast (column) index
    mat = state.amplitudes.reshape(2 ** (state.n - n), 2**n)
    s = np.linalg.svd(mat, compute_uv=False)
    mu = s**2
    mu = np.sort(mu)[::-1] / mu.sum()
    return SchmidtSpectrum(n, mu)


def schmidt_error(spectrum: SchmidtSpectrum, d: int) -> float:
    if d < 1:
        raise ValueError("bond dimension must be >= 1")
    return float(min(1.0, max(0.0, spectrum.values[d:].sum())))


def entropy(spectrum: SchmidtSpectrum) -> float:
    mu = spectrum.values[spectrum.values > 0]
    return float(-np.sum(mu * np.log(mu)))


def overlap(a: DenseState, b: DenseState) -> complex:
    """<a|b>."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def apply_pauli(state: DenseState, pauli: PauliString) -> DenseState:
    """``pauli |state>``; used as the oracle for Pauli expectations."""
    n = state.n
    weights = 1 << np.arange(n, dtype=np.int64)
    xmask = int(np.dot(pauli.x.astype(np.int64), weights))
    zmask = int(np.dot(pauli.z.astype(np.int64), weights))
    idx = np.arange(2**n, dtype=np.int64)
    signs = 1 - 2 * (np.bitwise_count(idx & zmask).astype(np.int64) & 1)
    n_y = int(np.sum(pauli.x & pauli.z))
    # Y = i X Z on each qubit carrying both bits
    coeff = pauli.phase * (1j**n_y)
    out = np.empty_like(state.amplitudes)
    out[idx ^ xmask] = coeff * signs * state.amplitudes
    return DenseState(n, out)


def expectation(state: DenseState, pauli: PauliString) -> complex:
    return overlap(state, apply_pauli(state, pauli))
