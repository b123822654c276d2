"""Tableau simulation of Clifford monitored circuits.

Standard destabilizer/stabilizer tableau: rows ``0..n-1`` are destabilizers,
rows ``n..2n-1`` stabilizers. Row ``k`` stands for ``(-1)**r[k]`` times the
Hermitian Pauli with bits ``x[k], z[k]`` (see :mod:`unimirror.pauli`).
Operations mutate the tableau in place and return it.
"""

from __future__ import annotations

import math

import numpy as np

from .circuit import CircuitInstance, GateSpec, MeasurementRecord, brickwork_pairs, measurement_rng
from .dense import DenseState, apply_pauli
from .gf2 import gf2_rank
from .mps import pauli_expectations
from .outcomes import decide_outcome
from .pauli import PauliString, product_phase_exponent

DEFAULT_MC_SAMPLES = 4096


class Tableau:
    def __init__(self, n: int):
        self.n = n
        eye = np.eye(n, dtype=np.uint8)
        zero = np.zeros((n, n), dtype=np.uint8)
        self.x = np.vstack([eye, zero])
        self.z = np.vstack([zero, eye])
        self.r = np.zeros(2 * n, dtype=np.uint8)

    def copy(self) -> "Tableau":
        t = Tableau.__new__(Tableau)
        t.n, t.x, t.z, t.r = self.n, self.x.copy(), self.z.copy(), self.r.copy()
        return t

    def stabilizers(self) -> list[PauliString]:
        n = self.n
        return [PauliString(self.x[k], self.z[k], 2 * int(self.r[k])) for k in range(n, 2 * n)]

    def check(self) -> None:
        """Raise if the symplectic structure of the tableau is broken."""
        n = self.n
        form = (self.x.astype(np.int64) @ self.z.T.astype(np.int64) + self.z.astype(np.int64) @ self.x.T) % 2
        expected = np.zeros((2 * n, 2 * n), dtype=np.int64)
        expected[:n, n:] = np.eye(n, dtype=np.int64)
        expected[n:, :n] = np.eye(n, dtype=np.int64)
        if not np.array_equal(form, expected):
            raise AssertionError("tableau rows violate the commutation structure")
        if gf2_rank(np.hstack([self.x[n:], self.z[n:]])) != n:
            raise AssertionError("stabilizer rows are not independent")


def zero_tableau(n: int) -> Tableau:
    return Tableau(n)


def apply_clifford(tableau: Tableau, gate: GateSpec) -> Tableau:
    tag = gate.clifford_tag
    if tag is None:
        raise ValueError(f"gate on {gate.pair} (layer {gate.layer}) carries no Clifford tag")
    a, b = gate.q1 - 1, gate.q2 - 1
    t = tableau
    idx = t.x[:, a] + 2 * t.z[:, a] + 4 * t.x[:, b] + 8 * t.z[:, b]
    img = tag.image[idx]
    t.r ^= tag.image_sign[idx]
    t.x[:, a] = img & 1
    t.z[:, a] = (img >> 1) & 1
    t.x[:, b] = (img >> 2) & 1
    t.z[:, b] = (img >> 3) & 1
    return t


def _multiply_rows_into(t: Tableau, targets: np.ndarray, source: int) -> None:
    """Row[target] <- Row[source] * Row[target] for every target."""
    if targets.size == 0:
        return
    k = product_phase_exponent(t.x[source], t.z[source], t.x[targets], t.z[targets])
    total = 2 * t.r[targets].astype(np.int64) + 2 * int(t.r[source]) + k
    t.r[targets] = ((total % 4) // 2).astype(np.uint8)
    t.x[targets] ^= t.x[source]
    t.z[targets] ^= t.z[source]


def _deterministic_outcome(t: Tableau, q: int) -> int:
    n = t.n
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    phase = 0
    for i in np.flatnonzero(t.x[:n, q]):
        row = n + i
        phase += 2 * int(t.r[row]) + int(product_phase_exponent(x, z, t.x[row], t.z[row]))
        x ^= t.x[row]
        z ^= t.z[row]
    return (phase % 4) // 2


def _collapse(t: Tableau, p: int, c: int, bit: int) -> None:
    """Random-outcome update: stabilizer row ``p`` anticommutes with Z_c."""
    n = t.n
    others = np.flatnonzero(t.x[:, c])
    others = others[others != p]
    _multiply_rows_into(t, others, p)
    t.x[p - n], t.z[p - n], t.r[p - n] = t.x[p], t.z[p], t.r[p]
    t.x[p] = 0
    t.z[p] = 0
    t.z[p, c] = 1
    t.r[p] = bit


def measure_qubit(tableau: Tableau, q: int, rng) -> tuple[int, Tableau]:
    """Measure Z on qubit q (1-based). Random outcomes use the shared convention."""
    t, n, c = tableau, tableau.n, q - 1
    hits = np.flatnonzero(t.x[n:, c])
    if hits.size == 0:
        return _deterministic_outcome(t, c), t
    bit = decide_outcome(0.5, rng)
    _collapse(t, n + int(hits[0]), c, bit)
    return bit, t


def project_qubit(tableau: Tableau, q: int, bit: int) -> tuple[Tableau, float]:
    """Force outcome ``bit``. Returns the tableau and the branch probability (0, 1/2 or 1).

    A zero-probability projection leaves the tableau untouched.
    """
    t, n, c = tableau, tableau.n, q - 1
    hits = np.flatnonzero(t.x[n:, c])
    if hits.size == 0:
        return t, float(_deterministic_outcome(t, c) == bit)
    _collapse(t, n + int(hits[0]), c, bit)
    return t, 0.5


def run_monitored(instance: CircuitInstance, rng=None) -> tuple[Tableau, MeasurementRecord]:
    if rng is None:
        rng = measurement_rng(instance.seed)
    t = zero_tableau(instance.n)
    record = {}
    for layer in range(1, instance.l + 1):
        for q1, _ in brickwork_pairs(instance.n, layer):
            apply_clifford(t, instance.gate(layer, q1))
        for q in instance.measured(layer):
            bit, _ = measure_qubit(t, q, rng)
            record[(layer, q)] = bit
    return t, record


def entanglement_entropy(tableau: Tableau, cut: int) -> float:
    """Entropy (nats) of qubits 1..cut: (rank of stabilizers restricted to the block - cut) * ln 2."""
    n = tableau.n
    if not 1 <= cut <= n - 1:
        raise ValueError(f"cut {cut} out of range for {n} qubits")
    block = np.hstack([tableau.x[n:, :cut], tableau.z[n:, :cut]])
    return (gf2_rank(block) - cut) * math.log(2)


def sample_group_element(tableau: Tableau, rng: np.random.Generator) -> PauliString:
    n = tableau.n
    chosen = rng.integers(0, 2, size=n)
    acc = PauliString.identity(n)
    for i in np.flatnonzero(chosen):
        row = n + i
        acc = acc * PauliString(tableau.x[row], tableau.z[row], 2 * int(tableau.r[row]))
    return acc


def sample_group_elements(tableau: Tableau, count: int, rng: np.random.Generator):
    """Vectorized :func:`sample_group_element`: arrays ``x, z`` of shape (count, n) and phase exponents."""
    n = tableau.n
    chosen = rng.integers(0, 2, size=(count, n)).astype(bool)
    x = np.zeros((count, n), dtype=np.uint8)
    z = np.zeros((count, n), dtype=np.uint8)
    phase = np.zeros(count, dtype=np.int64)
    for i in range(n):
        row = n + i
        sel = chosen[:, i]
        if not sel.any():
            continue
        k = product_phase_exponent(x[sel], z[sel], tableau.x[row], tableau.z[row])
        phase[sel] += k + 2 * int(tableau.r[row])
        x[sel] ^= tableau.x[row]
        z[sel] ^= tableau.z[row]
    return x, z, phase % 4


def to_dense(tableau: Tableau) -> DenseState:
    """Stabilizer state as amplitudes (global phase arbitrary). Small n only."""
    n = tableau.n
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(2**n) + 1j * rng.standard_normal(2**n)
    state = DenseState(n, v)
    for g in tableau.stabilizers():
        state = DenseState(n, 0.5 * (state.amplitudes + apply_pauli(state, g).amplitudes))
    return DenseState(n, state.amplitudes / state.norm())


def mc_overlap(tableau: Tableau, mps, samples: int = DEFAULT_MC_SAMPLES, rng=None, batch: int = 1024):
    """Unbiased estimate of ``|<psi|psi_D>|^2`` with its standard error.

    Uses ``|psi><psi| = 2**-n sum_g g`` over the stabilizer group: the mean of
    ``Re <psi_D| g |psi_D>`` for uniformly drawn ``g``.
    """
    if mps.n != tableau.n:
        raise ValueError(f"size mismatch: {tableau.n} vs {mps.n} qubits")
    if samples < 1:
        raise ValueError("need at least one sample")
    if rng is None:
        rng = np.random.default_rng()
    values = []
    remaining = samples
    while remaining > 0:
        m = min(batch, remaining)
        x, z, ph = sample_group_elements(tableau, m, rng)
        values.append(pauli_expectations(mps, x, z, ph).real)
        remaining -= m
    vals = np.concatenate(values)
    est = float(vals.mean())
    err = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else float("nan")
    return est, err
