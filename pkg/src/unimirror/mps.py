"""Mixed-canonical matrix product states and the projected-circuit TEBD sweep.

Site tensors have shape ``(left bond, 2, right bond)``; sites and the center
position are 1-based. Sites left of the center are left-orthogonal, sites
right of it right-orthogonal, and the center tensor carries unit norm.

Two-site updates absorb the singular values into the *left* factor and
renormalize, so after applying a gate on ``(q1, q1+1)`` the center sits on
``q1``. Each update appends a :class:`TruncationStep` to the ledger.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .circuit import CircuitInstance, GateSpec, MeasurementRecord, brickwork_pairs, measurement_rng
from .dense import DenseState, SchmidtSpectrum
from .errors import ImpossibleOutcomeError, InvalidSizeError
from .outcomes import decide_outcome
from .pauli import SINGLE, PauliString

BRANCH_NORM_FLOOR = 1e-14
# singular values below this fraction of the largest count as exact zeros
ZERO_SV_RTOL = 1e-14

_PAULI_STACK = np.array(SINGLE)


@dataclass(frozen=True)
class TruncationStep:
    layer: int
    q1: int
    eps: float


@dataclass
class MPS:
    n: int
    D: int
    tensors: list
    center: int = 1
    ledger: list = field(default_factory=list)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def copy(self) -> "MPS":
        return MPS(self.n, self.D, [t.copy() for t in self.tensors], self.center, list(self.ledger))

    def norm(self) -> float:
        return math.sqrt(abs(overlap_mps(self, self)))


def bond_cap(n: int, k: int, d: int) -> int:
    """Largest useful dimension of the bond between sites k and k+1."""
    return min(2 ** min(k, n - k), d)


# ---------------------------------------------------------------------------
# construction


def init_zero(n: int, d: int) -> MPS:
    if n < 2:
        raise InvalidSizeError(f"need at least 2 qubits, got {n}")
    if d < 1:
        raise ValueError("bond dimension must be >= 1")
    tensors = []
    for _ in range(n):
        a = np.zeros((1, 2, 1), dtype=complex)
        a[0, 0, 0] = 1.0
        tensors.append(a)
    return MPS(n, d, tensors, 1)


def canonicalize(mps: MPS, center: int | None = None) -> MPS:
    """Bring an arbitrary MPS into mixed-canonical form (in place), normalized."""
    t = mps.tensors
    for k in range(mps.n - 1):
        dl, _, dr = t[k].shape
        q, r = np.linalg.qr(t[k].reshape(dl * 2, dr))
        t[k] = q.reshape(dl, 2, q.shape[1])
        t[k + 1] = np.tensordot(r, t[k + 1], axes=(1, 0))
    t[-1] = t[-1] / np.linalg.norm(t[-1])
    mps.center = mps.n
    if center is not None:
        move_center(mps, center)
    return mps


def random_mps(n: int, d: int, rng: np.random.Generator, center: int | None = None) -> MPS:
    dims = [1] + [bond_cap(n, k, d) for k in range(1, n)] + [1]
    tensors = [
        rng.standard_normal((dims[k], 2, dims[k + 1])) + 1j * rng.standard_normal((dims[k], 2, dims[k + 1]))
        for k in range(n)
    ]
    mps = MPS(n, d, tensors, n)
    if center is None:
        center = int(rng.integers(1, n + 1))
    return canonicalize(mps, center)


def from_dense(state: DenseState, d: int | None = None, center: int | None = None) -> MPS:
    """Exact (or truncated to ``d``) MPS of a dense state via successive SVDs."""
    n = state.n
    d = 2 ** (n // 2) if d is None else d
    psi = state.amplitudes.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1)))
    m = psi.reshape(1, -1)
    tensors = []
    for k in range(n - 1):
        dl = m.shape[0]
        u, s, vh = _svd(m.reshape(dl * 2, -1))
        keep = min(d, int(np.count_nonzero(s > ZERO_SV_RTOL * s[0])))
        tensors.append(u[:, :keep].reshape(dl, 2, keep))
        m = s[:keep, None] * vh[:keep]
    tensors.append(m.reshape(m.shape[0], 2, 1))
    mps = MPS(n, d, tensors, n)
    tensors[-1] /= np.linalg.norm(tensors[-1])
    if center is not None:
        move_center(mps, center)
    return mps


def to_dense(mps: MPS) -> DenseState:
    m = np.ones((1, 1), dtype=complex)
    for a in mps.tensors:
        dl, _, dr = a.shape
        m = (m @ a.reshape(dl, 2 * dr)).reshape(-1, dr)
    n = mps.n
    amps = m.reshape((2,) * n).transpose(tuple(range(n - 1, -1, -1))).reshape(-1)
    return DenseState(n, amps)


# ---------------------------------------------------------------------------
# gauge


def move_center(mps: MPS, target: int) -> MPS:
    if not 1 <= target <= mps.n:
        raise ValueError(f"center {target} out of range for {mps.n} sites")
    t = mps.tensors
    while mps.center < target:
        k = mps.center - 1
        dl, _, dr = t[k].shape
        q, r = np.linalg.qr(t[k].reshape(dl * 2, dr))
        t[k] = q.reshape(dl, 2, q.shape[1])
        t[k + 1] = np.tensordot(r, t[k + 1], axes=(1, 0))
        mps.center += 1
    while mps.center > target:
        k = mps.center - 1
        dl, _, dr = t[k].shape
        q, r = np.linalg.qr(t[k].reshape(dl, 2 * dr).conj().T)
        t[k] = q.conj().T.reshape(q.shape[1], 2, dr)
        t[k - 1] = np.tensordot(t[k - 1], r.conj().T, axes=(2, 0))
        mps.center -= 1
    return mps


def canonical_deviation(mps: MPS) -> float:
    """Largest violation of the mixed-canonical conditions over all sites."""
    worst = 0.0
    for k, a in enumerate(mps.tensors, start=1):
        dl, _, dr = a.shape
        if k < mps.center:
            m = a.reshape(dl * 2, dr)
            worst = max(worst, np.abs(m.conj().T @ m - np.eye(dr)).max())
        elif k > mps.center:
            m = a.reshape(dl, 2 * dr)
            worst = max(worst, np.abs(m @ m.conj().T - np.eye(dl)).max())
        else:
            worst = max(worst, abs(np.linalg.norm(a) - 1.0))
    return float(worst)


# ---------------------------------------------------------------------------
# updates


def _svd(mat: np.ndarray):
    """SVD with a fixed phase convention (largest entry of each left vector real positive)."""
    try:
        u, s, vh = np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        u, s, vh = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    if u.size:
        idx = np.argmax(np.abs(u), axis=0)
        ph = u[idx, np.arange(u.shape[1])]
        ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0)
        u = u * ph.conj()
        vh = vh * ph[:, None]
    return u, s, vh


def _projected_matrix(matrix: np.ndarray, p1, p2) -> np.ndarray:
    g = np.array(matrix, dtype=complex)
    for row in range(4):
        x, y = row >> 1, row & 1
        if (p1 is not None and x != p1) or (p2 is not None and y != p2):
            g[row] = 0.0
    return g


def apply_projected_gate(mps: MPS, gate: GateSpec, p1=None, p2=None):
    """Apply ``(P1 x P2) U`` on ``(q1, q1+1)`` and truncate back to the bond cap.

    ``p1`` / ``p2`` are the projected bits (``None`` for no projection).
    Returns ``(mps, eps_step, branch_norm)`` where ``branch_norm`` is the norm
    of the two-site tensor before truncation and renormalization.
    """
    q1 = gate.q1
    if gate.q2 != q1 + 1 or not 1 <= q1 < mps.n:
        raise ValueError(f"pair {gate.pair} out of range for {mps.n} sites")
    move_center(mps, q1)
    a1, a2 = mps.tensors[q1 - 1], mps.tensors[q1]
    dl, dr = a1.shape[0], a2.shape[2]
    theta = np.tensordot(a1, a2, axes=(2, 0)).reshape(dl, 4, dr)
    g = _projected_matrix(gate.matrix, p1, p2)
    b = np.matmul(g, theta).reshape(dl * 2, 2 * dr)
    branch_norm = float(np.linalg.norm(b))
    if branch_norm < BRANCH_NORM_FLOOR:
        raise ImpossibleOutcomeError("projected branch has zero norm", gate.layer, q1)
    u, s, vh = _svd(b)
    w = s**2
    total = w.sum()
    keep = min(mps.D, int(np.count_nonzero(s > ZERO_SV_RTOL * s[0])))
    kept = w[:keep].sum()
    eps = float(w[keep:].sum() / total)
    mps.tensors[q1 - 1] = (u[:, :keep] * (s[:keep] / math.sqrt(kept))).reshape(dl, 2, keep)
    mps.tensors[q1] = vh[:keep].reshape(keep, 2, dr)
    mps.center = q1
    mps.ledger.append(TruncationStep(gate.layer, q1, eps))
    return mps, eps, branch_norm


def apply_edge_projection(mps: MPS, q: int, bit: int) -> MPS:
    """Project site ``q`` onto ``|bit>`` and renormalize (used for unpaired boundary qubits)."""
    return _project_site(mps, q, bit)[0]


def _project_site(mps: MPS, q: int, bit: int):
    move_center(mps, q)
    a = mps.tensors[q - 1].copy()
    a[:, 1 - bit, :] = 0.0
    nrm = float(np.linalg.norm(a))
    if nrm < BRANCH_NORM_FLOOR:
        raise ImpossibleOutcomeError(f"outcome {bit} has zero probability", qubit=q)
    mps.tensors[q - 1] = a / nrm
    return mps, nrm


# ---------------------------------------------------------------------------
# circuit sweeps


def _with_context(exc: ImpossibleOutcomeError, layer: int, qubit: int) -> ImpossibleOutcomeError:
    return ImpossibleOutcomeError("record is inconsistent with the evolved state", layer, qubit)


def run_tebd(instance: CircuitInstance, d: int, record: MeasurementRecord | None = None):
    """Evolve ``|0...0>`` through the projected circuit with bond cap ``d``.

    Boundary qubits that sit out a layer are projected on their own: qubit N
    before the gates of an even layer (N even) or after those of an odd layer
    (N odd), and qubit 1 after the gates of an even layer.
    """
    record = instance.record if record is None else record
    if record is None:
        raise ValueError("instance carries no measurement record")
    n = instance.n
    mps = init_zero(n, d)

    def edge(layer, q):
        try:
            _project_site(mps, q, record[(layer, q)])
        except ImpossibleOutcomeError as exc:
            raise _with_context(exc, layer, q) from None

    for layer in range(1, instance.l + 1):
        measured = set(instance.measured(layer))
        even = layer % 2 == 0
        if even and n % 2 == 0 and n in measured:
            edge(layer, n)
        for q1, q2 in brickwork_pairs(n, layer):
            b1 = record[(layer, q1)] if q1 in measured else None
            b2 = record[(layer, q2)] if q2 in measured else None
            try:
                apply_projected_gate(mps, instance.gate(layer, q1), b1, b2)
            except ImpossibleOutcomeError as exc:
                raise _with_context(exc, layer, q1) from None
        if not even and n % 2 == 1 and n in measured:
            edge(layer, n)
        if even and 1 in measured:
            edge(layer, 1)
    return mps, list(mps.ledger)


def run_tebd_sampling(instance: CircuitInstance, d: int, rng=None):
    """Sample a record from the MPS itself (exact when ``d`` is the full bond).

    Each layer's gates are applied unprojected, then the measured qubits are
    sampled in ascending order with the shared outcome rule, so at full bond
    dimension the record matches the dense and tableau backends draw for draw.
    """
    if rng is None:
        rng = measurement_rng(instance.seed)
    n = instance.n
    mps = init_zero(n, d)
    record = {}
    for layer in range(1, instance.l + 1):
        for q1, _ in brickwork_pairs(n, layer):
            apply_projected_gate(mps, instance.gate(layer, q1))
        for q in instance.measured(layer):
            move_center(mps, q)
            a = mps.tensors[q - 1]
            p1 = float(np.vdot(a[:, 1, :], a[:, 1, :]).real / np.vdot(a, a).real)
            bit = decide_outcome(p1, rng)
            _project_site(mps, q, bit)
            record[(layer, q)] = bit
    return mps, record, list(mps.ledger)


def full_bond(n: int) -> int:
    return 2 ** ((n + 1) // 2)


# ---------------------------------------------------------------------------
# measurements


def schmidt_spectrum(mps: MPS, cut: int) -> SchmidtSpectrum:
    """Schmidt weights across the bond between sites ``cut`` and ``cut+1`` (moves the center)."""
    if not 1 <= cut <= mps.n - 1:
        raise ValueError(f"cut {cut} out of range for {mps.n} sites")
    move_center(mps, cut)
    a = mps.tensors[cut - 1]
    s = np.linalg.svd(a.reshape(-1, a.shape[2]), compute_uv=False)
    mu = s**2
    return SchmidtSpectrum(cut, np.sort(mu)[::-1] / mu.sum())


def entropy(mps: MPS, cut: int) -> float:
    mu = schmidt_spectrum(mps, cut).values
    mu = mu[mu > 0]
    return float(-np.sum(mu * np.log(mu)))


def schmidt_error(mps: MPS, cut: int, d: int) -> float:
    return float(min(1.0, max(0.0, schmidt_spectrum(mps, cut).values[d:].sum())))


def overlap_mps(a: MPS, b: MPS) -> complex:
    """<a|b> by transfer-matrix contraction."""
    if a.n != b.n:
        raise ValueError(f"size mismatch: {a.n} vs {b.n} sites")
    e = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        k = np.tensordot(e, tb, axes=(1, 0))  # (a_l, x, b_r)
        e = np.tensordot(ta.conj(), k, axes=([0, 1], [0, 1]))
    return complex(e[0, 0])


def overlap_dense(mps: MPS, state: DenseState) -> complex:
    """<mps|state>."""
    if mps.n != state.n:
        raise ValueError(f"size mismatch: {mps.n} vs {state.n} qubits")
    return complex(np.vdot(to_dense(mps).amplitudes, state.amplitudes))


def pauli_expectations(mps: MPS, x: np.ndarray, z: np.ndarray, phase_exp=None) -> np.ndarray:
    """<psi| g_s |psi> for a batch of Pauli strings given as (S, n) bit arrays."""
    x = np.atleast_2d(np.asarray(x, dtype=np.int64))
    z = np.atleast_2d(np.asarray(z, dtype=np.int64))
    count = x.shape[0]
    if x.shape[1] != mps.n:
        raise ValueError(f"size mismatch: {x.shape[1]} vs {mps.n} qubits")
    e = np.ones((count, 1, 1), dtype=complex)
    for k, a in enumerate(mps.tensors):
        dl, _, dr = a.shape
        sig = _PAULI_STACK[x[:, k] + 2 * z[:, k]]  # (S, 2, 2)
        ket = (e @ a.reshape(dl, 2 * dr)).reshape(count, dl, 2, dr)
        ket = np.einsum("sxy,sayd->saxd", sig, ket).reshape(count, dl * 2, dr)
        e = a.conj().reshape(dl * 2, dr).T @ ket
    vals = e[:, 0, 0]
    if phase_exp is not None:
        vals = vals * (1j ** (np.asarray(phase_exp) % 4))
    return vals


def pauli_expectation(mps: MPS, pauli: PauliString) -> complex:
    val = pauli_expectations(mps, pauli.x[None], pauli.z[None], [pauli.phase_exp])[0]
    return complex(val)


# ---------------------------------------------------------------------------
# export


def save_mps(mps: MPS, path) -> None:
    """One JSON header line, then the tensors as little-endian complex128, site-major."""
    header = {
        "format": "unimirror-mps",
        "version": 1,
        "n": mps.n,
        "D": mps.D,
        "center": mps.center,
        "bond_dims": mps.bond_dims,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode() + b"\n")
        for a in mps.tensors:
            fh.write(np.ascontiguousarray(a, dtype="<c16").tobytes())


def load_mps(path) -> MPS:
    raw = Path(path).read_bytes()
    head, _, blob = raw.partition(b"\n")
    header = json.loads(head)
    if header.get("format") != "unimirror-mps":
        raise ValueError(f"{path}: not an MPS export")
    dims = [1] + list(header["bond_dims"]) + [1]
    data = np.frombuffer(blob, dtype="<c16")
    tensors, pos = [], 0
    for k in range(header["n"]):
        size = dims[k] * 2 * dims[k + 1]
        tensors.append(data[pos : pos + size].astype(complex).reshape(dims[k], 2, dims[k + 1]))
        pos += size
    if pos != data.size:
        raise ValueError(f"{path}: tensor blob has {data.size} entries, header implies {pos}")
    return MPS(header["n"], header["D"], tensors, header["center"])
