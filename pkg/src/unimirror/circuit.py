"""Monitored brickwork circuits: layout, gate sampling and (de)serialization.

Qubits and layers are 1-based throughout, matching the measurement record
keys ``(layer, qubit)``. Two-qubit gate matrices act on the basis
``|q1 q2>`` with ``q1`` the most significant bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .clifford import N_CLIFFORD_2Q, CliffordTag, clifford_element, clifford_tag
from .errors import CircuitFormatError, InvalidSizeError

SCHEMA_VERSION = 1
GATE_SETS = ("haar", "clifford")

MeasurementRecord = dict  # (layer, qubit) -> bit


# ---------------------------------------------------------------------------
# RNG streams


def derive_seed(master_seed: int, *key: int) -> int:
    """64-bit seed for the stream labelled ``key`` under ``master_seed``.

    Counter-based: the result depends only on (master_seed, key), never on
    how many other streams were drawn before.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)


def circuit_rng(seed: int) -> np.random.Generator:
    """Stream used to draw the gates and measurement layout of an instance."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(0,)))


def measurement_rng(seed: int) -> np.random.Generator:
    """Stream used to draw measurement outcomes when simulating an instance."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))


# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True, eq=False)
class GateSpec:
    layer: int
    q1: int
    q2: int
    matrix: np.ndarray
    clifford_tag: Optional[CliffordTag] = None

    @property
    def pair(self) -> tuple[int, int]:
        return (self.q1, self.q2)

    def __eq__(self, other):
        if not isinstance(other, GateSpec):
            return NotImplemented
        return (
            (self.layer, self.q1, self.q2) == (other.layer, other.q1, other.q2)
            and np.array_equal(self.matrix, other.matrix)
            and (self.clifford_tag is None) == (other.clifford_tag is None)
        )


@dataclass(eq=False)
class CircuitInstance:
    """One monitored-circuit run: gates, measurement layout and (optionally) record."""

    n: int
    l: int  # noqa: E741
    p: float
    gate_set: str
    seed: int
    gates: tuple[GateSpec, ...]
    layout: tuple[tuple[int, ...], ...]
    record: Optional[MeasurementRecord] = None
    _by_pair: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        self.p = float(self.p)
        self._by_pair = {(g.layer, g.q1): g for g in self.gates}

    def gate(self, layer: int, q1: int) -> GateSpec:
        return self._by_pair[(layer, q1)]

    def measured(self, layer: int) -> tuple[int, ...]:
        return self.layout[layer - 1]

    def with_record(self, record: MeasurementRecord) -> "CircuitInstance":
        validate_record(self, record)
        return CircuitInstance(
            self.n, self.l, self.p, self.gate_set, self.seed, self.gates, self.layout, dict(record)
        )

    def __eq__(self, other):
        if not isinstance(other, CircuitInstance):
            return NotImplemented
        return serialize(self) == serialize(other)


# ---------------------------------------------------------------------------
# Layout


def brickwork_pairs(n: int, layer: int) -> list[tuple[int, int]]:
    """Gate pairs of ``layer`` in application order.

    Odd layers pair (1,2), (3,4), ... ascending; even layers pair (2,3),
    (4,5), ... but are listed descending (the snake used by the MPS sweep).
    Boundary qubits without a partner are left out.
    """
    if n < 2:
        raise InvalidSizeError(f"need at least 2 qubits, got {n}")
    if layer < 1:
        raise InvalidSizeError(f"layers are 1-based, got {layer}")
    if layer % 2 == 1:
        return [(q, q + 1) for q in range(1, n, 2)]
    start = n - 2 if n % 2 == 0 else n - 1
    return [(q, q + 1) for q in range(start, 1, -2)]


def measured_count(n: int, p: float) -> int:
    """round-half-to-even(p * n); the inner round strips float fuzz like 2.5000000000000004."""
    return int(round(round(p * n, 9)))


def sample_layout(n: int, l: int, p: float, rng: np.random.Generator) -> tuple[tuple[int, ...], ...]:  # noqa: E741
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"measurement rate must lie in [0, 1], got {p}")
    k = measured_count(n, p)
    layers = []
    for _ in range(l):
        sites = rng.choice(n, size=k, replace=False) + 1
        layers.append(tuple(sorted(int(q) for q in sites)))
    return tuple(layers)


# ---------------------------------------------------------------------------
# Gate sampling


def sample_haar_gate(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix.

    The phases of R's diagonal are pushed into Q so the result is exactly
    Haar distributed rather than biased by the QR sign convention.
    """
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def sample_clifford_index(rng: np.random.Generator) -> int:
    return int(rng.integers(N_CLIFFORD_2Q))


def sample_clifford_gate(rng: np.random.Generator, layer: int = 1, q1: int = 1) -> GateSpec:
    """Uniformly random two-qubit Clifford (mod global phase) with its tag."""
    matrix, tag = clifford_element(sample_clifford_index(rng))
    return GateSpec(layer, q1, q1 + 1, matrix, tag)


def sample_instance(n: int, l: int, p: float, gate_set: str, seed: int) -> CircuitInstance:  # noqa: E741
    """Draw a monitored circuit. Everything is determined by ``seed``."""
    if gate_set not in GATE_SETS:
        raise ValueError(f"unknown gate set {gate_set!r}")
    if n < 2:
        raise InvalidSizeError(f"need at least 2 qubits, got {n}")
    rng = circuit_rng(seed)
    gates = []
    for layer in range(1, l + 1):
        for q1, q2 in brickwork_pairs(n, layer):
            if gate_set == "haar":
                gates.append(GateSpec(layer, q1, q2, sample_haar_gate(rng)))
            else:
                gates.append(sample_clifford_gate(rng, layer, q1))
    layout = sample_layout(n, l, p, rng)
    return CircuitInstance(n, l, p, gate_set, int(seed), tuple(gates), layout)


def validate_record(instance: CircuitInstance, record: MeasurementRecord) -> None:
    expected = {(layer, q) for layer in range(1, instance.l + 1) for q in instance.measured(layer)}
    if set(record) != expected:
        missing = sorted(expected - set(record))[:3]
        extra = sorted(set(record) - expected)[:3]
        raise ValueError(f"record does not match layout (missing {missing}, unexpected {extra})")
    if any(b not in (0, 1) for b in record.values()):
        raise ValueError("record entries must be bits")


# ---------------------------------------------------------------------------
# JSON


def _encode_matrix(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def to_dict(instance: CircuitInstance) -> dict:
    record = None
    if instance.record is not None:
        record = [[lq[0], lq[1], int(b)] for lq, b in sorted(instance.record.items())]
    return {
        "version": SCHEMA_VERSION,
        "n": instance.n,
        "l": instance.l,
        "p": instance.p,
        "gate_set": instance.gate_set,
        "seed": instance.seed,
        "gates": [
            {"layer": g.layer, "q1": g.q1, "q2": g.q2, "matrix": _encode_matrix(g.matrix)}
            for g in instance.gates
        ],
        "layout": [list(m) for m in instance.layout],
        "record": record,
    }


def serialize(instance: CircuitInstance) -> str:
    return json.dumps(to_dict(instance), separators=(",", ":"))


_TOP_FIELDS = ("version", "n", "l", "p", "gate_set", "seed", "gates", "layout", "record")
_GATE_FIELDS = ("layer", "q1", "q2", "matrix")


def _require_int(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise CircuitFormatError("expected an integer", field=name)
    return value


def _decode_matrix(raw, name) -> np.ndarray:
    try:
        arr = np.array(raw, dtype=float)
    except (TypeError, ValueError):
        raise CircuitFormatError("matrix must be nested [re, im] pairs", field=name) from None
    if arr.shape != (4, 4, 2):
        raise CircuitFormatError(f"matrix must have shape 4x4x2, got {arr.shape}", field=name)
    return arr[..., 0] + 1j * arr[..., 1]


def from_dict(data: dict) -> CircuitInstance:
    if not isinstance(data, dict):
        raise CircuitFormatError("top level must be an object")
    for key in data:
        if key not in _TOP_FIELDS:
            raise CircuitFormatError("unknown field", field=key)
    for key in _TOP_FIELDS:
        if key not in data:
            raise CircuitFormatError("missing field", field=key)
    if data["version"] != SCHEMA_VERSION:
        raise CircuitFormatError(f"unsupported version {data['version']!r}", field="version")
    n = _require_int(data["n"], "n")
    l = _require_int(data["l"], "l")  # noqa: E741
    seed = _require_int(data["seed"], "seed")
    p = data["p"]
    if isinstance(p, bool) or not isinstance(p, (int, float)) or not 0 <= p <= 1:
        raise CircuitFormatError("p must be a number in [0, 1]", field="p")
    gate_set = data["gate_set"]
    if gate_set not in GATE_SETS:
        raise CircuitFormatError(f"unknown gate set {gate_set!r}", field="gate_set")

    gates = []
    for i, raw in enumerate(data["gates"]):
        where = f"gates[{i}]"
        if not isinstance(raw, dict):
            raise CircuitFormatError("gate must be an object", field=where)
        for key in raw:
            if key not in _GATE_FIELDS:
                raise CircuitFormatError("unknown field", field=f"{where}.{key}")
        for key in _GATE_FIELDS:
            if key not in raw:
                raise CircuitFormatError("missing field", field=f"{where}.{key}")
        matrix = _decode_matrix(raw["matrix"], f"{where}.matrix")
        tag = None
        if gate_set == "clifford":
            try:
                tag = clifford_tag(matrix)
            except ValueError as exc:
                raise CircuitFormatError(str(exc), field=f"{where}.matrix") from None
        gates.append(
            GateSpec(
                _require_int(raw["layer"], f"{where}.layer"),
                _require_int(raw["q1"], f"{where}.q1"),
                _require_int(raw["q2"], f"{where}.q2"),
                matrix,
                tag,
            )
        )
    expected = [(layer, pr) for layer in range(1, l + 1) for pr in brickwork_pairs(n, layer)]
    if [(g.layer, g.pair) for g in gates] != expected:
        raise CircuitFormatError("gates do not cover the brickwork layout in order", field="gates")

    layout_raw = data["layout"]
    if not isinstance(layout_raw, list) or len(layout_raw) != l:
        raise CircuitFormatError(f"layout must list {l} layers", field="layout")
    layout = []
    for i, sites in enumerate(layout_raw):
        if not isinstance(sites, list) or len(set(sites)) != len(sites):
            raise CircuitFormatError("layer sites must be a list of distinct qubits", field=f"layout[{i}]")
        for q in sites:
            if _require_int(q, f"layout[{i}]") < 1 or q > n:
                raise CircuitFormatError(f"qubit {q} out of range", field=f"layout[{i}]")
        layout.append(tuple(sites))

    instance = CircuitInstance(n, l, float(p), gate_set, seed, tuple(gates), tuple(layout))
    if data["record"] is not None:
        record = {}
        for i, entry in enumerate(data["record"]):
            if not (isinstance(entry, list) and len(entry) == 3):
                raise CircuitFormatError("record entries are [layer, qubit, bit]", field=f"record[{i}]")
            layer, q, bit = (_require_int(v, f"record[{i}]") for v in entry)
            record[(layer, q)] = bit
        try:
            validate_record(instance, record)
        except ValueError as exc:
            raise CircuitFormatError(str(exc), field="record") from None
        instance = instance.with_record(record)
    return instance


def deserialize(text: str) -> CircuitInstance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CircuitFormatError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    return from_dict(data)
