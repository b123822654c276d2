"""Pauli strings in the binary (x, z) representation.

A qubit carrying bits ``(x, z)`` holds the Hermitian single-qubit Pauli
``I, X, Z, Y`` for ``(0, 0), (1, 0), (0, 1), (1, 1)``. A :class:`PauliString`
is ``i**phase_exp`` times the tensor product of those Hermitian factors.
Qubit ``q`` (1-based) lives at array position ``q - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

# indexed by x + 2*z
SINGLE = (I2, X, Z, Y)


def single_qubit_matrix(x: int, z: int) -> np.ndarray:
    return SINGLE[int(x) + 2 * int(z)]


def product_phase_exponent(x1, z1, x2, z2):
    """Power of ``i`` picked up in ``P1 @ P2`` (summed over qubits).

    Works elementwise on integer/bool arrays; the last axis is the qubit
    axis and is summed over.
    """
    x1 = np.asarray(x1, dtype=bool)
    z1 = np.asarray(z1, dtype=bool)
    x2 = np.asarray(x2, dtype=bool)
    z2 = np.asarray(z2, dtype=bool)
    X1, Y1, Z1 = x1 & ~z1, x1 & z1, ~x1 & z1
    X2, Y2, Z2 = x2 & ~z2, x2 & z2, ~x2 & z2
    plus = (X1 & Y2) | (Y1 & Z2) | (Z1 & X2)
    minus = (X1 & Z2) | (Y1 & X2) | (Z1 & Y2)
    return plus.sum(axis=-1).astype(np.int64) - minus.sum(axis=-1).astype(np.int64)


@dataclass
class PauliString:
    x: np.ndarray
    z: np.ndarray
    phase_exp: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.uint8) & 1
        self.z = np.asarray(self.z, dtype=np.uint8) & 1
        if self.x.shape != self.z.shape or self.x.ndim != 1:
            raise ValueError("x and z must be 1-d arrays of equal length")
        self.phase_exp = int(self.phase_exp) % 4

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def phase(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase_exp]

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(np.zeros(n, np.uint8), np.zeros(n, np.uint8), 0)

    @classmethod
    def from_label(cls, label: str, phase_exp: int = 0) -> "PauliString":
        """``"XZIY"``: first character is qubit 1. A leading ``-`` flips the sign."""
        if label.startswith("-"):
            phase_exp += 2
            label = label[1:]
        x = np.array([c in "XY" for c in label], dtype=np.uint8)
        z = np.array([c in "ZY" for c in label], dtype=np.uint8)
        return cls(x, z, phase_exp)

    def label(self) -> str:
        chars = "IXZY"
        body = "".join(chars[int(a) + 2 * int(b)] for a, b in zip(self.x, self.z))
        return ("", "i", "-", "-i")[self.phase_exp] + body

    def __mul__(self, other: "PauliString") -> "PauliString":
        k = product_phase_exponent(self.x, self.z, other.x, other.z)
        return PauliString(
            self.x ^ other.x, self.z ^ other.z, self.phase_exp + other.phase_exp + int(k)
        )

    def commutes(self, other: "PauliString") -> bool:
        s = int(np.sum(self.x & other.z) + np.sum(self.z & other.x))
        return s % 2 == 0

    def to_matrix(self) -> np.ndarray:
        """Dense matrix in the little-endian basis (qubit 1 least significant)."""
        m = np.array([[1.0 + 0j]])
        # kron puts its first factor on the most significant bit
        for q in reversed(range(self.n)):
            m = np.kron(m, single_qubit_matrix(self.x[q], self.z[q]))
        return self.phase * m

    def __eq__(self, other):
        if not isinstance(other, PauliString):
            return NotImplemented
        return (
            self.phase_exp == other.phase_exp
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
        )
