"""The two-qubit Clifford group, tabulated once.

Elements are enumerated by breadth-first search over the generators
``H_a, H_b, S_a, S_b, CNOT_ab`` and deduplicated on their Pauli conjugation
action (which identifies a Clifford up to global phase). The table is built
lazily and cached; its order is fixed by the BFS, so indices into it are
stable across runs.

Two-qubit Paulis are indexed ``x_a + 2 z_a + 4 x_b + 8 z_b`` where ``a`` is
the first (most significant) qubit of the gate basis ``|q1 q2>``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import single_qubit_matrix

N_CLIFFORD_2Q = 11520


def pauli2_bits(idx: int) -> tuple[int, int, int, int]:
    return idx & 1, (idx >> 1) & 1, (idx >> 2) & 1, (idx >> 3) & 1


def pauli2_matrix(idx: int) -> np.ndarray:
    xa, za, xb, zb = pauli2_bits(idx)
    return np.kron(single_qubit_matrix(xa, za), single_qubit_matrix(xb, zb))


_PAULI2 = np.array([pauli2_matrix(k) for k in range(16)])
_PAULI2_FLAT = _PAULI2.reshape(16, 16).T.copy()

# generator order for the symplectic tag: X_a, Z_a, X_b, Z_b
GENERATOR_INDICES = (1, 2, 4, 8)


@dataclass(frozen=True)
class CliffordTag:
    """Conjugation action ``U P U^dag = (-1)**sign[P] * P'`` of a two-qubit Clifford.

    ``symplectic[:, k]`` holds the bits ``(x_a, z_a, x_b, z_b)`` of the image of
    the k-th generator (X_a, Z_a, X_b, Z_b) and ``signs[k]`` its sign bit.
    ``image`` / ``image_sign`` tabulate the action on all 16 Paulis.
    """

    symplectic: np.ndarray
    signs: np.ndarray
    image: np.ndarray
    image_sign: np.ndarray

    def key(self) -> bytes:
        return self.symplectic.tobytes() + self.signs.tobytes()


class NotCliffordError(ValueError):
    pass


def conjugation_table(matrix: np.ndarray, atol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Map each Pauli index to (image index, sign bit) under ``U P U^dag``."""
    u = np.asarray(matrix, dtype=complex)
    conj = u @ _PAULI2 @ u.conj().T
    # coefficient of Pauli Q in U P U^dag is tr(Q U P U^dag) / 4 (Q Hermitian)
    coeff = conj.transpose(0, 2, 1).reshape(16, 16) @ _PAULI2_FLAT / 4.0
    image = np.argmax(np.abs(coeff), axis=1)
    c = coeff[np.arange(16), image]
    if not (np.allclose(np.abs(c), 1.0, atol=atol) and np.allclose(c.imag, 0.0, atol=atol)):
        raise NotCliffordError("matrix does not map Paulis to signed Paulis")
    if np.any(np.abs(coeff).sum(axis=1) - np.abs(c) > atol):
        raise NotCliffordError("matrix does not map Paulis to signed Paulis")
    return image.astype(np.uint8), (c.real < 0).astype(np.uint8)


def clifford_tag(matrix: np.ndarray) -> CliffordTag:
    image, sign = conjugation_table(matrix)
    gens = image[list(GENERATOR_INDICES)]
    symp = np.array([pauli2_bits(int(g)) for g in gens], dtype=np.uint8).T.copy()
    return CliffordTag(symp, sign[list(GENERATOR_INDICES)].copy(), image, sign)


def canonical_phase(matrix: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    """Rescale by a phase so the first nonzero entry (row-major) is real positive."""
    flat = matrix.reshape(-1)
    k = int(np.argmax(np.abs(flat) > atol))
    return matrix * (abs(flat[k]) / flat[k])


def _clean(matrix: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    re, im = matrix.real.copy(), matrix.imag.copy()
    re[np.abs(re) < atol] = 0.0
    im[np.abs(im) < atol] = 0.0
    return re + 1j * im


def _generators() -> list[np.ndarray]:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    s = np.diag([1, 1j])
    i2 = np.eye(2)
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
    return [np.kron(h, i2), np.kron(i2, h), np.kron(s, i2), np.kron(i2, s), cnot]


def _compose(outer: CliffordTag, inner: CliffordTag) -> CliffordTag:
    """Tag of ``outer @ inner`` from the two conjugation tables."""
    image = outer.image[inner.image]
    sign = inner.image_sign ^ outer.image_sign[inner.image]
    gens = list(GENERATOR_INDICES)
    symp = np.array([pauli2_bits(int(g)) for g in image[gens]], dtype=np.uint8).T.copy()
    return CliffordTag(symp, sign[gens].copy(), image, sign)


@lru_cache(maxsize=1)
def clifford_table() -> tuple[tuple[np.ndarray, ...], tuple[CliffordTag, ...]]:
    """All 11520 two-qubit Cliffords (mod phase) as (matrices, tags), in BFS order."""
    gens = _generators()
    gen_tags = [clifford_tag(g) for g in gens]
    start = np.eye(4, dtype=complex)
    start_tag = clifford_tag(start)
    seen = {start_tag.key()}
    mats = [start]
    tags = [start_tag]
    queue = deque([0])
    while queue:
        k = queue.popleft()
        for g, gt in zip(gens, gen_tags):
            tag = _compose(gt, tags[k])
            key = tag.key()
            if key in seen:
                continue
            seen.add(key)
            mats.append(_clean(canonical_phase(g @ mats[k])))
            tags.append(tag)
            queue.append(len(mats) - 1)
    for m in mats:
        m.setflags(write=False)
    return tuple(mats), tuple(tags)


def clifford_element(index: int) -> tuple[np.ndarray, CliffordTag]:
    mats, tags = clifford_table()
    return mats[index], tags[index]
