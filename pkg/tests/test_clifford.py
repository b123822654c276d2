import itertools

import numpy as np
import pytest
from scipy import stats

from unimirror.circuit import sample_clifford_gate, sample_clifford_index
from unimirror.clifford import (
    N_CLIFFORD_2Q,
    NotCliffordError,
    canonical_phase,
    clifford_table,
    clifford_tag,
    pauli2_matrix,
)

OMEGA = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])


def _brute_force_sp4_count():
    """Count 4x4 binary matrices preserving the symplectic form (bit order x_a, z_a, x_b, z_b)."""
    count = 0
    for bits in itertools.product((0, 1), repeat=16):
        m = np.array(bits).reshape(4, 4)
        if np.array_equal((m.T @ OMEGA @ m) % 2, OMEGA):
            count += 1
    return count


def test_group_order_matches_symplectic_count():
    sp4 = _brute_force_sp4_count()
    assert sp4 == 720
    _, tags = clifford_table()
    keys = {t.key() for t in tags}
    assert len(tags) == len(keys) == N_CLIFFORD_2Q == sp4 * 16


def test_every_symplectic_and_sign_pattern_present():
    _, tags = clifford_table()
    pairs = {(t.symplectic.tobytes(), t.signs.tobytes()) for t in tags}
    symps = {t.symplectic.tobytes() for t in tags}
    assert len(symps) == 720
    assert len(pairs) == 720 * 16
    for t in tags[::97]:
        s = t.symplectic.astype(int)
        assert np.array_equal((s.T @ OMEGA @ s) % 2, OMEGA)


def test_table_matrices_match_tags():
    mats, tags = clifford_table()
    for k in range(0, N_CLIFFORD_2Q, 53):
        recomputed = clifford_tag(mats[k])
        assert recomputed.key() == tags[k].key()
        assert np.array_equal(recomputed.image, tags[k].image)


def test_conjugates_all_paulis_to_signed_paulis():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = sample_clifford_gate(rng)
        u = g.matrix
        for p in range(1, 16):
            img = u @ pauli2_matrix(p) @ u.conj().T
            q = int(g.clifford_tag.image[p])
            sign = -1 if g.clifford_tag.image_sign[p] else 1
            assert np.allclose(img, sign * pauli2_matrix(q), atol=1e-12)


def test_canonical_phase_first_entry_positive():
    mats, _ = clifford_table()
    for m in mats[::101]:
        flat = m.reshape(-1)
        first = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
        assert first.real > 0 and abs(first.imag) < 1e-12
        assert np.allclose(m.conj().T @ m, np.eye(4), atol=1e-12)


def test_canonical_phase_removes_global_phase():
    m = pauli2_matrix(6)
    assert np.allclose(canonical_phase(1j * m), canonical_phase(m))


def test_non_clifford_rejected():
    t = np.diag([1, np.exp(1j * np.pi / 4)])
    with pytest.raises(NotCliffordError):
        clifford_tag(np.kron(t, np.eye(2)))


def test_sampling_uniform_chi_square():
    rng = np.random.default_rng(5)
    counts = np.zeros(N_CLIFFORD_2Q, dtype=np.int64)
    draws = 1_000_000
    for _ in range(draws):
        counts[sample_clifford_index(rng)] += 1
    chi2 = stats.chisquare(counts).statistic
    dof = N_CLIFFORD_2Q - 1
    assert abs(chi2 - dof) < 5 * np.sqrt(2 * dof)
