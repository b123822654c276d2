"""Outcome decision shared by every backend.

A genuinely random outcome consumes exactly one uniform draw ``u`` and
resolves to 1 iff ``u < P(1)``. Deterministic outcomes consume nothing.
Because all backends follow this rule and measure a layer's qubits in
ascending order, equal seeds give equal records across backends.
"""

DETERMINISTIC_TOL = 1e-12


def decide_outcome(p1: float, rng, tol: float = DETERMINISTIC_TOL) -> int:
    if p1 <= tol:
        return 0
    if p1 >= 1.0 - tol:
        return 1
    return int(rng.random() < p1)
