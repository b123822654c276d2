"""Entanglement bounds from Schmidt errors and mirror fidelities (all in nats).

Besides the closed-form bounds this module holds the brute-force oracle for
the extremal sums ``sum_i mu_i**alpha`` over a box-constrained simplex, used
by the tests to check the closed forms :func:`f_plus`, :func:`f_minus_no_floor`
and :func:`f_minus_full_cap`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

LN2 = math.log(2.0)
DEFAULT_EPS_THRESHOLD = 0.05


def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {eps}")
    return eps


def _xlogx(v: float) -> float:
    return v * math.log(v) if v > 0 else 0.0


def binary_entropy(eps: float) -> float:
    eps = _check_eps(eps)
    return -_xlogx(1.0 - eps) - _xlogx(eps)


def max_fidelity_bound(eps_cuts) -> float:
    """Largest fidelity any bond-D MPS can reach given the per-cut Schmidt errors."""
    eps = [_check_eps(e) for e in eps_cuts]
    if not eps:
        raise ValueError("need at least one cut")
    return 1.0 - max(eps)


def entropy_upper_from_eps(eps: float, d: int, n_bar: int) -> float:
    eps = _check_eps(eps)
    full = 2**n_bar
    if d < 1 or d > full:
        raise ValueError(f"bond dimension {d} outside [1, 2**{n_bar}]")
    tail = 0.0 if d == full else eps * math.log(full - d)
    return binary_entropy(eps) + (1.0 - eps) * math.log(d) + tail


def entropy_upper_from_F(fidelity: float, d: int, n: int) -> float:
    """Half-chain entropy bound implied by a mirror fidelity; affine in the fidelity."""
    if d < 1:
        raise ValueError("bond dimension must be >= 1")
    return (1.0 + n * (1.0 - fidelity) / 2.0) * LN2 + fidelity * math.log(d)


def volume_law_bound(fidelity: float, d: int, n: int, beta: float = 1.0, a: float = 1.0) -> float:
    """Bound on the half-chain entropy per qubit when ``D <= (A N)**beta``."""
    if d > (a * n) ** beta * (1 + 1e-12):
        raise ValueError(f"D={d} exceeds (A N)^beta = {(a * n) ** beta:g}")
    return (2.0 * LN2 + beta * fidelity * math.log(a * n)) / n


def entropy_lower_from_eps(eps: float, d: int) -> float:
    eps = _check_eps(eps)
    if d < 2:
        raise ValueError("lower bound needs D >= 2")
    return binary_entropy(eps) + eps * (1.0 + math.log(d * math.log(d)))


def ledger_eps_per_cut(ledger, n: int, combine: str = "max") -> np.ndarray:
    """Per-cut truncation error from a TEBD ledger; index ``k`` is the cut after qubit ``k+1``.

    A step on ``(q1, q1+1)`` truncates the bond at cut ``q1``. ``combine='max'``
    takes the largest single-step error; ``'sum'`` adds them up.
    """
    out = np.zeros(n - 1)
    for step in ledger:
        k = step.q1 - 1
        if combine == "max":
            out[k] = max(out[k], step.eps)
        elif combine == "sum":
            out[k] += step.eps
        else:
            raise ValueError(f"unknown combine rule {combine!r}")
    return np.minimum(out, 1.0)


# ---------------------------------------------------------------------------
# per-instance report


@dataclass
class BoundsReport:
    n: int
    d: int
    p: float
    fidelity: float
    fidelity_err: float = 0.0
    eps_cuts: list | None = None
    eps_ledger: list | None = None
    s_exact: list | None = None
    instance_id: str = ""
    s_upper_from_F: float = field(init=False)
    s_upper_from_eps: list | None = field(init=False, default=None)
    s_lower_from_eps: list | None = field(init=False, default=None)
    s_lower_from_ledger: list | None = field(init=False, default=None)

    def __post_init__(self):
        n = self.n
        self.s_upper_from_F = entropy_upper_from_F(self.fidelity, self.d, n)
        if self.eps_cuts is not None:
            self.eps_cuts = [float(e) for e in self.eps_cuts]
            self.s_upper_from_eps = [
                entropy_upper_from_eps(e, min(self.d, 2 ** min(k, n - k)), min(k, n - k))
                for k, e in enumerate(self.eps_cuts, start=1)
            ]
            if self.d >= 2:
                self.s_lower_from_eps = [entropy_lower_from_eps(e, self.d) for e in self.eps_cuts]
        if self.eps_ledger is not None and self.d >= 2:
            self.eps_ledger = [float(e) for e in self.eps_ledger]
            self.s_lower_from_ledger = [entropy_lower_from_eps(e, self.d) for e in self.eps_ledger]

    @property
    def half_cut(self) -> int:
        return self.n // 2

    @property
    def max_fidelity(self) -> float | None:
        return None if self.eps_cuts is None else max_fidelity_bound(self.eps_cuts)

    def violations(self, slack: float = 1e-9) -> list[str]:
        """Failed inequalities among the upper/lower/fidelity bounds (needs exact references)."""
        out = []
        if self.s_exact is None or self.eps_cuts is None:
            return out
        for k, s in enumerate(self.s_exact, start=1):
            if s > self.s_upper_from_eps[k - 1] + slack:
                out.append(f"upper-from-eps at cut {k}: S={s:.12g} > {self.s_upper_from_eps[k - 1]:.12g}")
            if self.s_lower_from_eps is not None and s < self.s_lower_from_eps[k - 1] - slack:
                out.append(f"lower-from-eps at cut {k}: S={s:.12g} < {self.s_lower_from_eps[k - 1]:.12g}")
        s_half = self.s_exact[self.half_cut - 1]
        if s_half > self.s_upper_from_F + slack:
            out.append(f"upper-from-F: S={s_half:.12g} > {self.s_upper_from_F:.12g}")
        if self.fidelity > self.max_fidelity + slack:
            out.append(f"fidelity {self.fidelity:.12g} exceeds max {self.max_fidelity:.12g}")
        return out

    def to_json(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


# ---------------------------------------------------------------------------
# sweep curves and the epsilon test


@dataclass
class SweepCurve:
    p: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    n: int
    d: int
    gate_set: str
    quantity: str = "S_ub_F"

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)
        self.counts = np.asarray(self.counts, dtype=int)
        if self.p.size == 0:
            raise ValueError("empty curve")
        if np.any(np.diff(self.p) <= 0):
            raise ValueError("p grid must be strictly increasing")


def epsilon_test_pc(curve: SweepCurve, threshold: float = DEFAULT_EPS_THRESHOLD) -> float | None:
    """Smallest grid p whose mean F-derived entropy bound falls below ``threshold * N / 2``.

    Returns ``None`` when no grid point qualifies.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    below = np.flatnonzero(curve.mean < threshold * curve.n / 2.0)
    return float(curve.p[below[0]]) if below.size else None


# ---------------------------------------------------------------------------
# extremal sums over the box-constrained simplex


def f_plus(m: int, total: float, alpha: float) -> float:
    """Extremum of ``sum mu**alpha`` at the flat spectrum (entropy-maximizing side)."""
    return m * (total / m) ** alpha


def f_minus_no_floor(m: int, total: float, p_max: float, alpha: float) -> float:
    """Entropy-minimizing extremum with ``p_min = 0``: fill entries to ``p_max`` greedily."""
    full = math.floor(total / p_max + 1e-12)
    rest = max(0.0, total - full * p_max)
    return full * p_max**alpha + (rest**alpha if rest > 0 else 0.0)


def f_minus_full_cap(m: int, total: float, p_min: float, alpha: float) -> float:
    """Entropy-minimizing extremum with no effective cap: one large entry, the rest at ``p_min``."""
    return (total - (m - 1) * p_min) ** alpha + (m - 1) * (p_min**alpha if p_min > 0 else 0.0)


def _power_sum(mu: np.ndarray, alpha: float) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.where(mu > 0, np.abs(mu) ** alpha, 0.0).sum(axis=-1)


def _vertices(m, total, lo, hi):
    """Vertices of {sum mu = total, lo <= mu <= hi}: all entries at a bound except at most one."""
    out = []
    for k_hi in range(m + 1):
        for free in range(m):
            rest = total - k_hi * hi - (m - 1 - k_hi) * lo if k_hi <= m - 1 else None
            if rest is None or not lo - 1e-12 <= rest <= hi + 1e-12:
                continue
            mu = [hi] * k_hi + [lo] * (m - 1 - k_hi)
            mu.insert(free, rest)
            out.append(mu)
    return np.array(out) if out else np.empty((0, m))


def _grid(m, total, lo, hi, steps):
    slack = total - m * lo
    pts = [
        [lo + slack * c / steps for c in comp]
        for comp in _compositions(steps, m)
    ]
    pts = np.array(pts)
    return pts[np.all(pts <= hi + 1e-12, axis=1)]


def _compositions(k, m):
    for cuts in itertools.combinations(range(k + m - 1), m - 1):
        prev, comp = -1, []
        for c in cuts:
            comp.append(c - prev - 1)
            prev = c
        comp.append(k + m - 1 - prev - 1)
        yield comp


def extremal_spectrum_oracle(
    m: int, total: float, p_min: float, p_max: float, alpha: float, sign: int, steps: int | None = None
) -> float:
    """Brute-force extremum of ``sum mu**alpha`` under ``sum mu = total``, ``p_min <= mu <= p_max``.

    ``sign=+1`` targets the entropy-maximizing extremum (largest sum for
    ``alpha < 1``, smallest for ``alpha > 1``); ``sign=-1`` the other one.
    Combines vertex enumeration, a simplex grid and pairwise-transfer refinement.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    tol = 1e-12
    p_max = min(p_max, total - (m - 1) * p_min)
    if p_min < -tol or p_min > total / m + tol or p_max < total / m - tol:
        raise ValueError("infeasible constraints")
    if m == 1:
        return total**alpha
    # direction: maximize s * sum mu**alpha
    s = sign * (1 if alpha < 1 else -1)
    steps = steps or {2: 400, 3: 120, 4: 48, 5: 28, 6: 20}.get(m, 12)
    cand = np.vstack([_vertices(m, total, p_min, p_max), _grid(m, total, p_min, p_max, steps)])
    vals = s * _power_sum(cand, alpha)
    best = cand[int(np.argmax(vals))].copy()
    best_val = float(vals.max())
    delta = (total - m * p_min) / steps
    while delta > 1e-9:
        improved = False
        for i, j in itertools.permutations(range(m), 2):
            move = min(delta, best[j] - p_min, p_max - best[i])
            if move <= 0:
                continue
            trial = best.copy()
            trial[i] += move
            trial[j] -= move
            val = s * float(_power_sum(trial, alpha))
            if val > best_val + 1e-15:
                best, best_val, improved = trial, val, True
        if not improved:
            delta /= 2
    return s * best_val
