"""Per-instance pipeline and the sweep driver.

A work item is one sampled circuit ``(gate_set, N, L, p, sample)``. The
instance seed does not depend on the bond dimension, so every D in the sweep
sees the same circuit and record; the reference state is simulated once per
item and each D reuses it.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import dense, mirror, mps, stabilizer
from ..bounds import (
    BoundsReport,
    SweepCurve,
    entropy_lower_from_eps,
    entropy_upper_from_eps,
    entropy_upper_from_F,
    ledger_eps_per_cut,
)
from ..circuit import GATE_SETS, CircuitInstance, derive_seed, measurement_rng, sample_instance
from ..errors import CapacityError, ImpossibleOutcomeError
from .config import ExperimentConfig

CSV_FIELDS = (
    "gate_set", "N", "L", "p", "D", "sample", "seed", "F", "F_err", "method",
    "eps_max", "S_ub_F", "S_ub_eps", "S_lb_eps", "S_exact", "wall_ms",
)  # fmt: skip


@dataclass
class ResultRow:
    gate_set: str
    N: int
    L: int
    p: float
    D: int
    sample: int
    seed: int
    F: float
    F_err: float
    method: str
    eps_max: float | None
    S_ub_F: float
    S_ub_eps: float | None
    S_lb_eps: float | None
    S_exact: float | None
    wall_ms: float | None = None

    @property
    def key(self) -> tuple:
        return (self.gate_set, self.N, self.L, self.p, self.D, self.sample)

    def as_dict(self) -> dict:
        return asdict(self)


def instance_seed(master_seed: int, gate_set: str, n: int, l: int, p: float, sample: int) -> int:  # noqa: E741
    return derive_seed(master_seed, GATE_SETS.index(gate_set), n, l, int(round(p * 1_000_000)), sample)


# ---------------------------------------------------------------------------
# reference simulation


@dataclass
class Reference:
    """Exact trajectory: the record plus whatever representation the backend produced."""

    backend: str
    record: dict
    state: dense.DenseState | None = None
    tableau: stabilizer.Tableau | None = None
    mps_state: mps.MPS | None = None
    spectra: list | None = None
    stabilizer_entropy_bits: list | None = None

    def entropy(self, cut: int) -> float:
        if self.stabilizer_entropy_bits is not None:
            return self.stabilizer_entropy_bits[cut - 1] * math.log(2)
        mu = self.spectra[cut - 1]
        mu = mu[mu > 0]
        return float(-np.sum(mu * np.log(mu)))

    def schmidt_error(self, cut: int, d: int) -> float:
        if self.stabilizer_entropy_bits is not None:
            k = self.stabilizer_entropy_bits[cut - 1]
            return max(0.0, 1.0 - d / 2.0**k)
        return float(min(1.0, max(0.0, self.spectra[cut - 1][d:].sum())))


def choose_backend(config: ExperimentConfig, n: int) -> str:
    if config.backend != "auto":
        return config.backend
    if n <= config.dense_limit:
        return "dense"
    if config.gate_set == "clifford":
        return "stabilizer"
    if n <= config.mps_limit:
        return "mps"
    raise CapacityError(f"no exact backend for {n} Haar qubits (mps limit {config.mps_limit})")


def simulate_reference(instance: CircuitInstance, backend: str, dense_limit: int = dense.DEFAULT_DENSE_LIMIT) -> Reference:
    rng = measurement_rng(instance.seed)
    n = instance.n
    if backend == "dense":
        state, record = dense.run_monitored(instance, rng, dense_limit)
        spectra = [dense.schmidt_spectrum(state, k).values for k in range(1, n)]
        return Reference(backend, record, state=state, spectra=spectra)
    if backend == "stabilizer":
        tab, record = stabilizer.run_monitored(instance, rng)
        bits = [round(stabilizer.entanglement_entropy(tab, k) / math.log(2)) for k in range(1, n)]
        return Reference(backend, record, tableau=tab, stabilizer_entropy_bits=bits)
    if backend == "mps":
        state, record, _ = mps.run_tebd_sampling(instance, mps.full_bond(n), rng)
        spectra = [mps.schmidt_spectrum(state, k).values for k in range(1, n)]
        return Reference(backend, record, mps_state=state, spectra=spectra)
    raise ValueError(f"unknown backend {backend!r}")


def choose_method(config: ExperimentConfig, ref: Reference, n: int) -> str:
    if config.fidelity_method != "auto":
        return config.fidelity_method
    if ref.state is not None or ref.mps_state is not None:
        return "exact"
    if n <= config.dense_limit:
        return "exact"
    return "mc"


def _dense_reference(ref: Reference, dense_limit: int) -> dense.DenseState:
    if ref.state is not None:
        return ref.state
    n = ref.tableau.n if ref.tableau is not None else ref.mps_state.n
    if n > dense_limit:
        raise CapacityError(f"{n} qubits exceeds the dense limit of {dense_limit}")
    ref.state = stabilizer.to_dense(ref.tableau) if ref.tableau is not None else mps.to_dense(ref.mps_state)
    return ref.state


def measure_fidelity(psi_d: mps.MPS, ref: Reference, method: str, config: ExperimentConfig, rng) -> tuple[float, float]:
    if method == "exact":
        if ref.mps_state is not None and ref.state is None:
            return abs(mps.overlap_mps(psi_d, ref.mps_state)) ** 2, 0.0
        return abs(mps.overlap_dense(psi_d, _dense_reference(ref, config.dense_limit))) ** 2, 0.0
    if method in ("mirror", "shots"):
        circuit = mirror.build_mirror(psi_d, center=math.ceil(psi_d.n / 2))
        target = _dense_reference(ref, config.dense_limit)
        if method == "mirror":
            return mirror.mirror_fidelity(target, circuit, config.dense_limit), 0.0
        return mirror.mirror_fidelity_shots(target, circuit, config.shots, rng)
    if method == "mc":
        if ref.tableau is None:
            raise ValueError("Monte Carlo overlap needs a stabilizer reference")
        return stabilizer.mc_overlap(ref.tableau, psi_d, config.mc_samples, rng)
    raise ValueError(f"unknown fidelity method {method!r}")


# ---------------------------------------------------------------------------
# work items


def run_item(config: ExperimentConfig, n: int, p: float, sample: int, aborted: list | None = None) -> list[ResultRow]:
    """All bond dimensions of one sampled circuit.

    A truncated MPS can give a recorded outcome zero weight. With ``aborted``
    given, that bond dimension is skipped and ``(N, p, sample, D, message)``
    appended; otherwise the error propagates.
    """
    l = config.layers_for(n)  # noqa: E741
    seed = instance_seed(config.master_seed, config.gate_set, n, l, p, sample)
    start = time.perf_counter()
    instance = sample_instance(n, l, p, config.gate_set, seed)
    ref = simulate_reference(instance, choose_backend(config, n), config.dense_limit)
    instance = instance.with_record(ref.record)
    method = choose_method(config, ref, n)
    shared_ms = (time.perf_counter() - start) * 1e3
    half = n // 2
    n_bar = min(half, n - half)
    rows = []
    for d in config.bond_dims_for(n):
        t0 = time.perf_counter()
        try:
            psi_d, _ = mps.run_tebd(instance, d)
        except ImpossibleOutcomeError as exc:
            if aborted is None:
                raise
            aborted.append((n, float(p), sample, d, str(exc)))
            continue
        fid_rng = np.random.default_rng(derive_seed(seed, 2, d))
        fidelity, fidelity_err = measure_fidelity(psi_d, ref, method, config, fid_rng)
        eps_cuts = [ref.schmidt_error(k, d) for k in range(1, n)]
        eps_half = eps_cuts[half - 1]
        wall = shared_ms + (time.perf_counter() - t0) * 1e3
        rows.append(
            ResultRow(
                gate_set=config.gate_set,
                N=n,
                L=l,
                p=float(p),
                D=d,
                sample=sample,
                seed=seed,
                F=float(fidelity),
                F_err=float(fidelity_err),
                method=method,
                eps_max=float(max(eps_cuts)),
                S_ub_F=entropy_upper_from_F(fidelity, d, n),
                S_ub_eps=entropy_upper_from_eps(eps_half, min(d, 2**n_bar), n_bar),
                S_lb_eps=entropy_lower_from_eps(eps_half, d) if d >= 2 else None,
                S_exact=ref.entropy(half),
                wall_ms=round(wall, 3) if config.record_timing else None,
            )
        )
    return rows


def run_instance(config: ExperimentConfig, n: int, p: float, d: int, sample: int) -> ResultRow:
    """Single (cell, sample) row; identical to the matching row of a full sweep."""
    single = ExperimentConfig.from_dict({**config.to_dict(), "d_list": [d]})
    return run_item(single, n, p, sample)[0]


def bounds_report(config: ExperimentConfig, n: int, p: float, d: int, sample: int) -> BoundsReport:
    """Full per-cut report for one instance (used by the ``run`` command and the audits)."""
    l = config.layers_for(n)  # noqa: E741
    seed = instance_seed(config.master_seed, config.gate_set, n, l, p, sample)
    instance = sample_instance(n, l, p, config.gate_set, seed)
    ref = simulate_reference(instance, choose_backend(config, n), config.dense_limit)
    instance = instance.with_record(ref.record)
    psi_d, ledger = mps.run_tebd(instance, d)
    method = choose_method(config, ref, n)
    fid, err = measure_fidelity(psi_d, ref, method, config, np.random.default_rng(derive_seed(seed, 2, d)))
    return BoundsReport(
        n=n,
        d=d,
        p=float(p),
        fidelity=float(fid),
        fidelity_err=float(err),
        eps_cuts=[ref.schmidt_error(k, d) for k in range(1, n)],
        eps_ledger=list(ledger_eps_per_cut(ledger, n)),
        s_exact=[ref.entropy(k) for k in range(1, n)],
        instance_id=f"{config.gate_set}-N{n}-L{l}-p{p:g}-s{sample}-seed{seed}",
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepResult:
    rows: list
    failures: list = field(default_factory=list)
    aborted: list = field(default_factory=list)

    def curves(self, quantity: str = "F") -> list[SweepCurve]:
        return aggregate(self.rows, quantity)


def work_items(config: ExperimentConfig) -> list[tuple[int, float, int]]:
    return [(int(n), float(p), s) for n in config.n_list for p in config.p_grid for s in range(config.samples)]


def _run_item_safe(args):
    config, n, p, sample = args
    aborted: list = []
    try:
        return run_item(config, n, p, sample, aborted), aborted, None
    except Exception as exc:  # reported per item, the sweep continues
        return [], aborted, (n, p, sample, f"{type(exc).__name__}: {exc}")


def run_sweep(config: ExperimentConfig, order=None, workers: int | None = None) -> SweepResult:
    """Execute every work item; rows come back sorted by (N, L, p, D, sample) regardless of order."""
    items = work_items(config)
    if order is not None:
        items = [items[k] for k in order]
    workers = config.workers if workers is None else workers
    args = [(config, n, p, s) for n, p, s in items]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_item_safe, args, chunksize=4))
    else:
        results = [_run_item_safe(a) for a in args]
    rows = sorted((r for batch, _, _ in results for r in batch), key=lambda r: r.key)
    aborted = sorted(a for _, batch, _ in results for a in batch)
    failures = sorted(f for _, _, f in results if f is not None)
    return SweepResult(rows, failures, aborted)


def aggregate(rows, quantity: str = "F") -> list[SweepCurve]:
    """Per (gate_set, N, D) curve of the mean and standard error of ``quantity`` over samples."""
    groups: dict = {}
    for r in rows:
        value = r[quantity] if isinstance(r, dict) else getattr(r, quantity)
        if value is None:
            continue
        get = r.get if isinstance(r, dict) else lambda k, r=r: getattr(r, k)
        groups.setdefault((get("gate_set"), get("N"), get("D")), {}).setdefault(float(get("p")), []).append(
            (get("sample"), float(value))
        )
    curves = []
    for (gate_set, n, d), by_p in sorted(groups.items()):
        ps = sorted(by_p)
        means, errs, counts = [], [], []
        for p in ps:
            vals = np.array([v for _, v in sorted(by_p[p])])
            means.append(vals.mean())
            errs.append(vals.std(ddof=1) / math.sqrt(vals.size) if vals.size > 1 else 0.0)
            counts.append(vals.size)
        curves.append(SweepCurve(ps, means, errs, counts, n, d, gate_set, quantity))
    return curves
