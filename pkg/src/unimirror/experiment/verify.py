"""Cross-backend and bound-validity audits runnable from the command line."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import bounds, dense, mirror, mps, stabilizer
from ..circuit import derive_seed, sample_instance
from ..errors import ImpossibleOutcomeError
from .config import ExperimentConfig
from .pipeline import bounds_report


@dataclass
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def suite_mirror(count: int = 200, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 1.0
    for _ in range(count):
        n, d = int(rng.integers(3, 11)), int(rng.integers(1, 9))
        state = mps.random_mps(n, d, rng)
        built = mirror.apply_to_zero(mirror.build_mirror(state))
        worst = min(worst, abs(mps.overlap_dense(state, built)) ** 2)
    return SuiteResult("mirror", worst >= 1 - 1e-9, f"worst reconstruction fidelity {worst:.15f} over {count} MPS")


def suite_tebd(count: int = 100, seed: int = 0) -> SuiteResult:
    worst = 1.0
    k = 0
    for gate_set in ("haar", "clifford"):
        for n in (6, 8, 10, 12):
            for p in (0.0, 0.2, 0.5, 1.0):
                for s in range(math.ceil(count / 32)):
                    inst = sample_instance(n, n, p, gate_set, derive_seed(seed, n, int(p * 10), s, len(gate_set)))
                    state, record = dense.run_monitored(inst)
                    psi_d, _ = mps.run_tebd(inst.with_record(record), 2 ** (n // 2))
                    worst = min(worst, abs(mps.overlap_dense(psi_d, state)) ** 2)
                    k += 1
    return SuiteResult("tebd", worst >= 1 - 1e-9, f"worst full-bond fidelity {worst:.15f} over {k} instances")


def suite_bounds(count: int = 500, seed: int = 0) -> SuiteResult:
    bad, k, aborted = [], 0, 0
    grid = [(g, n, p) for g in ("clifford", "haar") for n in (4, 6, 8, 10, 12) for p in (0.1, 0.3, 0.6)]
    per = max(1, math.ceil(count / (len(grid) * 4)))
    for gate_set, n, p in grid:
        cfg = ExperimentConfig(gate_set=gate_set, master_seed=seed)
        for s in range(per):
            for d in (1, 2, 4, 8):
                try:
                    report = bounds_report(cfg, n, p, d, s)
                except ImpossibleOutcomeError:
                    aborted += 1
                    continue
                bad += [f"{report.instance_id} D={d}: {v}" for v in report.violations()]
                k += 1
    detail = f"{len(bad)} violations over {k} instances ({aborted} aborted)" + (f"; first: {bad[0]}" if bad else "")
    return SuiteResult("bounds", not bad and k >= count, detail)


def suite_backends(count: int = 200, seed: int = 0) -> SuiteResult:
    mismatches = 0
    for s in range(count):
        n = 2 + s % 9
        p = (s % 5) / 4
        inst = sample_instance(n, n, p, "clifford", derive_seed(seed, 7, s))
        state, rec_d = dense.run_monitored(inst)
        tab, rec_s = stabilizer.run_monitored(inst)
        ent_ok = all(
            abs(stabilizer.entanglement_entropy(tab, c) - dense.entropy(dense.schmidt_spectrum(state, c))) < 1e-9
            for c in range(1, n)
        )
        mismatches += (rec_d != rec_s) or not ent_ok
    return SuiteResult("backends", mismatches == 0, f"{mismatches} mismatching instances out of {count}")


def suite_mc(count: int = 50, seed: int = 0, samples: int = 10_000) -> SuiteResult:
    inside = done = s = 0
    while done < count:
        n = 4 + s % 7
        inst = sample_instance(n, n, 0.2, "clifford", derive_seed(seed, 8, s))
        s += 1
        state, record = dense.run_monitored(inst)
        tab, _ = stabilizer.run_monitored(inst)
        try:
            psi_d, _ = mps.run_tebd(inst.with_record(record), 2)
        except ImpossibleOutcomeError:
            continue
        done += 1
        exact = abs(mps.overlap_dense(psi_d, state)) ** 2
        est, err = stabilizer.mc_overlap(tab, psi_d, samples, np.random.default_rng(derive_seed(seed, 9, s)))
        inside += abs(est - exact) <= 3 * err + 1e-12
    frac = inside / count
    return SuiteResult("mc", frac >= 0.95, f"{inside}/{count} estimates within 3 standard errors")


def suite_extremal() -> SuiteResult:
    worst = 0.0
    for m in range(1, 7):
        for alpha in (0.5, 2.0, 3.0):
            total = 1.0
            worst = max(worst, abs(bounds.extremal_spectrum_oracle(m, total, 0.0, total, alpha, 1) - bounds.f_plus(m, total, alpha)))
            p_max = min(total, 1.6 / m)
            brute = bounds.extremal_spectrum_oracle(m, total, 0.0, p_max, alpha, -1)
            worst = max(worst, abs(brute - bounds.f_minus_no_floor(m, total, p_max, alpha)))
            p_min = 0.5 / m
            brute = bounds.extremal_spectrum_oracle(m, total, p_min, total, alpha, -1)
            worst = max(worst, abs(brute - bounds.f_minus_full_cap(m, total, p_min, alpha)))
    return SuiteResult("extremal", worst <= 1e-3, f"largest closed-form deviation {worst:.2e}")


SUITES = {
    "mirror": suite_mirror,
    "tebd": suite_tebd,
    "bounds": suite_bounds,
    "backends": suite_backends,
    "mc": suite_mc,
    "extremal": suite_extremal,
}


def verify(names) -> list[SuiteResult]:
    unknown = [n for n in names if n not in SUITES and n != "all"]
    if unknown:
        raise ValueError(f"unknown suite(s): {', '.join(unknown)}")
    selected = list(SUITES) if "all" in names else names
    return [SUITES[n]() for n in selected]
