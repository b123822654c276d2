from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from ..circuit import GATE_SETS

BACKENDS = ("auto", "dense", "stabilizer", "mps")
FIDELITY_METHODS = ("auto", "exact", "mirror", "mc", "shots")


@dataclass
class ExperimentConfig:
    """Sweep parameters. ``d_list`` entries may be the string ``"N"`` (bond dimension equal to N)."""

    gate_set: str = "clifford"
    n_list: list = field(default_factory=lambda: [8])
    d_list: list = field(default_factory=lambda: [2, 4])
    p_grid: list = field(default_factory=lambda: [0.1, 0.3, 0.5])
    layers: int | None = None
    layer_factor: float = 1.0
    samples: int = 10
    master_seed: int = 0
    backend: str = "auto"
    fidelity_method: str = "auto"
    mc_samples: int = 4096
    shots: int = 1000
    dense_limit: int = 20
    mps_limit: int = 24
    workers: int = 1
    output_dir: str = "results"
    record_timing: bool = False
    reference_pc: float | None = None
    eps_threshold: float = 0.05

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.gate_set not in GATE_SETS:
            raise ValueError(f"unknown gate set {self.gate_set!r}")
        if not self.n_list or not self.d_list or not self.p_grid:
            raise ValueError("N, D and p grids must be nonempty")
        if any(int(n) < 2 for n in self.n_list):
            raise ValueError("every N must be >= 2")
        for d in self.d_list:
            if d != "N" and (not isinstance(d, int) or d < 1):
                raise ValueError(f"bond dimension entries must be positive ints or 'N', got {d!r}")
        if any(not 0.0 <= float(p) <= 1.0 for p in self.p_grid):
            raise ValueError("p values must lie in [0, 1]")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "stabilizer" and self.gate_set != "clifford":
            raise ValueError("the stabilizer backend needs the clifford gate set")
        if self.fidelity_method not in FIDELITY_METHODS:
            raise ValueError(f"unknown fidelity method {self.fidelity_method!r}")
        if self.fidelity_method == "mc" and self.gate_set != "clifford":
            raise ValueError("Monte Carlo overlap needs the clifford gate set")

    def layers_for(self, n: int) -> int:
        return self.layers if self.layers is not None else max(1, round(self.layer_factor * n))

    def bond_dims_for(self, n: int) -> list[int]:
        out = []
        for d in self.d_list:
            d = n if d == "N" else int(d)
            if d not in out:
                out.append(d)
        return sorted(out)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))
