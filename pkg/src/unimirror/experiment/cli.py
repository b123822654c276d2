from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .. import dense, mirror, mps, stabilizer
from ..circuit import GATE_SETS, sample_instance, serialize
from ..errors import UnimirrorError
from .config import BACKENDS, FIDELITY_METHODS, ExperimentConfig, load_config
from .io import emit_csv, emit_plots
from .pipeline import bounds_report, instance_seed, run_sweep
from .verify import SUITES, verify

OUTPUT_ROOT_ENV = "UNIMIRROR_OUTPUT_ROOT"


def _output_dir(path: str) -> Path:
    out = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not out.is_absolute():
        out = Path(root) / out
    return out


def cmd_sample(args) -> int:
    inst = sample_instance(args.n, args.l or args.n, args.p, args.gate_set, args.seed)
    if args.record:
        if args.gate_set == "clifford" and args.n > dense.DEFAULT_DENSE_LIMIT:
            _, record = stabilizer.run_monitored(inst)
        else:
            _, record = dense.run_monitored(inst)
        inst = inst.with_record(record)
    text = serialize(inst)
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_run(args) -> int:
    cfg = ExperimentConfig(
        gate_set=args.gate_set,
        n_list=[args.n],
        d_list=[args.D],
        p_grid=[args.p],
        layers=args.l,
        master_seed=args.master_seed,
        fidelity_method=args.method,
        backend=args.backend,
    )
    report = bounds_report(cfg, args.n, args.p, args.D, args.sample)
    seed = instance_seed(args.master_seed, args.gate_set, args.n, cfg.layers_for(args.n), args.p, args.sample)
    payload = json.loads(report.to_json())
    payload["seed"] = seed
    print(json.dumps(payload, indent=2))
    return 0


def _overrides(args) -> dict:
    out = {}
    for name in ("gate_set", "samples", "master_seed", "workers", "fidelity_method", "backend"):
        v = getattr(args, name)
        if v is not None:
            out[name] = v
    for name, field in (("n", "n_list"), ("D", "d_list"), ("p", "p_grid")):
        v = getattr(args, name)
        if v:
            out[field] = v
    if args.output:
        out["output_dir"] = args.output
    if args.timing:
        out["record_timing"] = True
    return out


def cmd_sweep(args) -> int:
    base = load_config(args.config).to_dict() if args.config else {}
    cfg = ExperimentConfig.from_dict({**base, **_overrides(args)})
    out = _output_dir(cfg.output_dir)
    result = run_sweep(cfg)
    for a in result.aborted:
        print(f"aborted N={a[0]} p={a[1]} sample={a[2]} D={a[3]}: {a[4]}", file=sys.stderr)
    for f in result.failures:
        print(f"failed item N={f[0]} p={f[1]} sample={f[2]}: {f[3]}", file=sys.stderr)
    if not result.rows:
        print("no rows produced", file=sys.stderr)
        return 1
    emit_csv(result.rows, out / "results.csv")
    for quantity in ("F", "S_ub_F"):
        for curve_group in _by_n(result.curves(quantity)):
            n = curve_group[0].n
            emit_plots(curve_group, out / f"{quantity}_N{n}.svg", cfg.reference_pc)
    (out / "config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(result.rows)} rows to {out / 'results.csv'}")
    return 1 if result.failures else 0


def _by_n(curves):
    groups = {}
    for c in curves:
        groups.setdefault(c.n, []).append(c)
    return [groups[n] for n in sorted(groups)]


def cmd_mirror(args) -> int:
    state = mps.load_mps(args.mps)
    circuit = mirror.build_mirror(state, center=args.center)
    text = circuit.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_verify(args) -> int:
    results = verify(args.suites)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unimirror", description="Monitored circuits, MPS mirrors and entanglement bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="emit a sampled circuit as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, default=None, help="layers (default N)")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--gate-set", choices=GATE_SETS, default="clifford")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--record", action="store_true", help="attach a record sampled from an exact backend")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("run", help="run one instance and print its bounds report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--l", type=int, default=None)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--D", type=int, required=True)
    p.add_argument("--gate-set", choices=GATE_SETS, default="clifford")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--sample", type=int, default=0)
    p.add_argument("--method", choices=FIDELITY_METHODS, default="auto")
    p.add_argument("--backend", choices=BACKENDS, default="auto")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep, write CSV and SVG plots")
    p.add_argument("--config", help="JSON experiment config")
    p.add_argument("--gate-set", choices=GATE_SETS)
    p.add_argument("--n", type=int, nargs="+")
    p.add_argument("--D", type=lambda s: s if s == "N" else int(s), nargs="+")
    p.add_argument("--p", type=float, nargs="+")
    p.add_argument("--samples", type=int)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--fidelity-method", choices=FIDELITY_METHODS)
    p.add_argument("--backend", choices=BACKENDS)
    p.add_argument("--timing", action="store_true", help="fill the wall_ms column (output no longer reproducible)")
    p.add_argument("-o", "--output", help=f"output directory (relative paths resolve under ${OUTPUT_ROOT_ENV})")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mirror", help="build the mirror circuit of an exported MPS")
    p.add_argument("mps", help="MPS file written by unimirror.mps.save_mps")
    p.add_argument("--center", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_mirror)

    p = sub.add_parser("verify", help="run audit suites")
    p.add_argument("suites", nargs="+", choices=sorted(SUITES) + ["all"])
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UnimirrorError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
