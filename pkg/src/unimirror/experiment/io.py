from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
from matplotlib.figure import Figure  # noqa: E402

from .pipeline import CSV_FIELDS, ResultRow  # noqa: E402

_INT_FIELDS = {"N", "L", "D", "sample", "seed"}
_STR_FIELDS = {"gate_set", "method"}


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows, path) -> Path:
    """Write result rows with the fixed column schema. Missing values are empty cells."""
    if not rows:
        raise ValueError("no rows to write")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in rows:
            d = r.as_dict() if isinstance(r, ResultRow) else r
            writer.writerow([_fmt(d[k]) for k in CSV_FIELDS])
    return path


def load_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        rows = []
        for raw in reader:
            vals = {}
            for k in CSV_FIELDS:
                v = raw[k]
                if k in _STR_FIELDS:
                    vals[k] = v
                elif v == "":
                    vals[k] = None
                elif k in _INT_FIELDS:
                    vals[k] = int(v)
                else:
                    vals[k] = float(v)
            rows.append(ResultRow(**vals))
    return rows


_LABELS = {"F": "mean mirror fidelity F", "S_ub_F": "entropy bound from F (nats)"}


def emit_plots(curves, path, reference_pc: float | None = None) -> Path:
    """One SVG with a line per bond dimension (error bars are standard errors).

    Output is byte-stable: no timestamp metadata and a fixed element-id salt.
    """
    curves = [c for c in curves if c.p.size]
    if not curves:
        raise ValueError("no series to plot")
    quantity = curves[0].quantity
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "unimirror", "svg.fonttype": "none"}):
        fig = Figure(figsize=(6, 4))
        ax = fig.add_subplot()
        for c in curves:
            ax.errorbar(c.p, c.mean, yerr=c.stderr, marker="o", ms=3, capsize=2, label=f"N={c.n}, D={c.d}")
        if reference_pc is not None:
            ax.axvline(reference_pc, color="k", ls="--", lw=1, label=f"p_c = {reference_pc:g}")
        ax.set_xlabel("measurement rate p")
        ax.set_ylabel(_LABELS.get(quantity, quantity))
        ax.set_title(f"{curves[0].gate_set} circuits")
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    return path
