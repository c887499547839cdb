"""CSV/SVG output of comparison runs and equilibrium reports."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Union

import numpy as np

from .equilibria import analyze_subsystem, bifurcation_threshold, find_equilibria
from .nondim import check_ordering, time_scales
from .scenarios import ComparisonResult, Scenario

CSV_COLUMNS = ("t", "u1", "u2", "u3", "u4", "u4_baseline", "delta_co2")
SERIES = ("u1", "u2", "u3", "u4", "u4_baseline")
LABELS = {"u1": "[Om]", "u2": "[M]", "u3": "[Ch]", "u4": "[CO2]", "u4_baseline": "[CO2] without charcoal"}

PathLike = Union[str, Path]


class ExportError(OSError):
    def __init__(self, path, cause: BaseException):
        super().__init__(f"cannot write {path}: {cause}")
        self.path = Path(path)


def _rows(result: ComparisonResult):
    w = result.with_charcoal.states
    b = result.baseline.states
    for i, t in enumerate(result.times):
        yield (t, w[i, 0], w[i, 1], w[i, 2], w[i, 3], b[i, 3], result.delta_co2[i])


def export_csv(result: ComparisonResult, path: PathLike) -> Path:
    """Write the comparison with a header row; floats use ``repr`` so they re-read bit-exactly."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for row in _rows(result):
                writer.writerow([repr(float(v)) for v in row])
    except OSError as exc:
        raise ExportError(path, exc) from exc
    return path


def read_csv(path: PathLike) -> dict[str, np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        data = np.array([[float(v) for v in row] for row in reader])
    return {name: data[:, i] for i, name in enumerate(header)}


def export_svg(result: ComparisonResult, path: PathLike) -> Path:
    """Two stacked rows (short time, long time): species on the left, CO2 on the right."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    sc = result.scenario
    t = result.times
    w = result.with_charcoal.states
    columns = {"u1": w[:, 0], "u2": w[:, 1], "u3": w[:, 2], "u4": w[:, 3],
               "u4_baseline": result.baseline.states[:, 3]}
    split = sc.split_time
    with plt.rc_context({"svg.fonttype": "none", "svg.hashsalt": "biochar"}):
        fig, axes = plt.subplots(2, 2, figsize=(10, 7))
        for row, (panel, mask) in enumerate((("short", t <= split), ("long", t >= 0))):
            left, right = axes[row]
            for name in ("u1", "u2", "u3"):
                (line,) = left.plot(t[mask], columns[name][mask], label=LABELS[name])
                line.set_gid(f"{name}-{panel}")
            for name, style in (("u4", "-"), ("u4_baseline", "--")):
                (line,) = right.plot(t[mask], columns[name][mask], style, label=LABELS[name])
                line.set_gid(f"{name}-{panel}")
            for ax in (left, right):
                ax.set_xlabel("dimensionless time")
                ax.legend(fontsize="small")
            left.set_title(f"{sc.name}: {panel} time")
            right.set_title(f"{sc.name}: {panel} time, CO2")
        fig.tight_layout()
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(path, format="svg", metadata={"Date": None})
        except OSError as exc:
            raise ExportError(path, exc) from exc
        finally:
            plt.close(fig)
    return path


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def report_equilibria(sc: Scenario) -> list[dict]:
    """One record per equilibrium followed by a summary record."""
    p = sc.params
    records = []
    for eq in find_equilibria(p):
        records.append(
            {
                "type": "equilibrium",
                "kind": eq.kind,
                "point": list(eq.point),
                "point_dimensionless": [v / u for v, u in zip(eq.point, p.refs[:3])],
                "eigenvalues": [_complex_pair(z) for z in eq.eigenvalues],
                "verdict": eq.verdict.value,
            }
        )
    sub = analyze_subsystem(p)
    ordered, ordering_text = check_ordering(p)
    records.append(
        {
            "type": "summary",
            "scenario": sc.name,
            "source": p.source,
            "bifurcation_threshold": bifurcation_threshold(p),
            "equilibria": len(records),
            "stable": sum(r["verdict"] == "asymptotically stable" for r in records),
            "subsystem": {
                "regime": sub.regime.value,
                "conserved": sub.conserved,
                "C1": sub.C1,
                "U1": sub.U1,
                "equilibrium_line": sub.equilibrium_line,
            },
            "time_scales": list(time_scales(p).as_tuple()),
            "ordering_holds": ordered,
            "ordering": ordering_text,
        }
    )
    return records


def format_jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def format_text(records) -> str:
    lines = []
    for r in records:
        if r["type"] == "equilibrium":
            evs = ", ".join(f"{re:.6g}{im:+.6g}j" for re, im in r["eigenvalues"])
            point = ", ".join(f"{v:.6g}" for v in r["point"])
            lines.append(f"{r['kind']:>9} equilibrium ({point}): {r['verdict']}; eigenvalues {evs}")
        else:
            sub = r["subsystem"]
            lines.append(f"source s = {r['source']:.6g}, bifurcation threshold = {r['bifurcation_threshold']:.6g}")
            lines.append(f"stable equilibria: {r['stable']} of {r['equilibria']}")
            lines.append(f"growth/death block: {sub['regime']} (u1 + eta*u2 conserved: {sub['conserved']})")
            lines.append(f"time-scale ordering: {'holds' if r['ordering_holds'] else 'violated'} ({r['ordering']})")
    return "\n".join(lines) + "\n"
