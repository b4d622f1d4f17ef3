"""Plain-text report rendered from persisted stage outputs only.

Rendering reads CSV artifacts and never touches solvers or clocks, so the
same artifacts directory always produces byte-identical output.
"""

from __future__ import annotations

import re
from pathlib import Path

from ..errors import StageOrderError
from . import store
from .stages import paired_pc_order


def _num(s: str) -> float:
    return float(s) if s not in ("", None) else float("nan")


def _f(x, spec=".4g") -> str:
    if isinstance(x, str):
        if x == "":
            return "-"
        try:
            x = float(x)
        except ValueError:
            return x
    return format(x, spec)


def _table(title: str, header: list[str], rows: list[list]) -> list[str]:
    cells = [[str(c) for c in header]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    line = "  ".join("-" * w for w in widths)
    out = [title, "=" * len(title)]
    out.append("  ".join(c.rjust(w) for c, w in zip(cells[0], widths)))
    out.append(line)
    out.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells[1:])
    out.append("")
    return out


def _budget_key(path: Path) -> float:
    m = re.search(r"([0-9.]+)$", path.name)
    return float(m.group(1)) if m else float("inf")


def _estimate_files(root: Path, method: str) -> list[Path]:
    base = root / method
    if not base.is_dir():
        return []
    return [p / "estimates.csv" for p in sorted(base.iterdir(), key=_budget_key) if (p / "estimates.csv").is_file()]


def _index_names(header: list[str]) -> list[str]:
    return [h[2:] for h in header if h.startswith("S_")]


def pilot_section(root: Path) -> list[str]:
    path = root / "pilot" / "pilot_stats.csv"
    if not path.is_file():
        return []
    _, rows = store.read_csv(path)
    body = [[r["qoi"], r["unit"], r["model"], r["cost"], _f(r["mu"]), _f(r["sigma"]), _f(r["rho"], ".6f"),
             r["n_pilot"], r["degenerate"] or ""] for r in rows]
    out = _table("Pilot statistics", ["qoi", "unit", "model", "w", "mu", "sigma", "rho", "n", "note"], body)
    path = root / "pilot" / "discrepancy.csv"
    if path.is_file():
        header, rows = store.read_csv(path)
        out += _table("Fitted discrepancy trend (report units per unit normalised input)", header,
                      [[r[h] if h in ("qoi", "model") else _f(r[h]) for h in header] for r in rows])
    return out


def allocation_section(root: Path) -> list[str]:
    path = root / "allocation" / "allocation.csv"
    if not path.is_file():
        return []
    _, rows = store.read_csv(path)
    rows.sort(key=lambda r: (r["qoi"], _num(r["budget"])))
    body = [[r["qoi"], _f(r["budget"], "g"), r["model"], r["m"], r["evaluations"], _f(r["alpha"], ".4f"),
             r["perturbed"], r["admissible"]] for r in rows]
    return _table("Model allocations", ["qoi", "budget", "model", "m", "evals", "alpha", "perturbed", "admissible"], body)


def estimates_section(root: Path) -> tuple[list[str], list[list]]:
    out, plot = [], []
    for method in ("mfmc", "mc", "pc"):
        rows = []
        names = []
        for path in _estimate_files(root, method):
            header, recs = store.read_csv(path)
            names = _index_names(header)
            for r in recs:
                rows.append([r["qoi"], _f(r["budget"], "g"), _f(r["mean"]), _f(r["variance"])]
                            + [_f(r[f"S_{n}"], ".3f") for n in names] + [_f(r[f"ST_{n}"], ".3f") for n in names]
                            + [r["degenerate"]])
                for n in names:
                    plot.append([method, r["qoi"], r["budget"], n, r[f"S_{n}"], r[f"ST_{n}"]])
        if rows:
            label = "order" if method == "pc" else "budget"
            header = ["qoi", label, "mean", "variance"] + [f"S_{n}" for n in names] + [f"ST_{n}" for n in names] + ["degen"]
            out += _table(f"Sobol' indices ({method.upper()})", header, rows)
    return out, plot


def replicate_section(root: Path) -> list[str]:
    path = root / "replicates" / "summary.csv"
    if not path.is_file():
        return []
    header, rows = store.read_csv(path)
    names = [h[len("mse_S_"):] for h in header if h.startswith("mse_S_")]
    body = [[r["method"], r["qoi"], _f(r["budget"], "g"), r["replicates"], _f(r["E_mu"]), _f(r["sd_mu"]),
             _f(r["E_V"]), _f(r["sd_V"])] + [_f(r[f"mse_S_{n}"]) for n in names] for r in rows]
    return _table("Replicate moments", ["method", "qoi", "budget", "R", "E[mu]", "sd[mu]", "E[V]", "sd[V]"]
                  + [f"MSE S_{n}" for n in names], body)


def validation_section(root: Path) -> list[str]:
    path = root / "validate" / "metrics.csv"
    if not path.is_file():
        return []
    header, rows = store.read_csv(path)
    body = [[r["reference"], r["model"]] + [_f(r[h], ".3f") for h in header[2:]] for r in rows]
    return _table("Cross-fidelity errors [%]", header, body)


def cost_section(root: Path) -> list[str]:
    rows = []
    d = None
    for method in ("mfmc", "mc", "pc"):
        for path in _estimate_files(root, method):
            header, recs = store.read_csv(path)
            if not recs:
                continue
            d = len(_index_names(header))
            r = recs[0]
            evals = r["evaluations"]
            pc = "-"
            if method == "mfmc":
                n_hf = max(int(x.split(";")[0]) for x in (q["evaluations"] for q in recs))
                order = paired_pc_order(n_hf, d)
                pc = "-" if order is None else f"order {order} on {n_hf}"
                evals = ";".join(str(max(int(q["evaluations"].split(";")[k]) for q in recs))
                                 for k in range(len(evals.split(";"))))
            rows.append([method, _f(r["budget"], "g"), evals, _f(r["cost"], ".6g"), _f(r["wall_s"], ".3f"), pc])
    if not rows:
        return []
    return _table("Computational cost", ["method", "budget", "evaluations", "cost [w1]", "wall [s]", "paired PC"], rows)


def render_report(out) -> str:
    """Text report of everything persisted under ``out``; also writes plot-data CSVs."""
    root = Path(out)
    lines: list[str] = []
    lines += pilot_section(root)
    lines += allocation_section(root)
    est, plot = estimates_section(root)
    lines += est
    lines += replicate_section(root)
    lines += validation_section(root)
    lines += cost_section(root)
    if not lines:
        raise StageOrderError(f"nothing to report under {root}; run a stage first")
    if plot:
        (root / "plot").mkdir(exist_ok=True)
        store.write_csv(root / "plot" / "indices_vs_budget.csv", ["method", "qoi", "budget", "input", "S", "ST"], plot)
    text = "\n".join(lines)
    (root / "report.txt").write_text(text)
    return text
