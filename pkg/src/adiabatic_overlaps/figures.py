"""Plot data for the standard figure set (no rendering).

Each builder returns a :class:`FigureData` with a fixed column order; the CLI
and the scripts in ``scripts/`` write it as CSV plus a JSON sidecar.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

from .bounds import two_sided_fidelity_band
from .models import RiceMeleParams
from .runner import ExperimentConfig, ResultTable, SweepFailure, rice_mele_adiabaticity, sweep

RM_DEFAULT = {"J": 0.4, "U": 0.4, "gamma": 0.7}
KITAEV_DEFAULT = {"J": 1.0, "Delta": 0.8, "mu0": 3.0, "gamma": 1.0}


@dataclass
class FigureData:
    number: int
    columns: list[str]
    rows: list[dict]
    metadata: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow(["" if r.get(c) is None else (repr(float(r[c])) if isinstance(r[c], float) else r[c])
                        for c in self.columns])
        return buf.getvalue()

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / f"figure{self.number}.csv"
        meta_path = out_dir / f"figure{self.number}.json"
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True, default=float))
        return csv_path, meta_path

    @property
    def n_violations(self) -> int:
        return int(self.metadata.get("n_violation_rows", 0))


def _run_all(cfgs, workers):
    tables = sweep(cfgs, workers)
    for t in tables:
        if isinstance(t, SweepFailure):
            raise RuntimeError(t.error)
    return tables


def _meta(tables: list[ResultTable], **extra) -> dict:
    return {
        "n_violation_rows": sum(t.n_violations for t in tables),
        "violation_kinds": sorted({k for t in tables for k in t.metadata["violation_kinds"]}),
        "norm_drift_max": max(t.metadata["norm_drift_max"] for t in tables),
        "runs": [t.metadata["config"] for t in tables],
    } | extra


def _rm(n, **kw) -> ExperimentConfig:
    return ExperimentConfig.from_dict({"model": "rice_mele", "params": RM_DEFAULT | {"n_cells": n}} | kw)


def _kitaev(n, v, **kw) -> ExperimentConfig:
    return ExperimentConfig.from_dict(
        {"model": "kitaev", "params": KITAEV_DEFAULT | {"n_sites": n, "V_int": v}} | kw)


PANEL_COLUMNS = ["lambda", "F", "C", "sqrt_F_minus_sqrt_C", "sqrt_D_un", "sin_theta_sqrt_1mC", "sqrt_D"]


def _panels(number: int, keyed_tables, key_cols) -> FigureData:
    rows = []
    for key, t in keyed_tables:
        for r in t.rows:
            rows.append(dict(zip(key_cols, key)) | {c: r.get(c) for c in PANEL_COLUMNS})
    return FigureData(number, list(key_cols) + PANEL_COLUMNS, rows, _meta([t for _, t in keyed_tables]))


def figure2(workers: int = 1, n_grid: int = 150) -> FigureData:
    """Rice-Mele overlaps for N = 10, 200, 1000 (factorized, exact for this model)."""
    sizes = (10, 200, 1000)
    tables = _run_all([_rm(n, n_grid=n_grid) for n in sizes], workers)
    return _panels(2, [((n,), t) for n, t in zip(sizes, tables)], ["N"])


def figure3(workers: int = 1, n_grid: int = 150) -> FigureData:
    """f and g bounds against |F - C| at N = 200."""
    (t,) = _run_all([_rm(200, n_grid=n_grid)], workers)
    cols = ["lambda", "abs_F_minus_C", "f", "f1", "f2", "g", "g1", "g2"]
    rows = [{c: r.get(c) for c in cols} | {"abs_F_minus_C": abs(r["F"] - r["C"])} for r in t.rows]
    return FigureData(3, cols, rows, _meta([t]))


def figure4(workers: int = 1, n_grid: int = 150) -> FigureData:
    """Two-sided fidelity bands from f, g, h(s=1/2) and h(s=1) at N = 200 and 1000."""
    sizes = (200, 1000)
    tables = _run_all([_rm(n, n_grid=n_grid) for n in sizes], workers)
    bands = (("f", "f"), ("g", "g"), ("h_half", "h_s0.5"), ("h_one", "h_s1"))
    cols = ["N", "lambda", "F", "C"] + [f"{b}_{side}" for b, _ in bands for side in ("lo", "hi")]
    rows = []
    for n, t in zip(sizes, tables):
        for r in t.rows:
            row = {"N": n, "lambda": r["lambda"], "F": r["F"], "C": r["C"]}
            for name, col in bands:
                if r.get(col) is not None:
                    row[f"{name}_lo"], row[f"{name}_hi"] = two_sided_fidelity_band(r["C"], r[col])
            rows.append(row)
    return FigureData(4, cols, rows, _meta(tables))


def figure5(sizes=tuple(range(100, 1001, 100))) -> FigureData:
    """s* = s(lambda*) against N for the uniform Rice-Mele chain."""
    cols = ["N", "lambda_star", "lambda_star_gaussian", "s_star_closed_form", "s_star", "gamma_N"]
    rows = []
    for n in sizes:
        a = rice_mele_adiabaticity(RiceMeleParams(**RM_DEFAULT, n_cells=n))
        rows.append({"N": n} | {c: a[c] for c in cols[1:]})
    s = [r["s_star_closed_form"] for r in rows]
    return FigureData(5, cols, rows, {"s_star_ratio": max(s) / min(s), "n_violation_rows": 0})


def figure6(workers: int = 1, n_grid: int = 150, n_sites: int = 10) -> FigureData:
    """Kitaev chain overlaps at N = 10 for V = 0 and V = 1."""
    vs = (0.0, 1.0)
    tables = _run_all([_kitaev(n_sites, v, n_grid=n_grid) for v in vs], workers)
    return _panels(6, [((n_sites, v), t) for v, t in zip(vs, tables)], ["N", "V"])


def figure7(workers: int = 1, sizes=(6, 8, 10, 12), lambdas=(1.0, 2.0), vs=(0.0, 1.0, 2.0)) -> FigureData:
    """-ln C and -ln D against N for the Kitaev chain."""
    lam_max = max(lambdas)
    knots = sorted({0.0, *lambdas, *(x / 2 for x in lambdas)})
    keys = [(n, v) for v in vs for n in sizes]
    tables = _run_all([_kitaev(n, v, lambda_knots=knots, lambda_max=lam_max) for n, v in keys], workers)
    cols = ["N", "V", "lambda", "minus_log_C", "minus_log_D"]
    rows = []
    for (n, v), t in zip(keys, tables):
        for r in t.rows:
            if r["lambda"] in lambdas:
                log_d = r.get("log_D")
                rows.append({"N": n, "V": v, "lambda": r["lambda"], "minus_log_C": -r["log_C"],
                             "minus_log_D": None if log_d is None else -log_d})
    rows.sort(key=lambda r: (r["lambda"], r["V"], r["N"]))
    return FigureData(7, cols, rows, _meta(tables))


BUILDERS = {2: figure2, 3: figure3, 4: figure4, 5: figure5, 6: figure6, 7: figure7}


def build_figure(number: int, workers: int = 1) -> FigureData:
    if number not in BUILDERS:
        raise ValueError(f"no figure {number}; choose from {sorted(BUILDERS)}")
    builder = BUILDERS[number]
    return builder() if number == 5 else builder(workers=workers)
