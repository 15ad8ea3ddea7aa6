"""The invariant suite run by ``adiabatic check``.

It runs a standard set of trajectories and collects every per-row
invariant, then adds the state-level inequalities on random triples.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .bounds import SLACK_TOL, base_inequality_slack, bound_f, bound_h, triangle_slacks
from .hilbert import StateVector
from .overlaps import overlap_record
from .runner import ExperimentConfig, SweepFailure, sweep

RM_PARAMS = {"J": 0.4, "U": 0.4, "gamma": 0.7}
KITAEV_PARAMS = {"J": 1.0, "Delta": 0.8, "mu0": 3.0, "gamma": 1.0}


def standard_configs(quick: bool = False, seed: int = 0) -> list[ExperimentConfig]:
    """Rice-Mele N in {10, 200} and Kitaev N in {8, 10, 12} x V in {0, 1, 2}, 150 points on [0, 3]."""
    rm_sizes = (10,) if quick else (10, 200)
    k_sizes = (8,) if quick else (8, 10, 12)
    n_grid = 40 if quick else 150
    raw = [{"model": "rice_mele", "params": RM_PARAMS | {"n_cells": n}} for n in rm_sizes]
    raw += [{"model": "kitaev", "params": KITAEV_PARAMS | {"n_sites": n, "V_int": v}}
            for n in k_sizes for v in (0.0, 1.0, 2.0)]
    return [ExperimentConfig.from_dict(r | {"lambda_max": 3.0, "n_grid": n_grid, "seed": seed}) for r in raw]


def random_state(rng: np.random.Generator, dim: int) -> StateVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(v / np.linalg.norm(v))


def random_triple_min_slacks(n_triples: int, dim: int = 8, seed: int = 0) -> dict[str, float]:
    """Minimum triangle and base-inequality slacks over random (Psi, Phi, Phi0) triples."""
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    for _ in range(n_triples):
        psi, phi, phi0 = (random_state(rng, dim) for _ in range(3))
        rec = overlap_record(1.0, psi, phi, phi0)
        slacks = triangle_slacks(rec.F, rec.C, rec.theta, rec.D_un)
        slacks["base"] = base_inequality_slack(rec.F, rec.C, rec.theta, rec.D_un)
        for k, v in slacks.items():
            worst[k] = min(worst.get(k, np.inf), v)
    return worst


@dataclass
class CheckLine:
    name: str
    n_checked: int
    n_failed: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.n_failed == 0

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.n_failed}/{self.n_checked} failing {self.detail}".rstrip()


def run_checks(quick: bool = False, seed: int = 0, workers: int = 1) -> list[CheckLine]:
    cfgs = standard_configs(quick, seed)
    results = sweep(cfgs, workers)
    lines = []
    failures = [r for r in results if isinstance(r, SweepFailure)]
    lines.append(CheckLine("runs completed", len(results), len(failures),
                           "; ".join(f.error for f in failures)))
    counts: Counter = Counter()
    n_rows = 0
    for t in results:
        if isinstance(t, SweepFailure):
            continue
        n_rows += len(t.rows)
        for r in t.rows:
            for v in filter(None, r["violations"].split(";")):
                counts[v] += 1
    for name in ("identity", "triangle_1", "triangle_2", "triangle_3", "base", "qsl", "f", "g",
                 "alpha_cap", "h_s_lambda", "orthogonality_limit", "h0_equals_f", "norm_drift"):
        lines.append(CheckLine(f"row invariant {name}", n_rows, counts.pop(name, 0)))
    for name, c in sorted(counts.items()):
        lines.append(CheckLine(f"row invariant {name}", n_rows, c))

    n_triples = 500 if quick else 10_000
    worst = random_triple_min_slacks(n_triples, seed=seed)
    for k, v in worst.items():
        lines.append(CheckLine(f"random triples {k}", n_triples, int(v < -SLACK_TOL), f"(min slack {v:.3e})"))

    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(1000):
        c, rt = rng.uniform(0, 1), rng.uniform(0, np.pi / 2)
        rtt = min(rt, np.pi / 4)
        bad += bound_h(c, 0.0, rt, rtt) != bound_f(c, rt, rtt)
    lines.append(CheckLine("h(lambda, 0) == f(lambda) bitwise", 1000, int(bad)))
    return lines
