"""Config-driven experiments: model -> trajectory -> overlaps -> bounds -> table.

A run produces a :class:`ResultTable` whose CSV serialization is a pure
function of the configuration (wall time and library versions live only in
the JSON sidecar).  Every per-row invariant is checked inline and failures
are written to the ``violations`` column rather than raised.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import scipy

from . import __version__
from .bounds import (
    DEFAULT_S_VALUES,
    SLACK_TOL,
    adiabaticity_estimate,
    evaluate_bounds,
    find_lambda_star,
    rm_closed_form,
    s_label,
)
from .dynamics import IntegratorConfig, bloch_ground_states, evolve, evolve_factorized, instantaneous_ground_state
from .errors import AdiabaticError, ConfigError, ContractError, UndefinedComplementError
from .hilbert import StateVector
from .models import (
    KitaevParams,
    RiceMeleParams,
    delta_v,
    dense_driven,
    kitaev_hamiltonian,
    rice_mele_d_vectors,
    rice_mele_delta_v,
    rice_mele_many_body,
)
from .overlaps import OverlapRecord, factorized_overlaps, trajectory_overlaps
from .perturbation import SpectralData

IDENTITY_TOL = 1e-10
DRIFT_TOL = 1e-9
MODELS = ("rice_mele", "kitaev", "spectral")
PATHS = ("auto", "factorized", "many_body")
_MODEL_FIELDS = {
    "rice_mele": {f.name for f in fields(RiceMeleParams)},
    "kitaev": {f.name for f in fields(KitaevParams)},
    "spectral": {"dim", "gamma", "real"},
}
_INTEGRATOR_FIELDS = {f.name for f in fields(IntegratorConfig)}


# -- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    params: dict = field(default_factory=dict)
    lambda_max: float = 3.0
    n_grid: int = 150
    lambda_knots: tuple[float, ...] | None = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    path: str = "auto"
    s_values: tuple[float, ...] = DEFAULT_S_VALUES
    epsilon: float = 0.0
    outputs: tuple[str, ...] | None = None
    seed: int = 0
    parallelism: int = 1
    name: str = ""

    @classmethod
    def from_dict(cls, raw: Any) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in raw:
            if key not in known:
                raise ConfigError(key, "unknown field")
        if "model" not in raw:
            raise ConfigError("model", "required")
        model = raw["model"]
        if model not in MODELS:
            raise ConfigError("model", f"must be one of {MODELS}, got {model!r}")

        params = raw.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("params", "must be an object")
        for key in params:
            if key not in _MODEL_FIELDS[model]:
                raise ConfigError(f"params.{key}", f"unknown parameter for model {model}")

        def number(path, value, *, integer=False, positive=False, minimum=None):
            ok_type = isinstance(value, int) if integer else isinstance(value, (int, float))
            if isinstance(value, bool) or not ok_type:
                raise ConfigError(path, f"expected {'integer' if integer else 'number'}, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(path, "must be finite")
            if positive and not value > 0:
                raise ConfigError(path, f"must be positive, got {value!r}")
            if minimum is not None and value < minimum:
                raise ConfigError(path, f"must be >= {minimum}, got {value!r}")
            return value

        lambda_max = number("lambda_max", raw.get("lambda_max", 3.0), positive=True)
        n_grid = number("n_grid", raw.get("n_grid", 150), integer=True, minimum=2)
        knots = raw.get("lambda_knots")
        if knots is not None:
            if not isinstance(knots, list) or len(knots) < 2:
                raise ConfigError("lambda_knots", "must be a list of at least two numbers")
            knots = tuple(float(number(f"lambda_knots[{i}]", k)) for i, k in enumerate(knots))
            if knots[0] != 0.0 or any(b <= a for a, b in zip(knots, knots[1:])):
                raise ConfigError("lambda_knots", "must start at 0 and increase strictly")

        integ = raw.get("integrator", {})
        if not isinstance(integ, dict):
            raise ConfigError("integrator", "must be an object")
        for key in integ:
            if key not in _INTEGRATOR_FIELDS:
                raise ConfigError(f"integrator.{key}", "unknown field")
        try:
            icfg = IntegratorConfig(**integ)
        except (ContractError, TypeError) as exc:
            raise ConfigError("integrator", str(exc)) from None

        path = raw.get("path", "auto")
        if path not in PATHS:
            raise ConfigError("path", f"must be one of {PATHS}")
        s_values = raw.get("s_values", list(DEFAULT_S_VALUES))
        if not isinstance(s_values, list):
            raise ConfigError("s_values", "must be a list")
        s_values = tuple(float(number(f"s_values[{i}]", s, minimum=0)) for i, s in enumerate(s_values))
        epsilon = number("epsilon", raw.get("epsilon", 0.0), minimum=0)
        outputs = raw.get("outputs")
        if outputs is not None:
            if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
                raise ConfigError("outputs", "must be a list of column names")
            outputs = tuple(outputs)
        seed = number("seed", raw.get("seed", 0), integer=True, minimum=0)
        par = number("parallelism", raw.get("parallelism", 1), integer=True, minimum=1)
        name = raw.get("name", "")
        if not isinstance(name, str):
            raise ConfigError("name", "must be a string")

        cfg = cls(model=model, params=dict(params), lambda_max=float(lambda_max), n_grid=n_grid,
                  lambda_knots=knots, integrator=icfg, path=path, s_values=s_values,
                  epsilon=float(epsilon), outputs=outputs, seed=seed, parallelism=par, name=name)
        try:
            cfg.model_params()
        except (ContractError, TypeError, ValueError) as exc:
            raise ConfigError("params", str(exc)) from None
        if outputs is not None:
            valid = set(table_columns(cfg))
            for i, o in enumerate(outputs):
                if o not in valid:
                    raise ConfigError(f"outputs[{i}]", f"unknown column {o!r}")
        return cfg

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda_knots"] = list(self.lambda_knots) if self.lambda_knots else None
        d["s_values"] = list(self.s_values)
        d["outputs"] = list(self.outputs) if self.outputs else None
        return d

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def grid(self) -> np.ndarray:
        if self.lambda_knots is not None:
            return np.asarray(self.lambda_knots, dtype=float)
        return np.linspace(0.0, self.lambda_max, self.n_grid)

    def model_params(self):
        if self.model == "rice_mele":
            return RiceMeleParams(**self.params)
        if self.model == "kitaev":
            return KitaevParams(**self.params)
        p = {"dim": 4, "gamma": 1.0, "real": False} | self.params
        return SpectralData.random(int(p["dim"]), self.seed, gamma=float(p["gamma"]), real=bool(p["real"]))

    def uses_factorized(self) -> bool:
        if self.model != "rice_mele":
            return False
        return self.path in ("auto", "factorized")


# -- tables -----------------------------------------------------------------------

BASE_COLUMNS = (
    "lambda", "F", "C", "theta", "D", "D_un", "identity_residual", "D_defined",
    "log_C", "log_D", "sqrt_F_minus_sqrt_C", "sqrt_D_un", "sqrt_D", "sin_theta_sqrt_1mC",
    "norm_drift", "R", "R_tilde", "R_tildetilde", "f", "f1", "f2", "g", "g1", "g2",
    "alpha", "D_un_closed", "D_closed", "s_ratio",
)
SLACK_NAMES = ("triangle_1", "triangle_2", "triangle_3", "base", "qsl", "f", "g", "alpha_cap")
TAIL_SLACKS = ("h_s_lambda", "orthogonality_limit")


def table_columns(cfg: ExperimentConfig) -> list[str]:
    h_cols = [s_label(s) for s in cfg.s_values]
    slack_cols = [f"slack_{n}" for n in SLACK_NAMES + tuple(h_cols) + TAIL_SLACKS]
    return list(BASE_COLUMNS) + h_cols + ["h_s_lambda"] + slack_cols + ["violations"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[dict]
    metadata: dict

    @property
    def n_violations(self) -> int:
        return sum(1 for r in self.rows if r.get("violations"))

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(r.get(c)) for c in self.columns])
        return buf.getvalue()

    def write(self, out_prefix: str | Path) -> tuple[Path, Path]:
        out_prefix = Path(out_prefix)
        out_prefix.parent.mkdir(parents=True, exist_ok=True)
        csv_path = out_prefix.with_suffix(".csv")
        meta_path = out_prefix.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        meta_path.write_text(json.dumps(self.metadata, indent=2, sort_keys=True, default=_json_default))
        return csv_path, meta_path


def _json_default(o):
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


# -- single run -------------------------------------------------------------------


@dataclass
class _Computed:
    records: list[OverlapRecord]
    norm_drift: np.ndarray
    delta_v: float
    gamma: float
    n_cells: int | None
    closed_form_cells: int | None
    extra_meta: dict


def _rm_log_C(params: RiceMeleParams, lam: float, phi0_k: np.ndarray) -> float:
    phi, _ = bloch_ground_states(rice_mele_d_vectors(params, lam))
    ov = np.abs(np.sum(phi0_k.conj() * phi, axis=-1))
    return 2.0 * float(np.sum(np.log(ov)))


def rice_mele_adiabaticity(params: RiceMeleParams, cfg: IntegratorConfig | None = None,
                           epsilon: float = 0.0, lambda_hint: float | None = None) -> dict:
    """lambda*, s* (exact and closed form) and Gamma_N for a Rice-Mele chain.

    lambda* solves C(lambda*) = 1/e by bisection on the exact product overlap;
    the state is then evolved to lambda* so D (and s*) is measured there.
    """
    phi0_k, _ = bloch_ground_states(rice_mele_d_vectors(params, 0.0))
    hi = lambda_hint or 2.0 * params.goc_exponent ** -0.5
    while _rm_log_C(params, hi, phi0_k) > -1.0:
        hi *= 2.0
    coarse = np.linspace(0.0, hi, 65)
    c_vals = [math.exp(_rm_log_C(params, x, phi0_k)) for x in coarse]
    lam_star = find_lambda_star(coarse, c_vals, lambda x: math.exp(_rm_log_C(params, x, phi0_k)))
    traj = evolve_factorized(params, [0.0, lam_star], cfg)
    rec = factorized_overlaps(traj)[-1]
    s_exact = rec.log_D / rec.log_C if rec.D_defined else None
    s_closed = None
    if params.uniform:
        _, _, d_closed = rm_closed_form(rec.C, rec.theta, params.n_cells)
        s_closed = math.log(d_closed) / rec.log_C
    dv = rice_mele_delta_v(params)
    C_N = params.goc_exponent
    s_for_gamma = s_closed if s_closed is not None else s_exact
    est = adiabaticity_estimate(dv, C_N, epsilon, s_for_gamma)
    return {
        "lambda_star": lam_star,
        "lambda_star_gaussian": est.lambda_star,
        "C_at_lambda_star": rec.C,
        "s_star": s_exact,
        "s_star_closed_form": s_closed,
        "M_of_s_star": est.M_of_s_star,
        "gamma_N": est.gamma_N,
        "epsilon": epsilon,
        "C_N": C_N,
        "delta_v": dv,
    }


def _compute(cfg: ExperimentConfig) -> _Computed:
    grid = cfg.grid()
    params = cfg.model_params()
    meta: dict = {}
    if cfg.model == "rice_mele":
        if cfg.uses_factorized():
            traj = evolve_factorized(params, grid, cfg.integrator)
            records = factorized_overlaps(traj)
            meta["path"] = "factorized"
        else:
            model, _ = rice_mele_many_body(params)
            traj = evolve(model, grid, cfg.integrator)
            records = trajectory_overlaps(traj)
            meta["path"] = "many_body"
        meta["n_steps"] = traj.n_steps
        dv = rice_mele_delta_v(params)
        n_cells = params.n_cells if params.uniform else None
        try:
            meta["adiabaticity"] = rice_mele_adiabaticity(params, cfg.integrator, cfg.epsilon)
        except AdiabaticError as exc:  # pragma: no cover - diagnostic only
            meta["adiabaticity"] = {"error": str(exc)}
        return _Computed(records, traj.norm_drift, dv, params.gamma, n_cells, n_cells, meta)

    if cfg.model == "kitaev":
        model = kitaev_hamiltonian(params)
        gamma = params.gamma
    else:
        h0, v = params.matrices()
        model = dense_driven(h0, v, params.gamma, label=f"spectral(dim={params.dim},seed={cfg.seed})")
        gamma = params.gamma
    traj = evolve(model, grid, cfg.integrator)
    records = trajectory_overlaps(traj)
    dv = delta_v(model, traj.phi0)
    meta["path"] = "many_body"
    meta["n_steps"] = traj.n_steps
    meta["dim"] = model.dim
    lam_star = find_lambda_star(grid, [r.C for r in records], _ground_overlap_fn(model, traj.phi0, cfg))
    meta["adiabaticity"] = {"lambda_star": lam_star, "delta_v": dv}
    return _Computed(records, traj.norm_drift, dv, gamma, None, None, meta)


def _ground_overlap_fn(model, phi0: StateVector, cfg: ExperimentConfig):
    def C_of(lam):
        phi, _ = instantaneous_ground_state(model, lam, cfg.integrator.dense_limit)
        return abs(np.vdot(phi0.amplitudes, phi.amplitudes)) ** 2

    return C_of


def _row(rec: OverlapRecord, drift: float, cfg: ExperimentConfig, comp: _Computed) -> dict:
    b = evaluate_bounds(rec, comp.delta_v, comp.gamma, comp.n_cells, cfg.s_values)
    sqrt_d = math.sqrt(rec.D) if rec.D_defined else None
    row = {
        "lambda": rec.lam, "F": rec.F, "C": rec.C, "theta": rec.theta,
        "D": rec.D if rec.D_defined else None, "D_un": rec.D_un,
        "identity_residual": rec.identity_residual if rec.D_defined else None,
        "D_defined": rec.D_defined, "log_C": rec.log_C,
        "log_D": rec.log_D if rec.D_defined else None,
        "sqrt_F_minus_sqrt_C": math.sqrt(rec.F) - math.sqrt(rec.C),
        "sqrt_D_un": math.sqrt(rec.D_un), "sqrt_D": sqrt_d,
        "sin_theta_sqrt_1mC": rec.sin_theta * math.sqrt(rec.one_minus_C),
        "norm_drift": float(drift),
        "R": b.R, "R_tilde": b.R_tilde, "R_tildetilde": b.R_tildetilde,
        "f": b.f, "f1": b.f1, "f2": b.f2, "g": b.g, "g1": b.g1, "g2": b.g2,
        "alpha": b.alpha, "s_ratio": b.s_ratio,
    }
    if comp.closed_form_cells is not None:
        try:
            _, dun_c, d_c = rm_closed_form(rec.C, rec.theta, comp.closed_form_cells)
            row["D_un_closed"], row["D_closed"] = dun_c, d_c
        except UndefinedComplementError:
            pass
    for s, h in b.h_of_s.items():
        row[s_label(s)] = h
    for name, val in b.slacks.items():
        row[f"slack_{name}"] = val
    if b.s_ratio is not None and "h_s_lambda" in b.slacks:
        row["h_s_lambda"] = b.slacks["h_s_lambda"] + abs(rec.F - rec.C)

    bad = b.violations()
    if rec.D_defined and rec.identity_residual > IDENTITY_TOL:
        bad.append("identity")
    if drift > DRIFT_TOL:
        bad.append("norm_drift")
    if 0.0 in b.h_of_s and b.h_of_s[0.0] != b.f:
        bad.append("h0_equals_f")
    row["violations"] = ";".join(bad)
    return row


def run_experiment(cfg: ExperimentConfig) -> ResultTable:
    t0 = time.perf_counter()
    comp = _compute(cfg)
    rows = [_row(rec, d, cfg, comp) for rec, d in zip(comp.records, comp.norm_drift)]
    columns = table_columns(cfg)
    if cfg.outputs:
        keep = set(cfg.outputs) | {"lambda", "violations"}
        columns = [c for c in columns if c in keep]
    violations = sorted({v for r in rows for v in r["violations"].split(";") if v})
    meta = {
        "config": cfg.to_dict(),
        "versions": {
            "package": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
        "wall_time_s": time.perf_counter() - t0,
        "norm_drift_max": float(np.max(comp.norm_drift)),
        "n_rows": len(rows),
        "n_violation_rows": sum(1 for r in rows if r["violations"]),
        "violation_kinds": violations,
        "delta_v": comp.delta_v,
        "slack_tolerance": SLACK_TOL,
    } | comp.extra_meta
    return ResultTable(columns=columns, rows=rows, metadata=meta)


# -- sweeps ------------------------------------------------------------------------


@dataclass
class SweepFailure:
    """Placeholder for a configuration that raised; keeps sweep output aligned with input."""

    config: ExperimentConfig
    error: str


def _run_safe(cfg: ExperimentConfig):
    try:
        return run_experiment(cfg)
    except (AdiabaticError, ValueError, ArithmeticError) as exc:
        return SweepFailure(cfg, f"{type(exc).__name__}: {exc}")


def sweep(cfgs: Sequence[ExperimentConfig], workers: int = 1) -> list[ResultTable | SweepFailure]:
    """Run every config; results come back in input order whatever the worker count."""
    cfgs = list(cfgs)
    if not cfgs:
        raise ContractError("sweep needs at least one configuration")
    if workers <= 1 or len(cfgs) == 1:
        return [_run_safe(c) for c in cfgs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_safe, cfgs))
