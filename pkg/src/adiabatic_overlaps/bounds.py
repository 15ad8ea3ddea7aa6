"""Inequalities relating F, C, theta and the complementary overlaps.

All functions take precomputed scalars, never states, so they apply equally
to exact many-body records and to closed-form Rice-Mele data at large N.
Slack convention: ``slack >= 0`` means the inequality holds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ContractError, SingularBoundError, UndefinedComplementError

SLACK_TOL = 1e-10
QSL_TOL = 1e-8
DEFAULT_S_VALUES = (0.0, 0.5, 1.0)
EXP_M_HALF = math.exp(-0.5)


def qsl_R(delta_v: float, gamma: float, lam: float) -> tuple[float, float, float]:
    """Speed-limit functional R = lambda^2 dV / (2 Gamma) and its caps at pi/2 and pi/4."""
    if lam < 0:
        raise ContractError(f"lambda must be non-negative, got {lam}")
    if not gamma > 0:
        raise ContractError("gamma must be positive")
    if delta_v < 0:
        raise ContractError("delta_v must be non-negative")
    R = lam * lam * delta_v / (2.0 * gamma)
    return R, min(R, math.pi / 2), min(R, math.pi / 4)


def _check_unit(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise ContractError(f"{name}={x!r} outside [0, 1]")


def bound_f(C: float, R_tilde: float, R_tildetilde: float) -> tuple[float, float, float]:
    _check_unit("C", C)
    f1 = math.sin(R_tilde) ** 2 * abs(1.0 - 2.0 * C)
    f2 = math.sin(2.0 * R_tildetilde) * math.sqrt(C) * math.sqrt(1.0 - C)
    return f1 + f2, f1, f2


def bound_g(C: float, alpha: float, R_tilde: float, R_tildetilde: float) -> tuple[float, float, float]:
    """Bound for the uniform Rice-Mele chain, built from alpha instead of D."""
    _check_unit("C", C)
    if alpha < 0:
        raise ContractError("alpha must be non-negative")
    g1 = math.sin(R_tilde) ** 2 * C * abs(alpha * alpha - 1.0)
    g2 = math.sin(2.0 * R_tildetilde) * C * alpha
    return g1 + g2, g1, g2


def bound_h(C: float, s: float, R_tilde: float, R_tildetilde: float) -> tuple[float, float, float]:
    """Bound obtained by writing D = C**s.

    The s = 0 branch is evaluated with exactly the arithmetic of
    :func:`bound_f`, so h(., 0) and f agree bit for bit.
    """
    _check_unit("C", C)
    if s < 0:
        raise ContractError("s must be non-negative")
    if s == 0:
        return bound_f(C, R_tilde, R_tildetilde)
    if C == 0.0 and s < 1:
        raise SingularBoundError("C = 0 with s < 1: C**(s-1) diverges")
    c_sm1 = 1.0 if s == 1 else C ** (s - 1.0)
    h1 = math.sin(R_tilde) ** 2 * C * abs(-1.0 + c_sm1 - C**s)
    h2 = math.sin(2.0 * R_tildetilde) * math.sqrt(C ** (s + 1.0)) * math.sqrt(1.0 - C)
    return h1 + h2, h1, h2


def triangle_slacks(F: float, C: float, theta: float, D_un: float) -> dict[str, float]:
    """Slacks of the three reverse triangle inequalities among sqrt(F), sqrt(D_un), cos(theta) sqrt(C)."""
    a, b, c = math.sqrt(F), math.sqrt(D_un), math.cos(theta) * math.sqrt(C)
    return {
        "triangle_1": b - abs(a - c),
        "triangle_2": a - abs(b - c),
        "triangle_3": c - abs(b - a),
    }


def base_inequality_slack(F: float, C: float, theta: float, D_un: float) -> float:
    rhs = abs(-math.sin(theta) ** 2 * C + D_un) + 2.0 * math.cos(theta) * math.sqrt(C) * math.sqrt(D_un)
    return rhs - abs(F - C)


# -- uniform Rice-Mele closed forms ---------------------------------------------


def rm_alpha(C: float | None, n_cells: int, log_C: float | None = None) -> float:
    """alpha = sqrt(N) sqrt(1 - C**(1/N)), via expm1 so small lambda keeps precision.

    ``log_C`` may be passed instead of C when C itself underflows.
    """
    if log_C is None:
        if C is None or not 0.0 < C <= 1.0:
            raise ContractError(f"C={C!r} outside (0, 1]")
        log_C = math.log(C)
    if log_C > 0:
        raise ContractError("log C must be <= 0")
    return math.sqrt(n_cells) * math.sqrt(-math.expm1(log_C / n_cells))


def rm_closed_form(C: float, theta: float, n_cells: int) -> tuple[float, float, float]:
    """(alpha, D_un, D) for the uniform Rice-Mele chain in the small-A_k approximation."""
    if not 0.0 < C < 1.0:
        raise UndefinedComplementError(f"closed form undefined at C={C!r}")
    if not 0.0 < theta < math.pi / 2:
        raise UndefinedComplementError(f"closed form undefined at theta={theta!r}")
    alpha = rm_alpha(C, n_cells)
    root_c = math.sqrt(C) * math.cos(theta) * alpha
    sqrt_dun = root_c * math.sin(theta)
    sqrt_d = root_c / math.sqrt(1.0 - C)
    return alpha, sqrt_dun**2, sqrt_d**2


def ratio_s(C: float, D: float) -> float | None:
    """s = ln D / ln C, or None where it is 0/0 (C within 1e-12 of 1, or D undefined)."""
    if D is None or (isinstance(D, float) and math.isnan(D)):
        return None
    if C >= 1.0 - 1e-12 or C <= 0.0:
        return None
    if not 0.0 < D <= 1.0:
        return None
    return math.log(D) / math.log(C)


def ratio_s_log(log_C: float, log_D: float) -> float | None:
    """Same ratio from logarithms, for records where C or D underflow."""
    if math.isnan(log_D) or math.isnan(log_C) or log_C > -1e-12 or math.isinf(log_C):
        return None
    return min(log_D, 0.0) / log_C


# -- adiabaticity ----------------------------------------------------------------


@dataclass(frozen=True)
class AdiabaticityEstimate:
    lambda_star: float
    s_star: float
    M_of_s_star: float
    gamma_N: float
    epsilon: float


def adiabaticity_estimate(delta_v: float, C_N: float, epsilon: float = 0.0,
                          s_star: float = 1.0) -> AdiabaticityEstimate:
    if not delta_v > 0 or not C_N > 0:
        raise ContractError("delta_v and C_N must be positive")
    if not math.isfinite(s_star):
        raise ContractError("s_star must be finite")
    denom = 1.0 - epsilon - EXP_M_HALF
    if epsilon < 0 or denom <= 0:
        raise ContractError(f"epsilon={epsilon} must lie in [0, 1 - exp(-1/2))")
    lam_star = C_N ** -0.5
    M = math.sqrt(-math.expm1(-1.0)) * math.exp(-0.5 * s_star)
    gamma_N = 0.5 * (delta_v / C_N) * denom**-2 * M
    return AdiabaticityEstimate(lam_star, s_star, M, gamma_N, epsilon)


def find_lambda_star(lambdas: Sequence[float], C_values: Sequence[float],
                     C_of: Callable[[float], float] | None = None,
                     xtol: float = 1e-14) -> float | None:
    """lambda at which C drops to 1/e.

    The crossing is bracketed between adjacent grid points and refined by
    bisection, on ``C_of`` when given and otherwise on log C interpolated
    linearly between the two bracketing knots.  None if C never reaches 1/e.
    """
    lam = np.asarray(lambdas, dtype=float)
    c = np.asarray(C_values, dtype=float)
    target = math.exp(-1.0)
    below = np.nonzero(c <= target)[0]
    if below.size == 0:
        return None
    j = int(below[0])
    if j == 0:
        return float(lam[0])
    lo, hi = float(lam[j - 1]), float(lam[j])
    if C_of is None:
        l0, l1 = math.log(c[j - 1]), math.log(c[j]) if c[j] > 0 else -745.0

        def C_of(x, a=lo, b=hi):
            t = (x - a) / (b - a)
            return math.exp(l0 + t * (l1 - l0))

    while hi - lo > xtol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if C_of(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def two_sided_fidelity_band(C: float, bound: float) -> tuple[float, float]:
    _check_unit("C", C)
    if bound < 0:
        raise ContractError("bound must be non-negative")
    return max(C - bound, 0.0), min(C + bound, 1.0)


# -- per-record evaluation -----------------------------------------------------


@dataclass(frozen=True)
class BoundRecord:
    lam: float
    R: float
    R_tilde: float
    R_tildetilde: float
    f: float
    f1: float
    f2: float
    g: float | None = None
    g1: float | None = None
    g2: float | None = None
    alpha: float | None = None
    s_ratio: float | None = None
    h_of_s: Mapping[float, float] = field(default_factory=dict)
    slacks: Mapping[str, float] = field(default_factory=dict)

    def violations(self, tol: float = SLACK_TOL) -> list[str]:
        """Names of violated invariants.

        Fixed-s h bounds are reported in ``slacks`` but are not invariants:
        they only hold where D is close to C**s.  h at the measured s(lambda) is.
        """
        out = []
        for name, v in self.slacks.items():
            if name.startswith("h_s") and name != "h_s_lambda":
                continue
            lim = QSL_TOL if name == "qsl" else tol
            if v is not None and not math.isnan(v) and v < -lim:
                out.append(name)
        return out


def s_label(s: float) -> str:
    return f"h_s{s:g}"


def evaluate_bounds(rec, delta_v: float, gamma: float, n_cells: int | None = None,
                    s_values: Sequence[float] = DEFAULT_S_VALUES) -> BoundRecord:
    """Evaluate every bound and slack for one overlap record.

    ``rec`` needs ``lam, F, C, theta, D, D_un, log_C, log_D, D_defined``.
    Passing ``n_cells`` switches on the uniform Rice-Mele g bound.
    """
    R, Rt, Rtt = qsl_R(delta_v, gamma, rec.lam)
    F, C, theta, D_un = rec.F, rec.C, rec.theta, rec.D_un
    f, f1, f2 = bound_f(C, Rt, Rtt)
    gap = abs(F - C)
    slacks = dict(triangle_slacks(F, C, theta, D_un))
    slacks["base"] = base_inequality_slack(F, C, theta, D_un)
    slacks["qsl"] = Rt - theta
    slacks["f"] = f - gap

    g = g1 = g2 = alpha = None
    if n_cells is not None and C > 0:
        alpha = rm_alpha(None, n_cells, log_C=min(rec.log_C, 0.0))
        g, g1, g2 = bound_g(C, alpha, Rt, Rtt)
        slacks["g"] = g - gap
        if 0.0 < C < 1.0:
            slacks["alpha_cap"] = math.sqrt(-rec.log_C) - alpha

    h_of_s = {}
    for s in s_values:
        try:
            h = bound_h(C, s, Rt, Rtt)[0]
        except SingularBoundError:
            continue
        h_of_s[float(s)] = h
        slacks[s_label(s)] = h - gap

    s_ratio = None
    if rec.D_defined:
        s_ratio = ratio_s_log(rec.log_C, rec.log_D)
        if s_ratio is not None and (C > 0 or s_ratio >= 1):
            h = bound_h(C, s_ratio, Rt, Rtt)[0]
            slacks["h_s_lambda"] = h - gap

    if D_un < 1e-12:
        slacks["orthogonality_limit"] = -abs(F - math.cos(theta) ** 2 * C)

    return BoundRecord(lam=rec.lam, R=R, R_tilde=Rt, R_tildetilde=Rtt, f=f, f1=f1, f2=f2,
                       g=g, g1=g1, g2=g2, alpha=alpha, s_ratio=s_ratio, h_of_s=h_of_s,
                       slacks=slacks)
