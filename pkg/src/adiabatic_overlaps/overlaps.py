"""Fidelity, ground-state overlap, Bures angle and complementary-subspace overlaps.

With P = |Phi0><Phi0| and Q = 1 - P, the evolved state Psi and the
instantaneous ground state Phi split into P and Q parts.  ``D`` is the squared
overlap of the normalized Q parts, ``D_un`` that of the unnormalized ones, and

    sqrt(D_un) = sin(theta) * sqrt(1 - C) * sqrt(D).

Everything here is computed from Q-projected vectors directly rather than
from differences such as 1 - C, so small quantities keep full relative
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ContractError, UndefinedComplementError
from .hilbert import StateVector, inner_product

COMPLEMENT_EPS = 1e-14
CLAMP_TOL = 1e-12
NORM_TOL = 1e-8


@dataclass(frozen=True)
class OverlapRecord:
    lam: float
    F: float
    C: float
    theta: float
    D: float
    D_un: float
    identity_residual: float
    D_defined: bool
    sin_theta: float
    one_minus_C: float
    log_C: float
    log_D: float

    def as_dict(self) -> dict:
        return asdict(self)


def _require_normalized(*states: StateVector) -> None:
    for s in states:
        if not s.is_normalized(NORM_TOL):
            raise ContractError(f"state is not normalized (norm {s.norm():.3e})")


def _clamp_unit(x: float, what: str) -> float:
    if x < -CLAMP_TOL or x > 1.0 + CLAMP_TOL:
        raise ContractError(f"{what}={x!r} outside [0, 1] beyond roundoff")
    return min(max(x, 0.0), 1.0)


def fidelity(phi_lambda: StateVector, psi_lambda: StateVector) -> float:
    """Adiabatic fidelity |<Phi_lambda|Psi_lambda>|^2."""
    _require_normalized(phi_lambda, psi_lambda)
    return _clamp_unit(abs(inner_product(phi_lambda, psi_lambda)) ** 2, "F")


def ground_overlap(phi0: StateVector, phi_lambda: StateVector) -> float:
    """Ground-state overlap |<Phi_lambda|Phi_0>|^2."""
    _require_normalized(phi0, phi_lambda)
    return _clamp_unit(abs(inner_product(phi0, phi_lambda)) ** 2, "C")


def _split(state: np.ndarray, phi0: np.ndarray) -> tuple[complex, np.ndarray]:
    p = np.vdot(phi0, state)
    return p, state - p * phi0


def bures_angle(psi_lambda: StateVector, phi0: StateVector) -> float:
    """theta = arccos |<Psi|Phi0>| in [0, pi/2].

    Evaluated as atan2(||Q Psi||, |<Phi0|Psi>|), which equals the arccos form
    for normalized input but keeps precision near theta = 0.
    """
    _require_normalized(psi_lambda, phi0)
    if psi_lambda.basis_id != phi0.basis_id or psi_lambda.dim != phi0.dim:
        raise ContractError("basis mismatch")
    p, q = _split(psi_lambda.amplitudes, phi0.amplitudes)
    return math.atan2(float(np.linalg.norm(q)), abs(p))


def decompose(state: StateVector, phi0: StateVector) -> tuple[float, StateVector]:
    """(|<Phi0|state>|, normalized Q|state>).

    Raises :class:`UndefinedComplementError` if ||Q|state>|| <= 1e-14.
    """
    _require_normalized(state, phi0)
    if state.basis_id != phi0.basis_id or state.dim != phi0.dim:
        raise ContractError("basis mismatch")
    p, q = _split(state.amplitudes, phi0.amplitudes)
    qn = float(np.linalg.norm(q))
    if qn <= COMPLEMENT_EPS:
        raise UndefinedComplementError("state coincides with Phi0; complement undefined")
    return abs(p), StateVector(q / qn, state.basis_id)


def overlap_D(psi_lambda: StateVector, phi_lambda: StateVector, phi0: StateVector) -> float:
    """Squared overlap of the normalized complementary components."""
    _, qpsi = decompose(psi_lambda, phi0)
    _, qphi = decompose(phi_lambda, phi0)
    return _clamp_unit(abs(inner_product(qpsi, qphi)) ** 2, "D")


def overlap_D_un(psi_lambda: StateVector, phi_lambda: StateVector, phi0: StateVector) -> float:
    """|<Psi|Q|Phi>|^2 = |<Psi|Phi> - <Psi|Phi0><Phi0|Phi>|^2."""
    _require_normalized(psi_lambda, phi_lambda, phi0)
    if len({psi_lambda.basis_id, phi_lambda.basis_id, phi0.basis_id}) != 1:
        raise ContractError("basis mismatch")
    _, qpsi = _split(psi_lambda.amplitudes, phi0.amplitudes)
    _, qphi = _split(phi_lambda.amplitudes, phi0.amplitudes)
    return _clamp_unit(abs(np.vdot(qpsi, qphi)) ** 2, "D_un")


def overlap_record(lam: float, psi_lambda: StateVector, phi_lambda: StateVector,
                   phi0: StateVector) -> OverlapRecord:
    """All overlaps at one lambda.

    ``psi_lambda`` is normalized here for measurement only; the integrator
    reports its norm drift separately.
    """
    if len({psi_lambda.basis_id, phi_lambda.basis_id, phi0.basis_id}) != 1:
        raise ContractError("basis mismatch")
    psi = psi_lambda.amplitudes / np.linalg.norm(psi_lambda.amplitudes)
    phi = phi_lambda.amplitudes / np.linalg.norm(phi_lambda.amplitudes)
    f0 = phi0.amplitudes / np.linalg.norm(phi0.amplitudes)
    p_psi, q_psi = _split(psi, f0)
    p_phi, q_phi = _split(phi, f0)
    sin_t = float(np.linalg.norm(q_psi))
    s_phi = float(np.linalg.norm(q_phi))
    F = _clamp_unit(abs(np.vdot(phi, psi)) ** 2, "F")
    C = _clamp_unit(abs(p_phi) ** 2, "C")
    theta = math.atan2(sin_t, abs(p_psi))
    qq = np.vdot(q_psi, q_phi)
    D_un = _clamp_unit(abs(qq) ** 2, "D_un")
    defined = sin_t > COMPLEMENT_EPS and s_phi > COMPLEMENT_EPS
    if defined:
        sqrt_D = min(abs(qq) / (sin_t * s_phi), 1.0)
        D = sqrt_D**2
        resid = abs(math.sqrt(D_un) - sin_t * s_phi * sqrt_D)
        log_D = 2.0 * math.log(sqrt_D) if sqrt_D > 0 else -math.inf
    else:
        D, resid, log_D = math.nan, math.nan, math.nan
    log_C = 2.0 * math.log(abs(p_phi)) if abs(p_phi) > 0 else -math.inf
    return OverlapRecord(lam=float(lam), F=F, C=C, theta=theta, D=D, D_un=D_un,
                         identity_residual=resid, D_defined=defined, sin_theta=sin_t,
                         one_minus_C=s_phi**2, log_C=log_C, log_D=log_D)


def trajectory_overlaps(traj) -> list[OverlapRecord]:
    phi0 = traj.instantaneous[0]
    return [overlap_record(lam, psi, phi, phi0)
            for lam, psi, phi in zip(traj.lambdas, traj.evolved, traj.instantaneous)]


# -- product states ------------------------------------------------------------


def _clog1p(z: np.ndarray) -> np.ndarray:
    """Accurate complex log(1 + z) for small |z|."""
    x, y = z.real, z.imag
    re = 0.5 * np.log1p(2.0 * x + x * x + y * y)
    im = np.arctan2(y, 1.0 + x)
    return re + 1j * im


def _cexpm1(w: complex) -> complex:
    """Accurate complex exp(w) - 1 for small |w|."""
    a, b = w.real, w.imag
    re = math.expm1(a) * math.cos(b) - 2.0 * math.sin(0.5 * b) ** 2
    im = math.exp(a) * math.sin(b)
    return complex(re, im)


def _log_abs_sum(vals: np.ndarray) -> float:
    a = np.abs(vals)
    if np.any(a == 0.0):
        return -math.inf
    return float(np.sum(np.log(a)))


def _log1m_sum(s2: np.ndarray) -> float:
    """sum_k log(1 - s2_k), exact for tiny s2_k."""
    if np.any(s2 >= 1.0):
        return -math.inf
    return float(np.sum(np.log1p(-s2)))


def _neg_expm1(log_x: float) -> float:
    """1 - exp(log_x) without cancellation."""
    return -math.expm1(log_x) if log_x > -math.inf else 1.0


def assemble_product_overlaps(per_k_evolved: np.ndarray, per_k_instantaneous: np.ndarray,
                              per_k_initial: np.ndarray, lambdas) -> list[OverlapRecord]:
    """Overlap records for product states Psi = (x)_k psi_k, Phi = (x)_k phi_k.

    Many-body inner products are products of per-k ones, accumulated as
    log-modulus sums.  The complementary overlap uses
    <Psi|Q|Phi> = <Psi|P|Phi> (prod_k (1 + A_k) - 1), with
    A_k = <psi_k|q_k|phi_k> / <psi_k|p_k|phi_k>, evaluated through complex
    log1p / expm1 so it stays accurate when every A_k is tiny.
    """
    records = []
    phi0 = per_k_initial / np.linalg.norm(per_k_initial, axis=-1, keepdims=True)
    for lam, psi, phi in zip(lambdas, per_k_evolved, per_k_instantaneous):
        psi = psi / np.linalg.norm(psi, axis=-1, keepdims=True)
        phi = phi / np.linalg.norm(phi, axis=-1, keepdims=True)
        a = np.sum(psi.conj() * phi, axis=-1)  # <psi_k|phi_k>
        b = np.sum(psi.conj() * phi0, axis=-1)  # <psi_k|phi0_k>
        c = np.sum(phi0.conj() * phi, axis=-1)  # <phi0_k|phi_k>
        # per-k complements, so 1 - |b_k|^2, 1 - |c_k|^2 and <psi_k|q_k|phi_k>
        # never come from differences of numbers close to one
        q_psi = psi - b.conj()[:, None] * phi0
        q_phi = phi - c[:, None] * phi0
        s2_psi = np.sum(np.abs(q_psi) ** 2, axis=-1)
        s2_phi = np.sum(np.abs(q_phi) ** 2, axis=-1)
        qq = np.sum(q_psi.conj() * q_phi, axis=-1)
        log_F = min(2.0 * _log_abs_sum(a), 0.0)
        log_cos2 = min(_log1m_sum(s2_psi), 0.0)
        log_C = min(_log1m_sum(s2_phi), 0.0)
        F = math.exp(log_F) if log_F > -math.inf else 0.0
        C = math.exp(log_C) if log_C > -math.inf else 0.0
        sin2 = _neg_expm1(log_cos2)
        one_minus_C = _neg_expm1(log_C)
        sin_t = math.sqrt(max(sin2, 0.0))
        theta = math.atan2(sin_t, math.exp(0.5 * log_cos2) if log_cos2 > -math.inf else 0.0)
        pc = b * c  # <psi_k|p_k|phi_k>
        if np.any(pc == 0.0):
            # P part vanishes: <Psi|Q|Phi> = <Psi|Phi>
            log_abs_qq = 0.5 * log_F
        else:
            A = qq / pc
            m1 = _cexpm1(complex(np.sum(_clog1p(A))))
            log_abs_qq = _log_abs_sum(pc) + (math.log(abs(m1)) if m1 != 0 else -math.inf)
        D_un = math.exp(2.0 * log_abs_qq) if log_abs_qq > -math.inf else 0.0
        defined = sin_t > 1e-14 and one_minus_C > 1e-28
        if defined:
            log_D = 2.0 * log_abs_qq - math.log(sin2) - math.log(one_minus_C)
            log_D = min(log_D, 0.0)
            D = math.exp(log_D)
            resid = abs(math.sqrt(D_un) - sin_t * math.sqrt(one_minus_C) * math.sqrt(D))
        else:
            D, resid, log_D = math.nan, math.nan, math.nan
        records.append(OverlapRecord(lam=float(lam), F=min(F, 1.0), C=min(C, 1.0), theta=theta,
                                     D=D, D_un=min(D_un, 1.0), identity_residual=resid,
                                     D_defined=defined, sin_theta=sin_t,
                                     one_minus_C=one_minus_C, log_C=log_C, log_D=log_D))
    return records


def factorized_overlaps(traj) -> list[OverlapRecord]:
    return assemble_product_overlaps(traj.evolved, traj.instantaneous, traj.initial, traj.lambdas)


def sum_A(per_k_evolved_at: np.ndarray, per_k_instantaneous_at: np.ndarray,
          per_k_initial: np.ndarray) -> complex:
    """sum_k A_k at one lambda (first-order expansion of prod_k (1 + A_k) - 1)."""
    psi, phi, phi0 = per_k_evolved_at, per_k_instantaneous_at, per_k_initial
    b = np.sum(psi.conj() * phi0, axis=-1)
    c = np.sum(phi0.conj() * phi, axis=-1)
    qq = np.sum((psi - b.conj()[:, None] * phi0).conj() * (phi - c[:, None] * phi0), axis=-1)
    return complex(np.sum(qq / (b * c)))
