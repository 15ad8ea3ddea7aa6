"""Small-lambda series for the instantaneous and the driven ground state.

Work in the eigenbasis {chi_n} of H0 with energies eps_n and matrix elements
V_nm = <chi_n|V|chi_m>.  Two expansions are provided:

* Rayleigh-Schroedinger coefficients of <chi_n|Phi_lambda>, normalized with a
  real positive <chi_0|Phi_lambda>;
* the power series of the interaction-picture amplitudes C_n(lambda) of
  |Psi_lambda> = sum_n C_n(lambda) exp(-i lambda eps_n / Gamma) |chi_n>,
  obtained from the recursion

      (k+1) i Gamma C^(k+1)_m = sum_n V_mn sum_{l=0}^{k-1} (i w_mn / Gamma)^l / l! C^(k-1-l)_n

  with w_mn = eps_m - eps_n.

Series are kept as explicit coefficient tables, never resummed.  The
closed-form low-order coefficients and overlap predictions are transcribed
as published so they can be checked against the recursion and against
exact numerics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DegeneracyError

MAX_ORDER = 5
TRUST_RATIO = 0.1


@dataclass(frozen=True)
class SpectralData:
    energies: np.ndarray
    v_elements: np.ndarray
    gamma: float

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        v = np.asarray(self.v_elements, dtype=complex)
        if e.ndim != 1 or v.shape != (e.size, e.size):
            raise ContractError("energies and V must have matching dimensions")
        if np.any(np.diff(e) < 0):
            raise ContractError("energies must be ascending")
        if e.size > 1 and not e[1] - e[0] > 1e-12 * max(1.0, abs(e[0])):
            raise DegeneracyError("ground level of H0 is degenerate")
        if np.max(np.abs(v - v.conj().T)) > 1e-12:
            raise ContractError("V is not Hermitian")
        if not self.gamma > 0:
            raise ContractError("gamma must be positive")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "v_elements", v)

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def omega(self) -> np.ndarray:
        """omega[m, n] = eps_m - eps_n."""
        return self.energies[:, None] - self.energies[None, :]

    @property
    def gap(self) -> float:
        return float(self.energies[1] - self.energies[0])

    @classmethod
    def from_matrices(cls, h0, v, gamma: float) -> tuple["SpectralData", np.ndarray]:
        """Diagonalize H0; returns the data and the eigenvector matrix (columns chi_n)."""
        h0 = np.asarray(h0, dtype=complex)
        v = np.asarray(v, dtype=complex)
        e, u = np.linalg.eigh(h0)
        vm = u.conj().T @ v @ u
        vm = 0.5 * (vm + vm.conj().T)
        return cls(e, vm, gamma), u

    @classmethod
    def random(cls, dim: int, seed: int, gamma: float = 1.0, real: bool = False) -> "SpectralData":
        rng = np.random.default_rng(seed)
        e = np.sort(rng.uniform(-1.0, 1.0, dim))
        while dim > 1 and e[1] - e[0] < 0.2:
            e = np.sort(rng.uniform(-1.0, 1.0, dim))
        a = rng.normal(size=(dim, dim))
        if not real:
            a = a + 1j * rng.normal(size=(dim, dim))
        v = 0.5 * (a + a.conj().T)
        return cls(e, v, gamma)

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(H0, V) in the H0 eigenbasis."""
        return np.diag(self.energies).astype(complex), self.v_elements.copy()


# -- instantaneous ground state -------------------------------------------------


@dataclass(frozen=True)
class RSSeries:
    """<chi_0|Phi> through lambda^3 (``ground[j]``) and <chi_n|Phi> through lambda^2 (``excited[j, n]``)."""

    ground: np.ndarray
    excited: np.ndarray

    def evaluate(self, lam: float) -> np.ndarray:
        amps = np.zeros(self.excited.shape[1], dtype=complex)
        for j, row in enumerate(self.excited):
            amps += lam**j * row
        amps[0] = sum(lam**j * c for j, c in enumerate(self.ground))
        return amps


def _excited_mask(dim: int) -> np.ndarray:
    m = np.ones(dim, dtype=bool)
    m[0] = False
    return m


def rs_ground_series(sd: SpectralData, order: int = 3) -> RSSeries:
    if order not in (1, 2, 3):
        raise ContractError("order must be 1, 2 or 3")
    e, v = sd.energies, sd.v_elements
    ex = _excited_mask(sd.dim)
    d = np.zeros(sd.dim)
    d[ex] = e[0] - e[ex]  # eps_0 - eps_n
    inv = np.zeros(sd.dim)
    inv[ex] = 1.0 / d[ex]
    v0 = v[:, 0]
    v00 = v[0, 0].real

    ground = np.zeros(4, dtype=complex)
    ground[0] = 1.0
    ground[2] = -0.5 * np.sum(np.abs(v0[ex]) ** 2 * inv[ex] ** 2)
    # sum_n 1/d_n^2 sum_m Re(V*_nm V*_m0 V_n0) / d_m
    inner = np.einsum("nm,m,n->n", v.conj(), v0.conj() * inv, v0).real
    ground[3] = np.sum(v00 * np.abs(v0[ex]) ** 2 * inv[ex] ** 3) - np.sum(inv[ex] ** 2 * inner[ex])

    excited = np.zeros((3, sd.dim), dtype=complex)
    excited[1, ex] = v0[ex] * inv[ex]
    second = (v @ (v0 * inv)) - v00 * v0 * inv
    excited[2, ex] = inv[ex] * second[ex]

    ground[order + 1:] = 0.0
    excited[min(order, 2) + 1:] = 0.0
    return RSSeries(ground=ground, excited=excited)


# -- driven state -----------------------------------------------------------------


@dataclass(frozen=True)
class SeriesCoefficients:
    """coeffs[j, n] = C^(j)_n for j = 0..max_order."""

    coeffs: np.ndarray
    energies: np.ndarray
    gamma: float

    @property
    def max_order(self) -> int:
        return self.coeffs.shape[0] - 1

    def order(self, j: int) -> np.ndarray:
        return self.coeffs[j]


def evolved_series(sd: SpectralData, max_order: int = MAX_ORDER) -> SeriesCoefficients:
    """Interaction-picture coefficients C^(j)_n from the exact recursion."""
    if max_order < 1:
        raise ContractError("max_order must be >= 1")
    g = sd.gamma
    w = sd.omega
    v = sd.v_elements
    c = np.zeros((max_order + 1, sd.dim), dtype=complex)
    c[0, 0] = 1.0
    for k in range(1, max_order):
        acc = np.zeros(sd.dim, dtype=complex)
        for ell in range(k):
            phase = (1j * w / g) ** ell / math.factorial(ell)
            acc += (v * phase) @ c[k - 1 - ell]
        c[k + 1] = acc / ((k + 1) * 1j * g)
    return SeriesCoefficients(coeffs=c, energies=sd.energies.copy(), gamma=g)


def displayed_coefficients(sd: SpectralData) -> np.ndarray:
    """C^(2)..C^(5) from their published closed forms; rows 0 and 1 are delta_n0 and 0."""
    g = sd.gamma
    v = sd.v_elements
    w0 = sd.omega[:, 0]
    v0 = v[:, 0]
    w = sd.omega
    c = np.zeros((6, sd.dim), dtype=complex)
    c[0, 0] = 1.0
    c[2] = v0 / (2j * g)
    c[3] = w0 * v0 / (3 * g**2)
    c[4] = -(v @ v0) / (8 * g**2) - w0**2 * v0 / (8j * g**3)
    c[5] = ((v @ (w0 * v0)) / (15j * g**3)
            + ((w * v) @ v0) / (10j * g**3)
            - w0**3 * v0 / (30 * g**4))
    return c


def reconstruct_evolved(series: SeriesCoefficients, lam: float, upto: int | None = None) -> np.ndarray:
    """<chi_n|Psi_lambda> = sum_j lambda^j C^(j)_n exp(-i lambda eps_n / Gamma)."""
    upto = series.max_order if upto is None else upto
    amps = np.zeros(series.coeffs.shape[1], dtype=complex)
    for j in range(upto + 1):
        amps += lam**j * series.coeffs[j]
    return amps * np.exp(-1j * lam * series.energies / series.gamma)


def displayed_amplitudes(sd: SpectralData, lam: float) -> np.ndarray:
    """Published polynomial form of <chi_0|Psi> (through lambda^5) and <chi_n|Psi> (through lambda^4)."""
    g, e = sd.gamma, sd.energies
    v = sd.v_elements
    v0 = v[:, 0]
    v00 = v[0, 0].real
    e0 = e[0]
    w0 = sd.omega[:, 0]
    s_all = np.sum(np.abs(v0) ** 2)
    s_w = np.sum(w0 * np.abs(v0) ** 2)
    a0 = (1
          + lam * e0 / (1j * g)
          - lam**2 * (e0**2 / (2 * g**2) - v00 / (2j * g))
          - lam**3 * (e0**3 / (6j * g**3) + v00 * e0 / (2 * g**2))
          + lam**4 * (e0**4 / (24 * g**4) - s_all / (8 * g**2) - v00 * e0**2 / (4j * g**3))
          + lam**5 * (e0**5 / (120j * g**5) - s_w / (30j * g**3) - s_all * e0 / (8j * g**3)
                      + v00 * e0**3 / (12 * g**4)))
    an = (lam**2 * v0 / (2j * g)
          + lam**3 * (w0 * v0 / (3 * g**2) - v0 * e / (2 * g**2))
          + lam**4 * (-(v @ v0) / (8 * g**2) - w0**2 * v0 / (8j * g**3)
                      + w0 * v0 * e / (3j * g**3) - v0 * e**2 / (4j * g**3)))
    an = an.astype(complex)
    an[0] = a0
    return an


# -- overlap predictions ---------------------------------------------------------------


@dataclass(frozen=True)
class PerturbativePrediction:
    lam: float
    C: float
    F: float
    F_minus_C: float
    sin_theta: float
    sin_theta_cubic: float
    sqrt_D_un: float
    D_leading: float
    trusted: bool


def _sums(sd: SpectralData) -> dict[str, float]:
    e, v = sd.energies, sd.v_elements
    ex = _excited_mask(sd.dim)
    v0 = v[:, 0]
    absv2 = np.abs(v0[ex]) ** 2
    d = e[0] - e[ex]
    inv = np.zeros(sd.dim)
    inv[ex] = 1.0 / d
    inner = np.einsum("nm,m,n->n", v.conj(), v0.conj() * inv, v0).real
    v00 = float(v[0, 0].real)
    return {
        "S0": float(np.sum(absv2)),
        "S1": float(np.sum(absv2 / d)),
        "S2": float(np.sum(absv2 / d**2)),
        "T3": float(np.sum(v00 * absv2 / d**3) - np.sum(inv[ex] ** 2 * inner[ex])),
        "V00": v00,
        "eps0": float(e[0]),
        "vmax": float(np.max(np.abs(v0[ex]))) if ex.any() else 0.0,
    }


def predict_overlaps(sd: SpectralData, lam: float) -> PerturbativePrediction:
    """Leading-order predictions for C, F, F - C, sin(theta), sqrt(D_un) and D.

    Every expression is the published one.  ``trusted`` is False when
    |lambda| max_n |V_n0| / gap >= 0.1, outside the heuristic validity range.
    """
    s = _sums(sd)
    g = sd.gamma
    C = 1.0 - lam**2 * s["S2"] + 2.0 * lam**3 * s["T3"]
    f_minus_c = -(lam**3) * s["V00"] * s["eps0"] / g**2
    sin_t = lam**2 / (2.0 * g) * math.sqrt(s["S0"])
    sin_t3 = 0.0
    if s["S0"] > 0:
        sin_t3 = -(lam**3) * (s["S0"] / g**2) ** -0.5 * s["V00"] * s["eps0"] ** 3 / g**4
    # sum |V_n0|^2 / (eps_n - eps_0) = -S1
    sqrt_dun = lam**3 / (2.0 * g) * (-s["S1"])
    d_lead = s["S1"] ** 2 / (s["S0"] * s["S2"]) if s["S0"] > 0 and s["S2"] > 0 else math.nan
    trusted = abs(lam) * s["vmax"] / sd.gap < TRUST_RATIO
    return PerturbativePrediction(lam=float(lam), C=C, F=C + f_minus_c, F_minus_C=f_minus_c,
                                  sin_theta=sin_t, sin_theta_cubic=sin_t + sin_t3,
                                  sqrt_D_un=sqrt_dun, D_leading=d_lead, trusted=trusted)


def gamma_free_orders(sd: SpectralData) -> dict[int, float]:
    """Coefficients of C (= F) at orders lambda^0..lambda^2; they contain no Gamma by construction."""
    s = _sums(sd)
    return {0: 1.0, 1: 0.0, 2: -s["S2"]}
