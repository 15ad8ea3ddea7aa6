"""Driven Hamiltonians H(lambda) = H0 + lambda V.

Two concrete models are provided:

* the Rice-Mele chain with mu(lambda) = lambda, both as Bloch blocks
  d(k, lambda) . sigma (one 2x2 block per unit cell momentum) and as a
  real-space many-body operator on 2N sites at half filling;
* the interacting Kitaev chain with periodic boundaries in a fixed fermion
  parity sector, with mu(lambda) = mu0 * lambda.

``n_cells`` for Rice-Mele counts unit cells, i.e. k-modes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ContractError
from .hilbert import (
    FockBasis,
    SparseOperator,
    StateVector,
    build_number_basis,
    build_parity_basis,
    fermion_operator,
    number_operator,
)

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)


@dataclass(frozen=True)
class DrivenHamiltonian:
    h0: SparseOperator
    v: SparseOperator
    gamma: float
    label: str = ""

    def __post_init__(self):
        if self.h0.dim != self.v.dim:
            raise ContractError(f"h0 dim {self.h0.dim} != v dim {self.v.dim}")
        if not self.gamma > 0:
            raise ContractError(f"driving rate must be positive, got {self.gamma}")
        if self.h0.basis_id != self.v.basis_id:
            raise ContractError("h0 and v live in different bases")

    @property
    def dim(self) -> int:
        return self.h0.dim

    @property
    def basis_id(self) -> str:
        return self.h0.basis_id

    def at(self, lam: float) -> sp.csr_matrix:
        """Sparse matrix of H(lambda)."""
        return self.h0.matrix + lam * self.v.matrix

    def hermiticity_error(self) -> float:
        return max(self.h0.hermiticity_error(), self.v.hermiticity_error())


# -- Rice-Mele -----------------------------------------------------------------


@dataclass(frozen=True)
class RiceMeleParams:
    J: float = 0.4
    U: float = 0.4
    gamma: float = 0.7
    n_cells: int = 10

    def __post_init__(self):
        if self.n_cells < 2 or self.n_cells % 2:
            raise ContractError(f"n_cells must be a positive even integer, got {self.n_cells}")
        if not self.gamma > 0:
            raise ContractError("gamma must be positive")

    @property
    def uniform(self) -> bool:
        """True for J == U, where every Bloch block is the same two-level system."""
        return self.J == self.U

    @property
    def goc_exponent(self) -> float:
        """C_N = N / (16 J U) in C(lambda) ~ exp(-C_N lambda^2)."""
        return self.n_cells / (16.0 * self.J * self.U)


@dataclass(frozen=True)
class BlochBlock:
    k: float
    d: np.ndarray

    def matrix(self) -> np.ndarray:
        return np.einsum("i,ijk->jk", self.d, PAULI)


def rice_mele_kgrid(n_cells: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_cells) / n_cells


def rice_mele_d_vectors(params: RiceMeleParams, lam: float, k=None) -> np.ndarray:
    """d(k, lambda) for every k of the grid (or the given k values), shape (n_k, 3)."""
    k = rice_mele_kgrid(params.n_cells) if k is None else np.asarray(k, dtype=float)
    J, U = params.J, params.U
    d = np.empty(k.shape + (3,))
    d[..., 0] = -(J + U) - (J - U) * np.cos(k)
    d[..., 1] = (J - U) * np.sin(k)
    d[..., 2] = lam
    return d


def rice_mele_bloch(params: RiceMeleParams, k: float, lam: float) -> BlochBlock:
    m = k * params.n_cells / (2.0 * np.pi)
    if abs(m - round(m)) > 1e-9 or not 0 <= round(m) < params.n_cells:
        raise ContractError(f"k={k} is not on the grid 2*pi*m/{params.n_cells}")
    return BlochBlock(k=float(k), d=rice_mele_d_vectors(params, lam, np.array(k)))


def rice_mele_many_body(params: RiceMeleParams) -> tuple[DrivenHamiltonian, FockBasis]:
    """Real-space Rice-Mele chain on 2N sites at half filling (a_j -> 2j, b_j -> 2j+1)."""
    n = params.n_cells
    n_sites = 2 * n
    if n_sites > 24:
        raise CapacityError(f"{n} cells need {n_sites} sites, above the 24-site limit")
    basis = build_number_basis(n_sites, n)
    J, U = params.J, params.U
    terms = []
    for j in range(n):
        a, b, b_next = 2 * j, 2 * j + 1, (2 * j + 3) % n_sites
        for amp, (x, y) in ((-(J + U), (a, b)), (-(J - U), (a, b_next))):
            terms.append((amp, [(True, x), (False, y)]))
            terms.append((amp, [(True, y), (False, x)]))
    h0 = fermion_operator(basis, terms, hermitian=True)
    stagger = np.tile([1.0, -1.0], n)
    v = number_operator(basis, stagger)
    label = f"rice_mele(N={n},J={J},U={U})"
    return DrivenHamiltonian(h0, v, params.gamma, label), basis


# -- Kitaev --------------------------------------------------------------------


@dataclass(frozen=True)
class KitaevParams:
    J: float = 1.0
    Delta: float = 0.8
    V_int: float = 0.0
    mu0: float = 3.0
    gamma: float = 1.0
    n_sites: int = 10
    sector: str = "odd"


def kitaev_hamiltonian(params: KitaevParams, basis: FockBasis | None = None) -> DrivenHamiltonian:
    """Periodic interacting Kitaev chain restricted to one parity sector.

    The boundary bonds use c_N = c_0 as fermion operators; the Jordan-Wigner
    string then produces the parity-dependent sign automatically.
    """
    n = params.n_sites
    if n < 3:
        raise CapacityError(f"periodic Kitaev chain needs n_sites >= 3, got {n}")
    if basis is None:
        basis = build_parity_basis(n, params.sector)
    if basis.n_sites != n or basis.sector != params.sector or basis.n_particles is not None:
        raise ContractError("basis does not match the Kitaev sites/sector")
    J, D, Vi = params.J, params.Delta, params.V_int
    terms = []
    for j in range(n):
        jp = (j + 1) % n
        terms += [
            (-J, [(True, j), (False, jp)]),
            (-J, [(True, jp), (False, j)]),
            (D, [(True, j), (True, jp)]),
            (np.conj(D), [(False, jp), (False, j)]),
        ]
        if Vi:
            terms.append((Vi, [(True, j), (False, j), (True, jp), (False, jp)]))
    h0 = fermion_operator(basis, terms, hermitian=True)
    v = number_operator(basis).scaled(params.mu0)
    label = f"kitaev(N={n},J={J},Delta={D},V={Vi},mu0={params.mu0},{params.sector})"
    return DrivenHamiltonian(h0, v, params.gamma, label)


# -- generic -------------------------------------------------------------------


def dense_driven(h0: np.ndarray, v: np.ndarray, gamma: float, label: str = "custom") -> DrivenHamiltonian:
    """Wrap dense matrices (e.g. a spectral model) as a DrivenHamiltonian."""
    h0 = np.asarray(h0)
    v = np.asarray(v)
    return DrivenHamiltonian(
        SparseOperator(sp.csr_matrix(h0), hermitian=True),
        SparseOperator(sp.csr_matrix(v), hermitian=True),
        gamma,
        label,
    )


def delta_v(model: DrivenHamiltonian, phi0: StateVector, tol: float = 1e-10) -> float:
    """Energy-uncertainty scale sqrt(<V^2>_0 - <V>_0^2) in the initial ground state."""
    if phi0.dim != model.dim:
        raise ContractError("phi0 dimension does not match the model")
    if not phi0.is_normalized(tol):
        raise ContractError("phi0 must be normalized")
    x = phi0.amplitudes
    vx = model.v.matrix @ x
    mean = np.vdot(x, vx).real
    var = np.vdot(vx, vx).real - mean**2
    return float(np.sqrt(max(var, 0.0)))


def rice_mele_delta_v(params: RiceMeleParams) -> float:
    """delta V_N from the Bloch blocks: sum over k of the per-block variance of sigma_z."""
    d = rice_mele_d_vectors(params, 0.0)
    dz_hat = d[:, 2] / np.linalg.norm(d, axis=1)
    return float(np.sqrt(np.sum(1.0 - dz_hat**2)))
