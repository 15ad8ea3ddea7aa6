"""State vectors, fermionic occupation bases and sparse Hermitian operators.

Bitstring convention: site ``j`` is bit ``j`` of the integer label (site 0 is
the least significant bit).  Fermionic operators carry Jordan-Wigner strings
ordered by increasing site index, so ``c_j`` acting on a basis state picks up
``(-1)**(number of occupied sites i < j)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ContractError

MAX_SITES = 24
PARITY_SECTORS = ("even", "odd", "all")


def _popcount(x: np.ndarray) -> np.ndarray:
    return np.bitwise_count(x.astype(np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class FockBasis:
    """Ordered set of occupation bitstrings on ``n_sites`` modes.

    ``states`` is sorted ascending, so lookup is a binary search.  A basis is
    either a parity sector (``sector`` in even/odd/all) or, when
    ``n_particles`` is set, a fixed-particle-number sector.
    """

    n_sites: int
    sector: str
    states: np.ndarray
    n_particles: int | None = None

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def basis_id(self) -> str:
        if self.n_particles is not None:
            return f"fock(n={self.n_sites},N={self.n_particles})"
        return f"fock(n={self.n_sites},{self.sector})"

    def index_of(self, bitstrings) -> np.ndarray:
        """Basis indices of ``bitstrings``; -1 where a bitstring is absent."""
        b = np.asarray(bitstrings, dtype=np.int64)
        pos = np.searchsorted(self.states, b)
        pos = np.clip(pos, 0, self.dim - 1)
        found = self.states[pos] == b
        return np.where(found, pos, -1)

    def occupations(self) -> np.ndarray:
        """``(dim, n_sites)`` 0/1 array of site occupations."""
        sites = np.arange(self.n_sites, dtype=np.int64)
        return (self.states[:, None] >> sites[None, :]) & 1


def build_parity_basis(n_sites: int, sector: str) -> FockBasis:
    if not 1 <= n_sites <= MAX_SITES:
        raise CapacityError(f"n_sites={n_sites} outside [1, {MAX_SITES}]")
    if sector not in PARITY_SECTORS:
        raise ContractError(f"unknown parity sector {sector!r}")
    allstates = np.arange(2**n_sites, dtype=np.int64)
    if sector == "all":
        states = allstates
    else:
        par = _popcount(allstates) & 1
        states = allstates[par == (1 if sector == "odd" else 0)]
    return FockBasis(n_sites=n_sites, sector=sector, states=states)


def build_number_basis(n_sites: int, n_particles: int) -> FockBasis:
    """Basis of all bitstrings with exactly ``n_particles`` set bits."""
    if not 1 <= n_sites <= MAX_SITES:
        raise CapacityError(f"n_sites={n_sites} outside [1, {MAX_SITES}]")
    if not 0 <= n_particles <= n_sites:
        raise ContractError(f"n_particles={n_particles} outside [0, {n_sites}]")
    states = sorted(sum(1 << s for s in occ) for occ in combinations(range(n_sites), n_particles))
    sector = "even" if n_particles % 2 == 0 else "odd"
    return FockBasis(
        n_sites=n_sites,
        sector=sector,
        states=np.asarray(states, dtype=np.int64),
        n_particles=n_particles,
    )


@dataclass(frozen=True)
class StateVector:
    """Complex amplitudes over a fixed basis, tagged with the basis identity."""

    amplitudes: np.ndarray
    basis_id: str = "generic"

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ContractError("amplitudes must be a non-empty 1-d sequence")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = 1e-12) -> bool:
        return abs(np.vdot(self.amplitudes, self.amplitudes).real - 1.0) <= tol

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm(), self.basis_id)

    @classmethod
    def basis_state(cls, dim: int, index: int, basis_id: str = "generic") -> "StateVector":
        amps = np.zeros(dim, dtype=complex)
        amps[index] = 1.0
        return cls(amps, basis_id)


def _check_compatible(a: StateVector, b: StateVector) -> None:
    if a.dim != b.dim:
        raise ContractError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a.basis_id != b.basis_id:
        raise ContractError(f"basis mismatch: {a.basis_id!r} vs {b.basis_id!r}")


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugating the left argument."""
    _check_compatible(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@dataclass(frozen=True)
class SparseOperator:
    """Square operator stored in canonical CSR form (sorted, deduplicated).

    Coordinate entries are available through :meth:`entries`.
    """

    matrix: sp.csr_matrix
    hermitian: bool = False
    basis_id: str = "generic"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        m = sp.csr_matrix(self.matrix)
        if m.shape[0] != m.shape[1]:
            raise ContractError(f"operator must be square, got {m.shape}")
        m.sum_duplicates()
        m.sort_indices()
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, dim: int, rows, cols, values, hermitian: bool = False,
                     basis_id: str = "generic") -> "SparseOperator":
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if rows.size and (rows.max() >= dim or cols.max() >= dim or rows.min() < 0 or cols.min() < 0):
            raise ContractError("entry index out of range")
        m = sp.coo_matrix((np.asarray(values), (rows, cols)), shape=(dim, dim)).tocsr()
        return cls(m, hermitian=hermitian, basis_id=basis_id)

    @classmethod
    def identity(cls, dim: int, basis_id: str = "generic") -> "SparseOperator":
        return cls(sp.identity(dim, dtype=float, format="csr"), hermitian=True, basis_id=basis_id)

    @classmethod
    def zeros(cls, dim: int, basis_id: str = "generic") -> "SparseOperator":
        return cls(sp.csr_matrix((dim, dim)), hermitian=True, basis_id=basis_id)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def hermiticity_error(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        if other.dim != self.dim:
            raise ContractError("dimension mismatch in operator sum")
        return SparseOperator(self.matrix + other.matrix,
                              hermitian=self.hermitian and other.hermitian,
                              basis_id=self.basis_id)

    def scaled(self, factor: complex) -> "SparseOperator":
        herm = self.hermitian and np.isreal(factor)
        return SparseOperator(self.matrix * factor, hermitian=herm, basis_id=self.basis_id)


def apply(op: SparseOperator, v: StateVector) -> StateVector:
    if op.dim != v.dim:
        raise ContractError(f"dimension mismatch: operator {op.dim} vs state {v.dim}")
    return StateVector(op.matrix @ v.amplitudes, v.basis_id)


# -- fermionic operator construction ---------------------------------------

FermionTerm = tuple[complex, Sequence[tuple[bool, int]]]


def _apply_ladder(states: np.ndarray, sign: np.ndarray, alive: np.ndarray,
                  dagger: bool, site: int) -> None:
    bit = np.int64(1) << site
    occupied = (states & bit) != 0
    ok = ~occupied if dagger else occupied
    alive &= ok
    below = states & (bit - 1)
    sign *= np.where(_popcount(below) & 1, -1, 1)
    states ^= bit


def fermion_operator(basis: FockBasis, terms: Iterable[FermionTerm],
                     hermitian: bool = False) -> SparseOperator:
    """Sum of products of fermionic ladder operators restricted to ``basis``.

    Each term is ``(coefficient, [(dagger, site), ...])`` with the operator
    product written left to right, as on paper: ``[(True, i), (False, j)]``
    is ``c_i^dagger c_j``.  Terms that map a basis state outside the basis
    raise :class:`ContractError`.
    """
    rows, cols, vals = [], [], []
    for coef, ops in terms:
        states = basis.states.copy()
        sign = np.ones(basis.dim, dtype=np.int64)
        alive = np.ones(basis.dim, dtype=bool)
        for dagger, site in reversed(list(ops)):
            if not 0 <= site < basis.n_sites:
                raise ContractError(f"site {site} outside chain of {basis.n_sites}")
            _apply_ladder(states, sign, alive, dagger, site)
        src = np.nonzero(alive)[0]
        if src.size == 0:
            continue
        dst = basis.index_of(states[src])
        if np.any(dst < 0):
            raise ContractError("term maps basis states outside the basis sector")
        rows.append(dst)
        cols.append(src)
        vals.append(coef * sign[src])
    if not rows:
        return SparseOperator.zeros(basis.dim, basis.basis_id)
    return SparseOperator.from_entries(
        basis.dim,
        np.concatenate(rows),
        np.concatenate(cols),
        np.concatenate(vals),
        hermitian=hermitian,
        basis_id=basis.basis_id,
    )


def number_operator(basis: FockBasis, weights: Sequence[float] | None = None) -> SparseOperator:
    """Diagonal operator ``sum_j w_j n_j`` (all weights 1 by default)."""
    occ = basis.occupations()
    w = np.ones(basis.n_sites) if weights is None else np.asarray(weights, dtype=float)
    diag = occ @ w
    return SparseOperator(sp.diags(diag.astype(float), format="csr"), hermitian=True,
                          basis_id=basis.basis_id)


def parity_operator(basis: FockBasis) -> SparseOperator:
    par = np.where(_popcount(basis.states) & 1, -1.0, 1.0)
    return SparseOperator(sp.diags(par, format="csr"), hermitian=True, basis_id=basis.basis_id)
