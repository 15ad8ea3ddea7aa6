import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adiabatic_overlaps.errors import CapacityError, ContractError
from adiabatic_overlaps.hilbert import build_parity_basis, parity_operator
from adiabatic_overlaps.models import (
    KitaevParams,
    RiceMeleParams,
    delta_v,
    dense_driven,
    kitaev_hamiltonian,
    rice_mele_bloch,
    rice_mele_d_vectors,
    rice_mele_delta_v,
    rice_mele_kgrid,
    rice_mele_many_body,
)
from adiabatic_overlaps.dynamics import instantaneous_ground_state


def _kron_chain(ops):
    m = np.array([[1.0 + 0j]])
    for op in reversed(ops):
        m = np.kron(m, op)
    return m


def kitaev_dense_oracle(n, J, Delta, V, mu0, lam, parity):
    """Full 2^n Jordan-Wigner Hamiltonian from Kronecker products, then sector-projected."""
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    z = np.diag([1.0, -1.0]).astype(complex)
    eye = np.eye(2, dtype=complex)
    c = [_kron_chain([z] * j + [a] + [eye] * (n - j - 1)) for j in range(n)]
    cd = [x.conj().T for x in c]
    dim = 2**n
    h = np.zeros((dim, dim), dtype=complex)
    for j in range(n):
        k = (j + 1) % n
        h += -J * (cd[j] @ c[k] + cd[k] @ c[j])
        h += Delta * cd[j] @ cd[k] + np.conj(Delta) * c[k] @ c[j]
        h += V * (cd[j] @ c[j]) @ (cd[k] @ c[k])
        h += lam * mu0 * cd[j] @ c[j]
    keep = [s for s in range(dim) if bin(s).count("1") % 2 == parity]
    return h[np.ix_(keep, keep)]


# -- Rice-Mele ---------------------------------------------------------------------


def test_rm_params_validation():
    with pytest.raises(ContractError):
        RiceMeleParams(n_cells=7)
    with pytest.raises(ContractError):
        RiceMeleParams(gamma=0.0)
    assert RiceMeleParams(J=0.4, U=0.4).uniform
    assert RiceMeleParams(J=0.4, U=0.4, n_cells=16).goc_exponent == pytest.approx(16 / (16 * 0.16))


def test_rm_d_vector_formula():
    p = RiceMeleParams(J=0.5, U=0.3, n_cells=4)
    d = rice_mele_d_vectors(p, 0.7)
    k = rice_mele_kgrid(4)
    assert np.allclose(d[:, 0], -(0.8) - 0.2 * np.cos(k))
    assert np.allclose(d[:, 1], 0.2 * np.sin(k))
    assert np.allclose(d[:, 2], 0.7)


def test_rm_bloch_block_is_d_dot_sigma():
    p = RiceMeleParams(J=0.5, U=0.3, n_cells=4)
    blk = rice_mele_bloch(p, np.pi / 2, 0.3)
    dx, dy, dz = blk.d
    expected = np.array([[dz, dx - 1j * dy], [dx + 1j * dy, -dz]])
    assert np.allclose(blk.matrix(), expected)
    with pytest.raises(ContractError):
        rice_mele_bloch(p, 0.3, 0.0)


@pytest.mark.parametrize("J,U", [(0.4, 0.4), (0.5, 0.3), (0.2, 0.6)])
@pytest.mark.parametrize("lam", [0.0, 0.4, 1.3])
def test_rm_many_body_ground_energy_is_sum_of_lower_bands(J, U, lam):
    p = RiceMeleParams(J=J, U=U, n_cells=4)
    model, _ = rice_mele_many_body(p)
    e0 = np.linalg.eigvalsh(model.at(lam).toarray())[0]
    bands = -np.linalg.norm(rice_mele_d_vectors(p, lam), axis=1).sum()
    assert e0 == pytest.approx(bands, abs=1e-11)


def test_rm_many_body_capacity():
    with pytest.raises(CapacityError):
        rice_mele_many_body(RiceMeleParams(n_cells=14))


def test_rm_delta_v_matches_many_body_variance():
    p = RiceMeleParams(J=0.5, U=0.3, n_cells=4)
    model, _ = rice_mele_many_body(p)
    phi0, _ = instantaneous_ground_state(model, 0.0)
    assert rice_mele_delta_v(p) == pytest.approx(delta_v(model, phi0), abs=1e-11)


def test_rm_delta_v_uniform_is_sqrt_n():
    # for J == U every d-vector lies along x at lambda = 0, so each block contributes 1
    assert rice_mele_delta_v(RiceMeleParams(n_cells=200)) == pytest.approx(np.sqrt(200))


# -- Kitaev ------------------------------------------------------------------------


@pytest.mark.parametrize("parity", [0, 1])
@pytest.mark.parametrize("V", [0.0, 1.0, 2.0])
@pytest.mark.parametrize("lam", [0.0, 0.9])
def test_kitaev_matches_kronecker_oracle(parity, V, lam):
    n = 4
    sector = "odd" if parity else "even"
    model = kitaev_hamiltonian(KitaevParams(n_sites=n, V_int=V, sector=sector))
    oracle = kitaev_dense_oracle(n, 1.0, 0.8, V, 3.0, lam, parity)
    assert np.allclose(model.at(lam).toarray(), oracle, atol=1e-13)


def test_kitaev_hermitian_and_parity_conserving():
    for n in (5, 8):
        model = kitaev_hamiltonian(KitaevParams(n_sites=n, V_int=1.0, sector="all"))
        assert model.hermiticity_error() <= 1e-12
        par = parity_operator(build_parity_basis(n, "all")).toarray()
        h = model.at(0.7).toarray()
        assert np.abs(h @ par - par @ h).max() < 1e-13


def test_kitaev_free_limit_matches_bdg_spectrum():
    # V = 0 is quadratic with periodic fermions, k = 2 pi m / n.  Each (k, -k) pair sits
    # in its BdG vacuum; the unpaired k = 0 and k = pi modes set the parity.
    n, J, D, mu0, lam = 6, 1.0, 0.8, 3.0, 0.4
    ks = 2 * np.pi * np.arange(n) / n
    xi = -2 * J * np.cos(ks) + mu0 * lam
    e_k = np.sqrt(xi**2 + (2 * D * np.sin(ks)) ** 2)
    paired = np.abs(np.sin(ks)) > 1e-9
    pairs = 0.5 * np.sum((xi - e_k)[paired])
    xi0, xipi = xi[~paired]
    expected = {"even": pairs + min(0.0, xi0 + xipi), "odd": pairs + min(xi0, xipi)}
    for sector, e in expected.items():
        model = kitaev_hamiltonian(KitaevParams(n_sites=n, sector=sector))
        assert np.linalg.eigvalsh(model.at(lam).toarray())[0] == pytest.approx(e, abs=1e-10)


def test_kitaev_capacity_and_basis_mismatch():
    with pytest.raises(CapacityError):
        kitaev_hamiltonian(KitaevParams(n_sites=2))
    with pytest.raises(CapacityError):
        kitaev_hamiltonian(KitaevParams(n_sites=25))
    with pytest.raises(ContractError):
        kitaev_hamiltonian(KitaevParams(n_sites=4), basis=build_parity_basis(4, "even"))


# -- generic -----------------------------------------------------------------------


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_driven_hamiltonian_is_affine(a, b):
    rng = np.random.default_rng(0)
    h0 = rng.normal(size=(4, 4))
    v = rng.normal(size=(4, 4))
    m = dense_driven(h0 + h0.T, v + v.T, 1.0)
    combo = m.at(a).toarray() + m.at(b).toarray() - m.at(0.0).toarray()
    assert np.allclose(m.at(a + b).toarray(), combo, atol=1e-12)


def test_dense_driven_rejects_bad_gamma_and_dims():
    with pytest.raises(ContractError):
        dense_driven(np.eye(2), np.eye(2), 0.0)
    with pytest.raises(ContractError):
        dense_driven(np.eye(2), np.eye(3), 1.0)


def test_delta_v_requires_normalized_state():
    from adiabatic_overlaps.hilbert import StateVector

    m = dense_driven(np.diag([0.0, 1.0]), np.array([[0.0, 1.0], [1.0, 0.0]]), 1.0)
    assert delta_v(m, StateVector(np.array([1.0, 0.0]))) == pytest.approx(1.0)
    with pytest.raises(ContractError):
        delta_v(m, StateVector(np.array([2.0, 0.0])))
