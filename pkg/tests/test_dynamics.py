import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from adiabatic_overlaps.dynamics import (
    IntegratorConfig,
    _cf4_step,
    _Propagator,
    bloch_ground_states,
    evolve,
    evolve_factorized,
    fix_gauge,
    instantaneous_ground_state,
    lanczos_expmv,
)
from adiabatic_overlaps.errors import ContractError, DegeneracyError
from adiabatic_overlaps.hilbert import build_parity_basis, parity_operator
from adiabatic_overlaps.models import (
    KitaevParams,
    RiceMeleParams,
    dense_driven,
    kitaev_hamiltonian,
    rice_mele_d_vectors,
)


def random_model(seed, dim=6, gamma=0.8):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    b = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    h0 = 0.5 * (a + a.conj().T)
    v = 0.25 * (b + b.conj().T)
    return dense_driven(h0, v, gamma), h0, v


def reference_solution(h0, v, gamma, psi0, lams):
    def rhs(lam, y):
        return -1j / gamma * ((h0 + lam * v) @ y)

    sol = solve_ivp(rhs, (lams[0], lams[-1]), psi0.astype(complex), t_eval=lams,
                    method="DOP853", rtol=1e-12, atol=1e-13)
    return sol.y.T


# -- ground states -----------------------------------------------------------------


def test_ground_state_matches_eigh_and_is_gauge_fixed():
    model, h0, v = random_model(1)
    phi, e = instantaneous_ground_state(model, 0.3)
    w, u = np.linalg.eigh(h0 + 0.3 * v)
    assert e == pytest.approx(w[0], abs=1e-12)
    assert abs(abs(np.vdot(u[:, 0], phi.amplitudes)) - 1) < 1e-12
    i = np.argmax(np.abs(phi.amplitudes))
    assert phi.amplitudes[i].imag == 0 and phi.amplitudes[i].real > 0


def test_sparse_path_agrees_with_dense():
    model = kitaev_hamiltonian(KitaevParams(n_sites=8, V_int=1.0))
    dense, e_d = instantaneous_ground_state(model, 0.5, dense_limit=10_000)
    sparse, e_s = instantaneous_ground_state(model, 0.5, dense_limit=1)
    assert e_s == pytest.approx(e_d, abs=1e-10)
    assert abs(np.vdot(dense.amplitudes, sparse.amplitudes)) == pytest.approx(1.0, abs=1e-10)


def test_sparse_path_is_deterministic():
    model = kitaev_hamiltonian(KitaevParams(n_sites=10, V_int=2.0))
    a, _ = instantaneous_ground_state(model, 1.1, dense_limit=1)
    b, _ = instantaneous_ground_state(model, 1.1, dense_limit=1)
    assert np.array_equal(a.amplitudes, b.amplitudes)


def test_degenerate_ground_state_raises():
    model = dense_driven(np.diag([0.0, 0.0, 1.0]), np.zeros((3, 3)), 1.0)
    with pytest.raises(DegeneracyError):
        instantaneous_ground_state(model, 0.0)


@given(st.floats(-np.pi, np.pi), st.integers(0, 1000))
def test_fix_gauge_is_phase_invariant(phase, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=5) + 1j * rng.normal(size=5)
    assert np.allclose(fix_gauge(v), fix_gauge(np.exp(1j * phase) * v), atol=1e-12)


def test_bloch_ground_states_match_eigh():
    p = RiceMeleParams(J=0.5, U=0.3, n_cells=6)
    d = rice_mele_d_vectors(p, 0.8)
    vec, e = bloch_ground_states(d)
    assert np.allclose(e, -np.linalg.norm(d, axis=1))
    for dk, vk, ek in zip(d, vec, e):
        m = np.array([[dk[2], dk[0] - 1j * dk[1]], [dk[0] + 1j * dk[1], -dk[2]]])
        assert np.allclose(m @ vk, ek * vk, atol=1e-13)


# -- exponentials and the integrator -------------------------------------------------


@pytest.mark.parametrize("tau", [0.01, 0.3, 2.0])
def test_lanczos_expmv_matches_expm(tau):
    _, h0, _ = random_model(2, dim=40)
    v = np.random.default_rng(3).normal(size=40) + 0j
    ref = sla.expm(-1j * tau * h0) @ v
    out = lanczos_expmv(lambda x: h0 @ x, v, tau)
    assert np.linalg.norm(out - ref) < 1e-12 * np.linalg.norm(v)


def test_cf4_is_fourth_order():
    model, _, _ = random_model(4)
    prop = _Propagator(model)
    psi0, _ = instantaneous_ground_state(model, 0.0)

    def run(n):
        psi = psi0.amplitudes.copy()
        h = 0.4 / n
        for i in range(n):
            psi = _cf4_step(prop, psi, i * h, h, model.gamma)
        return psi

    ref = run(2048)
    errs = [np.linalg.norm(run(n) - ref) for n in (8, 16, 32)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 4.0) < 0.3), orders


@pytest.mark.parametrize("seed", [5, 6, 7])
def test_evolve_matches_reference_ode_solver(seed):
    model, h0, v = random_model(seed)
    lams = np.linspace(0.0, 2.0, 21)
    traj = evolve(model, lams)
    ref = reference_solution(h0, v, model.gamma, traj.phi0.amplitudes, lams)
    for psi, r in zip(traj.evolved, ref):
        assert np.linalg.norm(psi.amplitudes - r) < 1e-8


def test_evolved_state_satisfies_the_equation_of_motion():
    # central finite difference of the output against H Psi / (i Gamma)
    model, h0, v = random_model(8)
    delta = 1e-4
    lams = np.array([0.0, 1.0 - delta, 1.0, 1.0 + delta])
    traj = evolve(model, lams, IntegratorConfig(rel_tol=1e-13, abs_tol=1e-14))
    lhs = 1j * model.gamma * (traj.evolved[3].amplitudes - traj.evolved[1].amplitudes) / (2 * delta)
    rhs = (h0 + 1.0 * v) @ traj.evolved[2].amplitudes
    assert np.linalg.norm(lhs - rhs) < 1e-6


def test_norm_drift_is_small_and_not_renormalized():
    model, _, _ = random_model(9)
    traj = evolve(model, np.linspace(0, 3, 31))
    assert traj.norm_drift[0] == 0.0
    assert traj.norm_drift.max() < 1e-9
    norms = np.array([s.norm() for s in traj.evolved])
    assert np.allclose(np.abs(norms - 1.0), traj.norm_drift, atol=1e-15)


def test_grid_validation():
    model, _, _ = random_model(1)
    for bad in ([], [0.1, 0.2], [0.0, 0.5, 0.5], [0.0, 0.4, 0.2]):
        with pytest.raises(ContractError):
            evolve(model, bad)


def test_integrator_config_validation():
    with pytest.raises(ContractError):
        IntegratorConfig(rel_tol=0.0)
    with pytest.raises(ContractError):
        IntegratorConfig(max_step=-1)
    with pytest.raises(ContractError):
        IntegratorConfig(method="rk45")


@settings(max_examples=10)
@given(st.floats(0.2, 5.0), st.integers(0, 10_000))
def test_evolve_matches_reference_for_random_models(gamma, seed):
    model, h0, v = random_model(seed, dim=4, gamma=gamma)
    lams = np.linspace(0.0, 1.0, 5)
    traj = evolve(model, lams)
    ref = reference_solution(h0, v, gamma, traj.phi0.amplitudes, lams)
    assert max(np.linalg.norm(p.amplitudes - r) for p, r in zip(traj.evolved, ref)) < 1e-8


def test_kitaev_evolution_conserves_parity():
    params = KitaevParams(n_sites=6, V_int=1.0, sector="all")
    # the full space has a unique ground state here (odd sector)
    model = kitaev_hamiltonian(params)
    par = parity_operator(build_parity_basis(6, "all")).toarray()
    traj = evolve(model, np.linspace(0, 1.0, 6))
    p0 = np.vdot(traj.phi0.amplitudes, par @ traj.phi0.amplitudes).real
    assert abs(abs(p0) - 1) < 1e-12
    for psi in traj.evolved:
        assert np.vdot(psi.amplitudes, par @ psi.amplitudes).real == pytest.approx(p0, abs=1e-10)


# -- factorized path -----------------------------------------------------------------


@pytest.mark.parametrize("J,U", [(0.4, 0.4), (0.5, 0.3)])
def test_factorized_blocks_match_reference_ode(J, U):
    p = RiceMeleParams(J=J, U=U, gamma=0.7, n_cells=6)
    lams = np.linspace(0, 2.0, 11)
    traj = evolve_factorized(p, lams)
    for ik, k in enumerate(traj.k):
        d0 = rice_mele_d_vectors(p, 0.0, np.array([k]))[0]
        h0 = np.array([[0, d0[0] - 1j * d0[1]], [d0[0] + 1j * d0[1], 0]])
        v = np.diag([1.0, -1.0])
        ref = reference_solution(h0, v, p.gamma, traj.initial[ik], lams)
        assert np.abs(traj.evolved[:, ik, :] - ref).max() < 1e-8


def test_uniform_factorized_broadcasts_identical_blocks():
    traj = evolve_factorized(RiceMeleParams(n_cells=8), np.linspace(0, 1, 5))
    assert traj.evolved.shape == (5, 8, 2)
    assert np.array_equal(traj.evolved[:, 0], traj.evolved[:, 5])
    assert traj.norm_drift.max() < 1e-9
